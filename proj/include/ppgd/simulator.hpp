#pragma once

#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ppgd/cipher.hpp"
#include "ppgd/dataset.hpp"
#include "ppgd/errors.hpp"
#include "ppgd/first_stage.hpp"
#include "ppgd/gradient.hpp"
#include "ppgd/log.hpp"
#include "ppgd/ontology.hpp"
#include "ppgd/rdf_xml.hpp"
#include "ppgd/session.hpp"
#include "ppgd/strings.hpp"
#include "ppgd/transport.hpp"

namespace ppgd {

enum class TransportKind { InProcess, Socket };

/// Synthetic employee data: Fig-3 style salary schema, uniform amounts.
struct SyntheticSpec {
  std::uint64_t seed = 7;
  std::size_t n = 100;
  std::vector<std::string> categories = {"TeamLead", "ProjectManager", "ProgramManager"};
  std::vector<AttributeRange> ranges;  // empty -> default employee schema
};

inline std::vector<AttributeRange> default_employee_ranges() {
  std::vector<AttributeRange> ranges;
  for (const char* name : {"Basic", "HRA", "flat", "Travel", "PF", "Gratuity", "GDP",
                           "PerformanceAward"})
    ranges.push_back({name, 20.0, 55.0});
  return ranges;
}

inline PartitionSpec default_employee_partition() {
  return {{"Basic", "HRA", "flat", "Travel"},
          {"PF", "Gratuity", "GDP", "PerformanceAward"}};
}

/// Everything one full two-party run needs. Alice is party A and initiates;
/// Bob is party B and listens (swap_roles flips who initiates).
struct SessionConfig {
  std::optional<std::string> csv_path;
  SyntheticSpec synthetic;
  PartitionSpec partition = default_employee_partition();
  DisguisePolicy disguise_a{10.0};
  DisguisePolicy disguise_b{10.0};
  CipherConfig cipher;
  GdConfig gd;
  OntologyModel ontology;
  TransportKind transport = TransportKind::InProcess;
  std::uint16_t socket_port = 0;  // 0 = ephemeral (single-process runs only)
  std::string rdf_dir = ".";
  bool inline_rdf = false;  // carry RDF bytes in the RESPONSE payload
  bool swap_roles = false;

  void validate() const {
    disguise_a.validate();
    disguise_b.validate();
    cipher.validate();
    gd.validate();
    if (rdf_dir.empty()) throw ConfigError("session: rdf_dir must be set");
  }
};

struct PartyOutput {
  FirstStageVector f;
  RunStats stats;
  Transcript transcript;
  std::string rdf_path;
};

struct SessionResult {
  FirstStageVector af;
  FirstStageVector bf;
  RunStats stats;
  Transcript alice_transcript;
  Transcript bob_transcript;
  std::string rdf_a_path;
  std::string rdf_b_path;
};

/// Module errors crossing the session boundary carry which stage they hit.
class StageError : public Error {
public:
  StageError(int stage, const std::string& inner)
      : Error("stage" + std::to_string(stage) + ": " + inner), stage(stage) {}
  int stage;
};

inline Dataset build_dataset(const SessionConfig& cfg) {
  if (cfg.csv_path) return load_csv(*cfg.csv_path);
  const auto& spec = cfg.synthetic;
  auto ranges = spec.ranges.empty() ? default_employee_ranges() : spec.ranges;
  return generate_synthetic(spec.seed, spec.n, spec.categories, ranges);
}

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path + ": cannot open file for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(path + ": write failed");
}

inline std::string fetch_rdf_bytes(const std::string& url) {
  constexpr std::string_view kInline = "inline:";
  if (url.rfind(kInline, 0) == 0) {
    auto decoded = base64_decode(url.substr(kInline.size()));
    return std::string(decoded.begin(), decoded.end());
  }
  return read_file(url);
}

// One side's attributes, in schema order for determinism.
inline std::vector<std::string> attrs_of(const PartitionSpec& spec, Party p,
                                         const std::vector<std::string>& schema) {
  const auto& listed = p == Party::A ? spec.party_a_attrs : spec.party_b_attrs;
  std::set<std::string> wanted(listed.begin(), listed.end());
  std::vector<std::string> out;
  for (const auto& a : schema)
    if (wanted.count(a)) out.push_back(a);
  return out;
}

}  // namespace detail

/// Runs one party over an already connected transport: RDF generation, the
/// stage-1 location exchange, first-stage prediction, then the second-stage
/// loop with one encrypted vector exchange per iteration.
inline PartyOutput run_party(const SessionConfig& cfg, const Dataset& ds, Party me,
                             Transport& transport) {
  cfg.validate();
  const Party peer = other_party(me);
  const Role role = (me == Party::A) != cfg.swap_roles ? Role::Initiator : Role::Responder;
  const std::string my_rdf_name = std::string("RDF_") + party_name(me);
  const std::string peer_rdf_name = std::string("RDF_") + party_name(peer);
  const std::string my_vec_name = std::string(1, *party_name(me)) + "P";
  const std::string peer_vec_name = std::string(1, *party_name(peer)) + "P";

  PartyOutput out;
  Session session(transport, cfg.cipher);

  try {
    auto [view_a, view_b] = partition_vertical(ds, cfg.partition);
    const PartitionedView& view = me == Party::A ? view_a : view_b;
    const ExpectedVector e = expected_vector(ds);
    auto ont = cfg.ontology;
    ont.attributes = ds.schema;
    const DisguisePolicy& policy = me == Party::A ? cfg.disguise_a : cfg.disguise_b;

    RdfDocument doc = generate_rdf(view, ont, policy);
    std::string bytes = serialize_rdf_xml(doc);
    out.rdf_path = (std::filesystem::path(cfg.rdf_dir) / (my_rdf_name + ".rdf")).string();
    detail::write_file(out.rdf_path, bytes);
    std::string my_url =
        cfg.inline_rdf
            ? "inline:" + base64_encode(std::span<const std::uint8_t>(
                              reinterpret_cast<const std::uint8_t*>(bytes.data()),
                              bytes.size()))
            : out.rdf_path;

    auto exchanged =
        exchange_rdf_locations(session, role, my_rdf_name, my_url, peer_rdf_name);
    RdfDocument peer_doc = parse_rdf_xml(detail::fetch_rdf_bytes(exchanged.value));
    auto unknown = detail::attrs_of(cfg.partition, peer, ds.schema);
    out.f = first_stage_predict(view, peer_doc, unknown);

    // Second stage needs the expected vector; that is a stated input of the
    // algorithm even though it spans both parties' attributes.
    try {
      out.stats = run_second_stage_party(
          out.f, e, cfg.gd, [&](std::size_t, const std::vector<double>& mine) {
            return exchange_vectors(session, role, my_vec_name, mine, peer_vec_name);
          });
    } catch (const NonConvergenceError&) {
      throw;
    } catch (const DivergenceError&) {
      throw;
    } catch (const Error& e2) {
      throw StageError(2, e2.what());
    }
  } catch (const StageError&) {
    throw;
  } catch (const NonConvergenceError&) {
    throw;
  } catch (const DivergenceError&) {
    throw;
  } catch (const Error& e1) {
    throw StageError(1, e1.what());
  }

  out.transcript = session.transcript();
  return out;
}

/// Two concurrent party tasks over injected transports; any failure on one
/// side tears the transport down so the peer unblocks.
inline SessionResult run_full_session(const SessionConfig& cfg, const Dataset& ds,
                                      Transport& alice_tp, Transport& bob_tp) {
  PartyOutput alice, bob;
  std::exception_ptr alice_err, bob_err;

  std::thread bob_thread([&] {
    try {
      bob = run_party(cfg, ds, Party::B, bob_tp);
    } catch (...) {
      bob_err = std::current_exception();
      bob_tp.close();
    }
  });
  try {
    alice = run_party(cfg, ds, Party::A, alice_tp);
  } catch (...) {
    alice_err = std::current_exception();
    alice_tp.close();
  }
  bob_thread.join();

  // Prefer the root cause over the secondary transport teardown.
  auto is_secondary = [](const std::exception_ptr& p) {
    try {
      std::rethrow_exception(p);
    } catch (const StageError& e) {
      return std::string_view(e.what()).find("transport") != std::string_view::npos;
    } catch (...) {
      return false;
    }
  };
  if (alice_err && bob_err)
    std::rethrow_exception(is_secondary(alice_err) ? bob_err : alice_err);
  if (alice_err) std::rethrow_exception(alice_err);
  if (bob_err) std::rethrow_exception(bob_err);

  if (alice.stats.iterations != bob.stats.iterations ||
      alice.stats.final_ep != bob.stats.final_ep)
    throw Error("session: parties disagree on the second-stage outcome");

  SessionResult result;
  result.af = std::move(alice.f);
  result.bf = std::move(bob.f);
  result.stats = std::move(alice.stats);
  result.alice_transcript = std::move(alice.transcript);
  result.bob_transcript = std::move(bob.transcript);
  result.rdf_a_path = std::move(alice.rdf_path);
  result.rdf_b_path = std::move(bob.rdf_path);
  return result;
}

inline SessionResult run_full_session(const SessionConfig& cfg) {
  cfg.validate();
  Dataset ds = build_dataset(cfg);
  std::filesystem::create_directories(cfg.rdf_dir);

  if (cfg.transport == TransportKind::InProcess) {
    auto [alice_tp, bob_tp] = make_in_process_pair();
    return run_full_session(cfg, ds, *alice_tp, *bob_tp);
  }

  SocketListener listener(cfg.socket_port);
  std::unique_ptr<Transport> alice_tp, bob_tp;
  std::exception_ptr accept_err;
  std::thread acceptor([&] {
    try {
      bob_tp = listener.accept_one();
    } catch (...) {
      accept_err = std::current_exception();
    }
  });
  alice_tp = connect_loopback(listener.port());
  acceptor.join();
  if (accept_err) std::rethrow_exception(accept_err);
  return run_full_session(cfg, ds, *alice_tp, *bob_tp);
}

/// Split mode: run just one party of a two-process session over sockets.
/// The listening side is whoever acts as responder (Bob by default).
inline PartyOutput run_party_standalone(const SessionConfig& cfg, Party me) {
  cfg.validate();
  if (cfg.transport != TransportKind::Socket)
    throw ConfigError("split mode requires the socket transport");
  if (cfg.socket_port == 0)
    throw ConfigError("split mode requires a fixed socket.port");
  Dataset ds = build_dataset(cfg);
  std::filesystem::create_directories(cfg.rdf_dir);

  const bool i_listen = (me == Party::B) != cfg.swap_roles;
  std::unique_ptr<Transport> tp;
  if (i_listen) {
    SocketListener listener(cfg.socket_port);
    log(LogLevel::Info, std::string("party ") + party_name(me) + " listening on port " +
                            std::to_string(listener.port()));
    tp = listener.accept_one();
    return run_party(cfg, ds, me, *tp);
  }
  tp = connect_loopback(cfg.socket_port, std::chrono::seconds(30));
  return run_party(cfg, ds, me, *tp);
}

}  // namespace ppgd
