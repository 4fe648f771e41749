#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ppgd/errors.hpp"
#include "ppgd/gradient.hpp"
#include "ppgd/simulator.hpp"
#include "ppgd/strings.hpp"

namespace ppgd {

/// Flat `key = value` text, one pair per line, '#' comments. Keys are
/// checked against the documented schema so typos fail loudly.
class KeyValueConfig {
public:
  static KeyValueConfig parse(std::string_view text, const std::string& origin) {
    KeyValueConfig cfg;
    cfg.origin_ = origin;
    std::size_t lineno = 0;
    for (const auto& raw : split(text, '\n')) {
      ++lineno;
      auto line = trim(raw);
      if (line.empty() || line[0] == '#') continue;
      auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + " line " + std::to_string(lineno) +
                          ": expected key = value");
      auto key = trim(line.substr(0, eq));
      auto value = trim(line.substr(eq + 1));
      if (key.empty())
        throw ConfigError(origin + " line " + std::to_string(lineno) + ": empty key");
      if (!cfg.values_.emplace(key, value).second)
        throw ConfigError(origin + ": duplicate key '" + key + "'");
    }
    return cfg;
  }

  static KeyValueConfig load(const std::string& path) {
    return parse(detail::read_file(path), path);
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    used_.insert(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    used_.insert(key);
    if (it == values_.end()) return fallback;
    try {
      return parse_double(it->second, origin_ + ": " + key);
    } catch (const ParseError& e) {
      throw ConfigError(e.what());
    }
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = values_.find(key);
    used_.insert(key);
    if (it == values_.end()) return fallback;
    try {
      return parse_u64(it->second, origin_ + ": " + key);
    } catch (const ParseError& e) {
      throw ConfigError(e.what());
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    used_.insert(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError(origin_ + ": " + key + " must be true or false");
  }

  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& fallback) const {
    auto it = values_.find(key);
    used_.insert(key);
    if (it == values_.end()) return fallback;
    std::vector<std::string> out;
    for (auto& item : split(it->second, ',')) {
      auto t = trim(item);
      if (!t.empty()) out.push_back(t);
    }
    if (out.empty()) throw ConfigError(origin_ + ": " + key + " must list at least one item");
    return out;
  }

  /// Call after reading everything: flags keys the schema never consumed.
  void reject_unused() const {
    for (const auto& [key, value] : values_) {
      if (!used_.count(key))
        throw ConfigError(origin_ + ": unknown key '" + key + "'");
    }
  }

  const std::map<std::string, std::string>& entries() const { return values_; }
  const std::string& origin() const { return origin_; }

private:
  std::string origin_;
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

inline GdMethod parse_gd_method(const std::string& name) {
  if (name == "stochastic") return GdMethod::Stochastic;
  if (name == "batch") return GdMethod::Batch;
  throw ConfigError("gd.method must be stochastic or batch, got '" + name + "'");
}

inline AttributeRange parse_range(const std::string& attr, const std::string& text,
                                  const std::string& origin) {
  auto parts = split(text, ':');
  if (parts.size() != 2)
    throw ConfigError(origin + ": range for '" + attr + "' must be lo:hi");
  return {attr, parse_double(parts[0], origin + ": " + attr + " lo"),
          parse_double(parts[1], origin + ": " + attr + " hi")};
}

/// Builds a full session config; anything absent keeps the paper defaults
/// (eta_s 1e-5, eta_b 1e-6, disguising factor 10, Fig-3 partition).
inline SessionConfig session_config_from(const KeyValueConfig& kv) {
  SessionConfig cfg;

  auto dataset = kv.get("dataset", "synthetic");
  if (dataset.rfind("csv:", 0) == 0) {
    cfg.csv_path = dataset.substr(4);
    if (cfg.csv_path->empty()) throw ConfigError(kv.origin() + ": dataset csv path is empty");
  } else if (dataset != "synthetic") {
    throw ConfigError(kv.origin() + ": dataset must be 'synthetic' or 'csv:<path>'");
  }

  cfg.synthetic.seed = kv.get_u64("synthetic.seed", cfg.synthetic.seed);
  cfg.synthetic.n = kv.get_u64("synthetic.n", cfg.synthetic.n);
  cfg.synthetic.categories = kv.get_list("synthetic.categories", cfg.synthetic.categories);
  {
    auto attrs = kv.get_list("synthetic.attributes", {});
    auto defaults = default_employee_ranges();
    auto& ranges = cfg.synthetic.ranges;
    if (!attrs.empty()) {
      for (auto& a : attrs) ranges.push_back({normalize_attr_name(a), 20.0, 55.0});
    } else {
      ranges = defaults;
    }
    for (auto& r : ranges) {
      auto key = "synthetic.range." + r.name;
      if (kv.has(key)) {
        auto parsed = parse_range(r.name, kv.get(key, ""), kv.origin());
        r.lo = parsed.lo;
        r.hi = parsed.hi;
      }
    }
  }

  cfg.partition.party_a_attrs =
      kv.get_list("partition.alice", cfg.partition.party_a_attrs);
  cfg.partition.party_b_attrs = kv.get_list("partition.bob", cfg.partition.party_b_attrs);
  for (auto& a : cfg.partition.party_a_attrs) a = normalize_attr_name(a);
  for (auto& b : cfg.partition.party_b_attrs) b = normalize_attr_name(b);

  cfg.disguise_a.df = kv.get_double("disguise.alice", cfg.disguise_a.df);
  cfg.disguise_b.df = kv.get_double("disguise.bob", cfg.disguise_b.df);

  cfg.cipher.algorithm = kv.get("cipher.algorithm", cfg.cipher.algorithm);
  cfg.cipher.mode = kv.get("cipher.mode", cfg.cipher.mode);
  cfg.cipher.shared_key = kv.get("cipher.key", cfg.cipher.shared_key);

  auto method = kv.get("gd.method", gd_method_name(cfg.gd.method));
  cfg.gd.method = parse_gd_method(method);
  cfg.gd.eta_s = kv.get_double("gd.eta_s", cfg.gd.eta_s);
  cfg.gd.eta_b = kv.get_double("gd.eta_b", cfg.gd.eta_b);
  cfg.gd.lambda = kv.get_double("gd.lambda", cfg.gd.lambda);
  cfg.gd.max_iterations = kv.get_u64("gd.max_iterations", cfg.gd.max_iterations);
  cfg.gd.divergence_window = kv.get_u64("gd.divergence_window", cfg.gd.divergence_window);
  auto aggregate = kv.get("gd.batch_aggregate", "sum");
  if (aggregate == "sum") cfg.gd.batch_aggregate = BatchAggregate::Sum;
  else if (aggregate == "mean") cfg.gd.batch_aggregate = BatchAggregate::Mean;
  else throw ConfigError(kv.origin() + ": gd.batch_aggregate must be sum or mean");

  auto transport = kv.get("transport", "inproc");
  if (transport == "inproc") cfg.transport = TransportKind::InProcess;
  else if (transport == "socket") cfg.transport = TransportKind::Socket;
  else throw ConfigError(kv.origin() + ": transport must be inproc or socket");
  cfg.socket_port = static_cast<std::uint16_t>(kv.get_u64("socket.port", 0));

  cfg.rdf_dir = kv.get("rdf.dir", cfg.rdf_dir);
  cfg.inline_rdf = kv.get_bool("rdf.inline", cfg.inline_rdf);
  cfg.swap_roles = kv.get_bool("swap_roles", cfg.swap_roles);

  cfg.ontology.namespace_uri = kv.get("ontology.namespace", cfg.ontology.namespace_uri);
  cfg.ontology.subject_base = kv.get("ontology.subject_base", cfg.ontology.subject_base);

  cfg.validate();
  return cfg;
}

// A relative csv path in a config file is taken relative to the file itself,
// so shipped configs work from any working directory.
inline void resolve_csv_path(SessionConfig& cfg, const std::string& config_path) {
  if (!cfg.csv_path) return;
  std::filesystem::path csv(*cfg.csv_path);
  if (csv.is_relative())
    cfg.csv_path = (std::filesystem::path(config_path).parent_path() / csv).string();
}

inline SessionConfig load_session_config(const std::string& path) {
  auto kv = KeyValueConfig::load(path);
  auto cfg = session_config_from(kv);
  kv.reject_unused();
  resolve_csv_path(cfg, path);
  return cfg;
}

}  // namespace ppgd
