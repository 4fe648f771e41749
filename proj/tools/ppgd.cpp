// ppgd: run, sweep and verify two-party privacy-preserving gradient-descent
// prediction sessions.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "ppgd/ppgd.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string transport;  // optional override: inproc | socket
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string log_level = "warn";
};

ppgd::SessionConfig load_config(const CommonOpts& opts) {
  auto cfg = ppgd::load_session_config(opts.config_path);
  if (opts.seed_set) cfg.synthetic.seed = opts.seed;
  if (!opts.transport.empty()) {
    if (opts.transport == "inproc") cfg.transport = ppgd::TransportKind::InProcess;
    else if (opts.transport == "socket") cfg.transport = ppgd::TransportKind::Socket;
    else throw ppgd::ConfigError("--transport must be inproc or socket");
  }
  return cfg;
}

void print_stats(const ppgd::RunStats& stats) {
  std::printf("iterations   %zu\n", stats.iterations);
  std::printf("final_ep     %s\n", ppgd::format_double(stats.final_ep).c_str());
  std::printf("elapsed_ms   %.3f\n",
              std::chrono::duration<double, std::milli>(stats.elapsed).count());
}

int cmd_run(const CommonOpts& opts, const std::string& party) {
  auto cfg = load_config(opts);
  if (party == "both") {
    auto result = ppgd::run_full_session(cfg);
    std::printf("n            %zu\n", result.af.values.size());
    print_stats(result.stats);
    std::printf("rdf_a        %s\n", result.rdf_a_path.c_str());
    std::printf("rdf_b        %s\n", result.rdf_b_path.c_str());
    return 0;
  }
  auto me = party == "alice" ? ppgd::Party::A : ppgd::Party::B;
  auto output = ppgd::run_party_standalone(cfg, me);
  std::printf("party        %s\n", party.c_str());
  std::printf("n            %zu\n", output.f.values.size());
  print_stats(output.stats);
  return 0;
}

int cmd_sweep(const CommonOpts& opts, const std::string& out_path, bool parallel) {
  auto spec = ppgd::load_sweep_spec(opts.config_path);
  if (opts.seed_set) spec.base.synthetic.seed = opts.seed;
  if (parallel)
    ppgd::log(ppgd::LogLevel::Warn, "parallel sweep: elapsed_ms values are noisy");
  auto rows = ppgd::run_sweep(spec, parallel);
  ppgd::write_sweep_csv(rows, out_path);
  std::size_t failed = 0;
  for (const auto& row : rows)
    if (row.status != "OK") ++failed;
  std::printf("wrote %zu rows to %s (%zu failed)\n", rows.size(), out_path.c_str(), failed);
  return failed == 0 ? 0 : 1;
}

int cmd_verify(const CommonOpts& opts) {
  auto cfg = load_config(opts);
  auto report = ppgd::run_verify(cfg);
  for (const auto& check : report.checks)
    std::printf("[%s] %s%s%s\n", check.passed ? "PASS" : "FAIL", check.name.c_str(),
                check.note.empty() ? "" : ": ", check.note.c_str());
  return report.all_passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-party privacy-preserving gradient-descent prediction"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string party = "both";
  std::string out_path;
  bool parallel = false;

  auto add_common = [&opts](CLI::App* cmd, const char* flag, const char* config_help) {
    cmd->add_option(flag, opts.config_path, config_help)->required();
    cmd->add_option("--transport", opts.transport, "override transport: inproc | socket");
    cmd->add_option("--seed", opts.seed, "override the synthetic dataset seed")
        ->each([&opts](const std::string&) { opts.seed_set = true; });
    cmd->add_option("--log-level", opts.log_level, "error | warn | info | debug");
  };

  auto* run = app.add_subcommand("run", "run one full two-party session");
  add_common(run, "--config", "session config file");
  run->add_option("--party", party, "both (default) | alice | bob (split two-process mode)")
      ->check(CLI::IsMember({"both", "alice", "bob"}));

  auto* sweep = app.add_subcommand("sweep", "sweep the learning stoppage and write a CSV");
  add_common(sweep, "--spec", "sweep spec file (session config + sweep.* keys)");
  sweep->add_option("--out", out_path, "output CSV path")->required();
  sweep->add_flag("--parallel", parallel, "run cells concurrently (noisy timings)");

  auto* verify = app.add_subcommand("verify", "audit invariants on the configured dataset");
  add_common(verify, "--config", "session config file");

  CLI11_PARSE(app, argc, argv);

  try {
    ppgd::set_log_level(ppgd::log_level_from_name(opts.log_level));
    if (run->parsed()) return cmd_run(opts, party);
    if (sweep->parsed()) return cmd_sweep(opts, out_path, parallel);
    if (verify->parsed()) return cmd_verify(opts);
  } catch (const ppgd::NonConvergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    if (!e.ep_trace.empty())
      std::fprintf(stderr, "last ep: %s over %zu iterations\n",
                   ppgd::format_double(e.ep_trace.back()).c_str(), e.ep_trace.size() - 1);
    return 2;
  } catch (const ppgd::DivergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
