#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ppgd/dataset.hpp"
#include "ppgd/errors.hpp"
#include "ppgd/first_stage.hpp"

namespace ppgd {

/// Per-record reduction coefficients, dimensionless, initialized to all-ones.
struct WeightVector {
  std::vector<double> values;

  bool operator==(const WeightVector&) const = default;

  static WeightVector ones(std::size_t n) {
    return WeightVector{std::vector<double>(n, 1.0)};
  }

  std::size_t size() const { return values.size(); }
};

/// Second-stage prediction: p_i = w_i^2 * f_i, currency units.
struct PredictionVector {
  std::vector<double> values;

  bool operator==(const PredictionVector&) const = default;

  std::size_t size() const { return values.size(); }
};

enum class GdMethod { Stochastic, Batch };
enum class BatchAggregate { Sum, Mean };

inline const char* gd_method_name(GdMethod m) {
  return m == GdMethod::Stochastic ? "stochastic" : "batch";
}

/// Second-stage settings. The learning rates default to the employee-scale
/// constants (samples in the hundreds-to-thousands range): eta_s = 1e-5,
/// eta_b = 1e-6 with eta_b < eta_s because the batch step applies the
/// whole-sample gradient sum.
struct GdConfig {
  GdMethod method = GdMethod::Stochastic;
  double eta_s = 0.00001;
  double eta_b = 0.000001;
  double lambda = 0.5;  // learning stoppage, aka minimization factor
  std::size_t max_iterations = 1000000;
  std::size_t divergence_window = 5;
  BatchAggregate batch_aggregate = BatchAggregate::Sum;

  void validate() const {
    if (!std::isfinite(eta_s) || eta_s <= 0)
      throw ConfigError("gd: eta_s must be positive");
    if (!std::isfinite(eta_b) || eta_b <= 0)
      throw ConfigError("gd: eta_b must be positive");
    if (!std::isfinite(lambda) || lambda <= 0)
      throw ConfigError("gd: lambda must exceed 0");
    if (max_iterations < 1) throw ConfigError("gd: max_iterations must be >= 1");
    if (divergence_window < 1) throw ConfigError("gd: divergence_window must be >= 1");
  }

  double eta() const { return method == GdMethod::Stochastic ? eta_s : eta_b; }
};

/// Result of one second-stage run. ep_trace[0] is the pre-update value, so
/// its length is always iterations + 1.
struct RunStats {
  PredictionVector final_p;
  double final_ep = 0;
  std::size_t iterations = 0;
  std::chrono::nanoseconds elapsed{0};
  std::vector<double> ep_trace;
};

class NonConvergenceError : public Error {
public:
  NonConvergenceError(const std::string& what, std::vector<double> trace)
      : Error(what), ep_trace(std::move(trace)) {}
  std::vector<double> ep_trace;
};

class DivergenceError : public Error {
public:
  DivergenceError(const std::string& what, std::vector<double> trace)
      : Error(what), ep_trace(std::move(trace)) {}
  std::vector<double> ep_trace;
};

namespace detail {

inline void check_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw ValidationError(std::string(what) + ": length mismatch (" + std::to_string(a) +
                          " vs " + std::to_string(b) + ")");
}

// Monotonic per-thread CPU clock. Loop timings use consumed cycles rather
// than wall time so shared-machine throttling and peer waits cannot distort
// the iteration/time relationship.
inline std::chrono::nanoseconds cpu_now() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return std::chrono::seconds(ts.tv_sec) + std::chrono::nanoseconds(ts.tv_nsec);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise operations

inline PredictionVector predict(const WeightVector& w, const FirstStageVector& f) {
  detail::check_same_length(w.size(), f.size(), "predict");
  PredictionVector p;
  p.values.reserve(w.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    p.values.push_back(w.values[i] * w.values[i] * f.values[i]);
  return p;
}

/// d/dw of the prediction function, elementwise: 2 * w_i * f_i.
inline std::vector<double> gradient(const WeightVector& w, const FirstStageVector& f) {
  detail::check_same_length(w.size(), f.size(), "gradient");
  std::vector<double> g;
  g.reserve(w.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    g.push_back(2.0 * w.values[i] * f.values[i]);
  return g;
}

/// Each element steps by its own gradient: w_i <- w_i - eta_s * 2 w_i f_i.
inline WeightVector step_stochastic(const WeightVector& w, const FirstStageVector& f,
                                    double eta_s) {
  detail::check_same_length(w.size(), f.size(), "step_stochastic");
  auto g = gradient(w, f);
  WeightVector out = w;
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] -= eta_s * g[i];
  return out;
}

/// Every element steps by the same aggregate of pre-step gradients. The sum
/// form follows the update equation; mean is an optional variant.
inline WeightVector step_batch(const WeightVector& w, const FirstStageVector& f,
                               double eta_b,
                               BatchAggregate aggregate = BatchAggregate::Sum) {
  detail::check_same_length(w.size(), f.size(), "step_batch");
  auto g = gradient(w, f);
  double total = 0;
  for (double v : g) total += v;
  if (aggregate == BatchAggregate::Mean) total /= static_cast<double>(g.size());
  WeightVector out = w;
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] -= eta_b * total;
  return out;
}

inline WeightVector party_update(const WeightVector& w, const FirstStageVector& f,
                                 const GdConfig& cfg) {
  switch (cfg.method) {
    case GdMethod::Stochastic: return step_stochastic(w, f, cfg.eta_s);
    case GdMethod::Batch: return step_batch(w, f, cfg.eta_b, cfg.batch_aggregate);
  }
  throw ConfigError("gd: unknown method");
}

inline PredictionVector combine(const PredictionVector& ap, const PredictionVector& bp) {
  detail::check_same_length(ap.size(), bp.size(), "combine");
  PredictionVector p;
  p.values.reserve(ap.size());
  for (std::size_t i = 0; i < ap.size(); ++i)
    p.values.push_back((ap.values[i] + bp.values[i]) / 2.0);
  return p;
}

/// ep = sum(p_i^2) / sum(E_i^2). The halved least-square forms share the /2,
/// so it cancels out of the ratio.
inline double expectation_probability(const PredictionVector& p, const ExpectedVector& e) {
  detail::check_same_length(p.size(), e.values.size(), "expectation_probability");
  double num = 0, den = 0;
  for (double v : p.values) num += v * v;
  for (double v : e.values) den += v * v;
  if (den == 0)
    throw ValidationError("expectation_probability: expected vector is all zero");
  return num / den;
}

/// Bound under which every weight stays in (0,1) and the trace decreases:
/// stochastic needs 2*eta_s*max(f) < 1, batch needs 2*eta_b*sum(f) < 1
/// (mean aggregate scales the sum by 1/n).
inline void check_step_bound(const FirstStageVector& f, const GdConfig& cfg) {
  if (f.values.empty()) throw ValidationError("gd: empty first-stage vector");
  if (cfg.method == GdMethod::Stochastic) {
    double max_f = 0;
    for (double v : f.values) max_f = std::max(max_f, v);
    double step = 2.0 * cfg.eta_s * max_f;
    if (step >= 1.0)
      throw ConfigError("gd: step bound violated: 2*eta_s*max(f) = " +
                        std::to_string(step) + " >= 1");
  } else {
    double sum_f = 0;
    for (double v : f.values) sum_f += v;
    if (cfg.batch_aggregate == BatchAggregate::Mean)
      sum_f /= static_cast<double>(f.values.size());
    double step = 2.0 * cfg.eta_b * sum_f;
    if (step >= 1.0)
      throw ConfigError("gd: step bound violated: 2*eta_b*sum(f) = " +
                        std::to_string(step) + " >= 1");
  }
}

namespace detail {

inline void check_positive_f(const FirstStageVector& f) {
  for (double v : f.values)
    if (!std::isfinite(v) || v <= 0)
      throw ValidationError("gd: first-stage values must be finite and > 0");
}

// Tracks the stop/guard decisions one party makes from the shared ep value.
class LoopGuards {
public:
  explicit LoopGuards(const GdConfig& cfg) : cfg_(cfg) {}

  // Returns true when ep has hit the stoppage.
  bool observe(double ep, std::vector<double>& trace) {
    if (!trace.empty() && ep > trace.back()) {
      if (++rising_ >= cfg_.divergence_window) {
        trace.push_back(ep);
        throw DivergenceError("gd: ep increased for " +
                                  std::to_string(rising_) +
                                  " consecutive iterations",
                              trace);
      }
    } else {
      rising_ = 0;
    }
    trace.push_back(ep);
    if (ep <= cfg_.lambda) return true;
    if (trace.size() > cfg_.max_iterations)
      throw NonConvergenceError(
          "gd: ep still " + std::to_string(ep) + " > lambda after " +
              std::to_string(cfg_.max_iterations) + " iterations",
          trace);
    return false;
  }

private:
  const GdConfig& cfg_;
  std::size_t rising_ = 0;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Iteration loops

/// Sends this party's prediction for one iteration and returns the peer's.
using PartyExchange =
    std::function<std::vector<double>(std::size_t iteration, const std::vector<double>& mine)>;

/// One party's view of the second-stage loop: predict from own weights,
/// swap predictions, combine, test ep against the stoppage, update own
/// weights from own f. Both parties make identical stop decisions because
/// they combine the same two vectors.
inline RunStats run_second_stage_party(const FirstStageVector& f, const ExpectedVector& e,
                                       const GdConfig& cfg, const PartyExchange& exchange) {
  cfg.validate();
  detail::check_positive_f(f);
  detail::check_same_length(f.size(), e.values.size(), "run_second_stage");
  check_step_bound(f, cfg);

  RunStats stats;
  detail::LoopGuards guards(cfg);
  WeightVector w = WeightVector::ones(f.size());

  auto started = detail::cpu_now();
  for (std::size_t t = 0;; ++t) {
    PredictionVector mine = predict(w, f);
    PredictionVector peer{exchange(t, mine.values)};
    PredictionVector p = f.party == Party::A ? combine(mine, peer) : combine(peer, mine);
    double ep = expectation_probability(p, e);
    if (guards.observe(ep, stats.ep_trace)) {
      stats.iterations = t;
      stats.final_p = std::move(p);
      stats.final_ep = ep;
      break;
    }
    w = party_update(w, f, cfg);
  }
  stats.elapsed = detail::cpu_now() - started;
  return stats;
}

/// Models transit of the two predictions for one iteration; returns them as
/// delivered (default: unchanged).
using VectorExchangeHook = std::function<std::pair<std::vector<double>, std::vector<double>>(
    std::size_t iteration, const std::vector<double>& ap, const std::vector<double>& bp)>;

/// Reference engine driving both parties in lockstep within one thread.
/// Equivalent to two run_second_stage_party loops wired back to back.
inline RunStats run_second_stage(const FirstStageVector& af, const FirstStageVector& bf,
                                 const ExpectedVector& e, const GdConfig& cfg,
                                 const VectorExchangeHook& hook = {}) {
  cfg.validate();
  detail::check_positive_f(af);
  detail::check_positive_f(bf);
  detail::check_same_length(af.size(), bf.size(), "run_second_stage");
  detail::check_same_length(af.size(), e.values.size(), "run_second_stage");
  check_step_bound(af, cfg);
  check_step_bound(bf, cfg);

  RunStats stats;
  detail::LoopGuards guards(cfg);
  WeightVector wa = WeightVector::ones(af.size());
  WeightVector wb = WeightVector::ones(bf.size());

  auto started = detail::cpu_now();
  for (std::size_t t = 0;; ++t) {
    PredictionVector ap = predict(wa, af);
    PredictionVector bp = predict(wb, bf);
    if (hook) {
      auto [ap_delivered, bp_delivered] = hook(t, ap.values, bp.values);
      ap.values = std::move(ap_delivered);
      bp.values = std::move(bp_delivered);
    }
    PredictionVector p = combine(ap, bp);
    double ep = expectation_probability(p, e);
    if (guards.observe(ep, stats.ep_trace)) {
      stats.iterations = t;
      stats.final_p = std::move(p);
      stats.final_ep = ep;
      break;
    }
    wa = party_update(wa, af, cfg);
    wb = party_update(wb, bf, cfg);
  }
  stats.elapsed = detail::cpu_now() - started;
  return stats;
}

}  // namespace ppgd
