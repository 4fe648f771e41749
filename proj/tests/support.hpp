#pragma once

// Shared fixtures and independent oracles for the test suites. Oracles here
// must stay independent of the library's iteration path: they evaluate the
// closed-form decay directly with std::pow.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ppgd/ppgd.hpp"

namespace ppgd::test {

// --- T2: the two-record hand-checkable corpus ------------------------------
// r1 = {Basic 100, HRA 50, PF 30, GD 20}, r2 = {Basic 200, HRA 80, PF 60,
// GD 40}; Alice holds {Basic, HRA}, Bob {PF, GD}. E = [200, 380].

inline Dataset t2_dataset() {
  Dataset ds;
  ds.schema = {"Basic", "HRA", "PF", "GD"};
  ds.records = {
      {1, "r1", "TL", {100, 50, 30, 20}},
      {2, "r2", "TL", {200, 80, 60, 40}},
  };
  return ds;
}

inline PartitionSpec t2_partition() { return {{"Basic", "HRA"}, {"PF", "GD"}}; }

// The published sample block, together with its quirks: scrambled property
// order and the undeclared n.0 prefix on one opening tag.
inline std::string table5_sample() {
  return R"(<rdf:RDF xmlns:j.0="http://www.ppgd.com/"
  xmlns:rdf="http://www.w3.org/1999/02/22-rdf-syntax-ns#">
  <rdf:Description rdf:about="http://www.SkumarSolutions.com/ID10">
    <j.0:hasMinflat>37</j.0:hasMinflat>
    <j.0:hasMinTravel>38</j.0:hasMinTravel>
    <j.0:hasMaxTravel>55</j.0:hasMaxTravel>
    <j.0:hasMinBasic>20</j.0:hasMinBasic>
    <j.0:hasMaxflat>45</j.0:hasMaxflat>
    <j.0:hasMaxBasic>30</j.0:hasMaxBasic>
    <n.0:hasMinHRA>30</j.0:hasMinHRA>
    <j.0:hasMaxHRA>42</j.0:hasMaxHRA>
    <j.0:hasName>reva123</j.0:hasName>
  </rdf:Description>
</rdf:RDF>
)";
}

// --- Random data for property tests ----------------------------------------

inline Dataset random_dataset(std::mt19937_64& rng, std::size_t max_n = 50,
                              std::size_t max_m = 8) {
  auto pick = [&rng](std::size_t lo, std::size_t hi) {
    return lo + rng() % (hi - lo + 1);
  };
  std::size_t n = pick(1, max_n);
  std::size_t m = pick(2, max_m);
  std::vector<std::string> categories;
  for (std::size_t c = 0, cats = pick(1, 3); c < cats; ++c)
    categories.push_back("cat" + std::to_string(c));
  std::vector<AttributeRange> ranges;
  for (std::size_t a = 0; a < m; ++a) {
    double lo = static_cast<double>(pick(10, 60));
    double hi = lo + static_cast<double>(pick(0, 200));
    ranges.push_back({"attr" + std::to_string(a), lo, hi});
  }
  return generate_synthetic(rng(), n, categories, ranges);
}

inline PartitionSpec random_partition(std::mt19937_64& rng,
                                      const std::vector<std::string>& schema) {
  PartitionSpec spec;
  while (spec.party_a_attrs.empty() || spec.party_b_attrs.empty()) {
    spec.party_a_attrs.clear();
    spec.party_b_attrs.clear();
    for (const auto& a : schema)
      (rng() % 2 ? spec.party_a_attrs : spec.party_b_attrs).push_back(a);
  }
  return spec;
}

// Full pipeline up to the two first-stage vectors, without any protocol.
struct StagedData {
  Dataset ds;
  PartitionSpec spec;
  ExpectedVector e;
  FirstStageVector af;
  FirstStageVector bf;
};

inline StagedData stage_first(const Dataset& ds, const PartitionSpec& spec, double df_a,
                              double df_b) {
  StagedData out;
  out.ds = ds;
  out.spec = spec;
  out.e = expected_vector(ds);
  auto [va, vb] = partition_vertical(ds, spec);
  auto ont = OntologyModel::for_attributes(ds.schema);
  auto doc_a = generate_rdf(va, ont, DisguisePolicy{df_a});
  auto doc_b = generate_rdf(vb, ont, DisguisePolicy{df_b});
  std::vector<std::string> a_attrs, b_attrs;
  std::set<std::string> a_set(spec.party_a_attrs.begin(), spec.party_a_attrs.end());
  for (const auto& a : ds.schema)
    (a_set.count(a) ? a_attrs : b_attrs).push_back(a);
  out.af = first_stage_predict(va, doc_b, b_attrs);
  out.bf = first_stage_predict(vb, doc_a, a_attrs);
  return out;
}

// --- Closed-form decay oracle ----------------------------------------------
// Stochastic: w_i(t) = (1 - 2*eta_s*f_i)^t per element.
// Batch (sum aggregate): all weights stay equal, w(t) = (1 - 2*eta_b*sum f)^t.
// Evaluated directly via std::pow, never by stepping.

inline double oracle_ep_at(const std::vector<double>& af, const std::vector<double>& bf,
                           const std::vector<double>& e, const GdConfig& cfg,
                           std::size_t t) {
  const double td = static_cast<double>(t);
  double sum_af = 0, sum_bf = 0;
  for (double v : af) sum_af += v;
  for (double v : bf) sum_bf += v;

  auto weight = [&](bool alice, std::size_t i) {
    if (cfg.method == GdMethod::Stochastic) {
      double f = alice ? af[i] : bf[i];
      return std::pow(1.0 - 2.0 * cfg.eta_s * f, td);
    }
    double sum = alice ? sum_af : sum_bf;
    return std::pow(1.0 - 2.0 * cfg.eta_b * sum, td);
  };

  double num = 0, den = 0;
  for (std::size_t i = 0; i < af.size(); ++i) {
    double wa = weight(true, i), wb = weight(false, i);
    double p = (wa * wa * af[i] + wb * wb * bf[i]) / 2.0;
    num += p * p;
  }
  for (double v : e) den += v * v;
  return num / den;
}

inline std::size_t oracle_iterations(const std::vector<double>& af,
                                     const std::vector<double>& bf,
                                     const std::vector<double>& e, const GdConfig& cfg,
                                     std::size_t cap = 2000000) {
  for (std::size_t t = 0; t <= cap; ++t)
    if (oracle_ep_at(af, bf, e, cfg, t) <= cfg.lambda) return t;
  throw std::runtime_error("oracle: no convergence within the cap");
}

// Central finite difference of F(w) = w^2 f at one coordinate.
inline double fd_gradient(double w, double f, double h) {
  auto F = [f](double x) { return x * x * f; };
  return (F(w + h) - F(w - h)) / (2.0 * h);
}

// --- Fault injection --------------------------------------------------------

/// Flips the first byte of the Nth ciphertext body written through this
/// endpoint. Frame headers are exactly 4 bytes; bodies are block multiples,
/// so the two cannot be confused.
class TamperTransport final : public Transport {
public:
  TamperTransport(Transport& inner, std::size_t target_body) : inner_(inner),
      target_(target_body) {}

  void write_all(std::span<const std::uint8_t> data) override {
    if (data.size() != 4 && body_count_++ == target_) {
      std::vector<std::uint8_t> mutated(data.begin(), data.end());
      mutated[0] ^= 0x01;
      inner_.write_all(mutated);
      return;
    }
    inner_.write_all(data);
  }

  void read_exact(std::span<std::uint8_t> out) override { inner_.read_exact(out); }
  void close() override { inner_.close(); }

private:
  Transport& inner_;
  std::size_t target_;
  std::size_t body_count_ = 0;
};

}  // namespace ppgd::test
