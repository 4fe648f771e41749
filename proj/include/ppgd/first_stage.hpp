#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ppgd/dataset.hpp"
#include "ppgd/errors.hpp"
#include "ppgd/ontology.hpp"

namespace ppgd {

/// Per-record upper-bound estimate: a party's known attribute sums plus the
/// peer-metadata bounds for the attributes it cannot see. Strictly positive
/// by contract so the gradient decay never stalls.
struct FirstStageVector {
  Party party = Party::A;
  std::vector<double> values;

  bool operator==(const FirstStageVector&) const = default;

  std::size_t size() const { return values.size(); }
};

inline FirstStageVector first_stage_predict(const PartitionedView& view,
                                            const RdfDocument& peer_doc,
                                            const std::vector<std::string>& unknown_attrs) {
  if (view.records.empty())
    throw ValidationError("first_stage_predict: view has no records");

  FirstStageVector f;
  f.party = view.party;
  f.values.reserve(view.n());
  for (std::size_t i = 0; i < view.n(); ++i) {
    const auto& rec = view.records[i];
    double value = view.known_sum(i) + infer_unknown_sum(peer_doc, rec.emp_id, unknown_attrs);
    if (!std::isfinite(value))
      throw ValidationError("first_stage_predict: non-finite value for emp_id " +
                            std::to_string(rec.emp_id));
    if (value <= 0)
      throw ValidationError("first_stage_predict: record " + std::to_string(rec.emp_id) +
                            " sums to " + std::to_string(value) +
                            "; first-stage values must be strictly positive");
    f.values.push_back(value);
  }
  return f;
}

}  // namespace ppgd
