#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ppgd/dataset.hpp"
#include "ppgd/errors.hpp"
#include "ppgd/strings.hpp"

namespace ppgd {

/// Employee-domain ontology: one hasMax/hasMin relation pair per attribute,
/// plus hasName. The hasData relation exists in the model but is never
/// serialized; documents carry only generalized extrema.
struct OntologyModel {
  std::string namespace_uri = "http://www.ppgd.com/";
  std::string subject_base = "http://www.SkumarSolutions.com/ID";
  std::vector<std::string> attributes;

  static OntologyModel for_attributes(std::vector<std::string> attrs) {
    OntologyModel ont;
    ont.attributes = std::move(attrs);
    return ont;
  }

  bool covers(std::string_view attr) const {
    return std::find(attributes.begin(), attributes.end(), attr) != attributes.end();
  }

  std::string max_relation(const std::string& attr) const { return "hasMax" + attr; }
  std::string min_relation(const std::string& attr) const { return "hasMin" + attr; }

  /// Every predicate the model defines. hasData links a record to its raw
  /// partitioned amounts and must never reach a serialized document.
  std::vector<std::string> relations() const {
    std::vector<std::string> out;
    for (const auto& attr : attributes) {
      out.push_back(max_relation(attr));
      out.push_back(min_relation(attr));
    }
    out.push_back("hasName");
    out.push_back("hasData");
    return out;
  }
};

/// Additive disguising factor applied to category extrema before sharing.
struct DisguisePolicy {
  double df = 10.0;

  void validate() const {
    if (!std::isfinite(df) || df < 0)
      throw ConfigError("disguise: df must be a finite non-negative amount");
  }
};

struct Extrema {
  double max_value = 0;
  double min_value = 0;

  bool operator==(const Extrema&) const = default;
};

/// (category, attribute) -> extrema over the records of that category.
using ExtremaTable = std::map<std::pair<std::string, std::string>, Extrema>;

struct RdfTriple {
  std::string subject;
  std::string predicate;  // local relation name, e.g. "hasMaxBasic"
  std::string object;     // literal text

  bool operator==(const RdfTriple&) const = default;
};

/// Generalized metadata document: ordered triples forming one description
/// block per record.
struct RdfDocument {
  std::string property_ns = "http://www.ppgd.com/";
  std::vector<RdfTriple> triples;

  bool operator==(const RdfDocument&) const = default;

  /// Subjects in first-appearance order.
  std::vector<std::string> subjects() const {
    std::vector<std::string> out;
    for (const auto& t : triples)
      if (std::find(out.begin(), out.end(), t.subject) == out.end())
        out.push_back(t.subject);
    return out;
  }

  const RdfTriple* find(std::string_view subject, std::string_view predicate) const {
    for (const auto& t : triples)
      if (t.subject == subject && t.predicate == predicate) return &t;
    return nullptr;
  }
};

// Record ids are addressed by the trailing digit run of the subject URI,
// e.g. ".../ID10" -> 10.
inline std::optional<std::uint64_t> subject_record_id(std::string_view subject) {
  std::size_t end = subject.size();
  std::size_t begin = end;
  while (begin > 0 && subject[begin - 1] >= '0' && subject[begin - 1] <= '9') --begin;
  if (begin == end) return std::nullopt;
  std::uint64_t v = 0;
  for (std::size_t i = begin; i < end; ++i) v = v * 10 + (subject[i] - '0');
  return v;
}

// ---------------------------------------------------------------------------
// Operations

inline ExtremaTable category_extrema(const PartitionedView& view) {
  if (view.records.empty())
    throw ValidationError("category_extrema: view has no records");
  ExtremaTable table;
  for (const auto& rec : view.records) {
    for (std::size_t c = 0; c < view.schema.size(); ++c) {
      auto key = std::make_pair(rec.category, view.schema[c]);
      double v = rec.values[c];
      auto it = table.find(key);
      if (it == table.end()) {
        table.emplace(key, Extrema{v, v});
      } else {
        it->second.max_value = std::max(it->second.max_value, v);
        it->second.min_value = std::min(it->second.min_value, v);
      }
    }
  }
  return table;
}

/// Emits one block per record: hasMax/hasMin literals are the category
/// extrema plus df, never the record's own amounts.
inline RdfDocument generate_rdf(const PartitionedView& view, const OntologyModel& ont,
                                const DisguisePolicy& policy) {
  policy.validate();
  for (const auto& attr : view.schema)
    if (!ont.covers(attr))
      throw GenerationError("generate_rdf: ontology has no relation for attribute '" +
                            attr + "'");

  auto extrema = category_extrema(view);
  RdfDocument doc;
  doc.property_ns = ont.namespace_uri;
  for (const auto& rec : view.records) {
    std::string subject = ont.subject_base + std::to_string(rec.emp_id);
    for (const auto& attr : view.schema) {
      const auto& ex = extrema.at({rec.category, attr});
      doc.triples.push_back(
          {subject, ont.max_relation(attr), format_double(ex.max_value + policy.df)});
      doc.triples.push_back(
          {subject, ont.min_relation(attr), format_double(ex.min_value + policy.df)});
    }
    doc.triples.push_back({subject, "hasName", rec.name});
  }
  return doc;
}

/// Sum of the disguised upper bounds (hasMax literals) for the given record
/// over the requested attributes. hasMin is carried in documents but never
/// used for inference.
inline double infer_unknown_sum(const RdfDocument& doc, std::uint64_t emp_id,
                                const std::vector<std::string>& unknown_attrs) {
  if (unknown_attrs.empty()) return 0.0;

  const std::string* subject = nullptr;
  for (const auto& t : doc.triples) {
    auto id = subject_record_id(t.subject);
    if (id && *id == emp_id) {
      subject = &t.subject;
      break;
    }
  }
  if (!subject)
    throw InferenceError("infer_unknown_sum: no description block for record " +
                         std::to_string(emp_id));

  double sum = 0;
  for (const auto& attr : unknown_attrs) {
    const auto* t = doc.find(*subject, "hasMax" + attr);
    if (!t)
      throw InferenceError("infer_unknown_sum: record " + std::to_string(emp_id) +
                           " has no hasMax" + attr + " triple");
    double v = parse_double(t->object, "hasMax" + attr + " literal of record " +
                                           std::to_string(emp_id));
    if (!std::isfinite(v) || v < 0)
      throw InferenceError("infer_unknown_sum: hasMax" + attr + " literal of record " +
                           std::to_string(emp_id) + " is not a non-negative amount");
    sum += v;
  }
  return sum;
}

}  // namespace ppgd
