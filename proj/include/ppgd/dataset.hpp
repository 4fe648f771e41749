#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ppgd/errors.hpp"
#include "ppgd/strings.hpp"

namespace ppgd {

enum class Party { A, B };

inline const char* party_name(Party p) { return p == Party::A ? "A" : "B"; }
inline Party other_party(Party p) { return p == Party::A ? Party::B : Party::A; }

/// One table row: identifiers plus currency amounts aligned to the owning
/// table's schema.
struct EmployeeRecord {
  std::uint64_t emp_id = 0;
  std::string name;
  std::string category;
  std::vector<double> values;

  bool operator==(const EmployeeRecord&) const = default;
};

/// The unpartitioned table: n records over m named attributes.
struct Dataset {
  std::vector<std::string> schema;
  std::vector<EmployeeRecord> records;

  bool operator==(const Dataset&) const = default;

  std::size_t n() const { return records.size(); }
  std::size_t m() const { return schema.size(); }

  std::size_t attr_index(std::string_view name) const {
    auto it = std::find(schema.begin(), schema.end(), name);
    if (it == schema.end())
      throw ValidationError("dataset: unknown attribute '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - schema.begin());
  }

  double value(std::size_t row, std::string_view attr) const {
    return records.at(row).values.at(attr_index(attr));
  }

  void validate() const {
    if (records.empty()) throw ValidationError("dataset: n must be >= 1");
    if (schema.empty()) throw ValidationError("dataset: m must be >= 1");
    std::set<std::uint64_t> ids;
    for (const auto& r : records) {
      if (!ids.insert(r.emp_id).second)
        throw ValidationError("dataset: duplicate emp_id " + std::to_string(r.emp_id));
      if (r.category.empty())
        throw ValidationError("dataset: empty category for emp_id " + std::to_string(r.emp_id));
      if (r.values.size() != schema.size())
        throw ValidationError("dataset: emp_id " + std::to_string(r.emp_id) +
                              " has " + std::to_string(r.values.size()) +
                              " values, schema has " + std::to_string(schema.size()));
      for (double v : r.values)
        if (!std::isfinite(v) || v < 0)
          throw ValidationError("dataset: emp_id " + std::to_string(r.emp_id) +
                                " has a negative or non-finite value");
    }
  }
};

/// Disjoint attribute split between the two parties; union must cover the
/// schema and both sides must be non-empty.
struct PartitionSpec {
  std::vector<std::string> party_a_attrs;
  std::vector<std::string> party_b_attrs;

  void validate(const std::vector<std::string>& schema) const {
    if (party_a_attrs.empty() || party_b_attrs.empty())
      throw PartitionError("partition: both attribute sets must be non-empty");
    std::set<std::string> a(party_a_attrs.begin(), party_a_attrs.end());
    std::set<std::string> b(party_b_attrs.begin(), party_b_attrs.end());
    if (a.size() != party_a_attrs.size() || b.size() != party_b_attrs.size())
      throw PartitionError("partition: duplicate attribute within one side");
    for (const auto& name : a)
      if (b.count(name))
        throw PartitionError("partition: attribute '" + name + "' assigned to both parties");
    std::set<std::string> all(schema.begin(), schema.end());
    for (const auto& name : a)
      if (!all.count(name))
        throw PartitionError("partition: attribute '" + name + "' not in schema");
    for (const auto& name : b)
      if (!all.count(name))
        throw PartitionError("partition: attribute '" + name + "' not in schema");
    if (a.size() + b.size() != all.size())
      throw PartitionError("partition: attribute sets do not cover the schema");
  }
};

/// One party's columns. Record order and emp_id sequence match the source
/// dataset; emp_id, name and category are always retained.
struct PartitionedView {
  Party party = Party::A;
  std::vector<std::string> schema;
  std::vector<EmployeeRecord> records;

  bool operator==(const PartitionedView&) const = default;

  std::size_t n() const { return records.size(); }

  double known_sum(std::size_t row) const {
    double s = 0;
    for (double v : records.at(row).values) s += v;
    return s;
  }
};

/// Per-record sum over all m attributes of the full dataset.
struct ExpectedVector {
  std::vector<double> values;

  bool operator==(const ExpectedVector&) const = default;
};

struct AttributeRange {
  std::string name;
  double lo = 0;
  double hi = 0;
};

// ---------------------------------------------------------------------------
// Operations

inline Dataset generate_synthetic(std::uint64_t seed, std::size_t n,
                                  const std::vector<std::string>& categories,
                                  const std::vector<AttributeRange>& ranges) {
  if (n < 1) throw ConfigError("generate_synthetic: n must be >= 1");
  if (categories.empty()) throw ConfigError("generate_synthetic: category list is empty");
  if (ranges.empty()) throw ConfigError("generate_synthetic: attribute list is empty");
  for (const auto& r : ranges) {
    if (r.name.empty()) throw ConfigError("generate_synthetic: empty attribute name");
    if (!(std::isfinite(r.lo) && std::isfinite(r.hi)) || r.lo > r.hi || r.lo < 0)
      throw ConfigError("generate_synthetic: invalid range for '" + r.name + "'");
  }
  for (const auto& c : categories)
    if (c.empty()) throw ConfigError("generate_synthetic: empty category label");

  std::mt19937_64 rng(seed);
  // Map raw 64-bit draws to [0,1) ourselves so output is identical on every
  // platform; distribution classes are implementation-defined.
  auto uniform01 = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  Dataset ds;
  for (const auto& r : ranges) ds.schema.push_back(r.name);
  ds.records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    EmployeeRecord rec;
    rec.emp_id = i + 1;
    rec.name = "emp" + std::to_string(rec.emp_id);
    rec.category = categories[static_cast<std::size_t>(rng() % categories.size())];
    rec.values.reserve(ranges.size());
    for (const auto& r : ranges) {
      double v = r.lo + (r.hi - r.lo) * uniform01();
      rec.values.push_back(std::round(v * 100.0) / 100.0);
    }
    ds.records.push_back(std::move(rec));
  }
  ds.validate();
  return ds;
}

// Fig-3 layout: EmpID, name, <attributes...>, Category. "GD" is accepted as
// an alias for the canonical "GDP" column name.
inline std::string normalize_attr_name(const std::string& name) {
  return name == "GD" ? std::string("GDP") : name;
}

inline Dataset parse_csv(std::string_view text, const std::string& path) {
  std::vector<std::string> lines;
  for (auto& line : split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw ParseError(path + ": empty file");

  auto header = split(lines[0], ',');
  for (auto& h : header) h = trim(h);
  if (header.size() < 4)
    throw ParseError(path + ": header needs EmpID, name, at least one attribute, Category");
  if (header.front() != "EmpID")
    throw ParseError(path + ": first column must be EmpID, got '" + header.front() + "'");
  if (header[1] != "name")
    throw ParseError(path + ": second column must be name, got '" + header[1] + "'");
  if (header.back() != "Category")
    throw ParseError(path + ": last column must be Category, got '" + header.back() + "'");

  Dataset ds;
  for (std::size_t c = 2; c + 1 < header.size(); ++c) {
    auto name = normalize_attr_name(header[c]);
    if (name.empty()) throw ParseError(path + ": empty attribute name in header");
    if (std::find(ds.schema.begin(), ds.schema.end(), name) != ds.schema.end())
      throw ParseError(path + ": duplicate column '" + name + "'");
    ds.schema.push_back(name);
  }

  if (lines.size() < 2) throw ParseError(path + ": no records");

  std::set<std::uint64_t> seen;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    auto fields = split(lines[li], ',');
    const std::string row = "row " + std::to_string(li);
    if (fields.size() != header.size())
      throw ParseError(path + ": " + row + ": expected " + std::to_string(header.size()) +
                       " fields, got " + std::to_string(fields.size()));
    EmployeeRecord rec;
    rec.emp_id = parse_u64(fields[0], path + ": " + row + ", column EmpID");
    if (!seen.insert(rec.emp_id).second)
      throw ParseError(path + ": " + row + ": duplicate EmpID " + std::to_string(rec.emp_id));
    rec.name = trim(fields[1]);
    rec.category = trim(fields.back());
    if (rec.category.empty()) throw ParseError(path + ": " + row + ": empty Category");
    for (std::size_t c = 2; c + 1 < fields.size(); ++c) {
      const std::string ctx = path + ": " + row + ", column " + ds.schema[c - 2];
      double v = parse_double(fields[c], ctx);
      if (!std::isfinite(v) || v < 0)
        throw ParseError(ctx + ": value must be a non-negative finite amount");
      rec.values.push_back(v);
    }
    ds.records.push_back(std::move(rec));
  }
  ds.validate();
  return ds;
}

inline Dataset load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path);
}

inline std::string render_csv(const Dataset& ds) {
  std::string out = "EmpID,name";
  for (const auto& a : ds.schema) out += "," + a;
  out += ",Category\n";
  char amount[32];
  for (const auto& r : ds.records) {
    out += std::to_string(r.emp_id) + "," + r.name;
    for (double v : r.values) {
      std::snprintf(amount, sizeof(amount), "%.2f", v);
      out += ",";
      out += amount;
    }
    out += "," + r.category + "\n";
  }
  return out;
}

inline void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path + ": cannot open file for writing");
  out << render_csv(ds);
  if (!out) throw Error(path + ": write failed");
}

inline std::pair<PartitionedView, PartitionedView> partition_vertical(
    const Dataset& ds, const PartitionSpec& spec) {
  ds.validate();
  spec.validate(ds.schema);

  auto project = [&ds](Party party, const std::vector<std::string>& attrs) {
    std::set<std::string> wanted(attrs.begin(), attrs.end());
    PartitionedView view;
    view.party = party;
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < ds.schema.size(); ++c)
      if (wanted.count(ds.schema[c])) {
        view.schema.push_back(ds.schema[c]);
        cols.push_back(c);
      }
    for (const auto& r : ds.records) {
      EmployeeRecord rec{r.emp_id, r.name, r.category, {}};
      rec.values.reserve(cols.size());
      for (auto c : cols) rec.values.push_back(r.values[c]);
      view.records.push_back(std::move(rec));
    }
    return view;
  };

  return {project(Party::A, spec.party_a_attrs), project(Party::B, spec.party_b_attrs)};
}

inline ExpectedVector expected_vector(const Dataset& ds) {
  ds.validate();
  ExpectedVector e;
  e.values.reserve(ds.n());
  for (const auto& r : ds.records) {
    double s = 0;
    for (double v : r.values) s += v;
    e.values.push_back(s);
  }
  return e;
}

}  // namespace ppgd
