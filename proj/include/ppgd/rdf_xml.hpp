#pragma once

#include <cctype>
#include <cmath>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ppgd/errors.hpp"
#include "ppgd/ontology.hpp"
#include "ppgd/strings.hpp"

namespace ppgd {

inline constexpr std::string_view kRdfSyntaxNs =
    "http://www.w3.org/1999/02/22-rdf-syntax-ns#";

namespace detail {

inline bool is_xml_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' ||
         c == '-' || c == ':';
}

// Cursor over the fixed RDF/XML subset: rdf:RDF root, rdf:Description blocks,
// flat property elements with text content. Nothing else is accepted.
class XmlCursor {
public:
  explicit XmlCursor(std::string_view text) : text_(text) {}

  bool at_end() const { return pos_ >= text_.size(); }

  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool consume(std::string_view token) {
    if (text_.substr(pos_, token.size()) != token) return false;
    pos_ += token.size();
    return true;
  }

  void expect(std::string_view token, const std::string& what) {
    if (!consume(token)) fail("expected " + what);
  }

  std::string read_name() {
    std::size_t start = pos_;
    while (!at_end() && is_xml_name_char(text_[pos_])) ++pos_;
    if (pos_ == start) fail("expected a name");
    return std::string(text_.substr(start, pos_ - start));
  }

  // Reads name="value" pairs until the next '>' (in document order).
  std::vector<std::pair<std::string, std::string>> read_attributes() {
    std::vector<std::pair<std::string, std::string>> attrs;
    while (true) {
      skip_ws();
      if (at_end()) fail("unexpected end of input inside a tag");
      if (text_[pos_] == '>') return attrs;
      std::string name = read_name();
      skip_ws();
      expect("=", "'=' after attribute name");
      skip_ws();
      expect("\"", "'\"' opening an attribute value");
      auto end = text_.find('"', pos_);
      if (end == std::string_view::npos) fail("unterminated attribute value");
      std::string raw(text_.substr(pos_, end - pos_));
      pos_ = end + 1;
      attrs.emplace_back(std::move(name), xml_unescape(raw, location()));
    }
  }

  std::string read_text_until_lt() {
    auto end = text_.find('<', pos_);
    if (end == std::string_view::npos) fail("unexpected end of input in element text");
    std::string raw(text_.substr(pos_, end - pos_));
    pos_ = end;
    return xml_unescape(raw, location());
  }

  void skip_past(std::string_view token, const std::string& what) {
    auto end = text_.find(token, pos_);
    if (end == std::string_view::npos) fail("unterminated " + what);
    pos_ = end + token.size();
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(location() + ": " + msg);
  }

  std::string location() const {
    std::size_t line = 1;
    for (std::size_t i = 0; i < pos_ && i < text_.size(); ++i)
      if (text_[i] == '\n') ++line;
    return "rdf/xml line " + std::to_string(line);
  }

private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

inline std::string_view local_name(std::string_view qualified) {
  auto colon = qualified.rfind(':');
  return colon == std::string_view::npos ? qualified : qualified.substr(colon + 1);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Operations

/// Deterministic RDF/XML rendering: one rdf:Description per record block,
/// property elements in triple order under the j.0 prefix.
inline std::string serialize_rdf_xml(const RdfDocument& doc) {
  for (const auto& t : doc.triples) {
    if (t.predicate.empty()) throw ValidationError("serialize_rdf_xml: empty predicate");
    for (char c : t.predicate)
      if (!detail::is_xml_name_char(c) || c == ':')
        throw ValidationError("serialize_rdf_xml: predicate '" + t.predicate +
                              "' is not a valid element name");
  }

  std::string out = "<rdf:RDF xmlns:j.0=\"" + xml_escape(doc.property_ns) +
                    "\" xmlns:rdf=\"" + std::string(kRdfSyntaxNs) + "\">\n";
  for (const auto& subject : doc.subjects()) {
    out += "  <rdf:Description rdf:about=\"" + xml_escape(subject) + "\">\n";
    for (const auto& t : doc.triples)
      if (t.subject == subject)
        out += "    <j.0:" + t.predicate + ">" + xml_escape(t.object) + "</j.0:" +
               t.predicate + ">\n";
    out += "  </rdf:Description>\n";
  }
  out += "</rdf:RDF>\n";
  return out;
}

/// Parses the subset emitted by serialize_rdf_xml. Property prefixes are not
/// reconciled (published samples mix j.0/n.0); triples keep local relation
/// names. hasMax*/hasMin* literals must be finite non-negative numbers.
inline RdfDocument parse_rdf_xml(std::string_view text) {
  detail::XmlCursor cur(text);
  RdfDocument doc;

  cur.skip_ws();
  if (cur.consume("<?xml")) {
    cur.skip_past("?>", "xml declaration");
    cur.skip_ws();
  }

  cur.expect("<rdf:RDF", "<rdf:RDF> root element");
  bool ns_seen = false;
  for (const auto& [name, value] : cur.read_attributes()) {
    if (name.rfind("xmlns:", 0) == 0 && name != "xmlns:rdf" && !ns_seen) {
      doc.property_ns = value;
      ns_seen = true;
    }
  }
  cur.expect(">", "'>' closing the root tag");

  while (true) {
    cur.skip_ws();
    if (cur.consume("</rdf:RDF")) {
      cur.skip_ws();
      cur.expect(">", "'>' closing </rdf:RDF>");
      cur.skip_ws();
      if (!cur.at_end()) cur.fail("trailing content after </rdf:RDF>");
      return doc;
    }
    if (cur.at_end()) cur.fail("unexpected end of input, missing </rdf:RDF>");

    cur.expect("<rdf:Description", "<rdf:Description> block");
    std::string subject;
    bool about_seen = false;
    for (const auto& [name, value] : cur.read_attributes()) {
      if (name == "rdf:about") {
        subject = value;
        about_seen = true;
      }
    }
    if (!about_seen) cur.fail("rdf:Description without rdf:about");
    if (subject.empty()) cur.fail("rdf:about is empty");
    cur.expect(">", "'>' closing the description tag");

    while (true) {
      cur.skip_ws();
      if (cur.consume("</rdf:Description")) {
        cur.skip_ws();
        cur.expect(">", "'>' closing </rdf:Description>");
        break;
      }
      if (cur.at_end()) cur.fail("unexpected end of input inside a description");

      cur.expect("<", "a property element");
      std::string open = cur.read_name();
      cur.skip_ws();
      cur.expect(">", "'>' closing the property tag");
      std::string object = cur.read_text_until_lt();
      cur.expect("</", "a closing property tag");
      std::string close = cur.read_name();
      cur.skip_ws();
      cur.expect(">", "'>' closing the property element");

      // Closing tags must match by local name; prefix mismatches are
      // tolerated (Table-5 style n.0/j.0 typos).
      auto local = detail::local_name(open);
      if (local != detail::local_name(close))
        cur.fail("mismatched closing tag </" + close + "> for <" + open + ">");
      if (local.empty()) cur.fail("property element with empty local name");

      std::string predicate(local);
      if (predicate.rfind("hasMax", 0) == 0 || predicate.rfind("hasMin", 0) == 0) {
        double v = parse_double(object, cur.location() + ": " + predicate);
        if (!std::isfinite(v) || v < 0)
          cur.fail(predicate + " literal must be a finite non-negative number");
      }
      doc.triples.push_back({subject, std::move(predicate), std::move(object)});
    }
  }
}

}  // namespace ppgd
