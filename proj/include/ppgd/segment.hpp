#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ppgd/errors.hpp"

namespace ppgd {

enum class SegmentKind {
  ConInit,
  ConInitAck,
  Request,
  Response,
  ConTerm,
  ConTermAck,
};

inline std::string_view segment_kind_name(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::ConInit: return "CON_INIT";
    case SegmentKind::ConInitAck: return "CON_INIT_ACK";
    case SegmentKind::Request: return "REQUEST";
    case SegmentKind::Response: return "RESPONSE";
    case SegmentKind::ConTerm: return "CON_TERM";
    case SegmentKind::ConTermAck: return "CON_TERM_ACK";
  }
  throw Error("segment: invalid kind");
}

inline bool is_control_kind(SegmentKind kind) {
  return kind != SegmentKind::Request && kind != SegmentKind::Response;
}

/// One protocol message: a kind plus a text payload (empty for control
/// kinds). RESPONSE payloads are NAME|VALUE with exactly one delimiter.
struct Segment {
  SegmentKind kind = SegmentKind::ConInit;
  std::string message;

  bool operator==(const Segment&) const = default;
};

inline Segment make_request(std::string name) {
  return {SegmentKind::Request, std::move(name)};
}

inline Segment make_response(std::string_view name, std::string_view value) {
  if (name.empty()) throw EncodingError("response: name must be non-empty");
  if (name.find('|') != std::string_view::npos ||
      value.find('|') != std::string_view::npos)
    throw EncodingError("response: '|' is reserved as the NAME|VALUE delimiter");
  return {SegmentKind::Response, std::string(name) + "|" + std::string(value)};
}

/// Splits a RESPONSE payload at its single NAME|VALUE delimiter.
inline std::pair<std::string, std::string> split_response(std::string_view message) {
  auto pos = message.find('|');
  if (pos == std::string_view::npos)
    throw ProtocolError("response: missing NAME|VALUE delimiter");
  if (message.find('|', pos + 1) != std::string_view::npos)
    throw ProtocolError("response: more than one NAME|VALUE delimiter");
  if (pos == 0) throw ProtocolError("response: empty NAME");
  return {std::string(message.substr(0, pos)), std::string(message.substr(pos + 1))};
}

inline void validate_segment(const Segment& s) {
  if (s.message.find('\n') != std::string::npos)
    throw EncodingError("segment: payload must not contain a raw newline");
  if (is_control_kind(s.kind)) {
    if (!s.message.empty())
      throw EncodingError("segment: control kinds carry no payload");
    return;
  }
  if (s.kind == SegmentKind::Request && s.message.empty())
    throw EncodingError("segment: REQUEST needs a non-empty name");
  if (s.kind == SegmentKind::Response) {
    auto pos = s.message.find('|');
    if (pos == std::string::npos || pos == 0 ||
        s.message.find('|', pos + 1) != std::string::npos)
      throw EncodingError("segment: RESPONSE payload must be NAME|VALUE");
  }
}

/// Canonical plaintext form: "<KIND> <message>\n", control kinds "<KIND>\n".
inline std::vector<std::uint8_t> encode_segment(const Segment& s) {
  validate_segment(s);
  std::string line(segment_kind_name(s.kind));
  if (!s.message.empty()) {
    line += ' ';
    line += s.message;
  }
  line += '\n';
  return std::vector<std::uint8_t>(line.begin(), line.end());
}

inline Segment decode_segment(std::span<const std::uint8_t> bytes) {
  if (bytes.empty() || bytes.back() != '\n')
    throw ProtocolError("segment: missing trailing newline");
  std::string_view line(reinterpret_cast<const char*>(bytes.data()), bytes.size() - 1);
  if (line.find('\n') != std::string_view::npos)
    throw ProtocolError("segment: embedded newline");

  auto space = line.find(' ');
  std::string_view kind_text = space == std::string_view::npos ? line : line.substr(0, space);
  std::string_view message = space == std::string_view::npos ? "" : line.substr(space + 1);

  Segment s;
  if (kind_text == "CON_INIT") s.kind = SegmentKind::ConInit;
  else if (kind_text == "CON_INIT_ACK") s.kind = SegmentKind::ConInitAck;
  else if (kind_text == "REQUEST") s.kind = SegmentKind::Request;
  else if (kind_text == "RESPONSE") s.kind = SegmentKind::Response;
  else if (kind_text == "CON_TERM") s.kind = SegmentKind::ConTerm;
  else if (kind_text == "CON_TERM_ACK") s.kind = SegmentKind::ConTermAck;
  else throw ProtocolError("segment: unknown kind '" + std::string(kind_text) + "'");

  s.message = std::string(message);
  try {
    validate_segment(s);
  } catch (const EncodingError& e) {
    throw ProtocolError(e.what());
  }
  return s;
}

}  // namespace ppgd
