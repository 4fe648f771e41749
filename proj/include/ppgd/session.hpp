#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ppgd/cipher.hpp"
#include "ppgd/errors.hpp"
#include "ppgd/log.hpp"
#include "ppgd/segment.hpp"
#include "ppgd/transport.hpp"

namespace ppgd {

enum class Role { Initiator, Responder };
enum class Direction { Sent, Received };

struct TranscriptEntry {
  Direction direction = Direction::Sent;
  Segment segment;

  bool operator==(const TranscriptEntry&) const = default;
};

/// Ordered record of every segment a party saw in a session. A completed
/// handshake begins with CON_INIT and ends with CON_TERM_ACK.
using Transcript = std::vector<TranscriptEntry>;

inline constexpr std::size_t kMaxFrameBytes = 1u << 26;

inline void write_frame(Transport& transport, const Frame& frame) {
  if (frame.ciphertext.size() > kMaxFrameBytes)
    throw FramingError("frame: ciphertext exceeds the size cap");
  std::uint32_t len = static_cast<std::uint32_t>(frame.ciphertext.size());
  std::uint8_t header[4] = {
      static_cast<std::uint8_t>(len >> 24), static_cast<std::uint8_t>(len >> 16),
      static_cast<std::uint8_t>(len >> 8), static_cast<std::uint8_t>(len)};
  transport.write_all(header);
  transport.write_all(frame.ciphertext);
}

inline Frame read_frame(Transport& transport) {
  std::uint8_t header[4];
  transport.read_exact(header);
  std::uint32_t len = (std::uint32_t(header[0]) << 24) | (std::uint32_t(header[1]) << 16) |
                      (std::uint32_t(header[2]) << 8) | std::uint32_t(header[3]);
  if (len == 0 || len > kMaxFrameBytes)
    throw FramingError("frame: bad length prefix " + std::to_string(len));
  Frame frame;
  frame.ciphertext.resize(len);
  try {
    transport.read_exact(frame.ciphertext);
  } catch (const TransportError&) {
    throw FramingError("frame: truncated after length prefix");
  }
  return frame;
}

/// One party's end of a connection: encrypts/decrypts segments, keeps the
/// transcript, and aborts the transport on any protocol or security fault.
class Session {
public:
  Session(Transport& transport, const CipherConfig& cipher_cfg)
      : transport_(transport), cipher_(make_cipher(cipher_cfg)) {}

  void send(const Segment& segment) {
    auto plaintext = encode_segment(segment);
    write_frame(transport_, encrypt_frame(plaintext, *cipher_));
    transcript_.push_back({Direction::Sent, segment});
    log(LogLevel::Debug, "sent " + std::string(segment_kind_name(segment.kind)));
  }

  Segment recv() {
    Segment segment;
    try {
      Frame frame = read_frame(transport_);
      auto plaintext = decrypt_frame(frame, *cipher_);
      segment = decode_segment(plaintext);
    } catch (...) {
      transport_.close();
      throw;
    }
    transcript_.push_back({Direction::Received, segment});
    log(LogLevel::Debug, "received " + std::string(segment_kind_name(segment.kind)));
    return segment;
  }

  Segment expect(SegmentKind kind) {
    Segment segment = recv();
    if (segment.kind != kind) {
      transport_.close();
      throw ProtocolError(std::string("protocol: expected ") +
                          std::string(segment_kind_name(kind)) + ", got " +
                          std::string(segment_kind_name(segment.kind)));
    }
    return segment;
  }

  void abort() { transport_.close(); }

  const Transcript& transcript() const { return transcript_; }
  std::size_t transcript_size() const { return transcript_.size(); }

private:
  Transport& transport_;
  std::unique_ptr<BlockCipher> cipher_;
  Transcript transcript_;
};

struct ExchangeResult {
  std::string value;
  Transcript transcript;  // the segments of this exchange only
};

/// One full CON_INIT .. CON_TERM_ACK cycle in which each side hands over one
/// named item. The responder piggybacks its own REQUEST behind its RESPONSE,
/// and the initiator piggybacks CON_TERM behind its RESPONSE; piggybacked
/// segments are separate frames delivered back-to-back.
inline ExchangeResult exchange_item(Session& session, Role role,
                                    const std::string& my_name,
                                    const std::string& my_value,
                                    const std::string& wanted_name) {
  const std::size_t start = session.transcript_size();
  std::string peer_value;

  auto check_name = [&session](const std::string& got, const std::string& want,
                               const char* what) {
    if (got != want) {
      session.abort();
      throw ProtocolError(std::string("protocol: ") + what + " names '" + got +
                          "', expected '" + want + "'");
    }
  };

  if (role == Role::Initiator) {
    session.send({SegmentKind::ConInit, ""});
    session.expect(SegmentKind::ConInitAck);
    session.send(make_request(wanted_name));
    auto [peer_name, value] = split_response(session.expect(SegmentKind::Response).message);
    check_name(peer_name, wanted_name, "RESPONSE");
    peer_value = value;
    auto request = session.expect(SegmentKind::Request);
    check_name(request.message, my_name, "REQUEST");
    session.send(make_response(my_name, my_value));
    session.send({SegmentKind::ConTerm, ""});
    session.expect(SegmentKind::ConTermAck);
  } else {
    session.expect(SegmentKind::ConInit);
    session.send({SegmentKind::ConInitAck, ""});
    auto request = session.expect(SegmentKind::Request);
    check_name(request.message, my_name, "REQUEST");
    session.send(make_response(my_name, my_value));
    session.send(make_request(wanted_name));
    auto [peer_name, value] = split_response(session.expect(SegmentKind::Response).message);
    check_name(peer_name, wanted_name, "RESPONSE");
    peer_value = value;
    session.expect(SegmentKind::ConTerm);
    session.send({SegmentKind::ConTermAck, ""});
  }

  ExchangeResult result;
  result.value = std::move(peer_value);
  result.transcript.assign(session.transcript().begin() + static_cast<std::ptrdiff_t>(start),
                           session.transcript().end());
  return result;
}

/// First-stage exchange: each party learns where to read the peer's RDF
/// document (a filesystem path/URI, or an inline: payload for hermetic runs).
inline ExchangeResult exchange_rdf_locations(Session& session, Role role,
                                             const std::string& my_rdf_name,
                                             const std::string& my_rdf_url,
                                             const std::string& wanted_rdf_name) {
  return exchange_item(session, role, my_rdf_name, my_rdf_url, wanted_rdf_name);
}

// ---------------------------------------------------------------------------
// Vector payloads (JSON array text, full round-trip precision)

inline std::string vector_to_json(std::span<const double> values) {
  if (values.empty()) throw ValidationError("vector: n must be >= 1");
  nlohmann::json array = nlohmann::json::array();
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("vector: values must be finite");
    array.push_back(v);
  }
  return array.dump();
}

inline std::vector<double> vector_from_json(const std::string& text) {
  nlohmann::json array;
  try {
    array = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("vector payload: ") + e.what());
  }
  if (!array.is_array() || array.empty())
    throw ProtocolError("vector payload: expected a non-empty JSON array");
  std::vector<double> values;
  values.reserve(array.size());
  for (const auto& item : array) {
    if (!item.is_number())
      throw ProtocolError("vector payload: non-numeric element");
    values.push_back(item.get<double>());
  }
  return values;
}

/// Second-stage exchange: swaps one named prediction vector per direction
/// using the same segment cycle as the RDF-location exchange.
inline std::vector<double> exchange_vectors(Session& session, Role role,
                                            const std::string& my_name,
                                            std::span<const double> my_vector,
                                            const std::string& wanted_name) {
  auto result =
      exchange_item(session, role, my_name, vector_to_json(my_vector), wanted_name);
  return vector_from_json(result.value);
}

}  // namespace ppgd
