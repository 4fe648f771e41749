#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#define OPENSSL_SUPPRESS_DEPRECATED
#include <openssl/des.h>

#include "ppgd/errors.hpp"

namespace ppgd {

/// Deterministic block primitive behind the frame layer. Implementations can
/// be registered under an algorithm name; DES is the built-in default.
class BlockCipher {
public:
  virtual ~BlockCipher() = default;
  virtual std::size_t block_size() const = 0;
  virtual void encrypt_block(const std::uint8_t* in, std::uint8_t* out) const = 0;
  virtual void decrypt_block(const std::uint8_t* in, std::uint8_t* out) const = 0;
};

/// Shared symmetric-cipher settings; both parties must configure the same
/// algorithm, mode and key. DES/ECB is a deliberately weak historical choice
/// kept for faithfulness; do not reuse it for anything that needs real
/// security.
struct CipherConfig {
  std::string algorithm = "DES";
  std::string mode = "ECB/PKCS5";
  std::string shared_key = "ppgd-shared-secret";

  void validate() const {
    if (algorithm.empty()) throw ConfigError("cipher: algorithm must be set");
    if (mode.empty()) throw ConfigError("cipher: mode must be set");
    if (shared_key.empty()) throw ConfigError("cipher: shared key must be non-empty");
  }
};

// 8-byte DES key from a passphrase: truncate or zero-pad.
inline std::array<std::uint8_t, 8> derive_des_key(std::string_view passphrase) {
  std::array<std::uint8_t, 8> key{};
  for (std::size_t i = 0; i < key.size() && i < passphrase.size(); ++i)
    key[i] = static_cast<std::uint8_t>(passphrase[i]);
  return key;
}

class DesCipher final : public BlockCipher {
public:
  explicit DesCipher(const std::array<std::uint8_t, 8>& key) {
    DES_cblock block;
    for (std::size_t i = 0; i < 8; ++i) block[i] = key[i];
    DES_set_key_unchecked(&block, &schedule_);
  }

  std::size_t block_size() const override { return 8; }

  void encrypt_block(const std::uint8_t* in, std::uint8_t* out) const override {
    crypt(in, out, DES_ENCRYPT);
  }

  void decrypt_block(const std::uint8_t* in, std::uint8_t* out) const override {
    crypt(in, out, DES_DECRYPT);
  }

private:
  void crypt(const std::uint8_t* in, std::uint8_t* out, int dir) const {
    DES_cblock src, dst;
    for (std::size_t i = 0; i < 8; ++i) src[i] = in[i];
    DES_ecb_encrypt(&src, &dst, const_cast<DES_key_schedule*>(&schedule_), dir);
    for (std::size_t i = 0; i < 8; ++i) out[i] = dst[i];
  }

  DES_key_schedule schedule_;
};

using CipherFactory =
    std::function<std::unique_ptr<BlockCipher>(const CipherConfig&)>;

inline std::map<std::string, CipherFactory>& cipher_registry() {
  static std::map<std::string, CipherFactory> registry = {
      {"DES", [](const CipherConfig& cfg) -> std::unique_ptr<BlockCipher> {
         if (cfg.mode != "ECB/PKCS5")
           throw ConfigError("cipher: DES supports only ECB/PKCS5, got '" + cfg.mode + "'");
         return std::make_unique<DesCipher>(derive_des_key(cfg.shared_key));
       }}};
  return registry;
}

inline void register_cipher(const std::string& name, CipherFactory factory) {
  cipher_registry()[name] = std::move(factory);
}

inline std::unique_ptr<BlockCipher> make_cipher(const CipherConfig& cfg) {
  cfg.validate();
  auto it = cipher_registry().find(cfg.algorithm);
  if (it == cipher_registry().end())
    throw ConfigError("cipher: unknown algorithm '" + cfg.algorithm + "'");
  return it->second(cfg);
}

// ---------------------------------------------------------------------------
// PKCS-style padding + ECB frame

/// One encrypted protocol segment; on the wire it is preceded by a 4-byte
/// big-endian ciphertext length.
struct Frame {
  std::vector<std::uint8_t> ciphertext;
};

inline std::vector<std::uint8_t> pkcs_pad(std::span<const std::uint8_t> data,
                                          std::size_t block_size) {
  std::size_t pad = block_size - data.size() % block_size;  // 1..block_size
  std::vector<std::uint8_t> out(data.begin(), data.end());
  out.insert(out.end(), pad, static_cast<std::uint8_t>(pad));
  return out;
}

inline std::vector<std::uint8_t> pkcs_unpad(std::span<const std::uint8_t> data,
                                            std::size_t block_size) {
  if (data.empty() || data.size() % block_size != 0)
    throw SecurityError("decrypt: padded size is not a positive block multiple");
  std::uint8_t pad = data.back();
  if (pad < 1 || pad > block_size)
    throw SecurityError("decrypt: bad padding (wrong key or corrupted frame)");
  for (std::size_t i = data.size() - pad; i < data.size(); ++i)
    if (data[i] != pad)
      throw SecurityError("decrypt: bad padding (wrong key or corrupted frame)");
  return std::vector<std::uint8_t>(data.begin(), data.end() - pad);
}

inline Frame encrypt_frame(std::span<const std::uint8_t> plaintext,
                           const BlockCipher& cipher) {
  const std::size_t bs = cipher.block_size();
  auto padded = pkcs_pad(plaintext, bs);
  Frame frame;
  frame.ciphertext.resize(padded.size());
  for (std::size_t off = 0; off < padded.size(); off += bs)
    cipher.encrypt_block(padded.data() + off, frame.ciphertext.data() + off);
  return frame;
}

inline std::vector<std::uint8_t> decrypt_frame(const Frame& frame,
                                               const BlockCipher& cipher) {
  const std::size_t bs = cipher.block_size();
  if (frame.ciphertext.empty() || frame.ciphertext.size() % bs != 0)
    throw FramingError("frame: ciphertext size must be a positive multiple of " +
                       std::to_string(bs));
  std::vector<std::uint8_t> padded(frame.ciphertext.size());
  for (std::size_t off = 0; off < padded.size(); off += bs)
    cipher.decrypt_block(frame.ciphertext.data() + off, padded.data() + off);
  return pkcs_unpad(padded, bs);
}

}  // namespace ppgd
