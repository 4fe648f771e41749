#pragma once

#include <stdexcept>
#include <string>

namespace ppgd {

// Base of every failure thrown by this library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public Error { public: using Error::Error; };
class ParseError : public Error { public: using Error::Error; };
class ValidationError : public Error { public: using Error::Error; };
class PartitionError : public Error { public: using Error::Error; };
class GenerationError : public Error { public: using Error::Error; };
class InferenceError : public Error { public: using Error::Error; };
class EncodingError : public Error { public: using Error::Error; };
class FramingError : public Error { public: using Error::Error; };
class SecurityError : public Error { public: using Error::Error; };
class ProtocolError : public Error { public: using Error::Error; };
class TransportError : public Error { public: using Error::Error; };

}  // namespace ppgd
