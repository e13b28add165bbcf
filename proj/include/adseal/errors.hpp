#pragma once

#include <stdexcept>
#include <string>

namespace adseal {

// Base for everything this library throws on purpose.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Shape/precondition violations in the numerics layer.
struct DimensionError : Error {
  explicit DimensionError(const std::string& what) : Error(what) {}
};

// l2_normalize on a (near-)zero vector.
struct DegenerateVectorError : Error {
  explicit DegenerateVectorError(const std::string& what) : Error(what) {}
};

// Malformed or inconsistent input data (logs, catalogs, fixtures).
struct DataError : Error {
  explicit DataError(const std::string& what) : Error(what) {}
};

// A message was blocked at the client->server boundary.
struct PrivacyViolation : Error {
  explicit PrivacyViolation(const std::string& what) : Error(what) {}
};

// Authentication failure or key problems in the encrypted store.
struct CryptoError : Error {
  explicit CryptoError(const std::string& what) : Error(what) {}
};

// Bad run configuration (unknown keys, out-of-range values).
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace adseal
