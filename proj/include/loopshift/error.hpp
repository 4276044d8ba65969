#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace loopshift {

// Base class for every error raised by the library. `kind()` is a stable
// machine-readable tag used by the CLI's structured error output.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct InvalidParameter : Error {
  explicit InvalidParameter(const std::string& msg) : Error("invalid_parameter", msg) {}
};

struct InvalidInput : Error {
  explicit InvalidInput(const std::string& msg) : Error("invalid_input", msg) {}
};

struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& msg) : Error("dimension_mismatch", msg) {}
};

struct UnstableSystem : Error {
  explicit UnstableSystem(const std::string& msg) : Error("unstable_system", msg) {}
};

struct ImproperSystem : Error {
  explicit ImproperSystem(const std::string& msg) : Error("improper_system", msg) {}
};

struct ImproperShift : Error {
  explicit ImproperShift(const std::string& msg) : Error("improper_shift", msg) {}
};

struct UnsupportedPreset : Error {
  explicit UnsupportedPreset(const std::string& msg) : Error("unsupported_preset", msg) {}
};

struct UnsupportedFactorization : Error {
  explicit UnsupportedFactorization(const std::string& msg)
      : Error("unsupported_factorization", msg) {}
};

struct InsufficientData : Error {
  explicit InsufficientData(const std::string& msg) : Error("insufficient_data", msg) {}
};

struct NoCertificate : Error {
  explicit NoCertificate(const std::string& msg) : Error("no_certificate", msg) {}
};

}  // namespace loopshift
