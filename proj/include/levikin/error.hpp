#pragma once

#include <stdexcept>
#include <string>

namespace levikin {

enum class ErrorCode {
  Domain,       // argument outside the mathematical domain of an operation
  Unsupported,  // operation not defined for this source kind
  Singular,     // photon-BEC regime, mu_c -> hbar omega_c
  OutOfRegime,  // physical approximation violated (|v| too large, ...)
  Convergence,  // quadrature or fit did not converge
  Fit,          // fitter precondition or result failure
  Config,       // scenario / configuration error
  Io,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace levikin
