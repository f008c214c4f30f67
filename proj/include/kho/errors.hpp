#pragma once

#include <stdexcept>
#include <string>

namespace kho {

/// Raised when a computation cannot continue with trustworthy numbers
/// (non-finite values, broken normalization, exhausted budgets).
class NumericalAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The Fock-space tail rule fired. `kick` is the last kick that was still safe.
class TruncationError : public NumericalAbort {
 public:
  TruncationError(const std::string& what, int kick) : NumericalAbort(what), kick_(kick) {}
  int kick() const noexcept { return kick_; }

 private:
  int kick_;
};

}  // namespace kho
