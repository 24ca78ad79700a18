#pragma once

#include <stdexcept>
#include <string>

namespace sepcov {

enum class ErrorCode {
  kInvalidArgument = 1,
  kDimensionMismatch,
  kNotSymmetric,
  kNotPositiveDefinite,
  kEigFailure,
  kNearDegenerateEigenvalues,
  kNonConjugatePrior,
  kSizeCap,
  kEmptyData,
  kSvdFailure,
  kMaxIterExceeded,
  kIo,
};

const char* error_code_name(ErrorCode code) noexcept;

// Every failure in the library surfaces as this exception; the C API maps
// `code()` onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sepcov
