#include "sepcov/error.hpp"

namespace sepcov {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNotSymmetric: return "NotSymmetric";
    case ErrorCode::kNotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::kEigFailure: return "EigFailure";
    case ErrorCode::kNearDegenerateEigenvalues: return "NearDegenerateEigenvalues";
    case ErrorCode::kNonConjugatePrior: return "NonConjugatePrior";
    case ErrorCode::kSizeCap: return "SizeCap";
    case ErrorCode::kEmptyData: return "EmptyData";
    case ErrorCode::kSvdFailure: return "SvdFailure";
    case ErrorCode::kMaxIterExceeded: return "MaxIterExceeded";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

}  // namespace sepcov
