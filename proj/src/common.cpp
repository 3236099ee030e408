#include <hdsa/types.hpp>

namespace hdsa {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kShape: return "shape-error";
    case ErrorCode::kAssembly: return "assembly-error";
    case ErrorCode::kLinearSolve: return "linear-solve-error";
    case ErrorCode::kRankDeficiency: return "rank-deficiency-error";
    case ErrorCode::kDegenerateField: return "degenerate-field-error";
    case ErrorCode::kInitFailure: return "init-failure";
    case ErrorCode::kZeroData: return "zero-data-error";
    case ErrorCode::kDegeneratePerturbation: return "degenerate-perturbation-error";
    case ErrorCode::kInvalidInput: return "invalid-input";
    case ErrorCode::kOptimizationFailure: return "optimization-failure";
    case ErrorCode::kCurvature: return "curvature-error";
    case ErrorCode::kCalibration: return "calibration-error";
    case ErrorCode::kValidation: return "validation-error";
    case ErrorCode::kNoData: return "no-data-error";
    case ErrorCode::kNotFound: return "not-found";
    case ErrorCode::kUnsupportedView: return "unsupported-view";
    case ErrorCode::kDegenerateScale: return "degenerate-scale-error";
    case ErrorCode::kIo: return "io-error";
  }
  return "unknown-error";
}

}  // namespace hdsa
