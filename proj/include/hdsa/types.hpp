#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace hdsa {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

enum class ErrorCode : int {
  kInvalidConfig = 1,
  kShape,
  kAssembly,
  kLinearSolve,
  kRankDeficiency,
  kDegenerateField,
  kInitFailure,
  kZeroData,
  kDegeneratePerturbation,
  kInvalidInput,
  kOptimizationFailure,
  kCurvature,
  kCalibration,
  kValidation,
  kNoData,
  kNotFound,
  kUnsupportedView,
  kDegenerateScale,
  kIo,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Throw a shape error unless the sizes agree.
inline void require_size(Index got, Index want, const char* what) {
  if (got != want) {
    throw Error(ErrorCode::kShape, std::string(what) + ": expected size " + std::to_string(want) +
                                       ", got " + std::to_string(got));
  }
}

// Seeded source of standard normal draws. Every sampler in the library goes through this, so a
// seed fully determines a draw.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}
  double next() { return dist_(engine_); }
  Vector next(Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = dist_(engine_);
    return v;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

inline Vector standard_normal(std::uint64_t seed, Index n) { return NormalStream(seed).next(n); }

}  // namespace hdsa
