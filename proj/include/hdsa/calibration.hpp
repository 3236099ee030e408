#pragma once

#include <hdsa/prior_model.hpp>

#include <memory>
#include <vector>

namespace hdsa {

// J(u, z) = 1/2 ||u - target||^2_{M_u} + r/2 ||z||^2_{M_z} with u = S z + s0.
struct OptimizationProblem {
  LinearSolutionOperator lowfi;
  SparseMatrix state_mass;
  SparseMatrix control_mass;
  Vector target;
  double regularization = 1e-4;

  double objective(const Vector& z) const;
  Vector gradient(const Vector& z) const;
  Matrix hessian() const;
};

struct OptimumResult {
  Vector z;
  double gradient_norm = 0.0;
};

OptimumResult solve_lowfi_optimum(const OptimizationProblem& problem);

// Reduced objective including the discrepancy model, J(S z + s0 + delta(z, theta), z).
double discrepancy_objective(const OptimizationProblem& p, const Vector& z, const DiscrepancyParams& theta);
Vector discrepancy_gradient(const OptimizationProblem& p, const Vector& z, const DiscrepancyParams& theta);

class SensitivityOperator {
 public:
  SensitivityOperator(const OptimizationProblem& problem, Vector z_tilde);

  const Matrix& hessian() const { return hessian_; }
  const Vector& z_tilde() const { return z_tilde_; }
  Vector apply_hessian(const Vector& v) const { return hessian_ * v; }
  Vector apply_mixed(const DiscrepancyParams& theta) const;  // B theta
  Vector solve_hessian(const Vector& v) const;
  Vector update_optimum(const DiscrepancyParams& theta) const;  // z~ - H^{-1} B theta

 private:
  Matrix hessian_;
  Eigen::LLT<Matrix> llt_;
  Matrix smt_;  // S^T M_u
  SparseMatrix state_mass_;
  SparseMatrix control_mass_;
  Vector z_tilde_;
  Vector residual_;  // S z~ + s0 - target
};

// Conjugate Gaussian posterior over theta exploiting the row structure Phi = B_u Psi with
// independent rows of Psi in the spectral basis of the state covariance.
class PosteriorModel {
 public:
  PosteriorModel(std::shared_ptr<const PriorModel> prior, CalibrationDataset data);

  const PriorModel& prior() const { return *prior_; }
  const CalibrationDataset& data() const { return data_; }
  // Mean for the raw (uncentered) data: the centering shift enters as a prior mean on theta0.
  const DiscrepancyParams& mean() const { return mean_; }
  DiscrepancyParams sample(std::uint64_t seed) const;
  double directional_variance(const DiscrepancyParams& direction) const;
  double prior_directional_variance(const DiscrepancyParams& direction) const;

 private:
  Matrix rotated_correction(const Matrix& residual) const;  // rows scaled by per-row Kalman gains

  std::shared_ptr<const PriorModel> prior_;
  CalibrationDataset data_;
  Vector lambda_;     // alpha_u * spectrum of the unit state covariance
  double su_ = 1.0;   // sqrt(alpha_u)
  Matrix zhat_;       // (1 + n_z) x N lifted controls (1; M_z z_l)
  Matrix sigma_zhat_; // Sigma_c Zhat
  Matrix u_;          // eigenvectors of Zhat^T Sigma_c Zhat
  Vector gamma_;      // its eigenvalues
  Matrix y_;          // B_u^T M_u D, n_u x N
  DiscrepancyParams mean_;
};

std::vector<Vector> posterior_optimum_ensemble(const SensitivityOperator& sens, const PosteriorModel& posterior, int n,
                                               std::uint64_t seed);

}  // namespace hdsa
