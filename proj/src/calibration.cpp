#include <hdsa/calibration.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>

namespace hdsa {

double OptimizationProblem::objective(const Vector& z) const {
  Vector r = lowfi.apply(z) - target;
  return 0.5 * r.dot(state_mass * r) + 0.5 * regularization * z.dot(control_mass * z);
}

Vector OptimizationProblem::gradient(const Vector& z) const {
  Vector r = lowfi.apply(z) - target;
  return lowfi.matrix.transpose() * (state_mass * r) + regularization * (control_mass * z);
}

Matrix OptimizationProblem::hessian() const {
  Matrix ms = state_mass * lowfi.matrix;
  Matrix h = lowfi.matrix.transpose() * ms + regularization * Matrix(control_mass);
  return 0.5 * (h + h.transpose());
}

OptimumResult solve_lowfi_optimum(const OptimizationProblem& p) {
  if (!(p.regularization > 0)) throw Error(ErrorCode::kOptimizationFailure, "regularization must be positive");
  require_size(p.target.size(), p.lowfi.state_size(), "target");
  Matrix h = p.hessian();
  Eigen::LLT<Matrix> llt(h);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::kOptimizationFailure, "reduced Hessian is singular");
  Vector rhs = p.lowfi.matrix.transpose() * (p.state_mass * (p.target - p.lowfi.offset));
  OptimumResult r;
  r.z = llt.solve(rhs);
  // A few steps of iterative refinement against the exact gradient.
  for (int it = 0; it < 3; ++it) {
    Vector g = p.gradient(r.z);
    r.gradient_norm = g.norm();
    if (r.gradient_norm <= 1e-12) break;
    r.z -= llt.solve(g);
  }
  r.gradient_norm = p.gradient(r.z).norm();
  if (!(r.gradient_norm <= 1e-8))
    throw Error(ErrorCode::kOptimizationFailure, "optimality residual " + std::to_string(r.gradient_norm));
  return r;
}

double discrepancy_objective(const OptimizationProblem& p, const Vector& z, const DiscrepancyParams& theta) {
  Vector r = p.lowfi.apply(z) + evaluate(theta, p.control_mass, z) - p.target;
  return 0.5 * r.dot(p.state_mass * r) + 0.5 * p.regularization * z.dot(p.control_mass * z);
}

Vector discrepancy_gradient(const OptimizationProblem& p, const Vector& z, const DiscrepancyParams& theta) {
  Vector r = p.lowfi.apply(z) + evaluate(theta, p.control_mass, z) - p.target;
  Vector mr = p.state_mass * r;
  return p.lowfi.matrix.transpose() * mr + p.control_mass * (theta.rows() * mr) +
         p.regularization * (p.control_mass * z);
}

SensitivityOperator::SensitivityOperator(const OptimizationProblem& p, Vector z_tilde)
    : state_mass_(p.state_mass), control_mass_(p.control_mass), z_tilde_(std::move(z_tilde)) {
  require_size(z_tilde_.size(), p.lowfi.control_size(), "sensitivity z_tilde");
  hessian_ = p.hessian();
  llt_.compute(hessian_);
  if (llt_.info() != Eigen::Success) throw Error(ErrorCode::kCurvature, "Hessian is not positive definite");
  smt_ = (p.state_mass * p.lowfi.matrix).transpose();
  residual_ = p.lowfi.apply(z_tilde_) - p.target;
}

Vector SensitivityOperator::apply_mixed(const DiscrepancyParams& theta) const {
  require_size(theta.state_size(), smt_.cols(), "B: state size");
  require_size(theta.control_size(), smt_.rows(), "B: control size");
  Vector delta = evaluate(theta, control_mass_, z_tilde_);
  Vector mr = state_mass_ * residual_;
  return smt_ * delta + control_mass_ * (theta.rows() * mr);
}

Vector SensitivityOperator::solve_hessian(const Vector& v) const {
  Vector x = llt_.solve(v);
  if (llt_.info() != Eigen::Success) throw Error(ErrorCode::kLinearSolve, "Hessian solve failed");
  return x;
}

Vector SensitivityOperator::update_optimum(const DiscrepancyParams& theta) const {
  return z_tilde_ - solve_hessian(apply_mixed(theta));
}

PosteriorModel::PosteriorModel(std::shared_ptr<const PriorModel> prior, CalibrationDataset data)
    : prior_(std::move(prior)), data_(std::move(data)) {
  const PriorModel& pm = *prior_;
  const Index nu = pm.state_size(), nz = pm.control_size();
  const Index n = data_.size();
  if (n > 0) data_.validate();
  for (Index l = 0; l < n; ++l) {
    require_size(data_.z[l].size(), nz, "calibration control");
    require_size(data_.d[l].size(), nu, "calibration datum");
  }
  const auto& cov = pm.state_covariance();
  su_ = std::sqrt(pm.hyper().alpha_u);
  lambda_ = pm.hyper().alpha_u * cov.spectrum();
  zhat_.resize(nz + 1, n);
  Matrix md(nu, n);
  for (Index l = 0; l < n; ++l) {
    zhat_(0, l) = 1.0;
    zhat_.col(l).tail(nz) = pm.control_mass() * data_.z[l];
    md.col(l) = cov.mass_apply(data_.d[l]);
  }
  if (n > 0) {
    sigma_zhat_ = pm.row_covariance_apply(zhat_);
    Matrix g = zhat_.transpose() * sigma_zhat_;
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (g + g.transpose()));
    if (es.info() != Eigen::Success) throw Error(ErrorCode::kCalibration, "data Gram eigensolver failed");
    u_ = es.eigenvectors();
    gamma_ = es.eigenvalues().cwiseMax(0.0);
    y_ = su_ * cov.basis_transpose_apply(md);
  } else {
    sigma_zhat_.resize(nz + 1, 0);
    u_.resize(0, 0);
    gamma_.resize(0);
    y_.resize(nu, 0);
  }
  Matrix psi = rotated_correction(y_);
  Matrix phi = su_ * cov.basis_apply(psi);
  phi.col(0).array() += data_.dbar;
  mean_ = DiscrepancyParams::from_phi(phi);
  if (!mean_.flat().allFinite()) throw Error(ErrorCode::kCalibration, "posterior mean is not finite");
}

Matrix PosteriorModel::rotated_correction(const Matrix& residual) const {
  const Index nu = prior_->state_size(), nz = prior_->control_size();
  if (residual.cols() == 0) return Matrix::Zero(nu, nz + 1);
  const double ad = prior_->hyper().alpha_d;
  Matrix ru = residual * u_;
  for (Index i = 0; i < ru.rows(); ++i)
    for (Index j = 0; j < ru.cols(); ++j) ru(i, j) /= ad + lambda_[i] * gamma_[j];
  return (ru * u_.transpose()) * sigma_zhat_.transpose();
}

DiscrepancyParams PosteriorModel::sample(std::uint64_t seed) const {
  const PriorModel& pm = *prior_;
  const Index nu = pm.state_size(), nz = pm.control_size(), n = data_.size();
  NormalStream rng(seed);
  Vector xi_flat = rng.next(nu * (nz + 1));
  Vector eps_flat = rng.next(nu * n);
  Eigen::Map<const Matrix> xi(xi_flat.data(), nu, nz + 1);
  Eigen::Map<const Matrix> eps(eps_flat.data(), nu, n);
  Matrix psi0 = pm.row_factor_apply_rows(xi);
  Matrix psi = psi0;
  if (n > 0) {
    Matrix r = y_ - lambda_.asDiagonal() * (psi0 * zhat_);
    Vector noise_sd = (pm.hyper().alpha_d * lambda_).array().sqrt();
    r -= noise_sd.asDiagonal() * eps;
    psi += rotated_correction(r);
  }
  Matrix phi = su_ * pm.state_covariance().basis_apply(psi);
  phi.col(0).array() += data_.dbar;
  return DiscrepancyParams::from_phi(phi);
}

double PosteriorModel::prior_directional_variance(const DiscrepancyParams& direction) const {
  Matrix w = su_ * prior_->state_covariance().basis_transpose_apply(direction.phi());
  Matrix sw = prior_->row_covariance_apply(w.transpose());
  return w.cwiseProduct(sw.transpose()).sum();
}

double PosteriorModel::directional_variance(const DiscrepancyParams& direction) const {
  Matrix w = su_ * prior_->state_covariance().basis_transpose_apply(direction.phi());
  Matrix sw = prior_->row_covariance_apply(w.transpose());
  double prior_var = w.cwiseProduct(sw.transpose()).sum();
  if (data_.size() == 0) return prior_var;
  const double ad = prior_->hyper().alpha_d;
  Matrix au = (w * sigma_zhat_) * u_;
  double reduction = 0.0;
  for (Index i = 0; i < au.rows(); ++i)
    for (Index j = 0; j < au.cols(); ++j) reduction += lambda_[i] * au(i, j) * au(i, j) / (ad + lambda_[i] * gamma_[j]);
  return prior_var - reduction;
}

std::vector<Vector> posterior_optimum_ensemble(const SensitivityOperator& sens, const PosteriorModel& posterior, int n,
                                               std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::kInvalidInput, "ensemble size must be at least 1");
  std::vector<Vector> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) out[i] = sens.update_optimum(posterior.sample(seed + static_cast<std::uint64_t>(i)));
  return out;
}

}  // namespace hdsa
