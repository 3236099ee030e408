#pragma once

#include <hdsa/covariance.hpp>
#include <hdsa/discrepancy.hpp>

#include <memory>

namespace hdsa {

struct HyperParams {
  double alpha_u = 1.0;
  double beta_u = 0.0;
  double alpha_z = 1.0;
  double beta_z = 0.0;
  Vector alpha_t;  // empty for stationary problems
  double beta_t = 0.0;
  double eps_t = 0.01;
  double alpha_d = 1e-6;

  // Throws validation-error. n_t = 0 for stationary spaces.
  void validate(Index n_t = 0) const;
};

struct PriorSample {
  DiscrepancyParams theta;
  std::uint64_t seed = 0;
};

class PriorModel {
 public:
  PriorModel(const FunctionSpace& state_space, const FunctionSpace& control_space, HyperParams hyper,
             Vector z_tilde);

  const HyperParams& hyper() const { return hyper_; }
  const FunctionSpace& state_space() const { return state_space_; }
  const FunctionSpace& control_space() const { return control_space_; }
  const SparseMatrix& state_mass() const { return state_mass_; }
  const SparseMatrix& control_mass() const { return control_space_.mass; }
  const Vector& z_tilde() const { return z_tilde_; }
  Index state_size() const { return state_cov_->size(); }
  Index control_size() const { return control_cov_->size(); }
  Index theta_size() const { return state_size() * (control_size() + 1); }

  // Unit-variance factors: state T_u / sqrt(alpha_u), control T_z / sqrt(alpha_z).
  const FieldCovariance& state_covariance() const { return *state_cov_; }
  std::shared_ptr<const FieldCovariance> state_covariance_ptr() const { return state_cov_; }
  const EllipticCovariance& control_covariance() const { return *control_cov_; }

  // theta = T_theta omega for omega of length n_theta.
  DiscrepancyParams apply_theta_factor(const Vector& omega) const;
  PriorSample sample_theta(std::uint64_t seed) const;

  // Two-term sampler of delta(z, theta) drawing omega1 then omega2 from one stream.
  Vector sample_delta_field(const Vector& z, std::uint64_t seed) const;
  // Unit fields T_u omega1 / sqrt(alpha_u) and T_u omega2 / sqrt(alpha_u) of the two-term sampler.
  std::pair<Vector, Vector> delta_field_parts(std::uint64_t seed) const;
  // s_z = ||E_z^{-1} M_z (z - z_tilde)||^2_{M_z}.
  double control_shift(const Vector& z) const;

  // Tr_{M_u}(E_u^{-1} M_u E_u^{-1}) without alpha_u (transient: includes D(alpha_t) and E_t).
  double trace_state_covariance() const;
  // Tr_{M_theta}(W_theta^{-1}).
  double trace_theta_covariance() const;

  // Row covariance Sigma_c of Phi = [theta0 | Theta^T] and its factor C (Sigma_c = C C^T).
  Matrix row_covariance_apply(const Matrix& x) const;  // Sigma_c X, X has 1+n_z rows
  Matrix row_factor_apply_rows(const Matrix& xi) const;  // Xi C^T, Xi has 1+n_z columns
  double shift_norm_sq() const { return c_norm_sq_; }  // z~^T M_z W_z^{-1} M_z z~

 private:
  FunctionSpace state_space_;
  FunctionSpace control_space_;
  HyperParams hyper_;
  Vector z_tilde_;
  SparseMatrix state_mass_;
  std::shared_ptr<const FieldCovariance> state_cov_;
  std::shared_ptr<const EllipticCovariance> control_cov_;
  Vector c_;  // T_z^T M_z z~ (includes sqrt(alpha_z))
  Vector w_;  // W_z^{-1} M_z z~
  double c_norm_sq_ = 0.0;
};

std::shared_ptr<const PriorModel> build_prior(const FunctionSpace& state_space, const FunctionSpace& control_space,
                                              const HyperParams& hyper, const Vector& z_tilde);

}  // namespace hdsa
