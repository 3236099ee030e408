#include <hdsa/prior_model.hpp>

#include <cmath>

namespace hdsa {

void HyperParams::validate(Index n_t) const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kValidation, m); };
  if (!(alpha_u > 0) || !std::isfinite(alpha_u)) fail("alpha_u must be positive");
  if (!(alpha_z > 0) || !std::isfinite(alpha_z)) fail("alpha_z must be positive");
  if (!(alpha_d > 0) || !std::isfinite(alpha_d)) fail("alpha_d must be positive");
  if (!(beta_u >= 0) || !std::isfinite(beta_u)) fail("beta_u must be non-negative");
  if (!(beta_z >= 0) || !std::isfinite(beta_z)) fail("beta_z must be non-negative");
  if (!(beta_t >= 0) || !std::isfinite(beta_t)) fail("beta_t must be non-negative");
  if (!(eps_t > 0)) fail("eps_t must be positive");
  if (n_t > 0) {
    if (alpha_t.size() != n_t) fail("alpha_t must have one entry per time node");
    for (Index i = 0; i < n_t; ++i)
      if (!(alpha_t[i] >= eps_t) || !std::isfinite(alpha_t[i])) fail("alpha_t entries must be at least eps_t");
  }
}

PriorModel::PriorModel(const FunctionSpace& state_space, const FunctionSpace& control_space, HyperParams hyper,
                       Vector z_tilde)
    : state_space_(state_space), control_space_(control_space), hyper_(std::move(hyper)), z_tilde_(std::move(z_tilde)) {
  hyper_.validate(state_space_.time ? state_space_.time->n : 0);
  if (control_space_.time) throw Error(ErrorCode::kAssembly, "control space must be stationary");
  require_size(z_tilde_.size(), control_space_.size(), "z_tilde");
  state_mass_ = state_space_.full_mass();
  auto spatial = std::make_shared<const EllipticCovariance>(state_space_.mass, state_space_.stiffness, hyper_.beta_u);
  if (state_space_.time)
    state_cov_ = std::make_shared<const SpaceTimeCovariance>(spatial, *state_space_.time, hyper_.beta_t, hyper_.alpha_t);
  else
    state_cov_ = spatial;
  control_cov_ = std::make_shared<const EllipticCovariance>(control_space_.mass, control_space_.stiffness, hyper_.beta_z);
  Vector mz = control_space_.mass * z_tilde_;
  c_ = std::sqrt(hyper_.alpha_z) * control_cov_->apply_factor_transpose(mz);
  w_ = hyper_.alpha_z * control_cov_->apply_covariance(mz);
  c_norm_sq_ = c_.squaredNorm();
}

std::shared_ptr<const PriorModel> build_prior(const FunctionSpace& state_space, const FunctionSpace& control_space,
                                              const HyperParams& hyper, const Vector& z_tilde) {
  return std::make_shared<const PriorModel>(state_space, control_space, hyper, z_tilde);
}

Matrix PriorModel::row_factor_apply_rows(const Matrix& xi) const {
  const Index nz = control_size();
  require_size(xi.cols(), nz + 1, "row factor");
  const double sz = std::sqrt(hyper_.alpha_z);
  Matrix psi(xi.rows(), nz + 1);
  psi.col(0) = xi.col(0) - xi.rightCols(nz) * c_;
  for (Index i = 0; i < xi.rows(); ++i)
    psi.row(i).tail(nz) = sz * control_cov_->apply_factor(xi.row(i).tail(nz).transpose()).transpose();
  return psi;
}

Matrix PriorModel::row_covariance_apply(const Matrix& x) const {
  const Index nz = control_size();
  require_size(x.rows(), nz + 1, "row covariance");
  Matrix y(nz + 1, x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    const double x0 = x(0, j);
    Vector xl = x.col(j).tail(nz);
    y(0, j) = (1.0 + c_norm_sq_) * x0 - w_.dot(xl);
    y.col(j).tail(nz) = -w_ * x0 + hyper_.alpha_z * control_cov_->apply_covariance(xl);
  }
  return y;
}

DiscrepancyParams PriorModel::apply_theta_factor(const Vector& omega) const {
  const Index nu = state_size(), nz = control_size();
  require_size(omega.size(), theta_size(), "theta factor input");
  Matrix xi(nu, nz + 1);
  xi.col(0) = omega.head(nu);
  xi.rightCols(nz) = Eigen::Map<const Matrix>(omega.data() + nu, nz, nu).transpose();
  Matrix psi = row_factor_apply_rows(xi);
  const double su = std::sqrt(hyper_.alpha_u);
  Matrix phi(nu, nz + 1);
  for (Index j = 0; j <= nz; ++j) phi.col(j) = su * state_cov_->apply_factor(psi.col(j));
  return DiscrepancyParams::from_phi(phi);
}

PriorSample PriorModel::sample_theta(std::uint64_t seed) const {
  return {apply_theta_factor(standard_normal(seed, theta_size())), seed};
}

std::pair<Vector, Vector> PriorModel::delta_field_parts(std::uint64_t seed) const {
  NormalStream rng(seed);
  Vector w1 = rng.next(state_size());
  Vector w2 = rng.next(state_size());
  return {state_cov_->apply_factor(w1), state_cov_->apply_factor(w2)};
}

double PriorModel::control_shift(const Vector& z) const {
  require_size(z.size(), control_size(), "control_shift");
  Vector e = control_cov_->apply_inverse(Vector(control_mass() * (z - z_tilde_)));
  return e.dot(control_mass() * e);
}

Vector PriorModel::sample_delta_field(const Vector& z, std::uint64_t seed) const {
  const double s = control_shift(z);
  auto [f1, f2] = delta_field_parts(seed);
  const double su = std::sqrt(hyper_.alpha_u);
  return su * f1 + su * std::sqrt(hyper_.alpha_z * s) * f2;
}

double PriorModel::trace_state_covariance() const { return state_cov_->weighted_trace(); }

double PriorModel::trace_theta_covariance() const {
  const double tr_z = hyper_.alpha_z * control_cov_->weighted_trace();
  return (1.0 + c_norm_sq_ + tr_z) * hyper_.alpha_u * trace_state_covariance();
}

}  // namespace hdsa
