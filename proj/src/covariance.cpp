#include <hdsa/covariance.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>

namespace hdsa {

Matrix FieldCovariance::dense_covariance() const {
  if (size() > 6000) throw Error(ErrorCode::kInvalidInput, "dense covariance requested above desk scale");
  Matrix c(size(), size());
  for (Index j = 0; j < size(); ++j) c.col(j) = apply_covariance(Vector::Unit(size(), j));
  return c;
}

EllipticCovariance::EllipticCovariance(SparseMatrix mass, SparseMatrix stiffness, double beta)
    : mass_(std::move(mass)), stiffness_(std::move(stiffness)), beta_(beta) {
  if (!(beta_ >= 0)) throw Error(ErrorCode::kAssembly, "beta must be non-negative");
  require_size(stiffness_.rows(), mass_.rows(), "elliptic operator");
  elliptic_ = beta_ * stiffness_ + mass_;
  elliptic_.makeCompressed();
  elliptic_llt_.compute(elliptic_);
  if (elliptic_llt_.info() != Eigen::Success) throw Error(ErrorCode::kAssembly, "E is not positive definite");
  mass_llt_.compute(mass_);
  if (mass_llt_.info() != Eigen::Success) throw Error(ErrorCode::kAssembly, "mass matrix is not positive definite");
  mass_factor_ = mass_llt_.matrixL();
}

Vector EllipticCovariance::apply_inverse(const Vector& v) const {
  require_size(v.size(), size(), "elliptic inverse");
  Vector x = elliptic_llt_.solve(v);
  if (elliptic_llt_.info() != Eigen::Success) throw Error(ErrorCode::kLinearSolve, "elliptic solve failed");
  return x;
}

Matrix EllipticCovariance::apply_inverse(const Matrix& v) const {
  require_size(v.rows(), size(), "elliptic inverse");
  return elliptic_llt_.solve(v);
}

Vector EllipticCovariance::apply_factor(const Vector& omega) const {
  require_size(omega.size(), size(), "elliptic factor");
  // G = P^{-1} L, so G omega = P^{-1} (L omega).
  Vector lw = mass_factor_ * omega;
  Vector g = mass_llt_.permutationPinv() * lw;
  return apply_inverse(g);
}

Vector EllipticCovariance::apply_factor_transpose(const Vector& v) const {
  Vector e = apply_inverse(v);
  Vector pe = mass_llt_.permutationP() * e;
  return mass_factor_.transpose() * pe;
}

Vector EllipticCovariance::apply_covariance(const Vector& v) const {
  return apply_inverse(Vector(mass_ * apply_inverse(v)));
}

const EllipticCovariance::Eigenpairs& EllipticCovariance::eigenpairs() const {
  std::call_once(eig_once_, [this] {
    const Matrix e_dense(elliptic_), m_dense(mass_);
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(e_dense, m_dense);
    if (es.info() != Eigen::Success) throw Error(ErrorCode::kLinearSolve, "generalized eigensolver failed");
    auto e = std::make_unique<Eigenpairs>();
    e->mu = es.eigenvalues();
    e->v = es.eigenvectors();
    // Fix signs so the largest-magnitude entry of each eigenvector is positive.
    for (Index k = 0; k < e->v.cols(); ++k) {
      Index imax;
      e->v.col(k).cwiseAbs().maxCoeff(&imax);
      if (e->v(imax, k) < 0) e->v.col(k) *= -1.0;
    }
    eig_ = std::move(e);
  });
  return *eig_;
}

const Vector& EllipticCovariance::generalized_eigenvalues() const { return eigenpairs().mu; }
const Matrix& EllipticCovariance::generalized_eigenvectors() const { return eigenpairs().v; }

double EllipticCovariance::weighted_trace() const { return generalized_eigenvalues().array().inverse().square().sum(); }

Vector EllipticCovariance::spectrum() const { return generalized_eigenvalues().array().inverse().square(); }

Matrix EllipticCovariance::basis_apply(const Matrix& x) const {
  const auto& e = eigenpairs();
  return e.v * (e.mu.array().inverse().matrix().asDiagonal() * x);
}

Matrix EllipticCovariance::basis_transpose_apply(const Matrix& y) const {
  const auto& e = eigenpairs();
  return e.mu.array().inverse().matrix().asDiagonal() * (e.v.transpose() * y);
}

SpaceTimeCovariance::SpaceTimeCovariance(std::shared_ptr<const EllipticCovariance> spatial, const TimeGrid& time,
                                         double beta_t, const Vector& alpha_t)
    : spatial_(std::move(spatial)), n_t_(time.n) {
  require_size(alpha_t.size(), n_t_, "alpha_t");
  if (!(beta_t >= 0)) throw Error(ErrorCode::kAssembly, "beta_t must be non-negative");
  if ((alpha_t.array() <= 0).any()) throw Error(ErrorCode::kAssembly, "alpha_t entries must be positive");
  time_mass_ = Matrix(time.mass);
  Matrix et = beta_t * Matrix(time.stiffness) + time_mass_;
  Eigen::LLT<Matrix> llt(et);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::kAssembly, "E_t is not positive definite");
  Vector dh = alpha_t.array().sqrt();
  Matrix lt_inv_t = llt.matrixU().solve(Matrix::Identity(n_t_, n_t_));  // L^{-T}
  temporal_factor_ = dh.asDiagonal() * lt_inv_t;
  temporal_cov_ = temporal_factor_ * temporal_factor_.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(temporal_factor_.transpose() * time_mass_ * temporal_factor_);
  temporal_lambda_ = es.eigenvalues();
  temporal_basis_ = temporal_factor_ * es.eigenvectors();
}

namespace {
// View a time-major vector as an n_s x n_t matrix (column t is the snapshot at time t).
Eigen::Map<const Matrix> snapshots(const Vector& v, Index ns, Index nt) { return {v.data(), ns, nt}; }
}  // namespace

Vector SpaceTimeCovariance::apply_factor(const Vector& omega) const {
  require_size(omega.size(), size(), "space-time factor");
  const Index ns = spatial_->size();
  auto x = snapshots(omega, ns, n_t_);
  Matrix y(ns, n_t_);
  for (Index t = 0; t < n_t_; ++t) y.col(t) = spatial_->apply_factor(x.col(t));
  Matrix out = y * temporal_factor_.transpose();
  return Eigen::Map<Vector>(out.data(), out.size());
}

Vector SpaceTimeCovariance::apply_covariance(const Vector& v) const {
  require_size(v.size(), size(), "space-time covariance");
  const Index ns = spatial_->size();
  auto x = snapshots(v, ns, n_t_);
  Matrix y(ns, n_t_);
  for (Index t = 0; t < n_t_; ++t) y.col(t) = spatial_->apply_covariance(x.col(t));
  Matrix out = y * temporal_cov_;
  return Eigen::Map<Vector>(out.data(), out.size());
}

Vector SpaceTimeCovariance::mass_apply(const Vector& v) const {
  const Index ns = spatial_->size();
  auto x = snapshots(v, ns, n_t_);
  Matrix out = (spatial_->mass() * x) * time_mass_;
  return Eigen::Map<Vector>(out.data(), out.size());
}

double SpaceTimeCovariance::weighted_trace() const {
  return (temporal_cov_ * time_mass_).trace() * spatial_->weighted_trace();
}

Vector SpaceTimeCovariance::spectrum() const {
  Vector ls = spatial_->spectrum();
  const Index ns = ls.size();
  Vector l(size());
  for (Index t = 0; t < n_t_; ++t) l.segment(t * ns, ns) = temporal_lambda_[t] * ls;
  return l;
}

Matrix SpaceTimeCovariance::basis_apply(const Matrix& x) const {
  require_size(x.rows(), size(), "space-time basis");
  const Index ns = spatial_->size();
  Matrix out(size(), x.cols());
  for (Index c = 0; c < x.cols(); ++c) {
    Eigen::Map<const Matrix> xc(x.col(c).data(), ns, n_t_);
    Matrix y = spatial_->basis_apply(xc) * temporal_basis_.transpose();
    out.col(c) = Eigen::Map<Vector>(y.data(), y.size());
  }
  return out;
}

Matrix SpaceTimeCovariance::basis_transpose_apply(const Matrix& y) const {
  require_size(y.rows(), size(), "space-time basis transpose");
  const Index ns = spatial_->size();
  Matrix out(size(), y.cols());
  for (Index c = 0; c < y.cols(); ++c) {
    Eigen::Map<const Matrix> yc(y.col(c).data(), ns, n_t_);
    Matrix x = spatial_->basis_transpose_apply(yc) * temporal_basis_;
    out.col(c) = Eigen::Map<Vector>(x.data(), x.size());
  }
  return out;
}

}  // namespace hdsa
