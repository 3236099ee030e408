#pragma once

#include <hdsa/fem_kit.hpp>

#include <Eigen/SparseCholesky>

#include <memory>
#include <mutex>

namespace hdsa {

// Unit-variance Gaussian field covariance C = T T^T on a coordinate space weighted by a mass
// matrix M. The spectral basis B satisfies B B^T = C and B^T M B = diag(lambda).
class FieldCovariance {
 public:
  virtual ~FieldCovariance() = default;

  virtual Index size() const = 0;
  virtual Vector apply_factor(const Vector& omega) const = 0;
  virtual Vector apply_covariance(const Vector& v) const = 0;
  virtual Vector mass_apply(const Vector& v) const = 0;
  // Tr(C M).
  virtual double weighted_trace() const = 0;
  virtual Vector spectrum() const = 0;
  virtual Matrix basis_apply(const Matrix& x) const = 0;
  virtual Matrix basis_transpose_apply(const Matrix& y) const = 0;

  Matrix dense_covariance() const;
};

// C = E^{-1} M E^{-1} with E = beta K + M; T = E^{-1} G where G G^T = M is a sparse Cholesky factor.
class EllipticCovariance final : public FieldCovariance {
 public:
  EllipticCovariance(SparseMatrix mass, SparseMatrix stiffness, double beta);

  Index size() const override { return mass_.rows(); }
  double beta() const { return beta_; }
  const SparseMatrix& mass() const { return mass_; }
  const SparseMatrix& stiffness() const { return stiffness_; }

  Vector apply_factor(const Vector& omega) const override;
  Vector apply_factor_transpose(const Vector& v) const;
  Vector apply_covariance(const Vector& v) const override;
  Vector mass_apply(const Vector& v) const override { return mass_ * v; }
  Vector apply_operator(const Vector& v) const { return elliptic_ * v; }
  Vector apply_inverse(const Vector& v) const;
  Matrix apply_inverse(const Matrix& v) const;

  double weighted_trace() const override;
  Vector spectrum() const override;
  Matrix basis_apply(const Matrix& x) const override;
  Matrix basis_transpose_apply(const Matrix& y) const override;

  // E v = mu M v, mu ascending, V^T M V = I. Computed once on first use.
  const Vector& generalized_eigenvalues() const;
  const Matrix& generalized_eigenvectors() const;

 private:
  struct Eigenpairs {
    Vector mu;
    Matrix v;
  };
  const Eigenpairs& eigenpairs() const;

  SparseMatrix mass_;
  SparseMatrix stiffness_;
  SparseMatrix elliptic_;
  double beta_;
  Eigen::SimplicialLLT<SparseMatrix> elliptic_llt_;
  Eigen::SimplicialLLT<SparseMatrix> mass_llt_;
  SparseMatrix mass_factor_;  // lower-triangular L of P M P^T = L L^T
  mutable std::once_flag eig_once_;
  mutable std::unique_ptr<Eigenpairs> eig_;
};

// W_t^{-1} kron C_s with W_t^{-1} = D^{1/2} E_t^{-1} D^{1/2}; time-major coordinates.
class SpaceTimeCovariance final : public FieldCovariance {
 public:
  SpaceTimeCovariance(std::shared_ptr<const EllipticCovariance> spatial, const TimeGrid& time, double beta_t,
                      const Vector& alpha_t);

  Index size() const override { return spatial_->size() * n_t_; }
  const EllipticCovariance& spatial() const { return *spatial_; }
  const Matrix& temporal_covariance() const { return temporal_cov_; }

  Vector apply_factor(const Vector& omega) const override;
  Vector apply_covariance(const Vector& v) const override;
  Vector mass_apply(const Vector& v) const override;
  double weighted_trace() const override;
  Vector spectrum() const override;
  Matrix basis_apply(const Matrix& x) const override;
  Matrix basis_transpose_apply(const Matrix& y) const override;

 private:
  std::shared_ptr<const EllipticCovariance> spatial_;
  Index n_t_;
  Matrix time_mass_;
  Matrix temporal_factor_;  // D^{1/2} L_t^{-T}
  Matrix temporal_cov_;     // D^{1/2} E_t^{-1} D^{1/2}
  Matrix temporal_basis_;
  Vector temporal_lambda_;
};

}  // namespace hdsa
