#pragma once

#include <hdsa/types.hpp>

#include <vector>

namespace hdsa {

// theta = (theta0 [n_u], theta_1 .. theta_{n_u} [n_z each]). The row blocks viewed column-major as an
// n_z x n_u matrix Theta have column i equal to theta_i, so L(theta) = Theta^T.
class DiscrepancyParams {
 public:
  DiscrepancyParams() = default;
  DiscrepancyParams(Index n_u, Index n_z) : n_u_(n_u), n_z_(n_z), data_(Vector::Zero(n_u * (n_z + 1))) {}
  DiscrepancyParams(Index n_u, Index n_z, Vector flat);

  Index state_size() const { return n_u_; }
  Index control_size() const { return n_z_; }
  Index size() const { return data_.size(); }

  const Vector& flat() const { return data_; }
  Vector& flat() { return data_; }

  auto theta0() { return data_.head(n_u_); }
  auto theta0() const { return data_.head(n_u_); }
  Eigen::Map<Matrix> rows() { return {data_.data() + n_u_, n_z_, n_u_}; }
  Eigen::Map<const Matrix> rows() const { return {data_.data() + n_u_, n_z_, n_u_}; }

  // Phi = [theta0 | Theta^T], n_u x (1 + n_z).
  Matrix phi() const;
  static DiscrepancyParams from_phi(const Matrix& phi);

 private:
  Index n_u_ = 0;
  Index n_z_ = 0;
  Vector data_;
};

// delta(z, theta) = theta0 + L(theta) M_z z.
Vector evaluate(const DiscrepancyParams& theta, const SparseMatrix& control_mass, const Vector& z);

class ThetaInnerProduct {
 public:
  ThetaInnerProduct(SparseMatrix state_mass, SparseMatrix control_mass)
      : mu_(std::move(state_mass)), mz_(std::move(control_mass)) {}
  double operator()(const DiscrepancyParams& a, const DiscrepancyParams& b) const;

 private:
  SparseMatrix mu_;
  SparseMatrix mz_;
};

struct CalibrationDataset {
  std::vector<Vector> z;  // z[0] is z-tilde by convention
  std::vector<Vector> d;  // centered data
  double dbar = 0.0;
  double c_delta = 0.0;

  Index size() const { return static_cast<Index>(z.size()); }
  // Centers raw data by its nodal mean and records the RMS magnitude.
  static CalibrationDataset from_raw(std::vector<Vector> z, const std::vector<Vector>& raw_d);
  void validate() const;
};

struct MinNormResult {
  DiscrepancyParams theta;
  Index nullity = 0;
};

// Minimum M_theta-norm solution of delta(z_l, theta) = d_l.
MinNormResult interpolate_min_norm(const std::vector<Vector>& z, const std::vector<Vector>& d,
                                   const SparseMatrix& control_mass);
MinNormResult interpolate_min_norm(const CalibrationDataset& data, const SparseMatrix& control_mass);

}  // namespace hdsa
