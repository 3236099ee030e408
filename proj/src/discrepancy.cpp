#include <hdsa/discrepancy.hpp>

#include <cmath>

namespace hdsa {

DiscrepancyParams::DiscrepancyParams(Index n_u, Index n_z, Vector flat) : n_u_(n_u), n_z_(n_z), data_(std::move(flat)) {
  require_size(data_.size(), n_u * (n_z + 1), "DiscrepancyParams");
}

Matrix DiscrepancyParams::phi() const {
  Matrix p(n_u_, n_z_ + 1);
  p.col(0) = theta0();
  p.rightCols(n_z_) = rows().transpose();
  return p;
}

DiscrepancyParams DiscrepancyParams::from_phi(const Matrix& phi) {
  DiscrepancyParams t(phi.rows(), phi.cols() - 1);
  t.theta0() = phi.col(0);
  t.rows() = phi.rightCols(phi.cols() - 1).transpose();
  return t;
}

Vector evaluate(const DiscrepancyParams& theta, const SparseMatrix& control_mass, const Vector& z) {
  require_size(z.size(), theta.control_size(), "evaluate: control vector");
  require_size(control_mass.rows(), theta.control_size(), "evaluate: control mass");
  Vector mz = control_mass * z;
  return theta.theta0() + theta.rows().transpose() * mz;
}

double ThetaInnerProduct::operator()(const DiscrepancyParams& a, const DiscrepancyParams& b) const {
  require_size(a.state_size(), mu_.rows(), "theta_inner: state size");
  require_size(a.control_size(), mz_.rows(), "theta_inner: control size");
  require_size(b.size(), a.size(), "theta_inner: operand sizes");
  double v = a.theta0().dot(mu_ * b.theta0());
  Matrix mzb = mz_ * b.rows();                        // n_z x n_u
  Matrix mzbmu = (mu_ * mzb.transpose()).transpose();  // M_z Theta_b M_u
  return v + a.rows().cwiseProduct(mzbmu).sum();
}

CalibrationDataset CalibrationDataset::from_raw(std::vector<Vector> z, const std::vector<Vector>& raw_d) {
  if (z.empty() || z.size() != raw_d.size())
    throw Error(ErrorCode::kShape, "dataset needs matching, nonempty z and d lists");
  double sum = 0, sq = 0;
  Index count = 0;
  for (const auto& d : raw_d) {
    sum += d.sum();
    sq += d.squaredNorm();
    count += d.size();
  }
  CalibrationDataset ds;
  ds.z = std::move(z);
  ds.dbar = sum / static_cast<double>(count);
  ds.c_delta = std::sqrt(sq / static_cast<double>(count));
  for (const auto& d : raw_d) ds.d.push_back(d.array() - ds.dbar);
  ds.validate();
  return ds;
}

void CalibrationDataset::validate() const {
  if (z.empty()) throw Error(ErrorCode::kShape, "dataset is empty");
  if (z.size() != d.size()) throw Error(ErrorCode::kShape, "dataset z/d count mismatch");
  for (size_t l = 1; l < z.size(); ++l) {
    require_size(z[l].size(), z[0].size(), "dataset control vector");
    require_size(d[l].size(), d[0].size(), "dataset state vector");
  }
}

MinNormResult interpolate_min_norm(const std::vector<Vector>& z, const std::vector<Vector>& d,
                                   const SparseMatrix& control_mass) {
  if (z.empty() || z.size() != d.size()) throw Error(ErrorCode::kShape, "interpolation needs matching data");
  const Index n = static_cast<Index>(z.size());
  const Index nz = z[0].size(), nu = d[0].size();
  require_size(control_mass.rows(), nz, "interpolate_min_norm: control mass");
  if (n > nz + 1) throw Error(ErrorCode::kRankDeficiency, "more data pairs than n_z + 1");
  Matrix zm(nz, n), dm(nu, n);
  for (Index l = 0; l < n; ++l) {
    require_size(z[l].size(), nz, "interpolate_min_norm: z");
    require_size(d[l].size(), nu, "interpolate_min_norm: d");
    zm.col(l) = z[l];
    dm.col(l) = d[l];
  }
  // Gram matrix of the lifted controls (1, z_l) in the (1, M_z) metric.
  Matrix gram = Matrix::Ones(n, n) + zm.transpose() * (control_mass * zm);
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  if (es.eigenvalues().minCoeff() <= 1e-12 * es.eigenvalues().maxCoeff())
    throw Error(ErrorCode::kRankDeficiency, "calibration controls are linearly dependent");
  Matrix coef = gram.ldlt().solve(dm.transpose());  // N x n_u, G^{-1} D^T
  MinNormResult r;
  r.theta = DiscrepancyParams(nu, nz);
  r.theta.theta0() = coef.transpose() * Vector::Ones(n);
  r.theta.rows() = zm * coef;
  r.nullity = (nz + 1 - n) * nu;
  return r;
}

MinNormResult interpolate_min_norm(const CalibrationDataset& data, const SparseMatrix& control_mass) {
  return interpolate_min_norm(data.z, data.d, control_mass);
}

}  // namespace hdsa
