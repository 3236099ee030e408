#include <hdsa/hyper_init.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace hdsa {

namespace {

double interpolate(const Vector& x, const Vector& f, double at) {
  const Index n = x.size();
  if (at <= x[0]) return f[0];
  if (at >= x[n - 1]) return f[n - 1];
  auto it = std::upper_bound(x.data(), x.data() + n, at);
  Index j = static_cast<Index>(it - x.data());  // x[j-1] <= at < x[j]
  double w = (at - x[j - 1]) / (x[j] - x[j - 1]);
  return (1 - w) * f[j - 1] + w * f[j];
}

}  // namespace

CorrelationEstimate correlation_length(const Vector& values, const Vector& coords, double delta_kappa) {
  const Index n = values.size();
  require_size(coords.size(), n, "correlation_length coords");
  if (n < 3) throw Error(ErrorCode::kInvalidInput, "correlation length needs at least 3 nodes");
  double min_gap = std::numeric_limits<double>::infinity();
  for (Index i = 1; i < n; ++i) {
    double g = coords[i] - coords[i - 1];
    if (!(g > 0)) throw Error(ErrorCode::kInvalidInput, "coordinates must be strictly increasing");
    min_gap = std::min(min_gap, g);
  }
  const double dk = delta_kappa > 0 ? delta_kappa : min_gap;
  const double diameter = coords[n - 1] - coords[0];
  const double mean = values.mean();
  Vector centered = values.array() - mean;
  const double var = centered.squaredNorm() / static_cast<double>(n - 1);
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  if (!(var > 1e-26 * scale * scale)) throw Error(ErrorCode::kDegenerateField, "field is constant");

  const double tol = 1e-12 * diameter;
  double kappa = 0.0;
  while (true) {
    kappa += dk;
    if (kappa >= diameter - tol) return {diameter, dk, 1};
    double acc = 0.0;
    Index pairs = 0;
    for (Index i = 0; i < n; ++i) {
      double x = coords[i] + kappa;
      if (x > coords[n - 1] + tol) break;  // out-of-domain pairs are omitted
      acc += centered[i] * (interpolate(coords, values, x) - mean);
      ++pairs;
    }
    if (pairs < 2) return {kappa, dk, pairs};
    double rho = acc / static_cast<double>(pairs - 1) / var;
    if (rho <= 0.1) return {kappa, dk, pairs};
  }
}

CorrelationEstimate correlation_length(const Mesh& mesh, const Vector& values, double delta_kappa) {
  require_size(values.size(), mesh.size(), "correlation_length field");
  if (mesh.dim == 1) return correlation_length(values, mesh.nodes.col(0), delta_kappa);
  const int n = mesh.n_per_axis;
  Vector coords = mesh.nodes.col(0).head(n);
  double sum = 0.0, dk = 0.0;
  Index lines = 0, pairs = 0;
  Vector line(n);
  for (int axis = 0; axis < 2; ++axis)
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) line[i] = axis == 0 ? values[j * n + i] : values[i * n + j];
      try {
        auto e = correlation_length(line, coords, delta_kappa);
        sum += e.kappa;
        dk = e.delta_kappa;
        pairs += e.n_pairs;
        ++lines;
      } catch (const Error& err) {
        if (err.code() != ErrorCode::kDegenerateField) throw;
      }
    }
  if (lines == 0) throw Error(ErrorCode::kDegenerateField, "every node line is constant");
  return {sum / static_cast<double>(lines), dk, pairs};
}

}  // namespace hdsa
