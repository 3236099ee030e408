#include <hdsa/hyper_init.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace hdsa {

double dimension_constant(int dim) {
  switch (dim) {
    case 1: return 12.0;
    case 2: return 8.0;
    case 3: return 4.0;
  }
  throw Error(ErrorCode::kInvalidInput, "spatial dimension must be 1, 2 or 3");
}

namespace {

// Mean correlation length over fields, skipping constant ones.
double mean_length(const std::vector<std::function<CorrelationEstimate()>>& jobs, const char* what) {
  double sum = 0.0;
  Index used = 0;
  for (const auto& job : jobs) {
    try {
      sum += job().kappa;
      ++used;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateField) throw;
    }
  }
  if (used == 0) throw Error(ErrorCode::kInitFailure, std::string("all ") + what + " fields are constant");
  return sum / static_cast<double>(used);
}

}  // namespace

SmoothnessEstimate init_smoothness(const CalibrationDataset& data, const FunctionSpace& state_space,
                                   const FunctionSpace& control_space, const InitOptions& opt) {
  data.validate();
  const int step = std::max(1, opt.subsample);
  const Mesh& mesh = state_space.mesh;
  const Index ns = state_space.spatial_size();
  const double dk = opt.delta_kappa > 0 ? opt.delta_kappa : mesh.spacing();
  SmoothnessEstimate s;

  std::vector<std::function<CorrelationEstimate()>> jobs;
  if (!state_space.time) {
    for (const auto& d : data.d) jobs.push_back([&mesh, &d, dk] { return correlation_length(mesh, d, dk); });
    s.kappa_u = mean_length(jobs, "state");
  } else {
    const TimeGrid& tg = *state_space.time;
    int count = 0;
    for (const auto& d : data.d)
      for (int t = 0; t < tg.n; ++t)
        if (count++ % step == 0)
          jobs.push_back([&mesh, &d, t, ns, dk] { return correlation_length(mesh, Vector(d.segment(t * ns, ns)), dk); });
    s.kappa_u = mean_length(jobs, "state snapshot");
    jobs.clear();
    count = 0;
    for (const auto& d : data.d)
      for (Index i = 0; i < ns; ++i)
        if (count++ % step == 0)
          jobs.push_back([&tg, &d, i, ns] {
            Vector series(tg.n);
            for (int t = 0; t < tg.n; ++t) series[t] = d[t * ns + i];
            return correlation_length(series, tg.times, tg.step());
          });
    s.kappa_t = mean_length(jobs, "time series");
    s.beta_t = s.kappa_t * s.kappa_t / 4.0;
  }
  jobs.clear();
  const Mesh& cmesh = control_space.mesh;
  const double dkz = opt.delta_kappa > 0 ? opt.delta_kappa : cmesh.spacing();
  for (const auto& z : data.z) jobs.push_back([&cmesh, &z, dkz] { return correlation_length(cmesh, z, dkz); });
  s.kappa_z = mean_length(jobs, "control");

  s.beta_u = s.kappa_u * s.kappa_u / dimension_constant(mesh.dim);
  s.beta_z = s.kappa_z * s.kappa_z / dimension_constant(cmesh.dim);
  return s;
}

Vector init_temporal_weights(const CalibrationDataset& data, const FunctionSpace& state_space, double eps_t) {
  if (!state_space.time) throw Error(ErrorCode::kInvalidInput, "temporal weights need a transient space");
  if (!(eps_t > 0)) throw Error(ErrorCode::kInvalidInput, "eps_t must be positive");
  data.validate();
  const Index nt = state_space.time->n, ns = state_space.spatial_size();
  Vector norms = Vector::Zero(nt);
  for (const auto& d : data.d) {
    require_size(d.size(), nt * ns, "transient datum");
    for (Index t = 0; t < nt; ++t) {
      // Uncentered: the profile follows the raw discrepancy magnitude.
      Vector snap = d.segment(t * ns, ns).array() + data.dbar;
      norms[t] += snap.dot(state_space.mass * snap);
    }
  }
  norms /= static_cast<double>(data.size());
  const double mx = norms.maxCoeff();
  if (!(mx > 0)) return Vector::Constant(nt, eps_t);
  return (norms / mx).array() + eps_t;
}

double init_alpha_u(const Vector& d1, const FunctionSpace& state_space, const FieldCovariance& unit_state_cov) {
  const double n2 = state_space.norm_sq(d1);
  if (!(n2 > 0)) throw Error(ErrorCode::kZeroData, "first discrepancy datum is zero");
  return n2 / unit_state_cov.weighted_trace();
}

Vector sample_control_perturbation(const EllipticCovariance& control_cov, const Vector& z_tilde, std::uint64_t seed) {
  const double zn = std::sqrt(z_tilde.dot(control_cov.mass() * z_tilde));
  if (!(zn > 0)) throw Error(ErrorCode::kDegeneratePerturbation, "z_tilde has zero norm");
  Vector x = control_cov.apply_factor(standard_normal(seed, control_cov.size()));
  return zn / std::sqrt(x.dot(control_cov.mass() * x)) * x;
}

GammaEstimate estimate_gamma_sq(const LinearSolutionOperator& lowfi, const FunctionSpace& state_space,
                                const Vector& z_tilde, const EllipticCovariance& control_cov, int n_mc,
                                std::uint64_t seed) {
  if (n_mc < 2) throw Error(ErrorCode::kInvalidInput, "need at least 2 Monte Carlo draws");
  require_size(z_tilde.size(), lowfi.control_size(), "gamma: z_tilde");
  const Vector base = lowfi.apply(z_tilde);
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n_mc; ++i) {
    Vector dz = sample_control_perturbation(control_cov, z_tilde, seed + static_cast<std::uint64_t>(i));
    double v = state_space.norm_sq(lowfi.apply(z_tilde + dz) - base);
    sum += v;
    sq += v * v;
  }
  GammaEstimate g;
  g.n_mc = n_mc;
  g.gamma_sq = sum / n_mc;
  double var = std::max(0.0, (sq - n_mc * g.gamma_sq * g.gamma_sq) / (n_mc - 1));
  g.std_error = std::sqrt(var / n_mc);
  return g;
}

EigRatioEstimate expected_eigratio(const Vector& eigenvalues, int n_mc, std::uint64_t seed) {
  if (eigenvalues.size() == 0) throw Error(ErrorCode::kInvalidInput, "empty spectrum");
  if (n_mc < 2) throw Error(ErrorCode::kInvalidInput, "need at least 2 Monte Carlo draws");
  if (eigenvalues.minCoeff() < 1.0 - 1e-9) throw Error(ErrorCode::kInvalidInput, "eigenvalues must be >= 1");
  Vector inv2 = eigenvalues.array().inverse().square();
  const double lead = inv2.maxCoeff();
  std::vector<double> kept;
  for (Index i = 0; i < inv2.size(); ++i)
    if (inv2[i] >= 1e-12 * lead) kept.push_back(inv2[i]);
  // Tied eigenvalues share one chi-square draw with the multiplicity as degrees of freedom.
  std::sort(kept.begin(), kept.end());
  std::vector<double> level;
  std::vector<std::gamma_distribution<double>> chi_sq;
  for (size_t i = 0; i < kept.size();) {
    size_t j = i;
    while (j < kept.size() && kept[j] == kept[i]) ++j;
    level.push_back(kept[i]);
    chi_sq.emplace_back(0.5 * static_cast<double>(j - i), 2.0);
    i = j;
  }
  std::mt19937_64 engine(seed);
  double sum = 0.0, sq = 0.0;
  for (int k = 0; k < n_mc; ++k) {
    double num = 0.0, den = 0.0;
    for (size_t g = 0; g < level.size(); ++g) {
      const double w = chi_sq[g](engine);
      num += level[g] * level[g] * w;
      den += level[g] * w;
    }
    const double r = num / den;
    sum += r;
    sq += r * r;
  }
  EigRatioEstimate e;
  e.n_modes = static_cast<Index>(kept.size());
  e.value = sum / n_mc;
  e.std_error = std::sqrt(std::max(0.0, (sq - n_mc * e.value * e.value) / (n_mc - 1)) / n_mc);
  return e;
}

double init_alpha_z(double gamma_sq, double d1_norm_sq, double z_tilde_norm_sq, double eigratio) {
  if (!(gamma_sq > 0) || !(d1_norm_sq > 0) || !(z_tilde_norm_sq > 0) || !(eigratio > 0))
    throw Error(ErrorCode::kInitFailure, "alpha_z initialization needs positive inputs");
  return (gamma_sq / d1_norm_sq) / (z_tilde_norm_sq * eigratio);
}

double init_noise(double c_delta) {
  if (!(c_delta > 0)) throw Error(ErrorCode::kZeroData, "discrepancy data magnitude is zero");
  return (1e-3 * c_delta) * (1e-3 * c_delta);
}

InitReport initialize_hyperparams(const CalibrationDataset& data, const FunctionSpace& state_space,
                                  const FunctionSpace& control_space, const LinearSolutionOperator& lowfi,
                                  const InitOptions& opt) {
  InitReport r;
  HyperParams& h = r.hyper;
  h.eps_t = opt.eps_t;
  r.smoothness = init_smoothness(data, state_space, control_space, opt);
  h.beta_u = r.smoothness.beta_u;
  h.beta_z = r.smoothness.beta_z;

  auto spatial = std::make_shared<const EllipticCovariance>(state_space.mass, state_space.stiffness, h.beta_u);
  std::shared_ptr<const FieldCovariance> state_cov = spatial;
  if (state_space.time) {
    h.beta_t = r.smoothness.beta_t;
    h.alpha_t = init_temporal_weights(data, state_space, h.eps_t);
    state_cov = std::make_shared<const SpaceTimeCovariance>(spatial, *state_space.time, h.beta_t, h.alpha_t);
  }
  const Vector& d1 = data.d.front();
  h.alpha_u = init_alpha_u(d1, state_space, *state_cov);

  const Vector& zt = data.z.front();
  EllipticCovariance control_cov(control_space.mass, control_space.stiffness, h.beta_z);
  r.eigratio = expected_eigratio(control_cov.generalized_eigenvalues(), opt.mc_eig, opt.seed ^ 0x9e3779b97f4a7c15ULL);
  r.gamma = estimate_gamma_sq(lowfi, state_space, zt, control_cov, opt.mc_gamma, opt.seed);
  h.alpha_z = init_alpha_z(r.gamma.gamma_sq, state_space.norm_sq(d1), zt.dot(control_space.mass * zt),
                           r.eigratio.value);
  h.alpha_d = init_noise(data.c_delta);
  h.validate(state_space.time ? state_space.time->n : 0);
  return r;
}

}  // namespace hdsa
