#include <hdsa/pipeline.hpp>

#include <cmath>

namespace hdsa {

Scenario build_scenario(const ScenarioConfig& config) {
  Scenario s;
  s.config = config;
  s.state_space = assemble_space(config);
  s.control_space = s.state_space.spatial();
  s.highfi = build_highfi(config, s.state_space);
  s.lowfi = build_lowfi(config, s.state_space);
  s.problem.lowfi = s.lowfi;
  s.problem.state_mass = s.state_space.full_mass();
  s.problem.control_mass = s.control_space.mass;
  s.problem.target = target_state(config, s.state_space);
  s.problem.regularization = config.regularization;
  s.z_tilde = solve_lowfi_optimum(s.problem).z;
  s.dataset = generate_calibration_data(s, config.effective_n_data(), config.seed);
  return s;
}

CalibrationDataset generate_calibration_data(const Scenario& s, int n_data, std::uint64_t seed) {
  if (n_data < 1) throw Error(ErrorCode::kInvalidConfig, "n_data must be at least 1");
  std::vector<Vector> zs{s.z_tilde}, ds;
  if (n_data > 1) {
    EllipticCovariance field(s.control_space.mass, s.control_space.stiffness, kDataFieldBeta);
    const double zn = std::sqrt(s.z_tilde.dot(s.control_space.mass * s.z_tilde));
    for (int l = 1; l < n_data; ++l) {
      Vector x = field.apply_factor(standard_normal(seed + static_cast<std::uint64_t>(l), field.size()));
      x *= (zn > 0 ? zn : 1.0) / std::sqrt(x.dot(s.control_space.mass * x));
      zs.push_back(s.z_tilde + x);
    }
  }
  for (const auto& z : zs) ds.push_back(s.highfi.apply(z) - s.lowfi.apply(z));
  return CalibrationDataset::from_raw(std::move(zs), ds);
}

Vector hifi_optimum(const Scenario& s) {
  OptimizationProblem p = s.problem;
  p.lowfi = s.highfi;
  return solve_lowfi_optimum(p).z;
}

RunResult run_pipeline(const Scenario& s, const RunOptions& opt) {
  RunResult r;
  r.init = initialize_hyperparams(s.dataset, s.state_space, s.control_space, s.lowfi, opt.init);
  auto prior = build_prior(s.state_space, s.control_space, r.init.hyper, s.z_tilde);
  PosteriorModel post(prior, s.dataset);
  SensitivityOperator sens(s.problem, s.z_tilde);
  r.ensemble = posterior_optimum_ensemble(sens, post, opt.n_ensemble, opt.seed);
  r.hifi = hifi_optimum(s);
  return r;
}

}  // namespace hdsa
