#pragma once

#include <hdsa/calibration.hpp>
#include <hdsa/hyper_init.hpp>

namespace hdsa {

// A fully assembled test problem with its calibration data.
struct Scenario {
  ScenarioConfig config;
  FunctionSpace state_space;
  FunctionSpace control_space;
  LinearSolutionOperator highfi;
  LinearSolutionOperator lowfi;
  OptimizationProblem problem;  // low-fidelity optimization
  Vector z_tilde;
  CalibrationDataset dataset;
};

// Smoothness of the random controls used to generate calibration data.
constexpr double kDataFieldBeta = 0.01;

Scenario build_scenario(const ScenarioConfig& config);

// Calibration data: z_1 = z~, later controls are z~ plus a random field perturbation with norm ||z~||.
CalibrationDataset generate_calibration_data(const Scenario& s, int n_data, std::uint64_t seed);

// Brute-force optimum of the high-fidelity problem.
Vector hifi_optimum(const Scenario& s);

struct RunOptions {
  int n_ensemble = 100;
  std::uint64_t seed = 0;
  InitOptions init;
};

struct RunResult {
  InitReport init;
  std::vector<Vector> ensemble;
  Vector hifi;
};

RunResult run_pipeline(const Scenario& s, const RunOptions& opt);

}  // namespace hdsa
