#pragma once

#include <hdsa/prior_model.hpp>

namespace hdsa {

struct CorrelationEstimate {
  double kappa = 0.0;
  double delta_kappa = 0.0;
  Index n_pairs = 0;
};

// Shifted-autocorrelation length (first 0.1 crossing) of a 1D field sampled at strictly increasing
// coordinates. delta_kappa <= 0 selects the smallest coordinate spacing.
CorrelationEstimate correlation_length(const Vector& values, const Vector& coords, double delta_kappa = 0.0);

// Correlation length of a nodal field on a mesh. In 2D the estimate averages axis-aligned node lines,
// skipping constant lines.
CorrelationEstimate correlation_length(const Mesh& mesh, const Vector& values, double delta_kappa = 0.0);

struct SmoothnessEstimate {
  double kappa_u = 0.0, kappa_z = 0.0, kappa_t = 0.0;
  double beta_u = 0.0, beta_z = 0.0, beta_t = 0.0;
};

struct InitOptions {
  double delta_kappa = 0.0;  // 0: one mesh spacing
  int subsample = 1;         // use every k-th snapshot / series
  int mc_gamma = 200;
  int mc_eig = 10000;
  std::uint64_t seed = 0;
  double eps_t = 0.01;
};

double dimension_constant(int dim);

SmoothnessEstimate init_smoothness(const CalibrationDataset& data, const FunctionSpace& state_space,
                                   const FunctionSpace& control_space, const InitOptions& opt = {});

// Per-step ||d_{l,i}||^2_{M_s} of the uncentered data averaged over l, normalized by its max, plus eps_t.
Vector init_temporal_weights(const CalibrationDataset& data, const FunctionSpace& state_space, double eps_t = 0.01);

double init_alpha_u(const Vector& d1, const FunctionSpace& state_space, const FieldCovariance& unit_state_cov);

struct GammaEstimate {
  double gamma_sq = 0.0;
  double std_error = 0.0;
  int n_mc = 0;
  static constexpr double kCosZeta = 0.5;
};

// Draw of the normalized perturbation ||z~||_{M_z} T_z omega / ||T_z omega||_{M_z}.
Vector sample_control_perturbation(const EllipticCovariance& control_cov, const Vector& z_tilde, std::uint64_t seed);

GammaEstimate estimate_gamma_sq(const LinearSolutionOperator& lowfi, const FunctionSpace& state_space,
                                const Vector& z_tilde, const EllipticCovariance& control_cov, int n_mc,
                                std::uint64_t seed);

struct EigRatioEstimate {
  double value = 0.0;
  double std_error = 0.0;
  Index n_modes = 0;
};

// E[w^T L^{-4} w / w^T L^{-2} w] for the eigenvalues L of E_z in the M_z inner product.
EigRatioEstimate expected_eigratio(const Vector& eigenvalues, int n_mc, std::uint64_t seed);

double init_alpha_z(double gamma_sq, double d1_norm_sq, double z_tilde_norm_sq, double eigratio);

double init_noise(double c_delta);

struct InitReport {
  HyperParams hyper;
  SmoothnessEstimate smoothness;
  GammaEstimate gamma;
  EigRatioEstimate eigratio;
};

// Full initialization pipeline in dependency order.
InitReport initialize_hyperparams(const CalibrationDataset& data, const FunctionSpace& state_space,
                                  const FunctionSpace& control_space, const LinearSolutionOperator& lowfi,
                                  const InitOptions& opt = {});

}  // namespace hdsa
