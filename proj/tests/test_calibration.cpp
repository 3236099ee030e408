#include <hdsa/calibration.hpp>
#include <hdsa/pipeline.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace hdsa;

namespace {

FunctionSpace line(int n) {
  ScenarioConfig c;
  c.n_space = n;
  return assemble_space(c);
}

// Stacked least-squares oracle: min ||U_u (S z + s0 - T)||^2 + r ||U_z z||^2 via Householder QR.
Vector least_squares_optimum(const OptimizationProblem& p) {
  Matrix uu = Matrix(p.state_mass).llt().matrixU();
  Matrix uz = Matrix(p.control_mass).llt().matrixU();
  const Index nu = uu.rows(), nz = uz.rows();
  Matrix a(nu + nz, nz);
  a << uu * p.lowfi.matrix, std::sqrt(p.regularization) * uz;
  Vector b(nu + nz);
  b << uu * (p.target - p.lowfi.offset), Vector::Zero(nz);
  return a.householderQr().solve(b);
}

OptimizationProblem small_problem(int nu, int nz, double r) {
  OptimizationProblem p;
  auto u = line(nu), z = line(nz);
  p.lowfi.matrix = Matrix::Random(nu, nz);
  p.lowfi.offset = standard_normal(3, nu);
  p.state_mass = u.mass;
  p.control_mass = z.mass;
  p.target = standard_normal(4, nu);
  p.regularization = r;
  return p;
}

double rel_err(const Vector& a, const Vector& b) { return (a - b).norm() / b.norm(); }

HyperParams hyper(double au, double bu, double az, double bz, double ad) {
  HyperParams h;
  h.alpha_u = au, h.beta_u = bu, h.alpha_z = az, h.beta_z = bz, h.alpha_d = ad;
  return h;
}

struct DenseConjugate {
  Matrix cov;
  Vector mean;
};

// theta | d with theta ~ N(0, W_theta^{-1}) and d_l = A_l theta + eta, eta ~ N(0, alpha_d M_u^{-1}).
DenseConjugate dense_posterior(const FunctionSpace& u, const FunctionSpace& z, const HyperParams& h,
                               const Vector& zt, const CalibrationDataset& data) {
  Matrix mu(u.mass), mz(z.mass);
  Matrix wu = oracle::elliptic_covariance(mu, Matrix(u.stiffness), h.beta_u, h.alpha_u);
  Matrix wz = oracle::elliptic_covariance(mz, Matrix(z.stiffness), h.beta_z, h.alpha_z);
  Matrix prior = oracle::theta_covariance(wu, wz, mz, zt);
  Matrix a = oracle::design(u.mass.rows(), mz, data.z);
  const Index n = data.size(), nu = mu.rows();
  Matrix wd = oracle::kron(Matrix::Identity(n, n), mu) / h.alpha_d;
  Vector d(n * nu);
  for (Index l = 0; l < n; ++l) d.segment(l * nu, nu) = data.d[l];
  Matrix precision = a.transpose() * wd * a + prior.inverse();
  DenseConjugate out;
  out.cov = precision.inverse();
  out.mean = out.cov * (a.transpose() * wd * d);
  out.mean.head(nu).array() += data.dbar;
  return out;
}

}  // namespace

TEST(Optimum, ZeroTargetGivesZeroControl) {
  auto p = small_problem(9, 5, 1e-3);
  p.lowfi.offset.setZero();
  p.target.setZero();
  EXPECT_LT(solve_lowfi_optimum(p).z.norm(), 1e-14);
}

TEST(Optimum, MatchesLeastSquaresOracle) {
  auto p = small_problem(17, 9, 1e-4);
  auto r = solve_lowfi_optimum(p);
  EXPECT_LT(rel_err(r.z, least_squares_optimum(p)), 1e-10);
  EXPECT_LE(r.gradient_norm, 1e-8);
}

TEST(Optimum, GradientMatchesFiniteDifferences) {
  auto p = small_problem(11, 7, 1e-2);
  Vector z = standard_normal(8, 7);
  Vector g = p.gradient(z), fd(7);
  const double h = 1e-5;
  for (Index i = 0; i < 7; ++i) {
    Vector e = Vector::Unit(7, i) * h;
    fd[i] = (p.objective(z + e) - p.objective(z - e)) / (2 * h);
  }
  EXPECT_LT(rel_err(g, fd), 1e-6);
  auto opt = solve_lowfi_optimum(p).z;
  for (Index i = 0; i < 7; ++i) {
    Vector e = Vector::Unit(7, i) * h;
    EXPECT_LT(std::abs(p.objective(opt + e) - p.objective(opt - e)) / (2 * h), 1e-6);
  }
}

TEST(Optimum, ScenarioOptimalityResidual) {
  for (auto kind : {ProblemKind::kStationary1D, ProblemKind::kTransient1D, ProblemKind::kStationary2D}) {
    ScenarioConfig c;
    c.problem = kind;
    c.n_space = kind == ProblemKind::kStationary2D ? 17 : 65;
    c.n_time = 17;
    c.n_data = 1;
    auto s = build_scenario(c);
    EXPECT_LE(s.problem.gradient(s.z_tilde).norm(), 1e-8) << problem_name(kind);
  }
}

TEST(Optimum, NonPositiveRegularizationRejected) {
  auto p = small_problem(5, 3, 0.0);
  try {
    solve_lowfi_optimum(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOptimizationFailure);
  }
}

TEST(Sensitivity, DiscrepancyGradientMatchesObjective) {
  auto p = small_problem(9, 6, 1e-2);
  DiscrepancyParams th(9, 6, 0.3 * standard_normal(2, 9 * 7));
  Vector z = standard_normal(9, 6);
  Vector g = discrepancy_gradient(p, z, th), fd(6);
  const double h = 1e-5;
  for (Index i = 0; i < 6; ++i) {
    Vector e = Vector::Unit(6, i) * h;
    fd[i] = (discrepancy_objective(p, z + e, th) - discrepancy_objective(p, z - e, th)) / (2 * h);
  }
  EXPECT_LT(rel_err(g, fd), 1e-6);
}

TEST(Sensitivity, HessianAndMixedMatchFiniteDifferences) {
  auto p = small_problem(13, 8, 1e-3);
  auto zt = solve_lowfi_optimum(p).z;
  SensitivityOperator sens(p, zt);
  const double h = 1e-4;
  DiscrepancyParams zero(13, 8);
  for (std::uint64_t k = 0; k < 10; ++k) {
    Vector v = standard_normal(100 + k, 8);
    Vector fd = (discrepancy_gradient(p, zt + h * v, zero) - discrepancy_gradient(p, zt - h * v, zero)) / (2 * h);
    EXPECT_LT(rel_err(sens.apply_hessian(v), fd), 1e-5);

    DiscrepancyParams th(13, 8, standard_normal(200 + k, 13 * 9));
    DiscrepancyParams tp(13, 8, h * th.flat()), tm(13, 8, -h * th.flat());
    Vector fdb = (discrepancy_gradient(p, zt, tp) - discrepancy_gradient(p, zt, tm)) / (2 * h);
    EXPECT_LT(rel_err(sens.apply_mixed(th), fdb), 1e-5);
  }
  Matrix hm = sens.hessian();
  EXPECT_LE((hm - hm.transpose()).norm(), 1e-12);
}

TEST(Sensitivity, ConstantBlockReducesToStateTerm) {
  auto p = small_problem(9, 5, 1e-3);
  SensitivityOperator sens(p, solve_lowfi_optimum(p).z);
  DiscrepancyParams th(9, 5);
  th.theta0() = standard_normal(3, 9);
  Vector expected = p.lowfi.matrix.transpose() * (p.state_mass * Vector(th.theta0()));
  EXPECT_LT(rel_err(sens.apply_mixed(th), expected), 1e-13);
  EXPECT_EQ(sens.apply_mixed(DiscrepancyParams(9, 5)).norm(), 0.0);
}

TEST(Sensitivity, UpdateIsAffineInTheta) {
  auto p = small_problem(9, 5, 1e-3);
  auto zt = solve_lowfi_optimum(p).z;
  SensitivityOperator sens(p, zt);
  EXPECT_EQ((sens.update_optimum(DiscrepancyParams(9, 5)) - zt).norm(), 0.0);
  DiscrepancyParams a(9, 5, standard_normal(1, 54)), b(9, 5, standard_normal(2, 54));
  DiscrepancyParams ab(9, 5, a.flat() + b.flat());
  Vector lhs = sens.update_optimum(ab) - zt;
  Vector rhs = (sens.update_optimum(a) - zt) + (sens.update_optimum(b) - zt);
  EXPECT_LT(rel_err(lhs, rhs), 1e-12);
}

TEST(Sensitivity, ExactDiscrepancyRecoversHighFidelityOptimum) {
  ScenarioConfig c;
  c.n_space = 65;
  c.n_data = 1;
  auto s = build_scenario(c);
  // The true discrepancy is affine: theta0 = offset gap, Theta^T M_z = S_h - S_l.
  DiscrepancyParams th(65, 65);
  th.theta0() = s.highfi.offset - s.lowfi.offset;
  Matrix gap = s.highfi.matrix - s.lowfi.matrix;
  Matrix mz(s.control_space.mass);
  th.rows() = mz.llt().solve(gap.transpose());
  OptimizationProblem hp = s.problem;
  hp.lowfi = s.highfi;
  Vector truth = least_squares_optimum(hp);
  SensitivityOperator sens(s.problem, s.z_tilde);
  Vector updated = sens.update_optimum(th);
  auto mnorm = [&](const Vector& v) { return std::sqrt(v.dot(s.control_space.mass * v)); };
  EXPECT_LT(mnorm(updated - truth), mnorm(s.z_tilde - truth));
}

TEST(Posterior, NoDataReturnsPrior) {
  auto u = line(6), z = line(4);
  auto prior = build_prior(u, z, hyper(1.0, 0.1, 1.0, 0.1, 1e-4), Vector::Ones(4));
  PosteriorModel post(prior, CalibrationDataset{});
  EXPECT_EQ(post.mean().flat().norm(), 0.0);
  for (std::uint64_t k = 0; k < 5; ++k) {
    DiscrepancyParams dir(6, 4, standard_normal(k, 30));
    EXPECT_NEAR(post.directional_variance(dir), post.prior_directional_variance(dir),
                1e-12 * post.prior_directional_variance(dir));
  }
}

TEST(Posterior, MatchesDenseConjugateOracle) {
  auto u = line(5), z = line(3);
  Vector zt(3);
  zt << 1.0, 0.4, -0.3;
  auto h = hyper(0.7, 0.05, 1.5, 0.2, 1e-3);
  auto data = CalibrationDataset::from_raw({zt, Vector(zt + standard_normal(1, 3))},
                                           {standard_normal(2, 5), standard_normal(3, 5)});
  PosteriorModel post(build_prior(u, z, h, zt), data);
  auto oracle = dense_posterior(u, z, h, zt, data);
  EXPECT_LT((post.mean().flat() - oracle.mean).cwiseAbs().maxCoeff(), 1e-8 * oracle.mean.cwiseAbs().maxCoeff());
  for (std::uint64_t k = 0; k < 20; ++k) {
    Vector v = standard_normal(50 + k, 20);
    EXPECT_NEAR(post.directional_variance(DiscrepancyParams(5, 3, v)), v.dot(oracle.cov * v),
                1e-8 * v.dot(oracle.cov * v));
  }
}

TEST(Posterior, SamplesHaveConjugateMoments) {
  auto u = line(4), z = line(3);
  Vector zt = Vector::Ones(3);
  auto h = hyper(1.0, 0.1, 0.5, 0.1, 1e-2);
  auto data = CalibrationDataset::from_raw({zt, Vector(zt + standard_normal(5, 3))},
                                           {standard_normal(6, 4), standard_normal(7, 4)});
  PosteriorModel post(build_prior(u, z, h, zt), data);
  auto oracle = dense_posterior(u, z, h, zt, data);
  const int q = 10000;
  const Index n = 16;
  Vector mean = Vector::Zero(n), sq = Vector::Zero(n);
  for (int i = 0; i < q; ++i) {
    Vector t = post.sample(1000 + i).flat();
    mean += t;
    sq += t.cwiseAbs2();
  }
  mean /= q;
  Vector var = sq / q - mean.cwiseAbs2();
  for (Index j = 0; j < n; ++j) {
    const double sd = std::sqrt(oracle.cov(j, j));
    EXPECT_LT(std::abs(mean[j] - oracle.mean[j]), 4 * sd / std::sqrt(q)) << j;
    // var of a sample variance is 2 sigma^4 / q
    EXPECT_LT(std::abs(var[j] - oracle.cov(j, j)), 4 * std::sqrt(2.0 / q) * oracle.cov(j, j)) << j;
  }
  EXPECT_TRUE((post.sample(9).flat().array() == post.sample(9).flat().array()).all());
}

TEST(Posterior, ContractionInRandomDirections) {
  auto u = line(17), z = line(9);
  ScenarioConfig c;
  Vector zt = Vector::LinSpaced(9, 1.0, 2.0);
  auto prior = build_prior(u, z, hyper(2.0, 0.02, 0.3, 0.05, 1e-4), zt);
  auto data = CalibrationDataset::from_raw({zt, Vector(zt + standard_normal(1, 9))},
                                           {standard_normal(2, 17), standard_normal(3, 17)});
  PosteriorModel post(prior, data);
  for (std::uint64_t k = 0; k < 50; ++k) {
    DiscrepancyParams dir(17, 9, standard_normal(300 + k, 170));
    dir.flat().normalize();
    EXPECT_LE(post.directional_variance(dir), post.prior_directional_variance(dir) * (1 + 1e-12));
    EXPECT_GE(post.directional_variance(dir), -1e-12);
  }
}

TEST(Posterior, MeanInterpolatesAsNoiseVanishes) {
  auto u = line(33), z = line(33);
  Vector x = u.mesh.nodes.col(0);
  Vector zt = Vector::Ones(33);
  std::vector<Vector> zs{zt, Vector(zt + 0.5 * standard_normal(1, 33)), Vector(zt + 0.5 * standard_normal(2, 33))};
  std::vector<Vector> ds{Vector((3 * x).array().sin()), Vector(x.array().square()), Vector((2 * x).array().cos())};
  auto data = CalibrationDataset::from_raw(zs, ds);
  double previous = std::numeric_limits<double>::infinity();
  for (double ad : {1e-4, 1e-7, 1e-10, 1e-13}) {
    PosteriorModel post(build_prior(u, z, hyper(1.0, 0.01, 1.0, 0.01, ad), zt), data);
    double worst = 0;
    for (size_t l = 0; l < 3; ++l) {
      Vector r = evaluate(post.mean(), z.mass, zs[l]) - ds[l];
      worst = std::max(worst, std::sqrt(r.dot(u.mass * r)));
    }
    EXPECT_LT(worst, previous) << ad;
    previous = worst;
  }
  EXPECT_LT(previous, 1e-6);
}

TEST(Ensemble, MeanAndSpread) {
  auto p = small_problem(9, 9, 1e-3);
  p.control_mass = line(9).mass;
  auto zt = solve_lowfi_optimum(p).z;
  SensitivityOperator sens(p, zt);
  auto u = line(9);
  auto data = CalibrationDataset::from_raw({zt, Vector(zt + standard_normal(1, 9))},
                                           {standard_normal(2, 9), standard_normal(3, 9)});
  auto h = hyper(1.0, 0.02, 0.5, 0.05, 1e-4);
  PosteriorModel post(build_prior(u, u, h, zt), data);
  const int n = 2000;
  auto ens = posterior_optimum_ensemble(sens, post, n, 7);
  ASSERT_EQ(ens.size(), static_cast<size_t>(n));
  EXPECT_EQ((ens[3] - sens.update_optimum(post.sample(10))).norm(), 0.0);
  Vector mean = Vector::Zero(9), sq = Vector::Zero(9);
  for (const auto& e : ens) mean += e, sq += e.cwiseAbs2();
  mean /= n;
  Vector sd = (sq / n - mean.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt();
  Vector center = sens.update_optimum(post.mean());
  for (Index i = 0; i < 9; ++i) EXPECT_LT(std::abs(mean[i] - center[i]), 4 * sd[i] / std::sqrt(n)) << i;

  auto tight = h;
  tight.alpha_u /= 10;
  PosteriorModel post_tight(build_prior(u, u, tight, zt), data);
  auto ens_tight = posterior_optimum_ensemble(sens, post_tight, n, 7);
  Vector m2 = Vector::Zero(9), s2 = Vector::Zero(9);
  for (const auto& e : ens_tight) m2 += e, s2 += e.cwiseAbs2();
  m2 /= n;
  Vector sd2 = (s2 / n - m2.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt();
  for (Index i = 0; i < 9; ++i) EXPECT_LT(sd2[i], sd[i]) << i;

  auto single = posterior_optimum_ensemble(sens, post, 1, 7);
  EXPECT_EQ(single.size(), 1u);
  EXPECT_THROW(posterior_optimum_ensemble(sens, post, 0, 7), Error);
}
