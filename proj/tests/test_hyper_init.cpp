#include <hdsa/hyper_init.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace hdsa;

namespace {

constexpr double kPi = std::numbers::pi;

FunctionSpace line(int n) {
  ScenarioConfig c;
  c.n_space = n;
  return assemble_space(c);
}

// Exact truncated-domain correlation of sin(2 pi x) under the shifted-product estimator.
double sinusoid_rho(double k) { return std::cos(2 * kPi * k) + std::sin(2 * kPi * k) / (2 * kPi * (1 - k)); }

double bisect(const std::function<double(double)>& f, double a, double b) {
  for (int i = 0; i < 200; ++i) {
    double m = 0.5 * (a + b);
    (f(a) > 0) == (f(m) > 0) ? a = m : b = m;
  }
  return 0.5 * (a + b);
}

CalibrationDataset manual_dataset(std::vector<Vector> z, std::vector<Vector> d) {
  CalibrationDataset ds;
  ds.z = std::move(z);
  ds.d = std::move(d);
  ds.c_delta = 1.0;
  return ds;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode{};
}

}  // namespace

TEST(CorrelationLength, SinusoidMatchesClosedForm) {
  const int n = 1025;
  Vector x = Vector::LinSpaced(n, 0.0, 1.0);
  Vector f = (2 * kPi * x).array().sin();
  const double exact = bisect([](double k) { return sinusoid_rho(k) - 0.1; }, 0.1, 0.4);
  auto e = correlation_length(f, x);
  EXPECT_NEAR(e.kappa, exact, 2 * e.delta_kappa);
  EXPECT_DOUBLE_EQ(e.delta_kappa, 1.0 / (n - 1));
  EXPECT_GT(e.n_pairs, 0);
}

TEST(CorrelationLength, CoarseIncrementStillWithinTwoSteps) {
  Vector x = Vector::LinSpaced(257, 0.0, 1.0);
  Vector f = (2 * kPi * x).array().sin();
  const double exact = bisect([](double k) { return sinusoid_rho(k) - 0.1; }, 0.1, 0.4);
  auto e = correlation_length(f, x, 0.01);
  EXPECT_NEAR(e.kappa, exact, 2 * 0.01);
}

TEST(CorrelationLength, WhiteNoiseDecorrelatesImmediately) {
  Vector x = Vector::LinSpaced(513, 0.0, 1.0);
  for (std::uint64_t s : {1, 2, 3}) {
    auto e = correlation_length(standard_normal(s, 513), x);
    EXPECT_LE(e.kappa, 2 * e.delta_kappa + 1e-15);
  }
}

TEST(CorrelationLength, ConstantFieldIsDegenerate) {
  Vector x = Vector::LinSpaced(9, 0.0, 1.0);
  EXPECT_EQ(code_of([&] { correlation_length(Vector::Constant(9, 3.0), x); }), ErrorCode::kDegenerateField);
  EXPECT_EQ(code_of([&] { correlation_length(Vector::Ones(2), Vector::LinSpaced(2, 0, 1)); }),
            ErrorCode::kInvalidInput);
}

TEST(CorrelationLength, LinearRampMatchesClosedForm) {
  // f = x: rho(k) = 12/(1-k) * int_0^{1-k} (x - 1/2)(x + k - 1/2) dx
  auto rho = [](double k) {
    const double a = 1 - k;
    const double integral = (std::pow(a - 0.5, 3) + 0.125) / 3 + k * (a * a - a) / 2;
    return 12 * integral / a;
  };
  const double exact = bisect([&](double k) { return rho(k) - 0.1; }, 0.05, 0.9);
  Vector x = Vector::LinSpaced(1025, 0.0, 1.0);
  auto e = correlation_length(x, x);
  EXPECT_NEAR(e.kappa, exact, 2 * e.delta_kappa);
}

TEST(CorrelationLength, SquaredExponentialFieldRecovered) {
  const int n = 513;
  const double ell = 0.03;
  Vector x = Vector::LinSpaced(n, 0.0, 1.0);
  Matrix k(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) k(i, j) = std::exp(-0.5 * std::pow((x[i] - x[j]) / ell, 2));
  k.diagonal().array() += 1e-8;
  Matrix l = k.llt().matrixL();
  const double target = ell * std::sqrt(2 * std::log(10.0));
  double mean = 0;
  for (int r = 0; r < 10; ++r) mean += correlation_length(Vector(l * standard_normal(50 + r, n)), x).kappa / 10;
  EXPECT_NEAR(mean, target, 0.25 * target);
}

TEST(CorrelationLength, TwoDimensionalAveragesAxisLines) {
  auto m = make_mesh_2d(33);
  Vector f(m.size());
  for (Index i = 0; i < m.size(); ++i) f[i] = std::sin(2 * kPi * m.nodes(i, 0));
  auto e2 = correlation_length(m, f);
  // vertical lines are constant and skipped; horizontal lines all equal the 1D estimate
  auto e1 = correlation_length(Vector(f.head(33)), Vector(m.nodes.col(0).head(33)));
  EXPECT_DOUBLE_EQ(e2.kappa, e1.kappa);
}

TEST(Smoothness, DimensionConstants) {
  EXPECT_NEAR(0.6 * 0.6 / dimension_constant(1), 0.03, 1e-15);
  EXPECT_NEAR(0.4 * 0.4 / dimension_constant(2), 0.02, 1e-15);
  EXPECT_DOUBLE_EQ(dimension_constant(3), 4.0);
  EXPECT_EQ(code_of([] { dimension_constant(4); }), ErrorCode::kInvalidInput);
}

TEST(Smoothness, StationaryUsesPerFieldAverages) {
  auto u = line(129), z = line(65);
  Vector xu = u.mesh.nodes.col(0), xz = z.mesh.nodes.col(0);
  Vector d1 = (2 * kPi * xu).array().sin(), d2 = (4 * kPi * xu).array().sin();
  Vector z1 = (2 * kPi * xz).array().cos(), z2 = Vector::Ones(65);
  auto ds = manual_dataset({z1, z2}, {d1, d2});
  auto s = init_smoothness(ds, u, z);
  const double ku = 0.5 * (correlation_length(d1, xu).kappa + correlation_length(d2, xu).kappa);
  EXPECT_DOUBLE_EQ(s.kappa_u, ku);
  EXPECT_DOUBLE_EQ(s.beta_u, ku * ku / 12);
  // the constant control is skipped
  const double kz = correlation_length(z1, xz).kappa;
  EXPECT_DOUBLE_EQ(s.kappa_z, kz);
  EXPECT_DOUBLE_EQ(s.beta_z, kz * kz / 12);
  EXPECT_EQ(s.beta_t, 0.0);
}

TEST(Smoothness, AllConstantIsInitFailure) {
  auto u = line(9), z = line(5);
  auto ds = manual_dataset({Vector::Ones(5)}, {Vector::Ones(9)});
  EXPECT_EQ(code_of([&] { init_smoothness(ds, u, z); }), ErrorCode::kInitFailure);
}

TEST(Smoothness, TransientTemporalLength) {
  ScenarioConfig c;
  c.problem = ProblemKind::kTransient1D;
  c.n_space = 17;
  c.n_time = 41;
  auto u = assemble_space(c);
  auto z = line(17);
  const auto& tg = *u.time;
  Vector d(17 * 41);
  for (int t = 0; t < 41; ++t)
    for (int i = 0; i < 17; ++i)
      d[t * 17 + i] = std::sin(2 * kPi * tg.times[t]) * std::cos(kPi * u.mesh.nodes(i, 0));
  auto ds = manual_dataset({Vector(u.mesh.nodes.col(0))}, {d});
  auto s = init_smoothness(ds, u, z);
  const double kt = correlation_length(Vector((2 * kPi * tg.times).array().sin()), tg.times, tg.step()).kappa;
  EXPECT_NEAR(s.kappa_t, kt, 1e-12);
  EXPECT_NEAR(s.beta_t, kt * kt / 4, 1e-12);
}

TEST(TemporalWeights, HandNormalizedExample) {
  ScenarioConfig c;
  c.problem = ProblemKind::kTransient1D;
  c.n_space = 5;
  c.n_time = 3;
  auto u = assemble_space(c);
  Vector v = Vector::Ones(5);
  v /= std::sqrt(v.dot(u.mass * v));
  Vector d(15);
  d << 0 * v, 1 * v, 2 * v;
  auto a = init_temporal_weights(manual_dataset({Vector::Ones(2)}, {d}), u, 0.01);
  EXPECT_NEAR(a[0], 0.01, 1e-14);
  EXPECT_NEAR(a[1], 0.26, 1e-14);
  EXPECT_NEAR(a[2], 1.01, 1e-14);
  auto zero = init_temporal_weights(manual_dataset({Vector::Ones(2)}, {Vector::Zero(15)}), u, 0.01);
  EXPECT_EQ((zero - Vector::Constant(3, 0.01)).norm(), 0.0);
  EXPECT_EQ(code_of([&] { init_temporal_weights(manual_dataset({Vector::Ones(2)}, {d}), line(5)); }),
            ErrorCode::kInvalidInput);
}

TEST(AlphaU, ZeroSmoothnessDividesByDimension) {
  auto u = line(21);
  EllipticCovariance c(u.mass, u.stiffness, 0.0);
  Vector d = standard_normal(3, 21);
  EXPECT_NEAR(init_alpha_u(d, u, c), d.dot(u.mass * d) / 21, 1e-12);
  EXPECT_NEAR(init_alpha_u(2 * d, u, c), 4 * init_alpha_u(d, u, c), 1e-12);
  EXPECT_EQ(code_of([&] { init_alpha_u(Vector::Zero(21), u, c); }), ErrorCode::kZeroData);
}

TEST(AlphaU, SamplerMatchesDataMagnitude) {
  auto u = line(33), z = line(9);
  for (double beta : {0.0, 0.003, 0.05}) {
    Vector d = standard_normal(7, 33);
    EllipticCovariance c(u.mass, u.stiffness, beta);
    HyperParams h;
    h.beta_u = beta;
    h.alpha_u = init_alpha_u(d, u, c);
    PriorModel p(u, z, h, Vector::Ones(9));
    const int q = 4000;
    double m = 0, s = 0;
    for (int i = 0; i < q; ++i) {
      Vector f = p.sample_delta_field(p.z_tilde(), 10 + i);
      double v = f.dot(u.mass * f);
      m += v, s += v * v;
    }
    m /= q;
    const double se = std::sqrt((s / q - m * m) / q);
    EXPECT_LT(std::abs(m - d.dot(u.mass * d)), 3 * se) << beta;
  }
}

TEST(Gamma, ConstantModelGivesZero) {
  auto u = line(9), z = line(5);
  LinearSolutionOperator lowfi{Matrix::Zero(9, 5), Vector::Ones(9)};
  EllipticCovariance c(z.mass, z.stiffness, 0.1);
  auto g = estimate_gamma_sq(lowfi, u, Vector::Ones(5), c, 20, 1);
  EXPECT_EQ(g.gamma_sq, 0.0);
  EXPECT_EQ(g.n_mc, 20);
  EXPECT_DOUBLE_EQ(GammaEstimate::kCosZeta, 0.5);
}

TEST(Gamma, PerturbationHasNominalNorm) {
  auto z = line(11);
  EllipticCovariance c(z.mass, z.stiffness, 0.05);
  Vector zt = standard_normal(2, 11);
  Vector dz = sample_control_perturbation(c, zt, 5);
  EXPECT_NEAR(dz.dot(z.mass * dz), zt.dot(z.mass * zt), 1e-12);
  EXPECT_EQ(code_of([&] { sample_control_perturbation(c, Vector::Zero(11), 5); }),
            ErrorCode::kDegeneratePerturbation);
}

TEST(Gamma, LinearModelMatchesDenseCovarianceSampler) {
  auto u = line(12), z = line(8);
  Matrix s = Matrix::Random(12, 8);
  LinearSolutionOperator lowfi{s, Vector::Ones(12)};
  EllipticCovariance c(z.mass, z.stiffness, 0.05);
  Vector zt = Vector::LinSpaced(8, 1.0, 2.0);
  auto g = estimate_gamma_sq(lowfi, u, zt, c, 4000, 77);

  // Independent sampler: dense Cholesky of E^{-1} M E^{-1}, quadratic form through S.
  Matrix mz(z.mass), mu(u.mass);
  Matrix cov = oracle::elliptic_covariance(mz, Matrix(z.stiffness), 0.05, 1.0);
  Matrix l = cov.llt().matrixL();
  const double zn2 = zt.dot(mz * zt);
  Matrix q = s.transpose() * mu * s;
  const int n = 4000;
  double m = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    Vector x = l * standard_normal(500000 + i, 8);
    double v = zn2 * x.dot(q * x) / x.dot(mz * x);
    m += v, sq += v * v;
  }
  m /= n;
  const double se = std::sqrt((sq / n - m * m) / n);
  EXPECT_LT(std::abs(g.gamma_sq - m), 3 * std::hypot(se, g.std_error));

  auto g2 = estimate_gamma_sq(lowfi, u, Vector(2 * zt), c, 4000, 77);
  EXPECT_NEAR(g2.gamma_sq, 4 * g.gamma_sq, 1e-10 * g.gamma_sq);
}

TEST(EigRatio, UnitSpectrumIsExactlyOne) {
  auto e = expected_eigratio(Vector::Ones(20), 100, 3);
  EXPECT_EQ(e.value, 1.0);
  EXPECT_EQ(e.n_modes, 20);
}

TEST(EigRatio, EqualEigenvaluesGiveInverseSquare) {
  auto e = expected_eigratio(Vector::Constant(7, 2.0), 50, 3);
  EXPECT_NEAR(e.value, 0.25, 1e-15);
}

TEST(EigRatio, TwoModesMatchArcsineQuadrature) {
  // lambda = (1, sqrt 2): B = w1^2/(w1^2+w2^2) is arcsine distributed.
  Vector lam(2);
  lam << 1.0, std::sqrt(2.0);
  auto f = [](double b) { return (b + (1 - b) / 4) / (b + (1 - b) / 2); };
  const int m = 20000;
  double quad = 0;
  for (int i = 0; i < m; ++i) {
    double phi = (i + 0.5) * (kPi / 2) / m;
    quad += f(std::pow(std::sin(phi), 2));
  }
  quad /= m;
  auto e = expected_eigratio(lam, 20000, 9);
  EXPECT_LT(std::abs(e.value - quad), 4 * e.std_error);
  EXPECT_GT(e.value, 0.5);
  EXPECT_LT(e.value, 1.0);
}

TEST(EigRatio, TruncationAndErrors) {
  Vector lam(3);
  lam << 1.0, 1e7, 1e8;
  auto e = expected_eigratio(lam, 10, 1);
  EXPECT_EQ(e.n_modes, 1);
  EXPECT_EQ(e.value, 1.0);
  EXPECT_EQ(code_of([] { expected_eigratio(Vector(), 10, 1); }), ErrorCode::kInvalidInput);
  EXPECT_EQ(code_of([] { expected_eigratio(Vector::Constant(2, 0.5), 10, 1); }), ErrorCode::kInvalidInput);
}

TEST(EigRatio, AlwaysInUnitInterval) {
  auto z = line(65);
  for (double beta : {1e-3, 1e-1, 10.0}) {
    EllipticCovariance c(z.mass, z.stiffness, beta);
    auto e = expected_eigratio(c.generalized_eigenvalues(), 2000, 4);
    EXPECT_GT(e.value, 0.0);
    EXPECT_LE(e.value, 1.0);
  }
}

TEST(AlphaZ, Arithmetic) {
  EXPECT_DOUBLE_EQ(init_alpha_z(2.0, 2.0, 1.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(init_alpha_z(3.0, 2.0, 5.0, 0.2), 2 * init_alpha_z(3.0, 2.0, 5.0, 0.4));
  EXPECT_EQ(code_of([] { init_alpha_z(1.0, 0.0, 1.0, 1.0); }), ErrorCode::kInitFailure);
}

TEST(AlphaZ, DifferenceMagnitudeMatchesGamma) {
  // With alpha_u Tr_u = ||d1||^2, E_dz ||delta(z~+dz)-delta(z~)||^2 = ||d1||^2 alpha_z E s(dz) should equal gamma^2.
  auto z = line(33);
  EllipticCovariance c(z.mass, z.stiffness, 0.01);
  Vector zt = Vector::Ones(33) + 0.3 * standard_normal(1, 33);
  const double gamma_sq = 2.5, d1 = 4.0;
  auto ratio = expected_eigratio(c.generalized_eigenvalues(), 20000, 5);
  const double az = init_alpha_z(gamma_sq, d1, zt.dot(z.mass * zt), ratio.value);
  const int n = 4000;
  double m = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    Vector dz = sample_control_perturbation(c, zt, 100 + i);
    Vector e = c.apply_inverse(Vector(z.mass * dz));
    double v = d1 * az * e.dot(z.mass * e);
    m += v, sq += v * v;
  }
  m /= n;
  const double se = std::sqrt((sq / n - m * m) / n);
  EXPECT_LT(std::abs(m - gamma_sq), 3 * se + 3 * gamma_sq * ratio.std_error / ratio.value);
}

TEST(Noise, Formula) {
  EXPECT_NEAR(init_noise(10.0), 1e-4, 1e-18);
  EXPECT_NEAR(init_noise(1.0), 1e-6, 1e-20);
  EXPECT_NEAR(init_noise(70.0), 100 * init_noise(7.0), 1e-16);
  EXPECT_EQ(code_of([] { init_noise(0.0); }), ErrorCode::kZeroData);
}

TEST(Initialize, DeterministicAndValid) {
  auto u = line(33), z = line(33);
  Vector x = u.mesh.nodes.col(0);
  std::vector<Vector> zs{Vector((kPi * x).array().cos() + 2.0), Vector((2 * kPi * x).array().sin() + 1.0)};
  std::vector<Vector> ds{Vector((3 * kPi * x).array().sin()), Vector(x.array().square())};
  auto data = CalibrationDataset::from_raw(zs, ds);
  LinearSolutionOperator lowfi{Matrix::Identity(33, 33) * 0.5, Vector::Zero(33)};
  InitOptions opt;
  opt.mc_gamma = 50;
  opt.mc_eig = 500;
  opt.seed = 11;
  auto a = initialize_hyperparams(data, u, z, lowfi, opt);
  auto b = initialize_hyperparams(data, u, z, lowfi, opt);
  EXPECT_EQ(a.hyper.alpha_u, b.hyper.alpha_u);
  EXPECT_EQ(a.hyper.alpha_z, b.hyper.alpha_z);
  EXPECT_EQ(a.hyper.beta_u, b.hyper.beta_u);
  EXPECT_EQ(a.hyper.beta_z, b.hyper.beta_z);
  EXPECT_EQ(a.hyper.alpha_d, b.hyper.alpha_d);
  EXPECT_NO_THROW(a.hyper.validate());
  EXPECT_DOUBLE_EQ(a.hyper.alpha_d, init_noise(data.c_delta));
  EllipticCovariance cu(u.mass, u.stiffness, a.hyper.beta_u);
  EXPECT_DOUBLE_EQ(a.hyper.alpha_u, init_alpha_u(data.d[0], u, cu));
}
