#include "qns/estimation.hpp"
#include "qns/presets.hpp"
#include "qns/simulations.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace qns;

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

DataModel reduced_model() {
  DataModel m;
  m.kind = "reduced";
  m.noise = presets::spectroscopy_noise();
  m.rates = presets::t1_rates();
  return m;
}

ObservationSet reduced_data(double omega, double delta_omega, std::int64_t shots, std::uint64_t seed,
                            bool noiseless) {
  return generate_observations(reduced_model(), omega, delta_omega, table_plan(shots, seed),
                               noiseless, 1);
}

Eigen::VectorXd truth(double omega, double delta_omega) {
  return pack(SpectrumVector::from_model(presets::spectroscopy_noise(), omega, delta_omega));
}

}  // namespace

TEST(Loss, HuberExamples) {
  const LossFunction h = LossFunction::huber(1.0);
  LossValue v = h.eval(0.5);
  EXPECT_DOUBLE_EQ(v.value, 0.125);
  EXPECT_DOUBLE_EQ(v.psi, 0.5);
  EXPECT_DOUBLE_EQ(v.second, 1.0);
  v = h.eval(2.0);
  EXPECT_DOUBLE_EQ(v.value, 1.5);
  EXPECT_DOUBLE_EQ(v.psi, 1.0);
  EXPECT_DOUBLE_EQ(v.second, 0.0);
  v = h.eval(-2.0);
  EXPECT_DOUBLE_EQ(v.value, 1.5);
  EXPECT_DOUBLE_EQ(v.psi, -1.0);
}

TEST(Loss, QuadraticExamples) {
  const LossFunction q = LossFunction::quadratic();
  for (double z : {-3.0, 0.0, 0.7, 10.0}) {
    const LossValue v = q.eval(z);
    EXPECT_DOUBLE_EQ(v.value, 0.5 * z * z);
    EXPECT_DOUBLE_EQ(v.psi, z);
    EXPECT_DOUBLE_EQ(v.second, 1.0);
  }
}

TEST(LossProperty, ContinuityEvennessAndWeights) {
  for (double d : {0.5, 1.0, 2.5}) {
    const LossFunction h = LossFunction::huber(d);
    const double eps = 1e-15;
    for (double edge : {d, -d}) {
      EXPECT_NEAR(h.eval(edge - eps).value, h.eval(edge + eps).value, 1e-14);
      EXPECT_NEAR(h.eval(edge - eps).psi, h.eval(edge + eps).psi, 1e-14);
    }
    EXPECT_EQ(h.eval(0.0).value, 0.0);
    for (double z : {0.1, 0.9, 3.0, 17.0}) {
      EXPECT_EQ(h.eval(z).value, h.eval(-z).value);
      EXPECT_NEAR(h.weight(z), h.eval(z).psi / z, 1e-15);
    }
    EXPECT_EQ(h.weight(0.0), 1.0);
  }
}

TEST(Loss, ParseNames) {
  EXPECT_EQ(LossFunction::parse("huber", 2.0).kind, LossFunction::Kind::Huber);
  EXPECT_EQ(LossFunction::parse("huber", 2.0).delta0, 2.0);
  EXPECT_EQ(LossFunction::parse("quadratic").kind, LossFunction::Kind::Quadratic);
  EXPECT_THROW(LossFunction::parse("cauchy"), Error);
  EXPECT_THROW(LossFunction::huber(0.0), Error);
}

TEST(LeastSquares, LinearProblemMatchesNormalEquations) {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> n(0.0, 1.0);
  const Index rows = 40, cols = 3;
  Eigen::MatrixXd x(rows, cols);
  Eigen::VectorXd y(rows);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) x(i, j) = n(gen);
    y(i) = 1.5 * x(i, 0) - 2.0 * x(i, 1) + 0.3 * x(i, 2) + 0.1 * n(gen);
  }
  const ResidualFunction f = [&](const Eigen::VectorXd& th) -> Eigen::VectorXd { return y - x * th; };
  LeastSquaresOptions opt;
  const LeastSquaresResult r = robust_least_squares(f, Eigen::VectorXd::Zero(cols), LossFunction::quadratic(), opt);
  const Eigen::VectorXd exact = (x.transpose() * x).ldlt().solve(x.transpose() * y);
  EXPECT_TRUE(r.converged) << r.status;
  EXPECT_LT((r.x - exact).norm(), 1e-6 * exact.norm());
}

TEST(LeastSquares, ActiveBoundIsRespected) {
  // Minimizer of (x - 3)^2 + (y + 1)^2 on x <= 2, y >= 0 is (2, 0).
  const ResidualFunction f = [](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return Eigen::Vector2d(v(0) - 3.0, v(1) + 1.0);
  };
  LeastSquaresOptions opt;
  opt.lower = Eigen::Vector2d(-10.0, 0.0);
  opt.upper = Eigen::Vector2d(2.0, 10.0);
  const LeastSquaresResult r = robust_least_squares(f, Eigen::Vector2d(0.0, 5.0), LossFunction::quadratic(), opt);
  EXPECT_NEAR(r.x(0), 2.0, 1e-8);
  EXPECT_NEAR(r.x(1), 0.0, 1e-8);
  EXPECT_TRUE(r.converged) << r.status;
  EXPECT_LT(r.projected_gradient, opt.grad_tol * 10);
}

TEST(LeastSquares, HuberDownweightsOutlier) {
  // Location estimate: the Huber fit stays near the bulk, the mean does not.
  Eigen::VectorXd y(11);
  y << 0.1, -0.2, 0.05, 0.0, 0.15, -0.1, 0.2, -0.05, 0.1, -0.15, 50.0;
  const ResidualFunction f = [&](const Eigen::VectorXd& m) -> Eigen::VectorXd {
    return (y.array() - m(0)).matrix();
  };
  LeastSquaresOptions opt;
  opt.cost_tol = 1e-15;
  const auto q = robust_least_squares(f, Eigen::VectorXd::Zero(1), LossFunction::quadratic(), opt);
  const auto h = robust_least_squares(f, Eigen::VectorXd::Zero(1), LossFunction::huber(0.2), opt);
  EXPECT_NEAR(q.x(0), y.mean(), 1e-8);
  EXPECT_LT(std::abs(h.x(0)), 0.1);
  // First-order condition of the Huber objective.
  double g = 0.0;
  for (Index i = 0; i < y.size(); ++i) g += LossFunction::huber(0.2).eval(y(i) - h.x(0)).psi;
  EXPECT_LT(std::abs(g), 1e-6);
}

TEST(Residuals, NoiselessDataGivesZero) {
  const double omega = kTwoPi * 1.9e6, dw = kTwoPi * 2e3;
  const ObservationSet data = reduced_data(omega, dw, 10000, 1, true);
  const Eigen::VectorXd z = residuals(truth(omega, dw), data, presets::t1_rates());
  ASSERT_EQ(z.size(), 1144);
  EXPECT_LT(z.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Residuals, ShiftingOneMeanShiftsOneResidual) {
  const double omega = kTwoPi * 1.9e6;
  ObservationSet data = reduced_data(omega, 0.0, 1000, 3, false);
  const Eigen::VectorXd theta = truth(omega, 0.0);
  const Eigen::VectorXd z0 = residuals(theta, data, presets::t1_rates());
  data.records[17].mean += data.records[17].std;
  const Eigen::VectorXd z1 = residuals(theta, data, presets::t1_rates());
  Eigen::VectorXd expected = z0;
  expected(17) += 1.0;
  EXPECT_LT((z1 - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Residuals, ObservableWeightsScaleResiduals) {
  const double omega = kTwoPi * 1.9e6;
  const ObservationSet data = reduced_data(omega, 0.0, 1000, 3, false);
  ReducedModelEvaluator eval(data, presets::t1_rates());
  const Eigen::VectorXd theta = truth(omega, 0.0);
  const Eigen::VectorXd z0 = eval.residuals(theta);
  eval.set_observable_weights({{"Kzz", 0.25}});
  const Eigen::VectorXd z1 = eval.residuals(theta);
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    const double w = data.records[i].observable.label() == "Kzz" ? 0.25 : 1.0;
    EXPECT_DOUBLE_EQ(z1(static_cast<Index>(i)), w * z0(static_cast<Index>(i)));
  }
}

TEST(Residuals, DispersionAtTruthWithFiniteShots) {
  const double omega = kTwoPi * 1.976e6;
  for (std::uint64_t seed : {1, 2, 3}) {
    const ObservationSet data = reduced_data(omega, 0.0, 10000, seed, false);
    const Eigen::VectorXd z = residuals(truth(omega, 0.0), data, presets::t1_rates());
    const double mean = z.mean();
    const double sd = std::sqrt((z.array() - mean).square().sum() / static_cast<double>(z.size() - 1));
    EXPECT_GE(sd, 0.8);
    EXPECT_LE(sd, 1.3);
  }
}

TEST(FitSpectrum, NoiselessRoundTripFromUniformGuess) {
  const double omega = kTwoPi * 1.92e6, dw = kTwoPi * 3e3;
  const ObservationSet data = reduced_data(omega, dw, 10000, 1, true);
  const FitConfig config = FitConfig::defaults();
  const FitResult r = fit_spectrum(data, config, LossFunction::huber(1.0), presets::t1_rates());
  EXPECT_TRUE(r.converged) << r.status;
  const Eigen::VectorXd got = pack(r.theta_hat), want = truth(omega, dw);
  for (Index k = 0; k < 8; ++k)
    if (std::abs(want(k)) > 1e3) {
      EXPECT_NEAR(got(k), want(k), 1e-3 * std::abs(want(k))) << k;
    }
  EXPECT_NEAR(got(8), dw, kTwoPi * 100.0);
}

TEST(FitSpectrum, FiniteShotsAtPeak) {
  const ShotNoiseParams p = presets::spectroscopy_noise();
  const double omega = std::abs(p.delta_c);
  const ObservationSet data = reduced_data(omega, 0.0, 10000, 5, false);
  const FitResult r = fit_spectrum(data, FitConfig::defaults(), LossFunction::huber(1.0), presets::t1_rates());
  const SpectrumVector want = SpectrumVector::from_model(p, omega);
  // The noise peak sits at -Omega for delta_c > 0.
  EXPECT_NEAR(r.theta_hat.s11_minus, want.s11_minus, 0.10 * want.s11_minus);
  EXPECT_NEAR(r.theta_hat.s22_minus, want.s22_minus, 0.10 * want.s22_minus);
  EXPECT_NEAR(r.theta_hat.re_s12_minus, want.re_s12_minus, 0.10 * want.re_s12_minus);
  EXPECT_LT(std::abs(r.theta_hat.im_s12_minus), 3e3);
  for (double s : {r.theta_hat.s11_plus, r.theta_hat.s22_plus, r.theta_hat.s11_minus, r.theta_hat.s22_minus})
    EXPECT_GE(s, 0.0);
}

TEST(FitSpectrum, DeterministicAcrossRunsAndWorkers) {
  const double omega = kTwoPi * 2.0e6;
  const ObservationSet data = reduced_data(omega, 0.0, 2000, 9, false);
  FitConfig config = FitConfig::defaults();
  const FitResult a = fit_spectrum(data, config, LossFunction::huber(1.0), presets::t1_rates());
  const FitResult b = fit_spectrum(data, config, LossFunction::huber(1.0), presets::t1_rates());
  config.workers = 3;
  const FitResult c = fit_spectrum(data, config, LossFunction::huber(1.0), presets::t1_rates());
  EXPECT_EQ(pack(a.theta_hat), pack(b.theta_hat));
  EXPECT_EQ(pack(a.theta_hat), pack(c.theta_hat));
  EXPECT_EQ(a.final_cost, c.final_cost);
  EXPECT_EQ(a.iterations, c.iterations);
  EXPECT_EQ(a.jacobian, c.jacobian);
}

TEST(FitSpectrum, IterationLimitReportsNotConverged) {
  const double omega = kTwoPi * 2.0e6;
  const ObservationSet data = reduced_data(omega, 0.0, 2000, 9, false);
  FitConfig config = FitConfig::defaults();
  config.max_iterations = 1;
  FitResult r;
  EXPECT_NO_THROW(r = fit_spectrum(data, config, LossFunction::huber(1.0), presets::t1_rates()));
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.status, "iteration limit");
}

TEST(FitSpectrum, RejectsInvalidConfig) {
  const ObservationSet data = reduced_data(kTwoPi * 2.0e6, 0.0, 100, 1, true);
  FitConfig config = FitConfig::defaults();
  config.lower(0) = -1.0;
  EXPECT_THROW(fit_spectrum(data, config, LossFunction::quadratic(), {}), Error);
  ObservationSet empty = data;
  empty.records.clear();
  EXPECT_THROW(fit_spectrum(empty, FitConfig::defaults(), LossFunction::quadratic(), {}), Error);
}

TEST(FitSpectrumProperty, QuadraticArgminInvariantUnderStdScaling) {
  const double omega = kTwoPi * 2.05e6;
  const ObservationSet data = reduced_data(omega, 0.0, 5000, 4, false);
  ObservationSet scaled = data;
  for (auto& r : scaled.records) r.std *= 3.0;
  FitConfig config = FitConfig::defaults();
  config.cost_tol = 1e-14;
  config.grad_tol = 1e-12;
  const FitResult a = fit_spectrum(data, config, LossFunction::quadratic(), presets::t1_rates());
  const FitResult b = fit_spectrum(scaled, config, LossFunction::quadratic(), presets::t1_rates());
  const Eigen::VectorXd ta = pack(a.theta_hat), tb = pack(b.theta_hat);
  for (Index k = 0; k < ta.size(); ++k)
    EXPECT_NEAR(ta(k), tb(k), 1e-6 * std::max(std::abs(ta(k)), 1e3)) << k;
  EXPECT_NEAR(b.final_cost, a.final_cost / 9.0, 1e-9 * a.final_cost);
}

TEST(FitSpectrumProperty, SelfSpectraStayNonNegative) {
  // S(+Omega) is tiny here, so finite-shot noise pushes the fit against the bound.
  const double omega = kTwoPi * 1.95e6;
  for (std::uint64_t seed : {11, 12}) {
    const ObservationSet data = reduced_data(omega, 0.0, 500, seed, false);
    const FitResult r = fit_spectrum(data, FitConfig::defaults(), LossFunction::huber(1.0), presets::t1_rates());
    for (double s : {r.theta_hat.s11_plus, r.theta_hat.s22_plus, r.theta_hat.s11_minus, r.theta_hat.s22_minus})
      EXPECT_GE(s, 0.0);
  }
}

TEST(FitSpectrumProperty, GradientMatchesFiniteDifferenceOfCost) {
  const double omega = kTwoPi * 1.98e6;
  const ObservationSet data = reduced_data(omega, 0.0, 2000, 8, false);
  const ReducedModelEvaluator eval(data, presets::t1_rates());
  const ResidualFunction f = [&](const Eigen::VectorXd& th) { return eval.residuals(th); };
  const LossFunction loss = LossFunction::huber(1.0);
  const FitConfig config = FitConfig::defaults();
  const LeastSquaresOptions opt = config.solver_options();
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  const Eigen::VectorXd center = truth(omega, kTwoPi * 1e3);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd x = center;
    for (Index k = 0; k < x.size(); ++k) x(k) *= u(gen);
    x(3) = x(7) = 2e3 * (u(gen) - 1.0);
    const Eigen::VectorXd z = f(x);
    const Eigen::VectorXd steps = finite_difference_steps(x, opt.relative_step, opt.step_floor);
    const Eigen::MatrixXd jac = finite_difference_jacobian(f, x, z, steps, opt.upper, 1);
    const Eigen::VectorXd g = loss_gradient(loss, z, jac);
    for (Index k = 0; k < x.size(); ++k) {
      const double h = 1e-4 * std::max(std::abs(x(k)), 1e3);
      Eigen::VectorXd xp = x, xm = x;
      xp(k) += h;
      xm(k) -= h;
      const double fd = (total_loss(loss, f(xp)) - total_loss(loss, f(xm))) / (2.0 * h);
      EXPECT_NEAR(g(k), fd, 1e-4 * g.cwiseAbs().maxCoeff()) << "trial " << trial << " k " << k;
    }
  }
}
