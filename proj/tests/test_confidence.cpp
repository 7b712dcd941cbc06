#include "qns/confidence.hpp"
#include "qns/estimation.hpp"
#include "qns/presets.hpp"
#include "qns/simulations.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace qns;

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

struct PeakFit {
  ObservationSet data;
  FitResult fit;
};

PeakFit fit_at_peak(std::int64_t shots, std::uint64_t seed) {
  DataModel model;
  model.noise = presets::spectroscopy_noise();
  model.rates = presets::t1_rates();
  const double omega = std::abs(model.noise.delta_c);
  PeakFit out{generate_observations(model, omega, 0.0, table_plan(shots, seed), false, 1), {}};
  out.fit = fit_spectrum(out.data, FitConfig::defaults(), LossFunction::huber(1.0), model.rates);
  return out;
}

double median_width(const CovarianceReport& r) {
  std::vector<double> w;
  for (Index k = 0; k < r.sigma_theta.rows(); ++k) w.push_back(std::sqrt(r.sigma_theta(k, k)));
  std::nth_element(w.begin(), w.begin() + static_cast<long>(w.size() / 2), w.end());
  return w[w.size() / 2];
}

}  // namespace

TEST(Quantile, TwoSidedNormal) {
  EXPECT_NEAR(normal_quantile_two_sided(0.95), 1.959964, 1e-6);
  EXPECT_NEAR(normal_quantile_two_sided(0.6826894921), 1.0, 1e-8);
  EXPECT_THROW(normal_quantile_two_sided(1.0), Error);
  EXPECT_THROW(normal_quantile_two_sided(0.0), Error);
}

TEST(ConfidenceIntervals, ZeroAndUnitCovariance) {
  const Eigen::Vector3d theta(1.0, -2.0, 5.0);
  CovarianceReport r;
  r.sigma_theta = Eigen::Matrix3d::Zero();
  for (const Interval& i : confidence_intervals(theta, r)) EXPECT_EQ(i.low, i.high);
  r.sigma_theta = Eigen::Matrix3d::Identity();
  const auto iv = confidence_intervals(theta, r, 0.95);
  for (Index k = 0; k < 3; ++k) {
    EXPECT_NEAR(iv[static_cast<std::size_t>(k)].low, theta(k) - 1.959964, 1e-6);
    EXPECT_NEAR(iv[static_cast<std::size_t>(k)].high, theta(k) + 1.959964, 1e-6);
  }
}

TEST(Sandwich, LinearRegressionMatchesClassicalCovariance) {
  std::mt19937_64 gen(42);
  std::normal_distribution<double> n(0.0, 1.0);
  const Index rows = 200, cols = 3;
  Eigen::MatrixXd x(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) x(i, j) = n(gen) + (j == 0 ? 1.0 : 0.0);
  const Eigen::Vector3d beta(0.5, -1.0, 2.0);
  const Eigen::MatrixXd classical = (x.transpose() * x).inverse();
  Eigen::VectorXd mean_diag = Eigen::VectorXd::Zero(cols);
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep) {
    Eigen::VectorXd y = x * beta;
    for (Index i = 0; i < rows; ++i) y(i) += n(gen);
    const Eigen::VectorXd bhat = (x.transpose() * x).ldlt().solve(x.transpose() * y);
    const Eigen::VectorXd z = y - x * bhat;  // sigma = 1
    const CovarianceReport r = mestimator_covariance(-x, z, LossFunction::quadratic(), false);
    mean_diag += r.sigma_theta.diagonal() / reps;
  }
  for (Index k = 0; k < cols; ++k)
    EXPECT_NEAR(mean_diag(k), classical(k, k), 0.15 * classical(k, k)) << k;
}

TEST(Sandwich, HuberEqualsQuadraticInsideThreshold) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd j(30, 4);
  Eigen::VectorXd z(30);
  for (Index i = 0; i < 30; ++i) {
    for (Index k = 0; k < 4; ++k) j(i, k) = u(gen);
    z(i) = 0.99 * u(gen);
  }
  const auto a = mestimator_covariance(j, z, LossFunction::quadratic(), false);
  const auto b = mestimator_covariance(j, z, LossFunction::huber(1.0), false);
  EXPECT_EQ(a.sigma_theta, b.sigma_theta);
}

TEST(SandwichProperty, SymmetricWithNonNegativeDiagonal) {
  std::mt19937_64 gen(9);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd j(50, 5);
    Eigen::VectorXd z(50);
    for (Index i = 0; i < 50; ++i) {
      for (Index k = 0; k < 5; ++k) j(i, k) = n(gen) * std::pow(10.0, k - 2);
      z(i) = 2.0 * n(gen);
    }
    const auto r = mestimator_covariance(j, z, LossFunction::huber(1.0), false);
    EXPECT_LT((r.sigma_theta - r.sigma_theta.transpose()).cwiseAbs().maxCoeff(),
              1e-10 * r.sigma_theta.cwiseAbs().maxCoeff());
    EXPECT_GE(r.sigma_theta.diagonal().minCoeff(), 0.0);
  }
}

TEST(Sandwich, NonIdentifiableNamesNullDirection) {
  Eigen::MatrixXd j(10, 3);
  for (Index i = 0; i < 10; ++i) {
    j(i, 0) = 1.0 + i;
    j(i, 1) = 1.0 + i;  // indistinguishable from column 0
    j(i, 2) = std::sin(static_cast<double>(i));
  }
  const Eigen::VectorXd z = Eigen::VectorXd::Constant(10, 0.3);
  const std::array<std::string_view, 3> names{"a", "b", "c"};
  try {
    mestimator_covariance(j, z, LossFunction::quadratic(), false, nullptr, names);
    FAIL() << "expected NonIdentifiable";
  } catch (const NonIdentifiable& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("non-identifiable"), std::string::npos);
    EXPECT_NE(what.find("*a"), std::string::npos) << what;
    EXPECT_NE(what.find("*b"), std::string::npos) << what;
    EXPECT_NEAR(std::abs(e.direction()(0)), std::sqrt(0.5), 1e-6);
    EXPECT_NEAR(e.direction()(0), -e.direction()(1), 1e-6);
  }
}

TEST(Sandwich, SecondOrderNeedsCurvature) {
  const Eigen::MatrixXd j = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_THROW(mestimator_covariance(j, Eigen::Vector3d::Zero(), LossFunction::quadratic(), true), Error);
}

TEST(SandwichFit, SecondOrderTermNegligibleAtPeak) {
  const PeakFit pf = fit_at_peak(10000, 3);
  const ReducedModelEvaluator eval(pf.data, presets::t1_rates());
  const ResidualFunction f = [&](const Eigen::VectorXd& th) { return eval.residuals(th); };
  const FitConfig config = FitConfig::defaults();
  const Eigen::VectorXd x = pack(pf.fit.theta_hat);
  const ResidualCurvature curvature = residual_curvature(f, x, pf.fit.fd_step, config.upper, 1);
  const LossFunction loss = LossFunction::huber(1.0);
  const auto first = mestimator_covariance(pf.fit.jacobian, pf.fit.residuals, loss, false);
  const auto second = mestimator_covariance(pf.fit.jacobian, pf.fit.residuals, loss, true, &curvature);
  EXPECT_TRUE(second.used_second_order);
  for (Index k = 0; k < x.size(); ++k) {
    const double a = first.sigma_theta(k, k), b = second.sigma_theta(k, k);
    EXPECT_LT(std::abs(a - b), 0.05 * a) << kSpectrumComponentNames[static_cast<std::size_t>(k)];
  }
}

TEST(SandwichFit, DoublingShotsShrinksIntervals) {
  const LossFunction loss = LossFunction::huber(1.0);
  const PeakFit small = fit_at_peak(5000, 21);
  const PeakFit large = fit_at_peak(10000, 22);
  const double ws = median_width(mestimator_covariance(small.fit.jacobian, small.fit.residuals, loss, false));
  const double wl = median_width(mestimator_covariance(large.fit.jacobian, large.fit.residuals, loss, false));
  EXPECT_GE(ws / wl, 1.25);
  EXPECT_LE(ws / wl, 1.6);
}
