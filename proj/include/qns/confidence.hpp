#pragma once

// Asymptotic covariance of M-estimators, Sigma = A^-1 B A^-1 with
// A = J^T diag(psi') J (+ sum_a psi_a d2z_a) and B = J^T diag(psi^2) J.

#include "qns/least_squares.hpp"
#include "qns/loss.hpp"
#include "qns/qcore.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qns {

inline constexpr double kMaxCovarianceCondition = 1e12;

class NonIdentifiable : public Error {
 public:
  NonIdentifiable(const std::string& what, Eigen::VectorXd direction)
      : Error(what), direction_(std::move(direction)) {}
  const Eigen::VectorXd& direction() const { return direction_; }

 private:
  Eigen::VectorXd direction_;
};

struct Interval {
  double low;
  double high;
};

struct CovarianceReport {
  Eigen::MatrixXd sigma_theta;
  std::vector<Interval> intervals;  ///< filled by confidence_intervals or with_intervals
  bool used_second_order = false;
  double condition = 0.0;  ///< estimated condition number of the equilibrated A
};

/// Second derivatives of z: element k is the n x p matrix d/dtheta_k (dz/dtheta).
using ResidualCurvature = std::vector<Eigen::MatrixXd>;

/// Throws NonIdentifiable when A is singular or its condition number exceeds
/// kMaxCovarianceCondition. `parameter_names`, when given, label the null direction.
CovarianceReport mestimator_covariance(const Eigen::MatrixXd& jacobian, const Eigen::VectorXd& z,
                                       const LossFunction& loss, bool second_order,
                                       const ResidualCurvature* curvature = nullptr,
                                       std::span<const std::string_view> parameter_names = {});

/// Symmetric normal-quantile intervals theta_l +- q sqrt(Sigma_ll).
std::vector<Interval> confidence_intervals(const Eigen::VectorXd& theta_hat,
                                           const CovarianceReport& report, double level = 0.95);

/// Phi^-1((1 + level) / 2).
double normal_quantile_two_sided(double level);

/// Central differences of the finite-difference Jacobian with step 10x `steps`.
ResidualCurvature residual_curvature(const ResidualFunction& f, const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& steps, const Eigen::VectorXd& upper,
                                     int workers);

}  // namespace qns
