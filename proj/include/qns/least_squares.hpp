#pragma once

// Bound-constrained robust nonlinear least squares: minimizes sum_a loss(z_a(x))
// with iteratively reweighted Gauss-Newton steps, Levenberg-Marquardt damping
// and an active-set treatment of the box constraints.

#include "qns/loss.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>

namespace qns {

using ResidualFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LeastSquaresOptions {
  int max_iterations = 200;
  double cost_tol = 1e-8;   ///< relative cost decrease of an accepted step
  double grad_tol = 1e-8;   ///< scaled projected-gradient infinity norm
  double step_tol = 1e-12;  ///< relative step length
  double relative_step = 1e-6;
  Eigen::VectorXd step_floor;  ///< absolute finite-difference step floors (empty = 1e-8)
  Eigen::VectorXd lower;       ///< empty = unbounded
  Eigen::VectorXd upper;
  int workers = 1;  ///< threads for Jacobian columns
};

struct LeastSquaresResult {
  Eigen::VectorXd x;
  double cost = 0.0;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd jacobian;
  Eigen::VectorXd step;  ///< finite-difference step per parameter at x
  bool converged = false;
  int iterations = 0;
  int evaluations = 0;
  int step_fallbacks = 0;  ///< gradient steps taken after a failed normal-equation solve
  double projected_gradient = 0.0;
  std::string status;
};

/// Central differences (backward at an upper bound), step max(rel |x|, floor).
Eigen::MatrixXd finite_difference_jacobian(const ResidualFunction& f, const Eigen::VectorXd& x,
                                           const Eigen::VectorXd& f0, const Eigen::VectorXd& steps,
                                           const Eigen::VectorXd& upper, int workers);

Eigen::VectorXd finite_difference_steps(const Eigen::VectorXd& x, double relative,
                                        const Eigen::VectorXd& floor);

double total_loss(const LossFunction& loss, const Eigen::VectorXd& z);

/// Gradient sum_a psi(z_a) dz_a/dx.
Eigen::VectorXd loss_gradient(const LossFunction& loss, const Eigen::VectorXd& z,
                              const Eigen::MatrixXd& jacobian);

LeastSquaresResult robust_least_squares(const ResidualFunction& f, const Eigen::VectorXd& x0,
                                        const LossFunction& loss,
                                        const LeastSquaresOptions& options);

}  // namespace qns
