#pragma once

// M-estimation of the spectrum vector (and Rabi-frequency difference) at one
// Rabi frequency, by fitting the reduced master equation to an ObservationSet.

#include "qns/dynamics.hpp"
#include "qns/experiment.hpp"
#include "qns/least_squares.hpp"
#include "qns/loss.hpp"
#include "qns/noise.hpp"

#include <map>
#include <string>

namespace qns {

struct FitConfig {
  SpectrumVector initial_guess;
  Eigen::VectorXd lower;  ///< 9 entries
  Eigen::VectorXd upper;
  int max_iterations = 200;
  double cost_tol = 1e-8;
  double grad_tol = 1e-8;
  double relative_step = 1e-6;
  double spectral_step_floor = 10.0;                    ///< rad/s
  double delta_omega_step_floor = 2.0 * M_PI * 10.0;    ///< rad/s
  /// Multiplies the residuals of records with the given observable label.
  std::map<std::string, double> observable_weights;
  int workers = 1;
  /// Extra jittered starts (diagnostics); the best final cost wins.
  int restarts = 0;
  std::uint64_t restart_seed = 0;

  /// Uniform 1e3 rad/s guess, delta_omega = 0, s_jj >= 0, |delta_omega| <= 2 pi 200 kHz.
  static FitConfig defaults();
  void validate() const;
  LeastSquaresOptions solver_options() const;
};

struct FitResult {
  SpectrumVector theta_hat;
  double final_cost = 0.0;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd jacobian;
  Eigen::VectorXd fd_step;
  bool converged = false;
  int iterations = 0;
  int evaluations = 0;
  int step_fallbacks = 0;
  double projected_gradient = 0.0;
  std::string status;
  /// Final spectrum matrix fails positive semidefiniteness at +Omega or -Omega.
  bool non_physical = false;
};

/// Model predictions for the records of one dataset under the reduced ME.
/// Construction indexes the records once; evaluation is thread-safe.
class ReducedModelEvaluator {
 public:
  ReducedModelEvaluator(const ObservationSet& data, const QubitRates& rates);

  /// One model value per record, in record order.
  Eigen::VectorXd model_values(const Eigen::VectorXd& theta) const;
  /// z = weight * (mean - model) / std, in record order.
  Eigen::VectorXd residuals(const Eigen::VectorXd& theta) const;

  void set_observable_weights(const std::map<std::string, double>& weights);
  std::size_t size() const { return means_.size(); }
  double omega_rabi() const { return omega_rabi_; }

 private:
  QubitRates rates_;
  double omega_rabi_;
  std::vector<Eigen::VectorXcd> initial_states_;
  std::vector<double> times_;
  std::vector<TwoQubitObservable> observables_;
  std::vector<std::size_t> record_state_, record_time_, record_observable_;
  Eigen::VectorXd means_, inv_std_, weights_;
};

/// z_a = (mean_a - <O_a>_theta) / std_a for every record.
Eigen::VectorXd residuals(const Eigen::VectorXd& theta, const ObservationSet& data,
                          const QubitRates& rates);

FitResult fit_spectrum(const ObservationSet& data, const FitConfig& config,
                       const LossFunction& loss, const QubitRates& rates);

}  // namespace qns
