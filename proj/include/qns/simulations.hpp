#pragma once

// Model runs behind the CLI: synthetic datasets at one Rabi frequency and the
// Ramsey and spin-locking scans.

#include "qns/config.hpp"
#include "qns/dynamics.hpp"
#include "qns/experiment.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace qns {

struct DataModel {
  std::string kind = "reduced";  ///< "reduced" or "optical"
  ShotNoiseParams noise;
  QubitRates rates;
  Index fock_dim = 8;  ///< optical only
};

/// Exact qubit states for every initial state and time of `plan`.
StateGrid model_state_grid(const DataModel& model, double omega_rabi, double delta_omega,
                           const MeasurementPlan& plan);

/// A dataset from `model`, sampled with plan.shots (or exact when `noiseless`).
/// The sidecar parameters record the model and the true spectrum vector.
ObservationSet generate_observations(const DataModel& model, double omega_rabi, double delta_omega,
                                     const MeasurementPlan& plan, bool noiseless, int workers);

/// Row k holds the curves of spinlock.omega1_offsets[k]; columns follow spinlock.times.
struct SpinlockScan {
  std::vector<double> omega1;  ///< rad/s
  double omega2 = 0.0;
  std::vector<double> times;
  Eigen::MatrixXd kzz, tz1, tz2;
  /// Sampled estimates when shots > 0; empty otherwise.
  Eigen::MatrixXd kzz_mean, kzz_std, tz1_mean, tz1_std, tz2_mean, tz2_std;
};

SpinlockScan spinlock_scan(const SpinlockSettings& settings, std::uint64_t seed, int workers);

struct RamseyScan {
  std::vector<double> nbar;
  std::vector<RamseyCurves> curves;  ///< one per nbar value
};

RamseyScan ramsey_scan(const RamseySettings& settings, int workers);

}  // namespace qns
