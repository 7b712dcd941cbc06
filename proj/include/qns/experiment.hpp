#pragma once

// Synthetic finite-shot measurement campaigns and the on-disk dataset format.

#include "qns/dynamics.hpp"
#include "qns/rng.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace qns {

inline constexpr double kStdFloor = 1e-3;
inline constexpr int kBootstrapResamples = 200;

struct MeasurementPlan {
  std::vector<InitialState> initial_states;
  std::vector<double> times;  ///< seconds
  std::vector<TwoQubitObservable> observables;
  std::int64_t shots = 10000;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t record_count() const {
    return initial_states.size() * times.size() * observables.size();
  }
};

/// Default spin-locking evolution times: 1..11 us in steps of
/// 2, 16..71 us in steps of 5, 81..151 us in steps of 10.
std::vector<double> table_times();

/// Four dressed product states, 26 times and 11 observables.
MeasurementPlan table_plan(std::int64_t shots, std::uint64_t seed);

struct Record {
  InitialState state;
  double time = 0.0;
  TwoQubitObservable observable;
  double mean = 0.0;
  double std = kStdFloor;
  std::int64_t shots = 0;

  bool operator==(const Record&) const = default;
};

struct Contamination {
  double p = 0.0;
  std::uint64_t seed = 0;
  std::vector<bool> mask;  ///< one flag per record, true when replaced

  std::string digest() const;
  bool operator==(const Contamination&) const = default;
};

struct ObservationSet {
  std::vector<Record> records;
  double omega_rabi = 0.0;  ///< rad/s
  std::uint64_t seed = 0;
  std::string model;          ///< "reduced", "optical" or "external"
  nlohmann::json params = nlohmann::json::object();
  std::optional<Contamination> contamination;

  bool operator==(const ObservationSet&) const = default;
};

struct Estimate {
  double mean;
  double std;
};

/// Probabilities of the four outcomes (++, +-, -+, --) when measuring
/// tau_a on qubit 1 and tau_b on qubit 2. Throws when any probability is
/// below -1e-9; smaller negative values are clipped and renormalized.
std::array<double, 4> joint_distribution(const Operator& rho_qubits, Pauli a, Pauli b,
                                         std::string_view label = {});

/// Estimates for each observable from M shots of a 4x4 dressed-basis state.
/// Observables sharing a measurement setting share shots: tz1 and tz2 come
/// from the (z, z) setting, K_ab from (a, b). Single-qubit stds are
/// sqrt(var/M); covariance stds come from a multinomial bootstrap. All stds
/// are floored at kStdFloor. `stream` keys the random substream of the cell.
std::vector<Estimate> sample_observables(const Operator& rho_qubits,
                                         std::span<const TwoQubitObservable> observables,
                                         std::int64_t shots, std::uint64_t seed,
                                         std::uint64_t stream);

/// Samples every record of `plan` from exact states. Record order is state,
/// then time, then observable.
ObservationSet sample_dataset(const StateGrid& states, const MeasurementPlan& plan,
                              double omega_rabi, int workers = 1);

/// Noiseless dataset: means are exact model values and stds are kStdFloor.
ObservationSet exact_dataset(const StateGrid& states, const MeasurementPlan& plan,
                             double omega_rabi);

/// Replaces each mean by Uniform(-1, 1) with probability p.
ObservationSet contaminate(const ObservationSet& obs, double p, std::uint64_t seed);

class DatasetError : public Error {
 public:
  DatasetError(const std::string& path, std::size_t line, const std::string& what);
};

/// Writes `<path>` (CSV) and its sidecar `<path without extension>.json`.
/// Lines starting with '#' in the CSV are comments; `comment`, when given,
/// is written as the first line.
void write_dataset(const ObservationSet& obs, const std::filesystem::path& path,
                   const std::string& comment = {});
ObservationSet read_dataset(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

}  // namespace qns
