#pragma once

// Frequency sweeps and the CLI commands. Every command writes into one output
// directory; every CSV starts with a "# provenance" line and the directory
// holds provenance.json, from which the command can be replayed.

#include "qns/confidence.hpp"
#include "qns/config.hpp"
#include "qns/estimation.hpp"
#include "qns/experiment.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace qns {

inline constexpr const char* kVersion = "1.0.0";

class IoError : public Error {
 public:
  using Error::Error;
};

class AllFitsFailed : public Error {
 public:
  using Error::Error;
};

struct Provenance {
  std::string command;
  nlohmann::json config;  ///< effective configuration document
  std::string config_digest;
  std::uint64_t seed = 0;
  std::string version = kVersion;

  static Provenance make(const std::string& command, const AppConfig& config);
  /// "provenance command=... config_digest=... seed=... version=..." (CSVs prefix "# ").
  std::string comment_line() const;
  nlohmann::json to_json() const;
  static Provenance from_json(const nlohmann::json& j);
};

struct FrequencyOutcome {
  double omega_rabi = 0.0;  ///< rad/s
  ObservationSet data;
  std::optional<FitResult> fit;
  std::optional<CovarianceReport> covariance;
  std::optional<SpectrumVector> truth;
  Eigen::VectorXd model_values;  ///< reduced-model prediction per record at the fit
  std::string error;             ///< fit failure; empty on success
  std::string covariance_error;  ///< e.g. non-identifiable; empty when intervals exist
};

struct SweepResult {
  std::vector<FrequencyOutcome> frequencies;  ///< ascending Rabi frequency

  bool all_failed() const;
};

/// Per-frequency seed of the measurement plan.
std::uint64_t frequency_seed(std::uint64_t master, double omega_rabi);

/// One synthetic dataset per configured frequency, ascending, contamination applied.
std::vector<ObservationSet> generate_sweep_data(const AppConfig& config, int workers);

/// The datasets listed in config.data.paths, ascending in Rabi frequency.
/// Throws DatasetError for missing or malformed files.
std::vector<ObservationSet> load_sweep_data(const AppConfig& config);

/// Fits every dataset. Warm starts chain fits in ascending frequency; without
/// them the frequencies run in parallel. Per-frequency failures are recorded.
SweepResult run_sweep(const AppConfig& config, std::vector<ObservationSet> data,
                      const LossFunction& loss, int workers, bool progress = false);

/// spectra.csv (10^3 rad/s), truth.csv when the truth is known, and
/// fits/<frequency>.{csv,json} under `dir`.
void write_sweep(const SweepResult& result, const Provenance& provenance,
                 const std::filesystem::path& dir);

/// Commands: simulate-ramsey, simulate-spinlock, generate-data, reconstruct,
/// sweep, compare-loss. Throws ConfigError, DatasetError/IoError or
/// AllFitsFailed; writes provenance.json on success.
void run_command(const std::string& command, const AppConfig& config,
                 const std::filesystem::path& out_dir, int workers, bool progress = false);

/// Re-runs the command recorded in a provenance.json into `out_dir`.
void replay(const std::filesystem::path& provenance_file, const std::filesystem::path& out_dir,
            int workers, bool progress = false);

/// Exit code for an exception escaping run_command: 2 config, 3 all fits
/// failed, 4 I/O, 1 otherwise.
int exit_code_for(const std::exception& e);

}  // namespace qns
