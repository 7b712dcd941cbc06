#pragma once

// The JSON configuration shared by every CLI command. Frequencies are given
// in Hz at this boundary and converted to rad/s here; times are in seconds;
// decay rates are in 1/s. The worker count is not part of the document:
// results do not depend on it.

#include "qns/dynamics.hpp"
#include "qns/estimation.hpp"
#include "qns/experiment.hpp"
#include "qns/loss.hpp"
#include "qns/noise.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace qns {

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct ContaminationSettings {
  double p = 0.0;
  std::uint64_t seed = 0;  ///< 0 derives the seed from the master seed
};

struct DataSettings {
  std::string source = "reduced";  ///< "reduced", "optical" or "files"
  std::vector<std::filesystem::path> paths;  ///< datasets when source == "files"
  Index fock_dim = 8;
  bool noiseless = false;  ///< exact expectations with floored stds
  ContaminationSettings contamination;
};

struct SweepSettings {
  std::vector<double> rabi_frequencies;  ///< rad/s
  bool warm_start = true;
  double delta_omega = 0.0;  ///< true Omega_1 - Omega_2 of generated data, rad/s
  double confidence_level = 0.95;
  bool second_order = false;
};

struct RamseySettings {
  ShotNoiseParams noise;  ///< nbar is replaced by each grid value
  QubitRates rates;
  std::vector<double> nbar_values;
  std::vector<double> times;  ///< s
  double delta_q1 = 0.0;      ///< rad/s
  double delta_q2 = 0.0;
  Index fock_dim = 8;
};

struct SpinlockSettings {
  ShotNoiseParams noise;
  QubitRates rates;
  double omega2 = 0.0;                ///< rad/s
  std::vector<double> omega1_offsets;  ///< Omega_1 - Omega_2, rad/s
  std::vector<double> times;           ///< s
  InitialState initial_state{DressedLabel::MinusX, DressedLabel::MinusX};
  Index fock_dim = 8;
  std::int64_t shots = 0;  ///< 0 emits exact expectations only
};

struct AppConfig {
  ShotNoiseParams noise;
  QubitRates rates;      ///< rates of the data-generating model
  QubitRates fit_rates;  ///< rates assumed by the reduced model during fits
  MeasurementPlan plan;  ///< template; the seed is set per frequency
  DataSettings data;
  SweepSettings sweep;
  FitConfig fit;
  LossFunction loss;
  RamseySettings ramsey;
  SpinlockSettings spinlock;
  std::uint64_t seed = 1;

  /// The effective configuration after defaults, in the input schema.
  nlohmann::json document;
};

/// Configuration document with every field at its default value.
nlohmann::json default_config_document();

/// Merges `overrides` into the defaults and validates. Throws ConfigError.
AppConfig parse_config(const nlohmann::json& overrides);

/// Reads and parses a JSON file. Missing or unparsable files throw ConfigError.
AppConfig load_config(const std::filesystem::path& path);

/// FNV-1a digest of the canonical serialization, as 16 hex digits.
std::string config_digest(const nlohmann::json& document);

}  // namespace qns
