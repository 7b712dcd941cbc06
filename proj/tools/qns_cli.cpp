// Command-line front end: qns <command> [--config FILE] [--out DIR] [--seed N] [--workers N]

#include "qns/config.hpp"
#include "qns/pipeline.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_overrides(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw qns::ConfigError(fmt::format("cannot open config file {}", path));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw qns::ConfigError(fmt::format("{}: {}", path, e.what()));
  }
}

json dataset_paths(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec))
    throw qns::IoError(fmt::format("{}: not a dataset directory", dir.string()));
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".csv")
      paths.push_back(entry.path().string());
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw qns::IoError(fmt::format("{}: no .csv datasets", dir.string()));
  return paths;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-qubit photon shot-noise spectroscopy: simulation and spectrum reconstruction"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  int workers = 0;
  app.add_option("--config", config_path, "JSON configuration (defaults apply to missing fields)")
      ->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--seed", seed, "Master seed (overrides the config)");
  app.add_option("--workers", workers, "Worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);

  std::string data_dir;
  bool restarts = false;
  bool quiet = false;
  app.add_flag("--quiet", quiet, "Suppress progress lines");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate-ramsey", "Ramsey correlation C_zz(t, nbar) and single-qubit fringes"},
      {"simulate-spinlock", "Spin-locking K_zz(t, Omega_1) and tau_z curves"},
      {"generate-data", "Synthetic datasets, one per Rabi frequency"},
      {"reconstruct", "Fit stored datasets across the frequency sweep"},
      {"sweep", "Generate (or load) data and reconstruct the spectra"},
      {"compare-loss", "Huber and quadratic reconstructions on identical data"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    if (name == "reconstruct" || name == "sweep" || name == "compare-loss") {
      sub->add_option("--data", data_dir, "Directory of datasets (sets data.source to files)");
      sub->add_flag("--restarts", restarts, "Add 5 jittered restarts per fit (diagnostics)");
    }
  }
  std::string provenance_file;
  CLI::App* replay_cmd = app.add_subcommand("replay", "Re-run a command from its provenance.json");
  replay_cmd->add_option("provenance", provenance_file, "provenance.json of an earlier run")
      ->required();
  app.add_subcommand("default-config", "Print the default configuration document");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (command == "default-config") {
      std::cout << qns::default_config_document().dump(2) << '\n';
      return 0;
    }
    if (command == "replay") {
      qns::replay(provenance_file, out_dir, workers, !quiet);
      return 0;
    }
    json overrides = read_overrides(config_path);
    if (!overrides.is_object()) throw qns::ConfigError("config must be a JSON object");
    if (seed) overrides["seed"] = *seed;
    if (!data_dir.empty()) {
      overrides["data"]["source"] = "files";
      overrides["data"]["paths"] = dataset_paths(data_dir);
    }
    if (restarts) overrides["fit"]["restarts"] = 5;
    const qns::AppConfig config = qns::parse_config(overrides);
    qns::run_command(command, config, out_dir, workers, !quiet);
    return 0;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return qns::exit_code_for(e);
  }
}
