#include "qns/pipeline.hpp"

#include "qns/parallel.hpp"
#include "qns/rng.hpp"
#include "qns/simulations.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

namespace qns {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 2.0 * M_PI;
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::string> kCommands{"simulate-ramsey", "simulate-spinlock", "generate-data",
                                         "reconstruct",     "sweep",             "compare-loss"};

std::string num(double v) { return fmt::format("{:.17g}", v); }

class CsvFile {
 public:
  CsvFile(const fs::path& path, const Provenance& prov, const std::string& header) : path_(path) {
    out_.open(path, std::ios::binary);
    if (!out_) throw IoError(fmt::format("{}: cannot open for writing", path.string()));
    out_ << "# " << prov.comment_line() << '\n' << header << '\n';
  }
  template <typename... Args>
  void row(const Args&... fields) {
    bool first = true;
    ((out_ << (first ? "" : ",") << fields, first = false), ...);
    out_ << '\n';
  }
  ~CsvFile() = default;
  void close() {
    out_.close();
    if (!out_) throw IoError(fmt::format("{}: write failed", path_.string()));
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("{}: cannot open for writing", path.string()));
  out << j.dump(2) << '\n';
  out.close();
  if (!out) throw IoError(fmt::format("{}: write failed", path.string()));
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("{}: {}", dir.string(), ec.message()));
}

std::string frequency_name(std::size_t index, double omega_rabi) {
  return fmt::format("{:02d}_omega_{:.0f}Hz", index, omega_rabi / kTwoPi);
}

std::optional<SpectrumVector> truth_from_params(const json& params) {
  if (!params.is_object() || !params.contains("truth_rad_s")) return std::nullopt;
  const json& t = params.at("truth_rad_s");
  Eigen::VectorXd v(SpectrumVector::kSize);
  for (std::size_t k = 0; k < SpectrumVector::kSize; ++k) {
    const std::string name(kSpectrumComponentNames[k]);
    if (!t.contains(name) || !t.at(name).is_number()) return std::nullopt;
    v(static_cast<Index>(k)) = t.at(name).get<double>();
  }
  return unpack(v);
}

void sort_by_frequency(std::vector<ObservationSet>& data) {
  std::stable_sort(data.begin(), data.end(), [](const ObservationSet& a, const ObservationSet& b) {
    return a.omega_rabi < b.omega_rabi;
  });
  for (std::size_t k = 1; k < data.size(); ++k)
    if (data[k].omega_rabi == data[k - 1].omega_rabi)
      throw ConfigError(fmt::format("two datasets share the Rabi frequency {} Hz",
                                    data[k].omega_rabi / kTwoPi));
}

Eigen::VectorXd clamp_to_bounds(Eigen::VectorXd x, const FitConfig& fit) {
  for (Index i = 0; i < x.size(); ++i) x(i) = std::clamp(x(i), fit.lower(i), fit.upper(i));
  return x;
}

void fit_frequency(FrequencyOutcome& o, const AppConfig& config, const LossFunction& loss,
                   const std::optional<Eigen::VectorXd>& guess, int workers) {
  try {
    FitConfig fc = config.fit;
    fc.workers = workers;
    fc.restart_seed = substream_key(config.seed, {0x5ea7ULL, std::bit_cast<std::uint64_t>(o.omega_rabi)});
    if (guess) fc.initial_guess = unpack(clamp_to_bounds(*guess, fc));
    o.fit = fit_spectrum(o.data, fc, loss, config.fit_rates);

    ReducedModelEvaluator evaluator(o.data, config.fit_rates);
    evaluator.set_observable_weights(fc.observable_weights);
    const Eigen::VectorXd x = pack(o.fit->theta_hat);
    o.model_values = evaluator.model_values(x);
    try {
      ResidualCurvature curvature;
      if (config.sweep.second_order) {
        const ResidualFunction f = [&evaluator](const Eigen::VectorXd& t) {
          return evaluator.residuals(t);
        };
        curvature = residual_curvature(f, x, o.fit->fd_step, fc.upper, workers);
      }
      CovarianceReport cov =
          mestimator_covariance(o.fit->jacobian, o.fit->residuals, loss, config.sweep.second_order,
                                config.sweep.second_order ? &curvature : nullptr,
                                kSpectrumComponentNames);
      cov.intervals = confidence_intervals(x, cov, config.sweep.confidence_level);
      o.covariance = std::move(cov);
    } catch (const Error& e) {
      o.covariance_error = e.what();
    }
  } catch (const std::exception& e) {
    o.error = e.what();
    o.fit.reset();
  }
}

json theta_json(const Eigen::VectorXd& v) {
  json j;
  for (std::size_t k = 0; k < SpectrumVector::kSize; ++k)
    j[std::string(kSpectrumComponentNames[k])] = v(static_cast<Index>(k));
  return j;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

/// Spectral values (10^3 rad/s) of one sign: s11, s22, Re s12, Im s12.
std::array<double, 4> components(const SpectrumVector& s, int sign) {
  const Eigen::VectorXd v = pack(s);
  const Index base = sign > 0 ? 0 : 4;
  return {v(base) / 1e3, v(base + 1) / 1e3, v(base + 2) / 1e3, v(base + 3) / 1e3};
}

std::array<Interval, 4> interval_components(const CovarianceReport& cov, int sign) {
  const std::size_t base = sign > 0 ? 0 : 4;
  std::array<Interval, 4> out{};
  for (std::size_t k = 0; k < 4; ++k)
    out[k] = {cov.intervals[base + k].low / 1e3, cov.intervals[base + k].high / 1e3};
  return out;
}

const std::array<std::string, 4> kComponentLabels{"s11", "s22", "re_s12", "im_s12"};

void write_fit_diagnostics(const FrequencyOutcome& o, std::size_t index, const Provenance& prov,
                           const fs::path& dir) {
  const std::string stem = frequency_name(index, o.omega_rabi);
  CsvFile csv(dir / (stem + ".csv"), prov, "state,time_s,observable,mean,std,model,residual");
  for (std::size_t i = 0; i < o.data.records.size(); ++i) {
    const Record& r = o.data.records[i];
    const bool have = o.fit && o.model_values.size() == static_cast<Index>(o.data.records.size());
    const double model = have ? o.model_values(static_cast<Index>(i)) : kNan;
    const double z = have ? o.fit->residuals(static_cast<Index>(i)) : kNan;
    csv.row(r.state.label(), num(r.time), r.observable.label(), num(r.mean), num(r.std), num(model),
            num(z));
  }
  csv.close();

  json d;
  d["provenance"] = {{"command", prov.command},
                     {"config_digest", prov.config_digest},
                     {"seed", prov.seed},
                     {"version", prov.version}};
  d["omega_rabi_hz"] = o.omega_rabi / kTwoPi;
  d["dataset_seed"] = o.data.seed;
  d["model"] = o.data.model;
  d["error"] = o.error;
  if (o.fit) {
    const FitResult& f = *o.fit;
    d["status"] = f.status;
    d["converged"] = f.converged;
    d["iterations"] = f.iterations;
    d["evaluations"] = f.evaluations;
    d["step_fallbacks"] = f.step_fallbacks;
    d["final_cost"] = f.final_cost;
    d["projected_gradient"] = f.projected_gradient;
    d["non_physical"] = f.non_physical;
    d["theta_hat_rad_s"] = theta_json(pack(f.theta_hat));
    d["fd_step_rad_s"] = theta_json(f.fd_step);
  }
  d["covariance_error"] = o.covariance_error;
  if (o.covariance) {
    d["covariance_rad2_s2"] = matrix_json(o.covariance->sigma_theta);
    d["covariance_condition"] = o.covariance->condition;
    d["used_second_order"] = o.covariance->used_second_order;
    json ci;
    for (std::size_t k = 0; k < SpectrumVector::kSize; ++k)
      ci[std::string(kSpectrumComponentNames[k])] = {o.covariance->intervals[k].low,
                                                     o.covariance->intervals[k].high};
    d["intervals_rad_s"] = ci;
  }
  if (o.truth) d["truth_rad_s"] = theta_json(pack(*o.truth));
  write_json(dir / (stem + ".json"), d);
}

void write_datasets(const std::vector<ObservationSet>& data, const Provenance& prov,
                    const fs::path& dir) {
  make_dirs(dir);
  for (std::size_t k = 0; k < data.size(); ++k) {
    try {
      write_dataset(data[k], dir / (frequency_name(k, data[k].omega_rabi) + ".csv"),
                    prov.comment_line());
    } catch (const DatasetError& e) {
      throw IoError(e.what());
    }
  }
}

std::vector<ObservationSet> sweep_data(const AppConfig& config, int workers) {
  return config.data.source == "files" ? load_sweep_data(config) : generate_sweep_data(config, workers);
}

double median(std::vector<double> v) {
  if (v.empty()) return kNan;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void write_comparison(const SweepResult& huber, const SweepResult& quadratic,
                      const Provenance& prov, const fs::path& dir) {
  CsvFile csv(dir / "compare.csv", prov,
              "omega_hz,component,truth,huber,quadratic,abs_err_huber,abs_err_quadratic");
  std::array<std::vector<double>, 4> err_h, err_q;
  struct Row {
    double omega_hz;
    std::size_t component;
    double truth, h, q;
  };
  std::vector<Row> rows;
  for (std::size_t f = 0; f < huber.frequencies.size(); ++f) {
    const auto& oh = huber.frequencies[f];
    const auto& oq = quadratic.frequencies[f];
    for (int sign : {-1, +1}) {
      const auto t = oh.truth ? components(*oh.truth, sign) : std::array<double, 4>{kNan, kNan, kNan, kNan};
      const auto h = oh.fit ? components(oh.fit->theta_hat, sign) : std::array<double, 4>{kNan, kNan, kNan, kNan};
      const auto q = oq.fit ? components(oq.fit->theta_hat, sign) : std::array<double, 4>{kNan, kNan, kNan, kNan};
      for (std::size_t c = 0; c < 4; ++c) rows.push_back({sign * oh.omega_rabi / kTwoPi, c, t[c], h[c], q[c]});
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.omega_hz < b.omega_hz || (a.omega_hz == b.omega_hz && a.component < b.component);
  });
  for (const Row& r : rows) {
    const double eh = std::abs(r.h - r.truth);
    const double eq = std::abs(r.q - r.truth);
    if (std::isfinite(eh) && std::isfinite(eq)) {
      err_h[r.component].push_back(eh);
      err_q[r.component].push_back(eq);
    }
    csv.row(num(r.omega_hz), kComponentLabels[r.component], num(r.truth), num(r.h), num(r.q),
            num(eh), num(eq));
  }
  csv.close();

  CsvFile summary(dir / "compare_summary.csv", prov,
                  "component,median_abs_err_huber,median_abs_err_quadratic,count");
  for (std::size_t c = 0; c < 4; ++c)
    summary.row(kComponentLabels[c], num(median(err_h[c])), num(median(err_q[c])), err_h[c].size());
  summary.close();
}

}  // namespace

// ----------------------------------------------------------------------------
// provenance

Provenance Provenance::make(const std::string& command, const AppConfig& config) {
  Provenance p;
  p.command = command;
  p.config = config.document;
  p.config_digest = qns::config_digest(config.document);
  p.seed = config.seed;
  return p;
}

std::string Provenance::comment_line() const {
  return fmt::format("provenance command={} config_digest={} seed={} version={}", command,
                     config_digest, seed, version);
}

json Provenance::to_json() const {
  return {{"command", command},
          {"config", config},
          {"config_digest", config_digest},
          {"seed", seed},
          {"version", version}};
}

Provenance Provenance::from_json(const json& j) {
  Provenance p;
  try {
    p.command = j.at("command").get<std::string>();
    p.config = j.at("config");
    p.config_digest = j.at("config_digest").get<std::string>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.version = j.at("version").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("invalid provenance block: {}", e.what()));
  }
  if (qns::config_digest(p.config) != p.config_digest)
    throw ConfigError("provenance config does not match its digest");
  return p;
}

// ----------------------------------------------------------------------------
// sweep

bool SweepResult::all_failed() const {
  return std::all_of(frequencies.begin(), frequencies.end(),
                     [](const FrequencyOutcome& o) { return !o.fit.has_value(); });
}

std::uint64_t frequency_seed(std::uint64_t master, double omega_rabi) {
  return substream_key(master, {0x5eedULL, std::bit_cast<std::uint64_t>(omega_rabi)});
}

std::vector<ObservationSet> generate_sweep_data(const AppConfig& config, int workers) {
  if (config.data.source == "files")
    throw ConfigError("data.source \"files\" cannot generate data");
  std::vector<double> omegas = config.sweep.rabi_frequencies;
  std::sort(omegas.begin(), omegas.end());
  const DataModel model{config.data.source, config.noise, config.rates, config.data.fock_dim};
  std::vector<ObservationSet> out(omegas.size());
  const int outer = static_cast<int>(std::min<std::size_t>(omegas.size(), resolve_workers(workers)));
  parallel_for(omegas.size(), outer, [&](std::size_t k) {
    MeasurementPlan plan = config.plan;
    plan.seed = frequency_seed(config.seed, omegas[k]);
    ObservationSet obs =
        generate_observations(model, omegas[k], config.sweep.delta_omega, plan, config.data.noiseless, 1);
    const auto& c = config.data.contamination;
    if (c.p > 0.0) {
      const std::uint64_t bits = std::bit_cast<std::uint64_t>(omegas[k]);
      const std::uint64_t seed =
          c.seed == 0 ? substream_key(config.seed, {0xc0ULL, bits}) : substream_key(c.seed, {bits});
      ObservationSet dirty = contaminate(obs, c.p, seed);
      dirty.params = obs.params;
      obs = std::move(dirty);
    }
    out[k] = std::move(obs);
  });
  return out;
}

std::vector<ObservationSet> load_sweep_data(const AppConfig& config) {
  std::vector<ObservationSet> out;
  for (const auto& p : config.data.paths) out.push_back(read_dataset(p));
  sort_by_frequency(out);
  return out;
}

SweepResult run_sweep(const AppConfig& config, std::vector<ObservationSet> data,
                      const LossFunction& loss, int workers, bool progress) {
  if (data.empty()) throw ConfigError("sweep has no datasets");
  sort_by_frequency(data);
  SweepResult result;
  result.frequencies.resize(data.size());
  for (std::size_t k = 0; k < data.size(); ++k) {
    result.frequencies[k].omega_rabi = data[k].omega_rabi;
    result.frequencies[k].truth = truth_from_params(data[k].params);
    result.frequencies[k].data = std::move(data[k]);
  }
  const int pool = resolve_workers(workers);
  auto report = [&](std::size_t k) {
    if (!progress) return;
    const auto& o = result.frequencies[k];
    if (o.fit)
      fmt::print(stderr, "[{}/{}] {:.4f} MHz: {} after {} iterations\n", k + 1,
                 result.frequencies.size(), o.omega_rabi / kTwoPi / 1e6, o.fit->status,
                 o.fit->iterations);
    else
      fmt::print(stderr, "[{}/{}] {:.4f} MHz: failed: {}\n", k + 1, result.frequencies.size(),
                 o.omega_rabi / kTwoPi / 1e6, o.error);
  };

  if (config.sweep.warm_start) {
    std::optional<Eigen::VectorXd> guess;
    for (std::size_t k = 0; k < result.frequencies.size(); ++k) {
      auto& o = result.frequencies[k];
      fit_frequency(o, config, loss, guess, pool);
      if (o.fit) {
        const Eigen::VectorXd x = pack(o.fit->theta_hat);
        if (x.allFinite()) guess = x;
      }
      report(k);
    }
  } else {
    parallel_for(result.frequencies.size(), pool, [&](std::size_t k) {
      fit_frequency(result.frequencies[k], config, loss, std::nullopt, 1);
    });
    for (std::size_t k = 0; k < result.frequencies.size(); ++k) report(k);
  }
  return result;
}

void write_sweep(const SweepResult& result, const Provenance& prov, const fs::path& dir) {
  make_dirs(dir / "fits");
  struct Row {
    double omega_hz;
    std::array<double, 4> value;
    std::array<Interval, 4> ci;
    double delta_omega_hz;
    bool converged;
  };
  std::vector<Row> rows;
  std::vector<std::pair<double, std::array<double, 4>>> truth_rows;
  const Interval nan_ci{kNan, kNan};
  for (const auto& o : result.frequencies) {
    for (int sign : {-1, +1}) {
      Row r{sign * o.omega_rabi / kTwoPi, {kNan, kNan, kNan, kNan}, {nan_ci, nan_ci, nan_ci, nan_ci},
            kNan, false};
      if (o.fit) {
        r.value = components(o.fit->theta_hat, sign);
        r.delta_omega_hz = o.fit->theta_hat.delta_omega / kTwoPi;
        r.converged = o.fit->converged;
        if (o.covariance) r.ci = interval_components(*o.covariance, sign);
      }
      rows.push_back(r);
      if (o.truth) truth_rows.push_back({r.omega_hz, components(*o.truth, sign)});
    }
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.omega_hz < b.omega_hz; });
  std::stable_sort(truth_rows.begin(), truth_rows.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  CsvFile spectra(dir / "spectra.csv", prov,
                  "omega_hz,s11,s22,re_s12,im_s12,s11_low,s11_high,s22_low,s22_high,re_s12_low,"
                  "re_s12_high,im_s12_low,im_s12_high,delta_omega_hz,converged");
  for (const Row& r : rows)
    spectra.row(num(r.omega_hz), num(r.value[0]), num(r.value[1]), num(r.value[2]), num(r.value[3]),
                num(r.ci[0].low), num(r.ci[0].high), num(r.ci[1].low), num(r.ci[1].high),
                num(r.ci[2].low), num(r.ci[2].high), num(r.ci[3].low), num(r.ci[3].high),
                num(r.delta_omega_hz), r.converged ? 1 : 0);
  spectra.close();

  if (!truth_rows.empty()) {
    CsvFile truth(dir / "truth.csv", prov, "omega_hz,s11,s22,re_s12,im_s12");
    for (const auto& [omega, v] : truth_rows)
      truth.row(num(omega), num(v[0]), num(v[1]), num(v[2]), num(v[3]));
    truth.close();
  }
  for (std::size_t k = 0; k < result.frequencies.size(); ++k)
    write_fit_diagnostics(result.frequencies[k], k, prov, dir / "fits");
}

// ----------------------------------------------------------------------------
// commands

void run_command(const std::string& command, const AppConfig& config, const fs::path& out_dir,
                 int workers, bool progress) {
  if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end())
    throw ConfigError(fmt::format("unknown command '{}'", command));
  const Provenance prov = Provenance::make(command, config);
  make_dirs(out_dir);
  bool all_failed = false;

  if (command == "simulate-ramsey") {
    const RamseyScan scan = ramsey_scan(config.ramsey, workers);
    CsvFile csv(out_dir / "ramsey.csv", prov, "nbar,time_s,sz1,sz2,czz");
    for (std::size_t k = 0; k < scan.nbar.size(); ++k) {
      const RamseyCurves& c = scan.curves[k];
      for (std::size_t q = 0; q < c.times.size(); ++q)
        csv.row(num(scan.nbar[k]), num(c.times[q]), num(c.sz1[q]), num(c.sz2[q]), num(c.czz[q]));
    }
    csv.close();
  } else if (command == "simulate-spinlock") {
    const SpinlockScan scan = spinlock_scan(config.spinlock, config.seed, workers);
    const bool sampled = scan.kzz_mean.size() > 0;
    std::string header = "omega1_hz,omega2_hz,time_s,kzz,tz1,tz2";
    if (sampled) header += ",kzz_mean,kzz_std,tz1_mean,tz1_std,tz2_mean,tz2_std";
    CsvFile csv(out_dir / "spinlock.csv", prov, header);
    for (Index k = 0; k < scan.kzz.rows(); ++k) {
      for (Index q = 0; q < scan.kzz.cols(); ++q) {
        const auto base = std::make_tuple(num(scan.omega1[static_cast<std::size_t>(k)] / kTwoPi),
                                          num(scan.omega2 / kTwoPi),
                                          num(scan.times[static_cast<std::size_t>(q)]),
                                          num(scan.kzz(k, q)), num(scan.tz1(k, q)), num(scan.tz2(k, q)));
        if (sampled)
          std::apply([&](const auto&... f) {
            csv.row(f..., num(scan.kzz_mean(k, q)), num(scan.kzz_std(k, q)), num(scan.tz1_mean(k, q)),
                    num(scan.tz1_std(k, q)), num(scan.tz2_mean(k, q)), num(scan.tz2_std(k, q)));
          }, base);
        else
          std::apply([&](const auto&... f) { csv.row(f...); }, base);
      }
    }
    csv.close();
  } else if (command == "generate-data") {
    write_datasets(generate_sweep_data(config, workers), prov, out_dir / "data");
  } else if (command == "reconstruct") {
    if (config.data.source != "files")
      throw ConfigError("reconstruct needs data.source \"files\" (or --data)");
    const SweepResult result = run_sweep(config, load_sweep_data(config), config.loss, workers, progress);
    write_sweep(result, prov, out_dir);
    all_failed = result.all_failed();
  } else if (command == "sweep") {
    std::vector<ObservationSet> data = sweep_data(config, workers);
    if (config.data.source != "files") write_datasets(data, prov, out_dir / "data");
    const SweepResult result = run_sweep(config, std::move(data), config.loss, workers, progress);
    write_sweep(result, prov, out_dir);
    all_failed = result.all_failed();
  } else if (command == "compare-loss") {
    const std::vector<ObservationSet> data = sweep_data(config, workers);
    if (config.data.source != "files") write_datasets(data, prov, out_dir / "data");
    const LossFunction huber = LossFunction::huber(
        config.loss.kind == LossFunction::Kind::Huber ? config.loss.delta0 : 1.0);
    const SweepResult rh = run_sweep(config, data, huber, workers, progress);
    const SweepResult rq = run_sweep(config, data, LossFunction::quadratic(), workers, progress);
    write_sweep(rh, prov, out_dir / "huber");
    write_sweep(rq, prov, out_dir / "quadratic");
    write_comparison(rh, rq, prov, out_dir);
    all_failed = rh.all_failed() && rq.all_failed();
  }

  write_json(out_dir / "provenance.json", prov.to_json());
  if (all_failed) throw AllFitsFailed("every fit in the sweep failed");
}

void replay(const fs::path& provenance_file, const fs::path& out_dir, int workers, bool progress) {
  std::ifstream in(provenance_file, std::ios::binary);
  if (!in) throw IoError(fmt::format("{}: cannot open provenance file", provenance_file.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", provenance_file.string(), e.what()));
  }
  const Provenance prov = Provenance::from_json(j);
  if (prov.version != kVersion)
    fmt::print(stderr, "warning: provenance was written by version {}, this is {}\n", prov.version,
               kVersion);
  run_command(prov.command, parse_config(prov.config), out_dir, workers, progress);
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const AllFitsFailed*>(&e)) return 3;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const DatasetError*>(&e) ||
      dynamic_cast<const fs::filesystem_error*>(&e))
    return 4;
  return 1;
}

}  // namespace qns
