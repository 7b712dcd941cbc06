#include "qns/experiment.hpp"

#include "qns/parallel.hpp"

#include <fmt/format.h>

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace qns {

void MeasurementPlan::validate() const {
  if (initial_states.empty()) throw Error("measurement plan has no initial states");
  if (times.empty()) throw Error("measurement plan has no times");
  if (observables.empty()) throw Error("measurement plan has no observables");
  if (shots < 2) throw Error("measurement plan needs at least two shots");
  for (double t : times)
    if (!(t >= 0.0) || !std::isfinite(t)) throw Error("measurement times must be non-negative");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (times[k] <= times[k - 1]) throw Error("measurement times must be strictly increasing");
}

std::vector<double> table_times() {
  std::vector<double> us;
  for (int t = 1; t <= 11; t += 2) us.push_back(t);
  for (int t = 16; t <= 71; t += 5) us.push_back(t);
  for (int t = 81; t <= 151; t += 10) us.push_back(t);
  for (double& t : us) t *= 1e-6;
  return us;
}

MeasurementPlan table_plan(std::int64_t shots, std::uint64_t seed) {
  return {all_initial_states(), table_times(), table_observables(), shots, seed};
}

std::string Contamination::digest() const {
  std::string bits(mask.size(), '0');
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) bits[i] = '1';
  return fmt::format("{:016x}", fnv1a(bits));
}

// ----------------------------------------------------------------------------
// sampling

std::array<double, 4> joint_distribution(const Operator& rho, Pauli a, Pauli b,
                                         std::string_view label) {
  if (rho.rows() != 4 || rho.cols() != 4) throw Error("sampling needs a 4x4 two-qubit state");
  const Operator id = ops::identity(2);
  const Operator pa = dressed_pauli(a);
  const Operator pb = dressed_pauli(b);
  std::array<double, 4> p{};
  double total = 0.0;
  int k = 0;
  for (int s1 : {+1, -1}) {
    for (int s2 : {+1, -1}) {
      const Operator proj = kron(0.5 * (id + s1 * pa), 0.5 * (id + s2 * pb));
      const double value = proj.cwiseProduct(rho.transpose()).sum().real();
      if (value < -1e-9)
        throw Error(fmt::format("negative outcome probability {:.3e} for observable {}", value,
                                label.empty() ? std::string("?") : std::string(label)));
      p[k++] = std::max(value, 0.0);
      total += std::max(value, 0.0);
    }
  }
  if (!(total > 0.0)) throw Error("outcome distribution vanishes");
  for (double& v : p) v /= total;
  return p;
}

namespace {

/// Multinomial draw by sequential conditional binomials.
std::array<std::int64_t, 4> draw_counts(const std::array<double, 4>& p, std::int64_t shots,
                                        CounterRng& rng) {
  std::array<std::int64_t, 4> n{};
  std::int64_t remaining = shots;
  double mass = 1.0;
  for (int k = 0; k < 3; ++k) {
    if (remaining == 0 || mass <= 0.0) break;
    const double q = std::clamp(p[k] / mass, 0.0, 1.0);
    std::binomial_distribution<std::int64_t> bin(remaining, q);
    n[k] = bin(rng);
    remaining -= n[k];
    mass -= p[k];
  }
  n[3] = remaining;
  return n;
}

struct SettingStats {
  double m1, m2, product;
};

SettingStats stats_from_counts(const std::array<std::int64_t, 4>& n, std::int64_t shots) {
  const double inv = 1.0 / static_cast<double>(shots);
  const double pp = static_cast<double>(n[0]), pm = static_cast<double>(n[1]);
  const double mp = static_cast<double>(n[2]), mm = static_cast<double>(n[3]);
  return {(pp + pm - mp - mm) * inv, (pp - pm + mp - mm) * inv, (pp - pm - mp + mm) * inv};
}

double single_std(double mean, std::int64_t shots) {
  const double m = static_cast<double>(shots);
  const double var = std::max(0.0, 1.0 - mean * mean) * m / (m - 1.0);
  return std::max(kStdFloor, std::sqrt(var / m));
}

int setting_index(Pauli a, Pauli b) {
  return (static_cast<int>(a) - 1) * 3 + (static_cast<int>(b) - 1);
}

std::pair<Pauli, Pauli> setting_of(const TwoQubitObservable& obs) {
  if (obs.covariance) return {obs.first, obs.second};
  // single-qubit observables are read from the setting with both axes equal
  if (obs.second == Pauli::I) return {obs.first, obs.first};
  return {obs.second, obs.second};
}

}  // namespace

std::vector<Estimate> sample_observables(const Operator& rho,
                                         std::span<const TwoQubitObservable> observables,
                                         std::int64_t shots, std::uint64_t seed,
                                         std::uint64_t stream) {
  if (shots < 2) throw Error("at least two shots are needed");
  struct Setting {
    bool drawn = false;
    std::array<double, 4> p{};
    std::array<std::int64_t, 4> counts{};
    SettingStats stats{};
    double covariance_std = 0.0;
    bool covariance_std_ready = false;
  };
  std::array<Setting, 9> settings;
  std::vector<Estimate> out;
  out.reserve(observables.size());
  for (const auto& obs : observables) {
    const auto [a, b] = setting_of(obs);
    const int idx = setting_index(a, b);
    Setting& s = settings[static_cast<std::size_t>(idx)];
    if (!s.drawn) {
      s.p = joint_distribution(rho, a, b, obs.label());
      CounterRng rng(seed, {stream, static_cast<std::uint64_t>(idx)});
      s.counts = draw_counts(s.p, shots, rng);
      s.stats = stats_from_counts(s.counts, shots);
      s.drawn = true;
    }
    if (!obs.covariance) {
      const double mean = obs.second == Pauli::I ? s.stats.m1 : s.stats.m2;
      out.push_back({mean, single_std(mean, shots)});
      continue;
    }
    if (!s.covariance_std_ready) {
      // Resampling M shots with replacement from the empirical outcomes is a
      // multinomial draw with the empirical frequencies.
      std::array<double, 4> empirical{};
      for (int k = 0; k < 4; ++k)
        empirical[k] = static_cast<double>(s.counts[k]) / static_cast<double>(shots);
      CounterRng rng(seed, {stream, static_cast<std::uint64_t>(idx), 0xb007ULL});
      double sum = 0.0, sum_sq = 0.0;
      for (int r = 0; r < kBootstrapResamples; ++r) {
        const SettingStats st = stats_from_counts(draw_counts(empirical, shots, rng), shots);
        const double k = st.product - st.m1 * st.m2;
        sum += k;
        sum_sq += k * k;
      }
      const double n = kBootstrapResamples;
      const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
      s.covariance_std = std::max(kStdFloor, std::sqrt(var));
      s.covariance_std_ready = true;
    }
    out.push_back({s.stats.product - s.stats.m1 * s.stats.m2, s.covariance_std});
  }
  return out;
}

namespace {

void check_grid(const StateGrid& states, const MeasurementPlan& plan) {
  plan.validate();
  if (states.size() != plan.initial_states.size())
    throw Error("state grid does not match the plan's initial states");
  for (const auto& row : states)
    if (row.size() != plan.times.size()) throw Error("state grid does not match the plan's times");
}

}  // namespace

ObservationSet sample_dataset(const StateGrid& states, const MeasurementPlan& plan,
                              double omega_rabi, int workers) {
  check_grid(states, plan);
  const std::size_t n_times = plan.times.size();
  const std::size_t n_obs = plan.observables.size();
  ObservationSet out;
  out.omega_rabi = omega_rabi;
  out.seed = plan.seed;
  out.records.resize(plan.record_count());
  parallel_for(states.size() * n_times, workers, [&](std::size_t cell) {
    const std::size_t s = cell / n_times;
    const std::size_t q = cell % n_times;
    const InitialState& init = plan.initial_states[s];
    // Substream from the state label and the bit pattern of the time, so
    // records do not depend on their position in the plan.
    const std::uint64_t stream = substream_key(
        fnv1a(init.label()), {std::bit_cast<std::uint64_t>(plan.times[q])});
    const auto est = sample_observables(states[s][q], plan.observables, plan.shots, plan.seed, stream);
    for (std::size_t r = 0; r < n_obs; ++r)
      out.records[cell * n_obs + r] = {init,         plan.times[q], plan.observables[r],
                                       est[r].mean, est[r].std,    plan.shots};
  });
  return out;
}

ObservationSet exact_dataset(const StateGrid& states, const MeasurementPlan& plan,
                             double omega_rabi) {
  check_grid(states, plan);
  ObservationSet out;
  out.omega_rabi = omega_rabi;
  out.seed = plan.seed;
  out.model = "exact";
  for (std::size_t s = 0; s < states.size(); ++s)
    for (std::size_t q = 0; q < plan.times.size(); ++q)
      for (const auto& obs : plan.observables)
        out.records.push_back({plan.initial_states[s], plan.times[q], obs,
                               observable_value(obs, states[s][q]), kStdFloor, plan.shots});
  return out;
}

ObservationSet contaminate(const ObservationSet& obs, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error("contamination probability must lie in [0, 1]");
  ObservationSet out = obs;
  Contamination info{p, seed, std::vector<bool>(obs.records.size(), false)};
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    CounterRng rng(seed, {0xc0ffeeULL, static_cast<std::uint64_t>(i)});
    const double u = rng.uniform();
    const double replacement = rng.uniform(-1.0, 1.0);
    if (u < p) {
      out.records[i].mean = replacement;
      info.mask[i] = true;
    }
  }
  out.contamination = std::move(info);
  return out;
}

// ----------------------------------------------------------------------------
// dataset files

DatasetError::DatasetError(const std::string& path, std::size_t line, const std::string& what)
    : Error(line > 0 ? fmt::format("{}:{}: {}", path, line, what)
                     : fmt::format("{}: {}", path, what)) {}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".json");
  return p;
}

namespace {

const char* kHeader = "state,time_s,observable,mean,std,shots";

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

double parse_double(std::string_view text, const std::string& path, std::size_t line,
                    const char* field) {
  double v = 0.0;
  const auto* begin = text.data();
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw DatasetError(path, line, fmt::format("invalid {} '{}'", field, text));
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

void write_dataset(const ObservationSet& obs, const std::filesystem::path& path,
                   const std::string& comment) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DatasetError(path.string(), 0, "cannot open for writing");
    if (!comment.empty()) out << "# " << comment << '\n';
    out << kHeader << '\n';
    for (const auto& r : obs.records) {
      out << r.state.label() << ',' << format_double(r.time) << ',' << r.observable.label() << ','
          << format_double(r.mean) << ',' << format_double(r.std) << ',' << r.shots << '\n';
    }
    if (!out) throw DatasetError(path.string(), 0, "write failed");
  }
  nlohmann::json meta;
  meta["omega_rabi_hz"] = obs.omega_rabi / (2.0 * std::numbers::pi);
  meta["omega_rabi_rad_s"] = obs.omega_rabi;
  meta["seed"] = obs.seed;
  meta["model"] = obs.model;
  meta["params"] = obs.params;
  if (obs.contamination) {
    std::string bits(obs.contamination->mask.size(), '0');
    for (std::size_t i = 0; i < bits.size(); ++i)
      if (obs.contamination->mask[i]) bits[i] = '1';
    meta["contamination"] = {{"p", obs.contamination->p},
                             {"seed", obs.contamination->seed},
                             {"mask_digest", obs.contamination->digest()},
                             {"mask", bits}};
  }
  const auto side = sidecar_path(path);
  std::ofstream out(side, std::ios::binary);
  if (!out) throw DatasetError(side.string(), 0, "cannot open for writing");
  out << meta.dump(2) << '\n';
  if (!out) throw DatasetError(side.string(), 0, "write failed");
}

ObservationSet read_dataset(const std::filesystem::path& path) {
  const std::string name = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError(name, 0, "cannot open dataset");
  ObservationSet obs;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != kHeader) throw DatasetError(name, lineno, fmt::format("expected header '{}'", kHeader));
      header_seen = true;
      continue;
    }
    const auto fields = split(line, ',');
    if (fields.size() != 6)
      throw DatasetError(name, lineno, fmt::format("expected 6 fields, found {}", fields.size()));
    Record r;
    try {
      r.state = InitialState::parse(fields[0]);
      r.observable = TwoQubitObservable::parse(fields[2]);
    } catch (const DatasetError&) {
      throw;
    } catch (const Error& e) {
      throw DatasetError(name, lineno, e.what());
    }
    r.time = parse_double(fields[1], name, lineno, "time_s");
    r.mean = parse_double(fields[3], name, lineno, "mean");
    r.std = parse_double(fields[4], name, lineno, "std");
    std::int64_t shots = 0;
    auto [ptr, ec] = std::from_chars(fields[5].data(), fields[5].data() + fields[5].size(), shots);
    if (ec != std::errc() || ptr != fields[5].data() + fields[5].size())
      throw DatasetError(name, lineno, fmt::format("invalid shots '{}'", fields[5]));
    r.shots = shots;
    if (r.time < 0.0) throw DatasetError(name, lineno, "time_s must be non-negative");
    if (!(r.std > 0.0)) throw DatasetError(name, lineno, "std must be positive");
    if (r.shots < 1) throw DatasetError(name, lineno, "shots must be positive");
    const double bound = r.observable.covariance ? 2.0 : 1.0;
    if (std::abs(r.mean) > bound + 1e-12)
      throw DatasetError(name, lineno, fmt::format("mean {} outside [-{}, {}]", r.mean, bound, bound));
    obs.records.push_back(r);
  }
  if (!header_seen) throw DatasetError(name, 0, "missing header");
  if (obs.records.empty()) throw DatasetError(name, 0, "dataset has no records");

  const auto side = sidecar_path(path);
  std::ifstream meta_in(side, std::ios::binary);
  if (!meta_in) throw DatasetError(side.string(), 0, "cannot open sidecar");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_in);
    if (meta.contains("omega_rabi_rad_s"))
      obs.omega_rabi = meta.at("omega_rabi_rad_s").get<double>();
    else
      obs.omega_rabi = 2.0 * std::numbers::pi * meta.at("omega_rabi_hz").get<double>();
    obs.seed = meta.value("seed", std::uint64_t{0});
    obs.model = meta.value("model", std::string("external"));
    obs.params = meta.value("params", nlohmann::json::object());
    if (meta.contains("contamination")) {
      const auto& c = meta.at("contamination");
      Contamination info;
      info.p = c.at("p").get<double>();
      info.seed = c.value("seed", std::uint64_t{0});
      const auto bits = c.value("mask", std::string());
      if (bits.size() != obs.records.size())
        throw DatasetError(side.string(), 0, "contamination mask length does not match records");
      for (char b : bits) info.mask.push_back(b == '1');
      if (c.contains("mask_digest") && c.at("mask_digest").get<std::string>() != info.digest())
        throw DatasetError(side.string(), 0, "contamination mask digest mismatch");
      obs.contamination = std::move(info);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(side.string(), 0, fmt::format("invalid sidecar: {}", e.what()));
  }
  if (!(obs.omega_rabi > 0.0)) throw DatasetError(side.string(), 0, "omega_rabi must be positive");
  return obs;
}

}  // namespace qns
