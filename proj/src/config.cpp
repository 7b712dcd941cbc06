#include "qns/config.hpp"

#include "qns/presets.hpp"
#include "qns/rng.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <set>

namespace qns {

using nlohmann::json;

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

json noise_document(const ShotNoiseParams& p) {
  return {{"chi1_hz", p.chi1 / kTwoPi},
          {"chi2_hz", p.chi2 / kTwoPi},
          {"kappa_hz", p.kappa / kTwoPi},
          {"delta_c_hz", p.delta_c / kTwoPi},
          {"nbar", p.nbar}};
}

json rates_document(const QubitRates& r) {
  return {{"gamma1_q1", r.gamma1_q1},       {"gamma1_q2", r.gamma1_q2},
          {"gamma_phi_q1", r.gamma_phi_q1}, {"gamma_phi_q2", r.gamma_phi_q2},
          {"gamma_up_q1", r.gamma_up_q1},   {"gamma_dn_q1", r.gamma_dn_q1},
          {"gamma_up_q2", r.gamma_up_q2},   {"gamma_dn_q2", r.gamma_dn_q2}};
}

std::vector<double> grid(double start, double stop, int count) {
  std::vector<double> out;
  for (int k = 0; k < count; ++k) out.push_back(start + (stop - start) * k / (count - 1));
  return out;
}

/// Rejects keys that do not exist in the defaults, so typos surface.
void check_keys(const json& given, const json& reference, const std::string& where) {
  if (!given.is_object() || !reference.is_object()) return;
  for (const auto& [key, value] : given.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!reference.contains(key)) throw ConfigError(fmt::format("unknown config key '{}'", path));
    if (key == "observable_weights") continue;
    check_keys(value, reference.at(key), path);
  }
}

/// merge_patch deletes keys set to null; those are errors here.
void check_complete(const json& reference, const json& doc, const std::string& where) {
  if (!reference.is_object()) return;
  if (!doc.is_object()) throw ConfigError(fmt::format("config field '{}' must be an object", where));
  for (const auto& [key, value] : reference.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!doc.contains(key)) throw ConfigError(fmt::format("config field '{}' cannot be null", path));
    if (key != "observable_weights") check_complete(value, doc.at(key), path);
  }
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("config field '{}.{}' has the wrong type", where, key));
  }
}

double finite(const json& j, const char* key, const std::string& where) {
  const auto v = get<double>(j, key, where);
  if (!std::isfinite(v)) throw ConfigError(fmt::format("config field '{}.{}' must be finite", where, key));
  return v;
}

ShotNoiseParams parse_noise(const json& j, const std::string& where) {
  ShotNoiseParams p;
  p.chi1 = kTwoPi * finite(j, "chi1_hz", where);
  p.chi2 = kTwoPi * finite(j, "chi2_hz", where);
  p.kappa = kTwoPi * finite(j, "kappa_hz", where);
  p.delta_c = kTwoPi * finite(j, "delta_c_hz", where);
  p.nbar = finite(j, "nbar", where);
  try {
    p.validate();
  } catch (const Error& e) {
    throw ConfigError(fmt::format("{}: {}", where, e.what()));
  }
  return p;
}

QubitRates parse_rates(const json& j, const std::string& where) {
  QubitRates r;
  r.gamma1_q1 = finite(j, "gamma1_q1", where);
  r.gamma1_q2 = finite(j, "gamma1_q2", where);
  r.gamma_phi_q1 = finite(j, "gamma_phi_q1", where);
  r.gamma_phi_q2 = finite(j, "gamma_phi_q2", where);
  r.gamma_up_q1 = finite(j, "gamma_up_q1", where);
  r.gamma_dn_q1 = finite(j, "gamma_dn_q1", where);
  r.gamma_up_q2 = finite(j, "gamma_up_q2", where);
  r.gamma_dn_q2 = finite(j, "gamma_dn_q2", where);
  try {
    r.validate();
  } catch (const Error& e) {
    throw ConfigError(fmt::format("{}: {}", where, e.what()));
  }
  return r;
}

std::vector<double> sorted_times(const json& j, const char* key, const std::string& where) {
  const auto t = get<std::vector<double>>(j, key, where);
  if (t.empty()) throw ConfigError(fmt::format("{}.{} is empty", where, key));
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (!(t[k] >= 0.0) || !std::isfinite(t[k]))
      throw ConfigError(fmt::format("{}.{} must hold non-negative times", where, key));
    if (k > 0 && !(t[k] > t[k - 1]))
      throw ConfigError(fmt::format("{}.{} must be strictly increasing", where, key));
  }
  return t;
}

Index fock_dim(const json& j, const std::string& where) {
  const auto n = get<std::int64_t>(j, "fock_dim", where);
  if (n < 2 || n > 40) throw ConfigError(fmt::format("{}.fock_dim must lie in [2, 40]", where));
  return static_cast<Index>(n);
}

}  // namespace

json default_config_document() {
  const FitConfig fit = FitConfig::defaults();
  json plan_states = json::array();
  for (const auto& s : all_initial_states()) plan_states.push_back(s.label());
  json plan_observables = json::array();
  for (const auto& o : table_observables()) plan_observables.push_back(o.label());

  return {
      {"seed", 1},
      {"noise", noise_document(presets::spectroscopy_noise())},
      {"rates", rates_document(presets::t1_rates())},
      {"fit_rates", rates_document(presets::t1_rates())},
      {"plan",
       {{"states", plan_states},
        {"times_s", table_times()},
        {"observables", plan_observables},
        {"shots", 10000}}},
      {"data",
       {{"source", "reduced"},
        {"paths", json::array()},
        {"fock_dim", 8},
        {"noiseless", false},
        {"contamination", {{"p", 0.0}, {"seed", 0}}}}},
      {"sweep",
       {{"rabi_frequencies_hz", presets::sweep_frequencies_hz()},
        {"warm_start", true},
        {"delta_omega_hz", 0.0},
        {"confidence_level", 0.95},
        {"second_order", false}}},
      {"fit",
       {{"loss", "huber"},
        {"huber_delta", 1.0},
        {"initial_guess_krad_s", 1.0},
        {"delta_omega_bound_hz", fit.upper(8) / kTwoPi},
        {"max_iterations", fit.max_iterations},
        {"cost_tol", fit.cost_tol},
        {"grad_tol", fit.grad_tol},
        {"relative_step", fit.relative_step},
        {"observable_weights", json::object()},
        {"restarts", 0}}},
      {"ramsey",
       {{"noise", noise_document(presets::ramsey_noise(0.0))},
        {"rates", rates_document(presets::device_rates())},
        {"nbar_values", {0.0, 0.05, 0.1, 0.15, 0.2}},
        {"times_s", grid(0.0, 10e-6, 1001)},
        {"delta_q1_hz", *presets::ramsey_drive().delta_q1 / kTwoPi},
        {"delta_q2_hz", *presets::ramsey_drive().delta_q2 / kTwoPi},
        {"fock_dim", 8}}},
      {"spinlock",
       {{"noise", noise_document(presets::selectivity_noise())},
        {"rates", rates_document(presets::selectivity_rates())},
        {"omega2_hz", std::abs(presets::selectivity_noise().delta_c) / kTwoPi},
        {"omega1_offsets_hz", grid(-100e3, 100e3, 21)},
        {"times_s", grid(0.0, 150e-6, 151)},
        {"initial_state", "-x-x"},
        {"fock_dim", 8},
        {"shots", 0}}},
  };
}

AppConfig parse_config(const json& overrides) {
  if (!overrides.is_object()) throw ConfigError("config must be a JSON object");
  json doc = default_config_document();
  check_keys(overrides, doc, "");
  doc.merge_patch(overrides);
  check_complete(default_config_document(), doc, "");

  AppConfig c;
  c.document = doc;
  c.seed = get<std::uint64_t>(doc, "seed", "config");
  c.noise = parse_noise(doc.at("noise"), "noise");
  c.rates = parse_rates(doc.at("rates"), "rates");
  c.fit_rates = parse_rates(doc.at("fit_rates"), "fit_rates");

  const json& plan = doc.at("plan");
  try {
    for (const auto& s : get<std::vector<std::string>>(plan, "states", "plan"))
      c.plan.initial_states.push_back(InitialState::parse(s));
    for (const auto& o : get<std::vector<std::string>>(plan, "observables", "plan"))
      c.plan.observables.push_back(TwoQubitObservable::parse(o));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(fmt::format("plan: {}", e.what()));
  }
  c.plan.times = sorted_times(plan, "times_s", "plan");
  c.plan.shots = get<std::int64_t>(plan, "shots", "plan");
  try {
    c.plan.validate();
  } catch (const Error& e) {
    throw ConfigError(fmt::format("plan: {}", e.what()));
  }

  const json& data = doc.at("data");
  c.data.source = get<std::string>(data, "source", "data");
  if (c.data.source != "reduced" && c.data.source != "optical" && c.data.source != "files")
    throw ConfigError("data.source must be \"reduced\", \"optical\" or \"files\"");
  for (const auto& p : get<std::vector<std::string>>(data, "paths", "data")) c.data.paths.emplace_back(p);
  if (c.data.source == "files" && c.data.paths.empty())
    throw ConfigError("data.source \"files\" needs data.paths");
  c.data.fock_dim = fock_dim(data, "data");
  c.data.noiseless = get<bool>(data, "noiseless", "data");
  const json& cont = data.at("contamination");
  c.data.contamination.p = finite(cont, "p", "data.contamination");
  c.data.contamination.seed = get<std::uint64_t>(cont, "seed", "data.contamination");
  if (c.data.contamination.p < 0.0 || c.data.contamination.p > 1.0)
    throw ConfigError("data.contamination.p must lie in [0, 1]");

  const json& sweep = doc.at("sweep");
  std::set<double> seen;
  for (double f : get<std::vector<double>>(sweep, "rabi_frequencies_hz", "sweep")) {
    if (!(f > 0.0) || !std::isfinite(f)) throw ConfigError("Rabi frequencies must be positive");
    if (!seen.insert(f).second) throw ConfigError(fmt::format("duplicate Rabi frequency {} Hz", f));
    c.sweep.rabi_frequencies.push_back(kTwoPi * f);
  }
  if (c.sweep.rabi_frequencies.empty() && c.data.source != "files")
    throw ConfigError("sweep.rabi_frequencies_hz is empty");
  c.sweep.warm_start = get<bool>(sweep, "warm_start", "sweep");
  c.sweep.delta_omega = kTwoPi * finite(sweep, "delta_omega_hz", "sweep");
  c.sweep.confidence_level = finite(sweep, "confidence_level", "sweep");
  if (!(c.sweep.confidence_level > 0.0 && c.sweep.confidence_level < 1.0))
    throw ConfigError("sweep.confidence_level must lie in (0, 1)");
  c.sweep.second_order = get<bool>(sweep, "second_order", "sweep");

  const json& fit = doc.at("fit");
  try {
    c.loss = LossFunction::parse(get<std::string>(fit, "loss", "fit"),
                                 finite(fit, "huber_delta", "fit"));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(fmt::format("fit: {}", e.what()));
  }
  c.fit = FitConfig::defaults();
  const double guess = 1e3 * finite(fit, "initial_guess_krad_s", "fit");
  c.fit.initial_guess = unpack(Eigen::VectorXd::Constant(SpectrumVector::kSpectralSize, guess));
  const double bound = kTwoPi * finite(fit, "delta_omega_bound_hz", "fit");
  if (!(bound > 0.0)) throw ConfigError("fit.delta_omega_bound_hz must be positive");
  c.fit.lower(8) = -bound;
  c.fit.upper(8) = bound;
  c.fit.max_iterations = get<int>(fit, "max_iterations", "fit");
  c.fit.cost_tol = finite(fit, "cost_tol", "fit");
  c.fit.grad_tol = finite(fit, "grad_tol", "fit");
  c.fit.relative_step = finite(fit, "relative_step", "fit");
  c.fit.observable_weights = get<std::map<std::string, double>>(fit, "observable_weights", "fit");
  c.fit.restarts = get<int>(fit, "restarts", "fit");
  if (c.fit.restarts < 0) throw ConfigError("fit.restarts must be non-negative");
  try {
    c.fit.validate();
  } catch (const Error& e) {
    throw ConfigError(fmt::format("fit: {}", e.what()));
  }

  const json& ramsey = doc.at("ramsey");
  c.ramsey.noise = parse_noise(ramsey.at("noise"), "ramsey.noise");
  c.ramsey.rates = parse_rates(ramsey.at("rates"), "ramsey.rates");
  c.ramsey.nbar_values = get<std::vector<double>>(ramsey, "nbar_values", "ramsey");
  if (c.ramsey.nbar_values.empty()) throw ConfigError("ramsey.nbar_values is empty");
  for (double n : c.ramsey.nbar_values)
    if (!(n >= 0.0) || !std::isfinite(n)) throw ConfigError("ramsey.nbar_values must be non-negative");
  c.ramsey.times = sorted_times(ramsey, "times_s", "ramsey");
  c.ramsey.delta_q1 = kTwoPi * finite(ramsey, "delta_q1_hz", "ramsey");
  c.ramsey.delta_q2 = kTwoPi * finite(ramsey, "delta_q2_hz", "ramsey");
  c.ramsey.fock_dim = fock_dim(ramsey, "ramsey");

  const json& sl = doc.at("spinlock");
  c.spinlock.noise = parse_noise(sl.at("noise"), "spinlock.noise");
  c.spinlock.rates = parse_rates(sl.at("rates"), "spinlock.rates");
  c.spinlock.omega2 = kTwoPi * finite(sl, "omega2_hz", "spinlock");
  if (!(c.spinlock.omega2 > 0.0)) throw ConfigError("spinlock.omega2_hz must be positive");
  for (double d : get<std::vector<double>>(sl, "omega1_offsets_hz", "spinlock")) {
    if (!std::isfinite(d) || !(c.spinlock.omega2 + 0.5 * kTwoPi * d > 0.0))
      throw ConfigError("spinlock.omega1_offsets_hz must keep Omega_1 positive");
    c.spinlock.omega1_offsets.push_back(kTwoPi * d);
  }
  if (c.spinlock.omega1_offsets.empty()) throw ConfigError("spinlock.omega1_offsets_hz is empty");
  c.spinlock.times = sorted_times(sl, "times_s", "spinlock");
  try {
    c.spinlock.initial_state = InitialState::parse(get<std::string>(sl, "initial_state", "spinlock"));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(fmt::format("spinlock: {}", e.what()));
  }
  c.spinlock.fock_dim = fock_dim(sl, "spinlock");
  c.spinlock.shots = get<std::int64_t>(sl, "shots", "spinlock");
  if (c.spinlock.shots < 0) throw ConfigError("spinlock.shots must be non-negative");
  return c;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file {}", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return parse_config(doc);
}

std::string config_digest(const json& document) {
  return fmt::format("{:016x}", fnv1a(document.dump()));
}

}  // namespace qns
