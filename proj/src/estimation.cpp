#include "qns/estimation.hpp"

#include "qns/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace qns {

FitConfig FitConfig::defaults() {
  FitConfig c;
  const Eigen::VectorXd guess = Eigen::VectorXd::Constant(SpectrumVector::kSize, 1e3);
  c.initial_guess = unpack(guess);
  c.initial_guess.delta_omega = 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  c.lower = Eigen::VectorXd::Constant(SpectrumVector::kSize, -inf);
  c.upper = Eigen::VectorXd::Constant(SpectrumVector::kSize, inf);
  for (int i : {0, 1, 4, 5}) c.lower(i) = 0.0;
  c.lower(8) = -2.0 * M_PI * 200e3;
  c.upper(8) = 2.0 * M_PI * 200e3;
  return c;
}

void FitConfig::validate() const {
  const auto n = static_cast<Index>(SpectrumVector::kSize);
  if (lower.size() != n || upper.size() != n) throw Error("fit bounds need 9 entries");
  if ((lower.array() > upper.array()).any()) throw Error("fit lower bound exceeds upper bound");
  for (int i : {0, 1, 4, 5})
    if (lower(i) < 0.0) throw Error("self-spectra must be bounded below by zero");
  if (max_iterations < 1) throw Error("max_iterations must be positive");
  if (!(relative_step > 0.0)) throw Error("finite-difference step must be positive");
  for (const auto& [label, w] : observable_weights) {
    TwoQubitObservable::parse(label);
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("observable weights must be non-negative");
  }
}

LeastSquaresOptions FitConfig::solver_options() const {
  LeastSquaresOptions o;
  o.max_iterations = max_iterations;
  o.cost_tol = cost_tol;
  o.grad_tol = grad_tol;
  o.relative_step = relative_step;
  o.step_floor = Eigen::VectorXd::Constant(SpectrumVector::kSize, spectral_step_floor);
  o.step_floor(8) = delta_omega_step_floor;
  o.lower = lower;
  o.upper = upper;
  o.workers = workers;
  return o;
}

// ----------------------------------------------------------------------------
// evaluator

namespace {

constexpr std::array<Pauli, 3> kAxes{Pauli::X, Pauli::Y, Pauli::Z};

/// Rows r with Tr[O_r rho] = row_r . vec(rho): 3 tau_a x I, 3 I x tau_b, 9 tau_a x tau_b.
Eigen::MatrixXcd functional_rows() {
  Eigen::MatrixXcd rows(15, 16);
  auto row_of = [](const Operator& o) {
    const Operator t = o.transpose();
    return Eigen::Map<const Eigen::RowVectorXcd>(t.data(), t.size()).eval();
  };
  const Operator id = ops::identity(2);
  for (int a = 0; a < 3; ++a) rows.row(a) = row_of(kron(dressed_pauli(kAxes[a]), id));
  for (int b = 0; b < 3; ++b) rows.row(3 + b) = row_of(kron(id, dressed_pauli(kAxes[b])));
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      rows.row(6 + 3 * a + b) = row_of(kron(dressed_pauli(kAxes[a]), dressed_pauli(kAxes[b])));
  return rows;
}

int axis_index(Pauli p) { return static_cast<int>(p) - 1; }

double value_from_functionals(const TwoQubitObservable& obs, const Eigen::VectorXd& f) {
  if (!obs.covariance) {
    if (obs.second == Pauli::I) return f(axis_index(obs.first));
    return f(3 + axis_index(obs.second));
  }
  const int a = axis_index(obs.first);
  const int b = axis_index(obs.second);
  return f(6 + 3 * a + b) - f(a) * f(3 + b);
}

}  // namespace

ReducedModelEvaluator::ReducedModelEvaluator(const ObservationSet& data, const QubitRates& rates)
    : rates_(rates), omega_rabi_(data.omega_rabi) {
  rates_.validate();
  if (data.records.empty()) throw Error("cannot fit an empty dataset");
  if (!(omega_rabi_ > 0.0)) throw Error("dataset Rabi frequency must be positive");
  std::vector<InitialState> states;
  for (const auto& r : data.records) {
    if (std::find(states.begin(), states.end(), r.state) == states.end()) states.push_back(r.state);
    if (std::find(times_.begin(), times_.end(), r.time) == times_.end()) times_.push_back(r.time);
    if (std::find(observables_.begin(), observables_.end(), r.observable) == observables_.end())
      observables_.push_back(r.observable);
  }
  std::sort(times_.begin(), times_.end());
  for (const auto& s : states) initial_states_.push_back(spinlock_initial_state(s).vectorized());

  const auto n = static_cast<Index>(data.records.size());
  means_.resize(n);
  inv_std_.resize(n);
  weights_ = Eigen::VectorXd::Ones(n);
  for (Index i = 0; i < n; ++i) {
    const Record& r = data.records[static_cast<std::size_t>(i)];
    if (!(r.std > 0.0)) throw Error(fmt::format("record {} has a non-positive std", i));
    record_state_.push_back(static_cast<std::size_t>(
        std::find(states.begin(), states.end(), r.state) - states.begin()));
    record_time_.push_back(static_cast<std::size_t>(
        std::lower_bound(times_.begin(), times_.end(), r.time) - times_.begin()));
    record_observable_.push_back(static_cast<std::size_t>(
        std::find(observables_.begin(), observables_.end(), r.observable) - observables_.begin()));
    means_(i) = r.mean;
    inv_std_(i) = 1.0 / r.std;
  }
}

void ReducedModelEvaluator::set_observable_weights(const std::map<std::string, double>& weights) {
  for (Index i = 0; i < weights_.size(); ++i) {
    const auto& obs = observables_[record_observable_[static_cast<std::size_t>(i)]];
    const auto it = weights.find(obs.label());
    weights_(i) = it == weights.end() ? 1.0 : it->second;
  }
}

Eigen::VectorXd ReducedModelEvaluator::model_values(const Eigen::VectorXd& theta) const {
  static const Eigen::MatrixXcd rows = functional_rows();
  const SpectrumVector s = unpack(theta);
  DriveConfig drive;
  drive.omega_rabi = omega_rabi_;
  const ReducedModel model = build_reduced_me(s, drive, rates_);
  const Propagator prop(model.generator);

  // functionals[state][time] -> 15 expectation values
  std::vector<std::vector<Eigen::VectorXd>> functionals(initial_states_.size());
  for (std::size_t st = 0; st < initial_states_.size(); ++st) {
    const auto states = prop.evolve(initial_states_[st], times_);
    for (const auto& v : states) {
      // hermitize implicitly: Re Tr[O rho] for Hermitian O
      functionals[st].push_back((rows * v).real());
    }
  }
  Eigen::VectorXd out(means_.size());
  for (Index i = 0; i < out.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    out(i) = value_from_functionals(observables_[record_observable_[k]],
                                    functionals[record_state_[k]][record_time_[k]]);
  }
  return out;
}

Eigen::VectorXd ReducedModelEvaluator::residuals(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd model = model_values(theta);
  return (weights_.array() * (means_ - model).array() * inv_std_.array()).matrix();
}

Eigen::VectorXd residuals(const Eigen::VectorXd& theta, const ObservationSet& data,
                          const QubitRates& rates) {
  return ReducedModelEvaluator(data, rates).residuals(theta);
}

// ----------------------------------------------------------------------------
// fitting

FitResult fit_spectrum(const ObservationSet& data, const FitConfig& config,
                       const LossFunction& loss, const QubitRates& rates) {
  config.validate();
  ReducedModelEvaluator evaluator(data, rates);
  evaluator.set_observable_weights(config.observable_weights);
  const ResidualFunction f = [&evaluator](const Eigen::VectorXd& x) {
    return evaluator.residuals(x);
  };
  const LeastSquaresOptions options = config.solver_options();

  std::vector<Eigen::VectorXd> starts{pack(config.initial_guess)};
  for (int r = 0; r < config.restarts; ++r) {
    CounterRng rng(config.restart_seed, {0x5ea7ULL, static_cast<std::uint64_t>(r)});
    Eigen::VectorXd x = starts.front();
    for (Index i = 0; i < 8; ++i) x(i) *= rng.uniform(0.5, 1.5);
    x(8) += rng.uniform(-2.0 * M_PI * 20e3, 2.0 * M_PI * 20e3);
    starts.push_back(x);
  }

  LeastSquaresResult best;
  bool have_best = false;
  for (const auto& x0 : starts) {
    LeastSquaresResult r = robust_least_squares(f, x0, loss, options);
    if (!have_best || r.cost < best.cost) {
      best = std::move(r);
      have_best = true;
    }
  }

  FitResult out;
  out.theta_hat = unpack(best.x);
  out.final_cost = best.cost;
  out.residuals = best.residuals;
  out.jacobian = best.jacobian;
  out.fd_step = best.step;
  out.converged = best.converged;
  out.iterations = best.iterations;
  out.evaluations = best.evaluations;
  out.step_fallbacks = best.step_fallbacks;
  out.projected_gradient = best.projected_gradient;
  out.status = best.status;
  out.non_physical = !out.theta_hat.is_physical();
  return out;
}

}  // namespace qns
