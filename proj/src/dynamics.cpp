#include "qns/dynamics.hpp"

#include <fmt/format.h>

#include <cmath>

namespace qns {

void QubitRates::validate() const {
  for (double r : {gamma1_q1, gamma1_q2, gamma_phi_q1, gamma_phi_q2, gamma_up_q1, gamma_dn_q1,
                   gamma_up_q2, gamma_dn_q2})
    if (!(r >= 0.0) || !std::isfinite(r)) throw Error("non-physical dissipator rate");
}

namespace dressed {
Operator tau_x() { return ops::sigma_x(); }
Operator tau_y() { return ops::sigma_y(); }
Operator tau_z() { return ops::sigma_z(); }
Operator tau_plus() { return ops::sigma_plus(); }
Operator tau_minus() { return ops::sigma_minus(); }
}  // namespace dressed

namespace {

void append_t1_terms(std::vector<Dissipator>& out, const Operator& tz, const Operator& tp,
                     const Operator& tm, double gamma1) {
  if (gamma1 == 0.0) return;
  out.push_back({0.25 * gamma1, tz});
  out.push_back({0.25 * gamma1, tp});
  out.push_back({0.25 * gamma1, tm});
}

}  // namespace

ReducedModel build_reduced_me(const SpectrumVector& s, const DriveConfig& drive,
                              const QubitRates& rates) {
  rates.validate();
  if (!std::isfinite(drive.omega_rabi)) throw Error("Rabi frequency must be finite");
  const std::vector<Index> dims{2, 2};
  const Operator id2 = ops::identity(2);
  const std::array<Operator, 2> tz{kron(dressed::tau_z(), id2), kron(id2, dressed::tau_z())};
  const std::array<Operator, 2> tp{kron(dressed::tau_plus(), id2), kron(id2, dressed::tau_plus())};
  const std::array<Operator, 2> tm{kron(dressed::tau_minus(), id2),
                                   kron(id2, dressed::tau_minus())};

  const double omega1 = drive.omega_rabi + 0.5 * s.delta_omega;
  const double omega2 = drive.omega_rabi - 0.5 * s.delta_omega;
  const Operator h = 0.5 * omega1 * tz[0] + 0.5 * omega2 * tz[1];

  std::vector<Dissipator> local;
  append_t1_terms(local, tz[0], tp[0], tm[0], rates.gamma1_q1);
  append_t1_terms(local, tz[1], tp[1], tm[1], rates.gamma1_q2);
  local.push_back({rates.gamma_dn_q1, tm[0]});
  local.push_back({rates.gamma_up_q1, tp[0]});
  local.push_back({rates.gamma_dn_q2, tm[1]});
  local.push_back({rates.gamma_up_q2, tp[1]});

  Liouvillian generator = lindbladian(h, local, dims);
  const SpectrumMatrix s_plus = s.matrix(+1);
  const SpectrumMatrix s_minus = s.matrix(-1);
  Eigen::MatrixXcd correlated = Eigen::MatrixXcd::Zero(16, 16);
  for (int j = 0; j < 2; ++j) {
    for (int k = 0; k < 2; ++k) {
      correlated += s_minus(j, k) * cross_dissipator_superoperator(tm[k], tm[j]);
      correlated += s_plus(j, k) * cross_dissipator_superoperator(tp[k], tp[j]);
    }
  }
  generator += Liouvillian(std::move(correlated), dims);

  ReducedModel model{std::move(generator), !s.is_physical()};
  return model;
}

ResonatorDrive resolve_resonator_drive(const ShotNoiseParams& p, const DriveConfig& drive) {
  p.validate();
  if (drive.epsilon) {
    return {*drive.epsilon, steady_state_nbar(*drive.epsilon, p.kappa, p.delta_c)};
  }
  return {drive_for_nbar(p.nbar, p.kappa, p.delta_c), p.nbar};
}

namespace {

void check_fock_dim(Index fock_dim) {
  if (fock_dim < 2) throw Error("Fock truncation must keep at least two levels");
}

}  // namespace

Liouvillian build_spinlock_optical_me(const ShotNoiseParams& p, const DriveConfig& drive,
                                      const QubitRates& rates, Index fock_dim) {
  rates.validate();
  check_fock_dim(fock_dim);
  if (!(drive.omega_rabi > 0.0)) throw Error("spin-locking requires a positive Rabi frequency");
  const ResonatorDrive rd = resolve_resonator_drive(p, drive);
  const std::vector<Index> dims{2, 2, fock_dim};
  auto on = [&](const Operator& op, std::size_t k) { return ops::embed(op, k, dims); };

  const Operator a = on(ops::annihilation(fock_dim), 2);
  const Operator n = on(ops::number(fock_dim), 2);
  const Operator id = ops::identity(a.rows());
  const std::array<double, 2> omega{drive.omega1(), drive.omega2()};
  const std::array<double, 2> chi{p.chi1, p.chi2};
  const std::array<std::optional<double>, 2> delta_q{drive.delta_q1, drive.delta_q2};

  Operator h = p.delta_c * n + rd.epsilon * (a + a.adjoint());
  std::vector<Dissipator> dissipators{{p.kappa, a}};
  const std::array<double, 2> gamma1{rates.gamma1_q1, rates.gamma1_q2};
  const std::array<double, 2> up{rates.gamma_up_q1, rates.gamma_up_q2};
  const std::array<double, 2> dn{rates.gamma_dn_q1, rates.gamma_dn_q2};
  for (std::size_t j = 0; j < 2; ++j) {
    const Operator tx = on(dressed::tau_x(), j);
    const Operator tz = on(dressed::tau_z(), j);
    const Operator tp = on(dressed::tau_plus(), j);
    const Operator tm = on(dressed::tau_minus(), j);
    h += 0.5 * omega[j] * tz - chi[j] * (n - rd.nbar * id) * tx;
    if (delta_q[j]) {
      // Residual lab-frame detuning; sigma_z = -tau_x in the dressed frame.
      const double residual = *delta_q[j] + 2.0 * chi[j] * rd.nbar;
      h += -0.5 * residual * tx;
    }
    append_t1_terms(dissipators, tz, tp, tm, gamma1[j]);
    dissipators.push_back({dn[j], tm});
    dissipators.push_back({up[j], tp});
  }
  return lindbladian(h, dissipators, dims, 2);
}

Liouvillian build_ramsey_optical_me(const ShotNoiseParams& p, const DriveConfig& drive,
                                    const QubitRates& rates, Index fock_dim) {
  rates.validate();
  check_fock_dim(fock_dim);
  if (!drive.delta_q1 || !drive.delta_q2)
    throw Error("Ramsey model needs both qubit-drive detunings");
  const ResonatorDrive rd = resolve_resonator_drive(p, drive);
  const std::vector<Index> dims{2, 2, fock_dim};
  auto on = [&](const Operator& op, std::size_t k) { return ops::embed(op, k, dims); };

  const Operator a = on(ops::annihilation(fock_dim), 2);
  const Operator n = on(ops::number(fock_dim), 2);
  const std::array<double, 2> delta_q{*drive.delta_q1, *drive.delta_q2};
  const std::array<double, 2> chi{p.chi1, p.chi2};
  const std::array<double, 2> gamma1{rates.gamma1_q1, rates.gamma1_q2};
  const std::array<double, 2> gamma_phi{rates.gamma_phi_q1, rates.gamma_phi_q2};

  Operator h = p.delta_c * n + rd.epsilon * (a + a.adjoint());
  std::vector<Dissipator> dissipators{{p.kappa, a}};
  for (std::size_t j = 0; j < 2; ++j) {
    const Operator sz = on(ops::sigma_z(), j);
    h += 0.5 * delta_q[j] * sz + chi[j] * n * sz;
    dissipators.push_back({gamma1[j], on(ops::sigma_minus(), j)});
    dissipators.push_back({0.5 * gamma_phi[j], sz});
  }
  return lindbladian(h, dissipators, dims, 2);
}

DensityMatrix resonator_steady_state(double epsilon, double kappa, double delta_c,
                                     Index fock_dim) {
  check_fock_dim(fock_dim);
  if (!(kappa > 0.0)) throw Error("kappa must be positive");
  const Operator a = ops::annihilation(fock_dim);
  const Operator h = delta_c * ops::number(fock_dim) + epsilon * (a + a.adjoint());
  const std::array<Dissipator, 1> d{Dissipator{kappa, a}};
  const Liouvillian l = lindbladian(h, d, {fock_dim}, 0);
  DensityMatrix rho = steady_state(l);
  const double top = rho(fock_dim - 1, fock_dim - 1).real();
  if (top > kMaxTopFockPopulation)
    throw TruncationError(fmt::format(
        "resonator steady state populates the top Fock level ({:.2e}); increase the Fock "
        "dimension beyond {}",
        top, fock_dim));
  return rho;
}

DressedLabel parse_dressed_label(std::string_view text) {
  if (text == "+x") return DressedLabel::PlusX;
  if (text == "-x") return DressedLabel::MinusX;
  throw Error(fmt::format("unknown dressed state label '{}'", text));
}

std::string to_string(DressedLabel label) { return label == DressedLabel::PlusX ? "+x" : "-x"; }

InitialState InitialState::parse(std::string_view text) {
  if (text.size() != 4) throw Error(fmt::format("initial state label '{}' must look like +x-x", text));
  return {parse_dressed_label(text.substr(0, 2)), parse_dressed_label(text.substr(2, 2))};
}

std::string InitialState::label() const { return to_string(q1) + to_string(q2); }

std::vector<InitialState> all_initial_states() {
  using enum DressedLabel;
  return {{PlusX, PlusX}, {PlusX, MinusX}, {MinusX, PlusX}, {MinusX, MinusX}};
}

StateVector dressed_ket(DressedLabel label) {
  StateVector v = StateVector::Zero(2);
  v(label == DressedLabel::PlusX ? 0 : 1) = 1.0;
  return v;
}

DensityMatrix spinlock_initial_state(const InitialState& state,
                                     const std::optional<ResonatorSteady>& resonator) {
  const StateVector psi = kron(dressed_ket(state.q1), dressed_ket(state.q2));
  const DensityMatrix qubits = DensityMatrix::pure(psi);
  if (!resonator) return qubits;
  const DensityMatrix cavity = resonator_steady_state(resonator->epsilon, resonator->kappa,
                                                      resonator->delta_c, resonator->fock_dim);
  Operator rho = kron(qubits.matrix(), cavity.matrix());
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityMatrix(std::move(rho));
}

namespace {

char pauli_char(Pauli p) {
  switch (p) {
    case Pauli::I: return 'i';
    case Pauli::X: return 'x';
    case Pauli::Y: return 'y';
    case Pauli::Z: return 'z';
  }
  return '?';
}

Pauli pauli_from_char(char c) {
  switch (c) {
    case 'x': return Pauli::X;
    case 'y': return Pauli::Y;
    case 'z': return Pauli::Z;
    default: throw Error(fmt::format("unknown Pauli axis '{}'", c));
  }
}

}  // namespace

TwoQubitObservable TwoQubitObservable::parse(std::string_view label) {
  if (label == "tz1") return {Pauli::Z, Pauli::I, false};
  if (label == "tz2") return {Pauli::I, Pauli::Z, false};
  if (label.size() == 3 && label[0] == 'K')
    return {pauli_from_char(label[1]), pauli_from_char(label[2]), true};
  if (label.size() == 3 && label[0] == 't' && (label[2] == '1' || label[2] == '2')) {
    const Pauli p = pauli_from_char(label[1]);
    return label[2] == '1' ? TwoQubitObservable{p, Pauli::I, false}
                           : TwoQubitObservable{Pauli::I, p, false};
  }
  throw Error(fmt::format("unknown observable label '{}'", label));
}

std::string TwoQubitObservable::label() const {
  if (covariance) return fmt::format("K{}{}", pauli_char(first), pauli_char(second));
  if (second == Pauli::I) return fmt::format("t{}1", pauli_char(first));
  return fmt::format("t{}2", pauli_char(second));
}

std::vector<TwoQubitObservable> table_observables() {
  std::vector<TwoQubitObservable> out{{Pauli::Z, Pauli::I, false}, {Pauli::I, Pauli::Z, false}};
  for (Pauli a : {Pauli::X, Pauli::Y, Pauli::Z})
    for (Pauli b : {Pauli::X, Pauli::Y, Pauli::Z}) out.push_back({a, b, true});
  return out;
}

Operator dressed_pauli(Pauli p) {
  switch (p) {
    case Pauli::I: return ops::identity(2);
    case Pauli::X: return dressed::tau_x();
    case Pauli::Y: return dressed::tau_y();
    case Pauli::Z: return dressed::tau_z();
  }
  throw Error("invalid Pauli axis");
}

double observable_value(const TwoQubitObservable& obs, const Operator& rho_qubits) {
  if (rho_qubits.rows() != 4 || rho_qubits.cols() != 4)
    throw Error("two-qubit observables need a 4x4 state");
  const Operator a = dressed_pauli(obs.first);
  const Operator b = dressed_pauli(obs.second);
  const double joint = expect(kron(a, b), rho_qubits);
  if (!obs.covariance) return joint;
  const double m1 = expect(kron(a, ops::identity(2)), rho_qubits);
  const double m2 = expect(kron(ops::identity(2), b), rho_qubits);
  return joint - m1 * m2;
}

Eigen::MatrixXd decay_curves(const Liouvillian& generator, const DensityMatrix& rho0,
                             std::span<const double> times,
                             std::span<const Operator> observables) {
  const auto states = propagate(generator, rho0, times);
  Eigen::MatrixXd out(static_cast<Index>(times.size()), static_cast<Index>(observables.size()));
  for (std::size_t q = 0; q < states.size(); ++q)
    for (std::size_t r = 0; r < observables.size(); ++r)
      out(static_cast<Index>(q), static_cast<Index>(r)) = expect(observables[r], states[q]);
  return out;
}

double top_fock_population(const Operator& rho, std::span<const Index> dims, int boson_subsystem) {
  if (boson_subsystem < 0) return 0.0;
  const std::array<std::size_t, 1> keep{static_cast<std::size_t>(boson_subsystem)};
  const Operator cavity = partial_trace(rho, dims, keep);
  return cavity(cavity.rows() - 1, cavity.cols() - 1).real();
}

void check_truncation(const DensityMatrix& rho, const Liouvillian& generator) {
  if (generator.boson_subsystem() < 0) return;
  const double top =
      top_fock_population(rho.matrix(), generator.subsystem_dims(), generator.boson_subsystem());
  if (top > kMaxTopFockPopulation) {
    const Index n = generator.subsystem_dims()[static_cast<std::size_t>(generator.boson_subsystem())];
    throw TruncationError(fmt::format(
        "top Fock population {:.2e} exceeds {:.0e}; increase the Fock dimension beyond {}", top,
        kMaxTopFockPopulation, n));
  }
}

StateGrid qubit_state_grid(const Liouvillian& generator, std::span<const DensityMatrix> initial,
                           std::span<const double> times) {
  const auto& dims = generator.subsystem_dims();
  const bool two_qubits = (dims.size() == 2 && dims[0] == 2 && dims[1] == 2) ||
                          (dims.size() == 3 && dims[0] == 2 && dims[1] == 2 &&
                           generator.boson_subsystem() == 2);
  if (!two_qubits) throw Error("generator does not describe two qubits");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < 0.0) throw Error("propagation times must be non-negative");
    if (k > 0 && times[k] < times[k - 1]) throw Error("propagation times must be sorted");
  }
  const Propagator prop(generator);
  const std::array<std::size_t, 2> keep{0, 1};
  StateGrid grid;
  for (const auto& rho0 : initial) {
    if (rho0.dim() != generator.hilbert_dim())
      throw Error("initial state dimension does not match generator");
    check_truncation(rho0, generator);
    std::vector<Operator> row;
    for (const auto& v : prop.evolve(rho0.vectorized(), times)) {
      const DensityMatrix rho = to_density_matrix(v, rho0.dim());
      check_truncation(rho, generator);
      row.push_back(dims.size() == 2 ? rho.matrix() : partial_trace(rho.matrix(), dims, keep));
    }
    grid.push_back(std::move(row));
  }
  return grid;
}

std::vector<Operator> qubit_states(const Liouvillian& generator, const DensityMatrix& rho0,
                                   std::span<const double> times) {
  return qubit_state_grid(generator, std::span<const DensityMatrix>(&rho0, 1), times).front();
}

Eigen::MatrixXd decay_curves(const Liouvillian& generator, const DensityMatrix& rho0,
                             std::span<const double> times,
                             std::span<const TwoQubitObservable> observables) {
  const auto states = qubit_states(generator, rho0, times);
  Eigen::MatrixXd out(static_cast<Index>(times.size()), static_cast<Index>(observables.size()));
  for (std::size_t q = 0; q < states.size(); ++q)
    for (std::size_t r = 0; r < observables.size(); ++r)
      out(static_cast<Index>(q), static_cast<Index>(r)) =
          observable_value(observables[r], states[q]);
  return out;
}

RamseyCurves ramsey_curves(const ShotNoiseParams& p, const DriveConfig& drive,
                           const QubitRates& rates, Index fock_dim, std::span<const double> times) {
  const Liouvillian l = build_ramsey_optical_me(p, drive, rates, fock_dim);
  const ResonatorDrive rd = resolve_resonator_drive(p, drive);
  const DensityMatrix cavity = resonator_steady_state(rd.epsilon, p.kappa, p.delta_c, fock_dim);

  // exp(-i pi/4 sigma_y) = cos(pi/4) I - i sin(pi/4) sigma_y
  const double c = std::cos(M_PI / 4.0);
  const Operator pulse = c * ops::identity(2) - Complex(0, c) * ops::sigma_y();
  const Operator u = kron({pulse, pulse, ops::identity(fock_dim)});
  StateVector ground = StateVector::Zero(2);
  ground(1) = 1.0;
  const Operator qubits = kron(ground * ground.adjoint(), ground * ground.adjoint());
  Operator rho0 = u * kron(qubits, cavity.matrix()) * u.adjoint();
  rho0 = 0.5 * (rho0 + rho0.adjoint()).eval();

  const std::vector<Index> dims{2, 2, fock_dim};
  const std::array<Operator, 3> measured{
      u.adjoint() * ops::embed(ops::sigma_z(), 0, dims) * u,
      u.adjoint() * ops::embed(ops::sigma_z(), 1, dims) * u,
      u.adjoint() * (ops::embed(ops::sigma_z(), 0, dims) * ops::embed(ops::sigma_z(), 1, dims)) * u};

  const DensityMatrix initial(std::move(rho0));
  const auto states = propagate(l, initial, times);
  RamseyCurves out;
  out.times.assign(times.begin(), times.end());
  for (const auto& rho : states) {
    check_truncation(rho, l);
    const double z1 = expect(measured[0], rho);
    const double z2 = expect(measured[1], rho);
    const double zz = expect(measured[2], rho);
    out.sz1.push_back(z1);
    out.sz2.push_back(z2);
    out.czz.push_back(zz - z1 * z2);
  }
  return out;
}

}  // namespace qns
