#pragma once

// Master-equation builders for two driven qubits under photon shot noise.
//
// Spin-locking models work in the dressed basis of each qubit: index 0 is
// |+x>, index 1 is |-x>, tau_z = diag(1, -1) and tau_+ = |+x><-x|. Ramsey
// models work in the lab sigma_z basis described in qcore.hpp. Full optical
// models order subsystems as qubit 1, qubit 2, resonator.

#include "qns/noise.hpp"
#include "qns/qcore.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qns {

struct QubitRates {
  double gamma1_q1 = 0.0;  ///< 1/T1 of qubit 1, 1/s
  double gamma1_q2 = 0.0;
  double gamma_phi_q1 = 0.0;  ///< lab-frame pure dephasing, 1/s
  double gamma_phi_q2 = 0.0;
  double gamma_up_q1 = 0.0;  ///< spin-locking-frame excitation, 1/s
  double gamma_dn_q1 = 0.0;  ///< spin-locking-frame decay, 1/s
  double gamma_up_q2 = 0.0;
  double gamma_dn_q2 = 0.0;

  void validate() const;
};

struct DriveConfig {
  double omega_rabi = 0.0;   ///< mean Rabi frequency, rad/s
  double delta_omega = 0.0;  ///< Omega_1 - Omega_2, rad/s
  /// Qubit-drive detunings, rad/s. Spin-locking builders cancel the Stark
  /// shift (delta_q = -2 chi nbar) unless these are set explicitly.
  std::optional<double> delta_q1;
  std::optional<double> delta_q2;
  /// Resonator drive amplitude, rad/s. Derived from nbar when unset.
  std::optional<double> epsilon;

  double omega1() const { return omega_rabi + 0.5 * delta_omega; }
  double omega2() const { return omega_rabi - 0.5 * delta_omega; }
};

namespace dressed {
Operator tau_x();
Operator tau_y();
Operator tau_z();
Operator tau_plus();
Operator tau_minus();
}  // namespace dressed

struct ReducedModel {
  Liouvillian generator;
  /// Set when the spectrum matrix is not positive semidefinite at +Omega or -Omega.
  bool non_physical_spectra = false;
};

/// Two-qubit dressed-frame generator: Hamiltonian 1/2 (Omega + dW/2) tau_z1 +
/// 1/2 (Omega - dW/2) tau_z2 with dW = s.delta_omega, correlated dissipators
/// from S(+-Omega), and 1/4 Gamma1_j (D[tau_z] + D[tau_+] + D[tau_-]) per qubit.
/// Nonzero gamma_up/gamma_dn rates add gamma_dn D[tau_-] + gamma_up D[tau_+].
ReducedModel build_reduced_me(const SpectrumVector& s, const DriveConfig& drive,
                              const QubitRates& rates);

/// Effective drive amplitude and photon number for an optical model.
struct ResonatorDrive {
  double epsilon;
  double nbar;
};
ResonatorDrive resolve_resonator_drive(const ShotNoiseParams& p, const DriveConfig& drive);

/// Qubit, qubit, resonator generator in the spin-locking frame.
Liouvillian build_spinlock_optical_me(const ShotNoiseParams& p, const DriveConfig& drive,
                                      const QubitRates& rates, Index fock_dim);

/// Qubit, qubit, resonator generator in the frame of the qubit drives, without pulses.
/// Requires drive.delta_q1 and drive.delta_q2.
Liouvillian build_ramsey_optical_me(const ShotNoiseParams& p, const DriveConfig& drive,
                                    const QubitRates& rates, Index fock_dim);

/// Steady state of a driven, damped resonator alone.
DensityMatrix resonator_steady_state(double epsilon, double kappa, double delta_c, Index fock_dim);

enum class DressedLabel { PlusX, MinusX };

DressedLabel parse_dressed_label(std::string_view text);
std::string to_string(DressedLabel label);

/// Dressed product initial state, e.g. "+x-x".
struct InitialState {
  DressedLabel q1;
  DressedLabel q2;

  static InitialState parse(std::string_view text);
  std::string label() const;
  bool operator==(const InitialState&) const = default;
};

/// The four dressed product states in the order +x+x, +x-x, -x+x, -x-x.
std::vector<InitialState> all_initial_states();

StateVector dressed_ket(DressedLabel label);

struct ResonatorSteady {
  double epsilon;
  double kappa;
  double delta_c;
  Index fock_dim;
};

/// Dressed product state, optionally tensored with the resonator steady state.
DensityMatrix spinlock_initial_state(const InitialState& state,
                                     const std::optional<ResonatorSteady>& resonator = {});

enum class Pauli { I, X, Y, Z };

/// tau_z1, tau_z2 or a covariance K_l1l2 = <tau_l1 tau_l2> - <tau_l1><tau_l2>.
struct TwoQubitObservable {
  Pauli first = Pauli::I;
  Pauli second = Pauli::I;
  bool covariance = false;

  static TwoQubitObservable parse(std::string_view label);
  std::string label() const;
  /// Single-qubit observables have |value| <= 1, covariances |value| <= 2.
  bool is_single() const { return !covariance; }
  bool operator==(const TwoQubitObservable&) const = default;
};

/// tz1, tz2, Kxx, Kxy, ..., Kzz.
std::vector<TwoQubitObservable> table_observables();

Operator dressed_pauli(Pauli p);

/// Value of an observable on a two-qubit density matrix (4x4, dressed basis).
double observable_value(const TwoQubitObservable& obs, const Operator& rho_qubits);

/// Entry (q, r) = Re Tr[O_r rho(t_q)].
Eigen::MatrixXd decay_curves(const Liouvillian& generator, const DensityMatrix& rho0,
                             std::span<const double> times, std::span<const Operator> observables);

/// Two-qubit observable curves. For a generator with a resonator, the
/// resonator is traced out first; truncation is checked on every state
/// (top Fock population above 1e-6 throws TruncationError).
Eigen::MatrixXd decay_curves(const Liouvillian& generator, const DensityMatrix& rho0,
                             std::span<const double> times,
                             std::span<const TwoQubitObservable> observables);

class TruncationError : public Error {
 public:
  using Error::Error;
};

inline constexpr double kMaxTopFockPopulation = 1e-6;

/// Population of the highest Fock level of the resonator factor.
double top_fock_population(const Operator& rho, std::span<const Index> dims, int boson_subsystem);

/// Throws TruncationError when the top Fock population exceeds the limit.
void check_truncation(const DensityMatrix& rho, const Liouvillian& generator);

/// Qubit-reduced (4x4) states of an evolution under any of the builders.
std::vector<Operator> qubit_states(const Liouvillian& generator, const DensityMatrix& rho0,
                                   std::span<const double> times);

/// Qubit-reduced states indexed as [initial state][time].
using StateGrid = std::vector<std::vector<Operator>>;

/// qubit_states for several initial states, sharing one diagonalization of the generator.
StateGrid qubit_state_grid(const Liouvillian& generator, std::span<const DensityMatrix> initial,
                           std::span<const double> times);

struct RamseyCurves {
  std::vector<double> times;
  std::vector<double> sz1;
  std::vector<double> sz2;
  std::vector<double> czz;  ///< <sz1 sz2> - <sz1><sz2>
};

/// Ramsey sequence: both qubits start in the ground state with the resonator
/// in its (bare-detuning) steady state, receive exp(-i pi/4 sigma_y), evolve
/// for t and receive the same pulse before measurement.
RamseyCurves ramsey_curves(const ShotNoiseParams& p, const DriveConfig& drive,
                           const QubitRates& rates, Index fock_dim, std::span<const double> times);

}  // namespace qns
