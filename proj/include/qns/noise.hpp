#pragma once

// Photon shot-noise spectra of a driven, damped resonator dispersively
// coupled to two qubits, and the flat parameterization used by the fitter.
// All frequencies and spectral densities are in rad/s.

#include "qns/qcore.hpp"

#include <array>
#include <span>
#include <string_view>

namespace qns {

struct ShotNoiseParams {
  double chi1 = 0.0;     ///< dispersive shift of qubit 1, rad/s (signed)
  double chi2 = 0.0;     ///< dispersive shift of qubit 2, rad/s (signed)
  double kappa = 1.0;    ///< resonator damping, 1/s
  double delta_c = 0.0;  ///< resonator minus drive frequency, rad/s
  double nbar = 0.0;     ///< steady-state photon number

  void validate() const;
};

using SpectrumMatrix = Eigen::Matrix2cd;

/// S_jk(w) = chi_j chi_k nbar kappa / ((w + delta_c)^2 + (kappa/2)^2).
SpectrumMatrix shot_noise_spectrum(const ShotNoiseParams& p, double omega);

/// C_jk(t) = chi_j chi_k nbar exp(-kappa|t|/2 - i delta_c t).
Eigen::Matrix2cd correlation_function(const ShotNoiseParams& p, double t);

double steady_state_nbar(double epsilon, double kappa, double delta_c);

/// Inverse of steady_state_nbar: the drive amplitude giving `nbar`.
double drive_for_nbar(double nbar, double kappa, double delta_c);

struct SpectrumVector {
  static constexpr std::size_t kSpectralSize = 8;
  static constexpr std::size_t kSize = 9;

  double s11_plus = 0.0;
  double s22_plus = 0.0;
  double re_s12_plus = 0.0;
  double im_s12_plus = 0.0;
  double s11_minus = 0.0;
  double s22_minus = 0.0;
  double re_s12_minus = 0.0;
  double im_s12_minus = 0.0;
  double delta_omega = 0.0;

  /// Spectrum matrix at +Omega (sign > 0) or -Omega (sign < 0), with S21 = S12*.
  SpectrumMatrix matrix(int sign) const;

  /// Diagonals non-negative and |S12|^2 <= S11 S22 at both signs, up to `tol`
  /// relative to the largest diagonal entry.
  bool is_physical(double tol = 1e-9) const;

  /// Samples a model spectrum at +-omega.
  static SpectrumVector from_model(const ShotNoiseParams& p, double omega,
                                   double delta_omega = 0.0);

  bool operator==(const SpectrumVector&) const = default;
};

/// Component names in pack order.
inline constexpr std::array<std::string_view, SpectrumVector::kSize> kSpectrumComponentNames = {
    "s11_plus",  "s22_plus",  "re_s12_plus",  "im_s12_plus", "s11_minus",
    "s22_minus", "re_s12_minus", "im_s12_minus", "delta_omega"};

/// Order: s11+, s22+, Re s12+, Im s12+, s11-, s22-, Re s12-, Im s12-, delta_omega.
Eigen::VectorXd pack(const SpectrumVector& s);
/// Accepts 8 (delta_omega = 0) or 9 values.
SpectrumVector unpack(std::span<const double> values);
SpectrumVector unpack(const Eigen::VectorXd& values);

}  // namespace qns
