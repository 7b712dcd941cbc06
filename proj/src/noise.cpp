#include "qns/noise.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace qns {

void ShotNoiseParams::validate() const {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw Error("kappa must be positive");
  if (!(nbar >= 0.0) || !std::isfinite(nbar)) throw Error("nbar must be non-negative");
  if (!std::isfinite(chi1) || !std::isfinite(chi2) || !std::isfinite(delta_c))
    throw Error("shot-noise parameters must be finite");
}

SpectrumMatrix shot_noise_spectrum(const ShotNoiseParams& p, double omega) {
  p.validate();
  const double detuning = omega + p.delta_c;
  const double lorentz = p.nbar * p.kappa / (detuning * detuning + 0.25 * p.kappa * p.kappa);
  SpectrumMatrix s;
  s << p.chi1 * p.chi1 * lorentz, p.chi1 * p.chi2 * lorentz, p.chi2 * p.chi1 * lorentz,
      p.chi2 * p.chi2 * lorentz;
  return s;
}

Eigen::Matrix2cd correlation_function(const ShotNoiseParams& p, double t) {
  p.validate();
  const Complex envelope =
      p.nbar * std::exp(Complex(-0.5 * p.kappa * std::abs(t), -p.delta_c * t));
  Eigen::Matrix2cd c;
  c << p.chi1 * p.chi1 * envelope, p.chi1 * p.chi2 * envelope, p.chi2 * p.chi1 * envelope,
      p.chi2 * p.chi2 * envelope;
  return c;
}

double steady_state_nbar(double epsilon, double kappa, double delta_c) {
  if (!(kappa > 0.0)) throw Error("kappa must be positive");
  return epsilon * epsilon / (0.25 * kappa * kappa + delta_c * delta_c);
}

double drive_for_nbar(double nbar, double kappa, double delta_c) {
  if (!(kappa > 0.0)) throw Error("kappa must be positive");
  if (!(nbar >= 0.0)) throw Error("nbar must be non-negative");
  return std::sqrt(nbar * (0.25 * kappa * kappa + delta_c * delta_c));
}

SpectrumMatrix SpectrumVector::matrix(int sign) const {
  const bool plus = sign > 0;
  const Complex s12 = plus ? Complex(re_s12_plus, im_s12_plus) : Complex(re_s12_minus, im_s12_minus);
  SpectrumMatrix m;
  m << (plus ? s11_plus : s11_minus), s12, std::conj(s12), (plus ? s22_plus : s22_minus);
  return m;
}

bool SpectrumVector::is_physical(double tol) const {
  for (int sign : {+1, -1}) {
    const SpectrumMatrix m = matrix(sign);
    const double a = m(0, 0).real();
    const double d = m(1, 1).real();
    const double scale = std::max({std::abs(a), std::abs(d), 1e-300});
    if (a < -tol * scale || d < -tol * scale) return false;
    if (std::norm(m(0, 1)) > a * d + tol * scale * scale) return false;
  }
  return true;
}

SpectrumVector SpectrumVector::from_model(const ShotNoiseParams& p, double omega,
                                          double delta_omega) {
  const SpectrumMatrix plus = shot_noise_spectrum(p, omega);
  const SpectrumMatrix minus = shot_noise_spectrum(p, -omega);
  SpectrumVector s;
  s.s11_plus = plus(0, 0).real();
  s.s22_plus = plus(1, 1).real();
  s.re_s12_plus = plus(0, 1).real();
  s.im_s12_plus = plus(0, 1).imag();
  s.s11_minus = minus(0, 0).real();
  s.s22_minus = minus(1, 1).real();
  s.re_s12_minus = minus(0, 1).real();
  s.im_s12_minus = minus(0, 1).imag();
  s.delta_omega = delta_omega;
  return s;
}

Eigen::VectorXd pack(const SpectrumVector& s) {
  Eigen::VectorXd v(SpectrumVector::kSize);
  v << s.s11_plus, s.s22_plus, s.re_s12_plus, s.im_s12_plus, s.s11_minus, s.s22_minus,
      s.re_s12_minus, s.im_s12_minus, s.delta_omega;
  return v;
}

SpectrumVector unpack(std::span<const double> v) {
  if (v.size() != SpectrumVector::kSize && v.size() != SpectrumVector::kSpectralSize)
    throw Error(fmt::format("spectrum vector needs 8 or 9 values, got {}", v.size()));
  SpectrumVector s;
  s.s11_plus = v[0];
  s.s22_plus = v[1];
  s.re_s12_plus = v[2];
  s.im_s12_plus = v[3];
  s.s11_minus = v[4];
  s.s22_minus = v[5];
  s.re_s12_minus = v[6];
  s.im_s12_minus = v[7];
  s.delta_omega = v.size() == SpectrumVector::kSize ? v[8] : 0.0;
  return s;
}

SpectrumVector unpack(const Eigen::VectorXd& values) {
  return unpack(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())));
}

}  // namespace qns
