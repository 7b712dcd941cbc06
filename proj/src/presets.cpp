#include "qns/presets.hpp"

namespace qns::presets {

namespace {

ShotNoiseParams device_couplings() {
  ShotNoiseParams p;
  p.chi1 = kTwoPi * -29.1e3;
  p.chi2 = kTwoPi * -59.5e3;
  p.kappa = kTwoPi * 198e3;
  return p;
}

}  // namespace

ShotNoiseParams spectroscopy_noise() {
  ShotNoiseParams p = device_couplings();
  p.delta_c = kTwoPi * 1.961e6;
  p.nbar = 0.127;
  return p;
}

ShotNoiseParams selectivity_noise() {
  ShotNoiseParams p = device_couplings();
  p.delta_c = kTwoPi * -2.03e6;
  p.nbar = 0.154;
  return p;
}

ShotNoiseParams ramsey_noise(double nbar) {
  ShotNoiseParams p = device_couplings();
  p.delta_c = 0.0;
  p.nbar = nbar;
  return p;
}

QubitRates device_rates() {
  QubitRates r;
  r.gamma1_q1 = 1.0 / 87e-6;
  r.gamma1_q2 = 1.0 / 54e-6;
  r.gamma_phi_q1 = 87.7e3;
  r.gamma_phi_q2 = 31.0e3;
  return r;
}

QubitRates t1_rates() {
  QubitRates r;
  r.gamma1_q1 = 1.0 / 87e-6;
  r.gamma1_q2 = 1.0 / 54e-6;
  return r;
}

QubitRates selectivity_rates() {
  QubitRates r = t1_rates();
  r.gamma_up_q1 = 2e3;
  r.gamma_dn_q1 = 7e3;
  r.gamma_up_q2 = 9e3;
  r.gamma_dn_q2 = 14e3;
  return r;
}

DriveConfig ramsey_drive() {
  DriveConfig d;
  d.delta_q1 = kTwoPi * -1265e3;
  d.delta_q2 = kTwoPi * 299e3;
  return d;
}

std::vector<double> sweep_frequencies_hz() {
  std::vector<double> f;
  for (int k = 0; k < 26; ++k) f.push_back(1.8e6 + 0.4e6 * k / 25.0);
  return f;
}

}  // namespace qns::presets
