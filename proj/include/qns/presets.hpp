#pragma once

// Device and noise parameter sets used by the reproduction jobs.

#include "qns/dynamics.hpp"
#include "qns/noise.hpp"

#include <vector>

namespace qns::presets {

inline constexpr double kTwoPi = 2.0 * M_PI;

/// Device couplings with the spectroscopy noise drive (delta_c/2pi = 1.961 MHz, nbar = 0.127).
ShotNoiseParams spectroscopy_noise();

/// Noise drive of the frequency-selectivity experiment (delta_c/2pi = -2.03 MHz, nbar = 0.154).
ShotNoiseParams selectivity_noise();

/// Noise drive of the Ramsey experiment (delta_c = 0) at the given photon number.
ShotNoiseParams ramsey_noise(double nbar);

/// T1 and lab-frame dephasing of both qubits; no spin-locking-frame rates.
QubitRates device_rates();

/// device_rates() with T1 only (the reduced-model fits use T1 alone).
QubitRates t1_rates();

/// t1_rates() plus the phenomenological spin-locking-frame rates of the
/// frequency-selectivity experiment.
QubitRates selectivity_rates();

/// Ramsey detunings of the qubit drives.
DriveConfig ramsey_drive();

/// 26 uniformly spaced Rabi frequencies from 1.8 to 2.2 MHz, in Hz.
std::vector<double> sweep_frequencies_hz();

}  // namespace qns::presets
