#include "qns/dynamics.hpp"
#include "qns/presets.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace qns;

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) t[static_cast<std::size_t>(k)] = a + (b - a) * k / (n - 1);
  return t;
}

DriveConfig drive_at(double omega, double delta_omega = 0.0) {
  DriveConfig d;
  d.omega_rabi = omega;
  d.delta_omega = delta_omega;
  return d;
}

SpectrumVector uncorrelated(double minus, double plus) {
  SpectrumVector s;
  s.s11_minus = s.s22_minus = minus;
  s.s11_plus = s.s22_plus = plus;
  return s;
}

double tz(const Operator& rho4, int qubit) {
  return observable_value(TwoQubitObservable::parse(qubit == 1 ? "tz1" : "tz2"), rho4);
}

}  // namespace

TEST(DressedBasis, StatesAndPurity) {
  const Operator tzop = dressed::tau_z();
  const StateVector minus = dressed_ket(DressedLabel::MinusX);
  EXPECT_NEAR((minus.adjoint() * tzop * minus)(0).real(), -1.0, 1e-15);
  for (const auto& s : all_initial_states()) {
    const DensityMatrix rho = spinlock_initial_state(s);
    EXPECT_NEAR(rho.purity(), 1.0, 1e-14);
    const double expected1 = s.q1 == DressedLabel::PlusX ? 1.0 : -1.0;
    EXPECT_NEAR(tz(rho.matrix(), 1), expected1, 1e-15);
  }
}

TEST(DressedBasis, LabSigmaZIsMinusTauX) {
  // |-x> in the lab basis is (|0> - |1>)/sqrt2 up to a global phase, so tau_x maps to -sigma_z.
  EXPECT_LT((dressed::tau_plus() - dressed::tau_minus().adjoint()).norm(), 1e-15);
  EXPECT_LT((dressed::tau_x() * dressed::tau_x() - ops::identity(2)).norm(), 1e-15);
}

TEST(Labels, ParseRoundTrips) {
  for (const auto& s : all_initial_states()) EXPECT_EQ(InitialState::parse(s.label()), s);
  EXPECT_THROW(InitialState::parse("+x"), Error);
  EXPECT_THROW(InitialState::parse("+y-x"), Error);
  const auto obs = table_observables();
  ASSERT_EQ(obs.size(), 11u);
  EXPECT_EQ(obs.front().label(), "tz1");
  EXPECT_EQ(obs.back().label(), "Kzz");
  for (const auto& o : obs) EXPECT_EQ(TwoQubitObservable::parse(o.label()), o);
  EXPECT_THROW(TwoQubitObservable::parse("Kzq"), Error);
  EXPECT_THROW(TwoQubitObservable::parse("tz3"), Error);
}

TEST(DecayCurves, ProductStateAtZeroTime) {
  const ReducedModel m = build_reduced_me(uncorrelated(1e3, 2e3), drive_at(1e7), {});
  const std::vector<double> t{0.0};
  const auto obs = table_observables();
  const Eigen::MatrixXd c =
      decay_curves(m.generator, spinlock_initial_state(InitialState::parse("+x+x")), t, obs);
  EXPECT_NEAR(c(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(c(0, 1), 1.0, 1e-14);
  for (Index r = 2; r < 11; ++r) EXPECT_NEAR(c(0, r), 0.0, 1e-14);
}

TEST(DecayCurves, ZeroGeneratorIsConstant) {
  const DensityMatrix rho0 = spinlock_initial_state(InitialState::parse("-x+x"));
  const auto obs = table_observables();
  const Eigen::MatrixXd c = decay_curves(Liouvillian(Eigen::MatrixXcd::Zero(16, 16), {2, 2}), rho0, linspace(0, 1e-4, 5), obs);
  for (Index q = 1; q < c.rows(); ++q) EXPECT_LT((c.row(q) - c.row(0)).norm(), 1e-14);
}

TEST(ReducedMe, NoNoiseIsPurePrecession) {
  const ReducedModel m = build_reduced_me(SpectrumVector{}, drive_at(kTwoPi * 2e6), {});
  const auto states =
      qubit_states(m.generator, spinlock_initial_state(InitialState::parse("+x-x")),
                   linspace(0, 50e-6, 11));
  for (const auto& rho : states) {
    EXPECT_NEAR(tz(rho, 1), 1.0, 1e-10);
    EXPECT_NEAR(tz(rho, 2), -1.0, 1e-10);
  }
}

TEST(ReducedMe, UncorrelatedDecayMatchesClosedForm) {
  // Single qubit under a D[tau_-] + b D[tau_+]: <tau_z> relaxes at a + b to (b - a)/(a + b).
  for (auto [a, b] : {std::pair{5e3, 5e3}, std::pair{8e3, 2e3}}) {
    const ReducedModel m = build_reduced_me(uncorrelated(a, b), drive_at(kTwoPi * 2e6), {});
    EXPECT_FALSE(m.non_physical_spectra);
    const auto times = linspace(0, 200e-6, 9);
    const auto states =
        qubit_states(m.generator, spinlock_initial_state(InitialState::parse("+x+x")), times);
    const double ss = (b - a) / (a + b);
    for (std::size_t q = 0; q < times.size(); ++q) {
      const double expected = ss + (1.0 - ss) * std::exp(-(a + b) * times[q]);
      EXPECT_NEAR(tz(states[q], 1), expected, 1e-9);
      EXPECT_NEAR(tz(states[q], 2), expected, 1e-9);
    }
  }
}

TEST(ReducedMe, T1TermsDecayAtHalfGamma1) {
  const QubitRates rates = presets::t1_rates();
  const ReducedModel m = build_reduced_me(SpectrumVector{}, drive_at(kTwoPi * 2e6), rates);
  const auto times = linspace(0, 150e-6, 7);
  const auto states =
      qubit_states(m.generator, spinlock_initial_state(InitialState::parse("+x-x")), times);
  for (std::size_t q = 0; q < times.size(); ++q) {
    EXPECT_NEAR(tz(states[q], 1), std::exp(-0.5 * rates.gamma1_q1 * times[q]), 1e-9);
    EXPECT_NEAR(tz(states[q], 2), -std::exp(-0.5 * rates.gamma1_q2 * times[q]), 1e-9);
  }
}

TEST(ReducedMe, CorrelatedTermsEqualEigenDecomposedLindbladForm) {
  // Oracle: S = sum_m l_m u_m u_m^dag gives jump operators L_m = sum_k conj(u_mk) A_k.
  const SpectrumVector s = SpectrumVector::from_model(presets::spectroscopy_noise(), kTwoPi * 1.9e6);
  const DriveConfig drive = drive_at(kTwoPi * 1.9e6);
  const ReducedModel m = build_reduced_me(s, drive, {});

  const std::vector<Index> dims{2, 2};
  const Operator id2 = ops::identity(2);
  const Operator tz1 = kron(dressed::tau_z(), id2), tz2 = kron(id2, dressed::tau_z());
  const Operator h = 0.5 * drive.omega_rabi * (tz1 + tz2);
  Eigen::MatrixXcd expected = hamiltonian_superoperator(h);
  for (int sign : {+1, -1}) {
    const Operator a1 = kron(sign > 0 ? dressed::tau_plus() : dressed::tau_minus(), id2);
    const Operator a2 = kron(id2, sign > 0 ? dressed::tau_plus() : dressed::tau_minus());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> eig(s.matrix(sign));
    for (int k = 0; k < 2; ++k) {
      const double lambda = eig.eigenvalues()(k);
      if (std::abs(lambda) < 1e-9 * eig.eigenvalues().cwiseAbs().maxCoeff()) continue;
      const Eigen::Vector2cd u = eig.eigenvectors().col(k);
      const Operator jump = std::conj(u(0)) * a1 + std::conj(u(1)) * a2;
      expected += lambda * dissipator_superoperator(jump);
    }
  }
  EXPECT_LT((m.generator.matrix() - expected).cwiseAbs().maxCoeff(),
            1e-12 * expected.cwiseAbs().maxCoeff());
}

TEST(ReducedMe, DeltaOmegaSplitsRabiFrequencies) {
  SpectrumVector s;
  s.delta_omega = kTwoPi * 50e3;
  const ReducedModel m = build_reduced_me(s, drive_at(kTwoPi * 2e6), {});
  const Propagator prop(m.generator);
  std::vector<double> freqs;
  for (Index k = 0; k < prop.eigenvalues().size(); ++k)
    freqs.push_back(std::abs(prop.eigenvalues()(k).imag()));
  auto has = [&](double w) {
    return std::any_of(freqs.begin(), freqs.end(), [&](double f) { return std::abs(f - w) < 1e-3; });
  };
  EXPECT_TRUE(has(kTwoPi * 2.025e6));
  EXPECT_TRUE(has(kTwoPi * 1.975e6));
}

TEST(ReducedMe, NonPhysicalSpectraFlagged) {
  SpectrumVector s = uncorrelated(1e3, 1e3);
  s.re_s12_plus = 5e3;
  const ReducedModel m = build_reduced_me(s, drive_at(1e7), {});
  EXPECT_TRUE(m.non_physical_spectra);
}

TEST(ReducedMeProperty, DeltaOmegaSuppressesCovariance) {
  const ShotNoiseParams p = presets::spectroscopy_noise();
  const double omega = std::abs(p.delta_c);
  const std::vector<double> t{100e-6};
  const DensityMatrix rho0 = spinlock_initial_state(InitialState::parse("-x-x"));
  const std::vector<TwoQubitObservable> kzz{TwoQubitObservable::parse("Kzz")};
  auto kzz_at = [&](double dw) {
    const ReducedModel m =
        build_reduced_me(SpectrumVector::from_model(p, omega, dw), drive_at(omega), presets::t1_rates());
    return decay_curves(m.generator, rho0, t, kzz)(0, 0);
  };
  const double locked = kzz_at(0.0);
  const double split = kzz_at(kTwoPi * 50e3);
  EXPECT_GT(std::abs(locked), 1e-3);
  EXPECT_LT(std::abs(split), 0.25 * std::abs(locked));
}

TEST(ReducedMeProperty, MonotoneRelaxationToSteadyState) {
  const ShotNoiseParams p = presets::spectroscopy_noise();
  const double omega = kTwoPi * 1.976e6;
  const ReducedModel m = build_reduced_me(SpectrumVector::from_model(p, omega), drive_at(omega),
                                          presets::t1_rates());
  const DensityMatrix ss = steady_state(m.generator);
  const double target = tz(ss.matrix(), 2);
  // From -x-x the approach is monotone; other product states overshoot through the correlated terms.
  const auto states = qubit_states(m.generator, spinlock_initial_state(InitialState::parse("-x-x")),
                                   linspace(0, 400e-6, 201));
  double prev = std::abs(tz(states.front(), 2) - target);
  for (const auto& rho : states) {
    const double gap = std::abs(tz(rho, 2) - target);
    EXPECT_LE(gap, prev + 1e-12);
    prev = gap;
  }
  EXPECT_LT(prev, 0.2 * std::abs(1.0 - target));
}

TEST(ResonatorSteadyState, PhotonNumber) {
  const ShotNoiseParams p = presets::spectroscopy_noise();
  const double eps = drive_for_nbar(p.nbar, p.kappa, p.delta_c);
  const DensityMatrix rho = resonator_steady_state(eps, p.kappa, p.delta_c, 8);
  const double n = expect(ops::number(8), rho);
  EXPECT_NEAR(n, steady_state_nbar(eps, p.kappa, p.delta_c), 1e-6 * p.nbar);
  EXPECT_THROW(resonator_steady_state(p.kappa, p.kappa, 0.0, 3), TruncationError);
}

TEST(OpticalMe, ZeroCouplingDecouplesQubits) {
  ShotNoiseParams p = presets::spectroscopy_noise();
  p.chi1 = p.chi2 = 0.0;
  const QubitRates rates = presets::selectivity_rates();
  const DriveConfig drive = drive_at(kTwoPi * 1.9e6, kTwoPi * 20e3);
  const Index n = 6;
  const Liouvillian optical = build_spinlock_optical_me(p, drive, rates, n);
  SpectrumVector zero;
  zero.delta_omega = drive.delta_omega;
  const ReducedModel reduced = build_reduced_me(zero, drive, rates);
  const ResonatorDrive rd = resolve_resonator_drive(p, drive);
  const ResonatorSteady cavity{rd.epsilon, p.kappa, p.delta_c, n};
  const auto times = linspace(0, 80e-6, 9);
  for (const auto& s : all_initial_states()) {
    const auto a = qubit_states(optical, spinlock_initial_state(s, cavity), times);
    const auto b = qubit_states(reduced.generator, spinlock_initial_state(s), times);
    for (std::size_t q = 0; q < times.size(); ++q) EXPECT_LT((a[q] - b[q]).norm(), 1e-8);
  }
}

TEST(OpticalMe, TruncationViolationThrows) {
  ShotNoiseParams p = presets::spectroscopy_noise();
  p.nbar = 2.0;
  const DriveConfig drive = drive_at(std::abs(p.delta_c));
  const Liouvillian l = build_spinlock_optical_me(p, drive, {}, 3);
  const ResonatorDrive rd = resolve_resonator_drive(p, drive);
  // Start from the vacuum so the failure comes from the evolution, not the initial state.
  Operator vac = Operator::Zero(3, 3);
  vac(0, 0) = 1.0;
  const DensityMatrix rho0(kron(spinlock_initial_state(InitialState::parse("+x+x")).matrix(), vac));
  const std::vector<double> t{0.0, 5e-6};
  EXPECT_GT(rd.nbar, 1.0);
  EXPECT_THROW(qubit_states(l, rho0, t), TruncationError);
}

TEST(OpticalMe, RejectsBadArguments) {
  const ShotNoiseParams p = presets::spectroscopy_noise();
  EXPECT_THROW(build_spinlock_optical_me(p, drive_at(0.0), {}, 4), Error);
  EXPECT_THROW(build_spinlock_optical_me(p, drive_at(1e7), {}, 1), Error);
  QubitRates bad;
  bad.gamma_up_q2 = -1.0;
  EXPECT_THROW(build_reduced_me({}, drive_at(1e7), bad), Error);
  EXPECT_THROW(build_ramsey_optical_me(p, drive_at(1e7), {}, 4), Error);
}

namespace {

struct ModelPair {
  Liouvillian optical;
  Liouvillian reduced;
  std::vector<DensityMatrix> optical_initial;
  std::vector<DensityMatrix> reduced_initial;
};

ModelPair model_pair(const ShotNoiseParams& p, double omega, Index n) {
  const QubitRates rates = presets::t1_rates();
  const DriveConfig drive = drive_at(omega);
  const ResonatorDrive rd = resolve_resonator_drive(p, drive);
  const ResonatorSteady cavity{rd.epsilon, p.kappa, p.delta_c, n};
  ModelPair m{build_spinlock_optical_me(p, drive, rates, n),
              build_reduced_me(SpectrumVector::from_model(p, omega), drive, rates).generator,
              {},
              {}};
  for (const auto& s : all_initial_states()) {
    m.optical_initial.push_back(spinlock_initial_state(s, cavity));
    m.reduced_initial.push_back(spinlock_initial_state(s));
  }
  return m;
}

// -d/dt ln|x(t) - x_ss| by least squares.
double log_slope(std::span<const double> t, std::span<const double> x, double ss) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const auto n = static_cast<double>(t.size());
  for (std::size_t q = 0; q < t.size(); ++q) {
    const double y = std::log(std::abs(x[q] - ss));
    sx += t[q], sy += y, sxx += t[q] * t[q], sxy += t[q] * y;
  }
  return -(n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST(CrossModelProperty, ReducedMatchesOpticalInMarkovRegime) {
  // The optical model lags the Markovian one by about 2/kappa; the resulting
  // offset grows linearly with nbar, so the 0.05 agreement is checked at weak drive.
  ShotNoiseParams p = presets::spectroscopy_noise();
  p.nbar = 0.015;
  const auto times = linspace(0, 151e-6, 16);
  const auto obs = table_observables();
  for (double omega : {std::abs(p.delta_c) - 0.5 * p.kappa, std::abs(p.delta_c) + p.kappa}) {
    const ModelPair m = model_pair(p, omega, 5);
    const StateGrid a = qubit_state_grid(m.optical, m.optical_initial, times);
    const StateGrid b = qubit_state_grid(m.reduced, m.reduced_initial, times);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t q = 0; q < times.size(); ++q)
        for (const auto& o : obs)
          worst = std::max(worst, std::abs(observable_value(o, a[i][q]) - observable_value(o, b[i][q])));
    EXPECT_LT(worst, 0.05) << "omega/2pi = " << omega / kTwoPi;
  }
}

TEST(CrossModelProperty, DecayRatesAgreeAtSpectralPeak) {
  const ShotNoiseParams p = presets::spectroscopy_noise();
  const Index n = 7;
  const ModelPair m = model_pair(p, std::abs(p.delta_c), n);
  const std::vector<Index> dims{2, 2, n};
  const std::vector<std::size_t> keep{0, 1};
  const DensityMatrix ss_optical = partial_trace(steady_state(m.optical), dims, keep);
  const DensityMatrix ss_reduced = steady_state(m.reduced);
  const auto times = linspace(20e-6, 80e-6, 21);
  // -x-x relaxes monotonically, so ln|x - x_ss| is well defined throughout.
  const auto a = qubit_states(m.optical, m.optical_initial[3], times);
  const auto b = qubit_states(m.reduced, m.reduced_initial[3], times);
  for (const char* label : {"tz1", "tz2"}) {
    const TwoQubitObservable o = TwoQubitObservable::parse(label);
    const double xa = observable_value(o, ss_optical.matrix());
    const double xb = observable_value(o, ss_reduced.matrix());
    EXPECT_NEAR(xa, xb, 0.05) << label;
    std::vector<double> va, vb;
    for (std::size_t q = 0; q < times.size(); ++q) {
      va.push_back(observable_value(o, a[q]));
      vb.push_back(observable_value(o, b[q]));
    }
    const double ra = log_slope(times, va, xa), rb = log_slope(times, vb, xb);
    EXPECT_NEAR(ra, rb, 0.15 * rb) << label;
  }
}

TEST(Ramsey, NoPhotonsNoCorrelation) {
  const DriveConfig drive = presets::ramsey_drive();
  const auto times = linspace(0, 10e-6, 101);
  const RamseyCurves c = ramsey_curves(presets::ramsey_noise(0.0), drive, presets::device_rates(), 4, times);
  for (double v : c.czz) EXPECT_LT(std::abs(v), 1e-10);
  // At t = 0 the two pulses make a pi rotation: ground to excited.
  EXPECT_NEAR(c.sz1.front(), 1.0, 1e-12);
  EXPECT_NEAR(c.sz2.front(), 1.0, 1e-12);
}

TEST(Ramsey, FringesAtStarkShiftedDetuning) {
  const double nbar = 0.1;
  const ShotNoiseParams p = presets::ramsey_noise(nbar);
  const DriveConfig drive = presets::ramsey_drive();
  const auto times = linspace(0, 10e-6, 1001);
  const RamseyCurves c = ramsey_curves(p, drive, presets::device_rates(), 6, times);
  const double dt = times[1] - times[0];
  const auto n = static_cast<int>(times.size());
  const double bin = 1.0 / (n * dt);
  auto peak_hz = [&](const std::vector<double>& x) {
    double mean = 0.0;
    for (double v : x) mean += v / n;
    double best = 0.0;
    int arg = 0;
    for (int k = 1; k < n / 2; ++k) {
      Complex acc = 0.0;
      for (int m = 0; m < n; ++m) acc += (x[static_cast<std::size_t>(m)] - mean) * std::polar(1.0, -kTwoPi * k * m / n);
      if (std::abs(acc) > best) best = std::abs(acc), arg = k;
    }
    return arg * bin;
  };
  const double f1 = std::abs(*drive.delta_q1 + 2.0 * p.chi1 * nbar) / kTwoPi;
  const double f2 = std::abs(*drive.delta_q2 + 2.0 * p.chi2 * nbar) / kTwoPi;
  EXPECT_LE(std::abs(peak_hz(c.sz1) - f1), bin);
  EXPECT_LE(std::abs(peak_hz(c.sz2) - f2), bin);
}
