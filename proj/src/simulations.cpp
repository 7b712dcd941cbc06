#include "qns/simulations.hpp"

#include "qns/parallel.hpp"
#include "qns/rng.hpp"

#include <bit>
#include <cmath>

namespace qns {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

nlohmann::json spectrum_json(const SpectrumVector& s) {
  nlohmann::json j;
  const Eigen::VectorXd v = pack(s);
  for (std::size_t k = 0; k < SpectrumVector::kSize; ++k)
    j[std::string(kSpectrumComponentNames[k])] = v(static_cast<Index>(k));
  return j;
}

}  // namespace

StateGrid model_state_grid(const DataModel& model, double omega_rabi, double delta_omega,
                           const MeasurementPlan& plan) {
  DriveConfig drive;
  drive.omega_rabi = omega_rabi;
  drive.delta_omega = delta_omega;
  std::vector<DensityMatrix> initial;
  if (model.kind == "reduced") {
    const SpectrumVector truth = SpectrumVector::from_model(model.noise, omega_rabi, delta_omega);
    const ReducedModel reduced = build_reduced_me(truth, drive, model.rates);
    for (const auto& s : plan.initial_states) initial.push_back(spinlock_initial_state(s));
    return qubit_state_grid(reduced.generator, initial, plan.times);
  }
  if (model.kind == "optical") {
    const Liouvillian l = build_spinlock_optical_me(model.noise, drive, model.rates, model.fock_dim);
    const ResonatorDrive rd = resolve_resonator_drive(model.noise, drive);
    const ResonatorSteady cavity{rd.epsilon, model.noise.kappa, model.noise.delta_c, model.fock_dim};
    for (const auto& s : plan.initial_states) initial.push_back(spinlock_initial_state(s, cavity));
    return qubit_state_grid(l, initial, plan.times);
  }
  throw Error("data model must be \"reduced\" or \"optical\"");
}

ObservationSet generate_observations(const DataModel& model, double omega_rabi, double delta_omega,
                                     const MeasurementPlan& plan, bool noiseless, int workers) {
  plan.validate();
  const StateGrid states = model_state_grid(model, omega_rabi, delta_omega, plan);
  ObservationSet out = noiseless ? exact_dataset(states, plan, omega_rabi)
                                 : sample_dataset(states, plan, omega_rabi, workers);
  out.model = model.kind;
  const ShotNoiseParams& p = model.noise;
  out.params = {
      {"chi1_hz", p.chi1 / kTwoPi},
      {"chi2_hz", p.chi2 / kTwoPi},
      {"kappa_hz", p.kappa / kTwoPi},
      {"delta_c_hz", p.delta_c / kTwoPi},
      {"nbar", p.nbar},
      {"delta_omega_hz", delta_omega / kTwoPi},
      {"noiseless", noiseless},
      {"rates",
       {{"gamma1_q1", model.rates.gamma1_q1},
        {"gamma1_q2", model.rates.gamma1_q2},
        {"gamma_phi_q1", model.rates.gamma_phi_q1},
        {"gamma_phi_q2", model.rates.gamma_phi_q2},
        {"gamma_up_q1", model.rates.gamma_up_q1},
        {"gamma_dn_q1", model.rates.gamma_dn_q1},
        {"gamma_up_q2", model.rates.gamma_up_q2},
        {"gamma_dn_q2", model.rates.gamma_dn_q2}}},
      {"truth_rad_s", spectrum_json(SpectrumVector::from_model(p, omega_rabi, delta_omega))},
  };
  if (model.kind == "optical") out.params["fock_dim"] = model.fock_dim;
  return out;
}

SpinlockScan spinlock_scan(const SpinlockSettings& settings, std::uint64_t seed, int workers) {
  SpinlockScan out;
  out.omega2 = settings.omega2;
  out.times = settings.times;
  const auto rows = static_cast<Index>(settings.omega1_offsets.size());
  const auto cols = static_cast<Index>(settings.times.size());
  for (double d : settings.omega1_offsets) out.omega1.push_back(settings.omega2 + d);
  out.kzz.resize(rows, cols);
  out.tz1.resize(rows, cols);
  out.tz2.resize(rows, cols);
  const bool sampled = settings.shots > 0;
  if (sampled) {
    for (auto* m : {&out.kzz_mean, &out.kzz_std, &out.tz1_mean, &out.tz1_std, &out.tz2_mean,
                    &out.tz2_std})
      m->resize(rows, cols);
  }
  const std::vector<TwoQubitObservable> observables{TwoQubitObservable::parse("Kzz"),
                                                    TwoQubitObservable::parse("tz1"),
                                                    TwoQubitObservable::parse("tz2")};

  parallel_for(static_cast<std::size_t>(rows), workers, [&](std::size_t k) {
    const auto row = static_cast<Index>(k);
    DriveConfig drive;
    drive.omega_rabi = settings.omega2 + 0.5 * settings.omega1_offsets[k];
    drive.delta_omega = settings.omega1_offsets[k];
    const Liouvillian l =
        build_spinlock_optical_me(settings.noise, drive, settings.rates, settings.fock_dim);
    const ResonatorDrive rd = resolve_resonator_drive(settings.noise, drive);
    const ResonatorSteady cavity{rd.epsilon, settings.noise.kappa, settings.noise.delta_c,
                                 settings.fock_dim};
    const DensityMatrix rho0 = spinlock_initial_state(settings.initial_state, cavity);
    const auto states = qubit_states(l, rho0, settings.times);
    for (Index q = 0; q < cols; ++q) {
      const Operator& rho = states[static_cast<std::size_t>(q)];
      out.kzz(row, q) = observable_value(observables[0], rho);
      out.tz1(row, q) = observable_value(observables[1], rho);
      out.tz2(row, q) = observable_value(observables[2], rho);
      if (sampled) {
        const std::uint64_t stream =
            substream_key(std::bit_cast<std::uint64_t>(out.omega1[k]),
                          {std::bit_cast<std::uint64_t>(settings.times[static_cast<std::size_t>(q)])});
        const auto est = sample_observables(rho, observables, settings.shots, seed, stream);
        out.kzz_mean(row, q) = est[0].mean;
        out.kzz_std(row, q) = est[0].std;
        out.tz1_mean(row, q) = est[1].mean;
        out.tz1_std(row, q) = est[1].std;
        out.tz2_mean(row, q) = est[2].mean;
        out.tz2_std(row, q) = est[2].std;
      }
    }
  });
  return out;
}

RamseyScan ramsey_scan(const RamseySettings& settings, int workers) {
  RamseyScan out;
  out.nbar = settings.nbar_values;
  out.curves.resize(settings.nbar_values.size());
  DriveConfig drive;
  drive.delta_q1 = settings.delta_q1;
  drive.delta_q2 = settings.delta_q2;
  parallel_for(settings.nbar_values.size(), workers, [&](std::size_t k) {
    ShotNoiseParams p = settings.noise;
    p.nbar = settings.nbar_values[k];
    out.curves[k] = ramsey_curves(p, drive, settings.rates, settings.fock_dim, settings.times);
  });
  return out;
}

}  // namespace qns
