#include "divtherm/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "divtherm/kernels.hpp"
#include "divtherm/units.hpp"

namespace divtherm {

std::string to_string(ReadoutMode mode) {
  switch (mode) {
    case ReadoutMode::population: return "population";
    case ReadoutMode::counts: return "counts";
    case ReadoutMode::lockin: return "lockin";
  }
  return "unknown";
}

ReadoutMode readout_mode_from_string(const std::string& name) {
  if (name == "population") return ReadoutMode::population;
  if (name == "counts") return ReadoutMode::counts;
  if (name == "lockin") return ReadoutMode::lockin;
  throw std::invalid_argument("unknown readout mode '" + name +
                              "' (valid: population, counts, lockin)");
}

void ReadoutModel::validate() const {
  if (!(contrast > 0.0 && contrast <= 1.0)) {
    if (contrast == 0.0)
      throw std::invalid_argument("readout: zero contrast, the spin state is not readable");
    throw std::invalid_argument("readout: contrast must be in (0, 1]");
  }
  if (!(i_sat > 0.0 && p_sat > 0.0 && laser_power > 0.0 && shot_window > 0.0))
    throw std::invalid_argument("readout: i_sat, p_sat, laser_power and shot_window must be positive");
  if (shots < 1) throw std::invalid_argument("readout: shots must be >= 1");
}

double saturation_counts(const ReadoutModel& model, double power) {
  if (power < 0.0) throw std::invalid_argument("saturation_counts: power must be non-negative");
  if (power == 0.0) return 0.0;
  return model.i_sat / (model.p_sat / power + 1.0);
}

double ReadoutModel::p0() const { return saturation_counts(*this, laser_power) * shot_window; }

double ReadoutModel::p1() const { return p0() * (1.0 - contrast); }

void MeasurementRecord::validate() const {
  if (y.size() != x.size() || y_err.size() != x.size())
    throw std::invalid_argument("record: x, y and y_err lengths differ");
  for (std::size_t i = 1; i < x.size(); ++i)
    if (!(x[i] > x[i - 1])) throw std::invalid_argument("record: x must be strictly increasing");
  for (double e : y_err)
    if (!(e >= 0.0)) throw std::invalid_argument("record: y_err must be non-negative");
}

namespace {

// Sequence lowered to pulses with precomputed propagators and delay segments.
struct LoweredOp {
  bool is_delay;
  double duration;
  Propagator pulse;
};

std::vector<LoweredOp> lower(const PulseSequence& seq) {
  std::vector<LoweredOp> ops;
  ops.reserve(seq.elements.size());
  for (const auto& e : seq.elements) {
    if (const auto* p = std::get_if<Pulse>(&e)) {
      ops.push_back({false, 0.0, pulse_propagator(p->transition, p->angle, p->phase)});
    } else {
      const double d = std::get<Delay>(e).duration;
      if (!(d >= 0.0)) throw std::invalid_argument("sequence: negative delay");
      ops.push_back({true, d, Propagator::Identity()});
    }
  }
  return ops;
}

void apply_free(QutritState& psi, const TransitionPair& delta, double tau) {
  psi(0) *= std::polar(1.0, -units::kTwoPi * delta.minus * tau);
  psi(2) *= std::polar(1.0, -units::kTwoPi * delta.plus * tau);
}

struct Accumulator {
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    n += 1.0;
    const double d = v - mean;
    mean += d / n;
    m2 += d * (v - mean);
  }
  double std_error() const { return n > 1.0 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0; }
};

}  // namespace

double evolve_population(const PulseSequence& seq, const SpinParameters& spin,
                         const MicrowaveConfig& mw, const EnvironmentState& env) {
  const TransitionPair delta = detunings(spin, mw, env);
  QutritState psi = ground_state();
  for (const auto& e : seq.elements) {
    if (const auto* p = std::get_if<Pulse>(&e)) {
      psi = pulse_propagator(p->transition, p->angle, p->phase) * psi;
    } else {
      psi = free_propagator(delta.minus, delta.plus, std::get<Delay>(e).duration) * psi;
    }
  }
  return population(psi, kZeroLevel);
}

std::vector<double> simulate_populations(const PulseSequence& seq, const SimulationSetup& setup,
                                         Engine& rng) {
  const auto ops = lower(seq);
  const bool noisy = setup.noise.active();
  const std::size_t lanes = noisy ? static_cast<std::size_t>(setup.noise.trajectories) : 1;

  std::vector<double> offset(lanes, setup.env.delta_b);
  if (noisy && setup.noise.static_enabled) {
    for (auto& b : offset) b += sample_static(setup.noise, rng);
  }

  std::vector<QutritState> psi(lanes, ground_state());
  std::vector<double> no_ou(lanes, 0.0);
  const bool ou = noisy && setup.noise.ou_enabled && setup.noise.sigma_ou > 0.0;
  std::optional<OuBatch> batch;
  if (ou) batch.emplace(setup.noise, lanes, rng);
  const double h_target = setup.noise.step_for(seq.total_delay());

  for (const auto& op : ops) {
    if (!op.is_delay) {
      for (auto& s : psi) s = op.pulse * s;
      continue;
    }
    if (op.duration == 0.0) continue;
    std::span<const double> integral = no_ou;
    if (ou) {
      const int steps = std::max(1, static_cast<int>(std::ceil(op.duration / h_target - 1e-9)));
      integral = batch->advance(op.duration / steps, steps, rng);
    }
    for (std::size_t k = 0; k < lanes; ++k) {
      const EnvironmentState env{setup.env.delta_d, offset[k] + integral[k] / op.duration};
      apply_free(psi[k], detunings(setup.spin, setup.mw, env), op.duration);
    }
  }

  std::vector<double> pops(lanes);
  for (std::size_t k = 0; k < lanes; ++k) pops[k] = population(psi[k], kZeroLevel);
  return pops;
}

PointResult run_point(const PulseSequence& seq, const SimulationSetup& setup, std::uint64_t seed) {
  const ReadoutModel& ro = setup.readout;
  if (ro.shots < 1) throw std::invalid_argument("run_point: shots must be >= 1");
  Engine rng = make_engine(seed);
  const std::vector<double> pops = simulate_populations(seq, setup, rng);

  if (ro.mode == ReadoutMode::population) {
    Accumulator acc;
    for (double p : pops) acc.add(p);
    return {acc.mean, acc.std_error()};
  }

  const double p0 = ro.p0();
  const double p1 = ro.p1();
  const std::size_t lanes = pops.size();
  const double shots = static_cast<double>(ro.shots);

  // Shot i uses bath realisation i mod lanes. The shots sharing a realisation
  // are i.i.d. Poisson, so their total is drawn as one Poisson variate; the
  // per-shot variance is rebuilt from the Poisson variance inside each lane
  // plus the spread of the lane means.
  std::vector<double> lane_mean(lanes, 0.0);
  std::vector<double> lane_shots(lanes, 0.0);
  double signal_sum = 0.0;
  for (std::size_t lane = 0; lane < lanes; ++lane) {
    const std::size_t k = static_cast<std::size_t>(ro.shots) / lanes +
                          (lane < static_cast<std::size_t>(ro.shots) % lanes ? 1 : 0);
    if (k == 0) continue;
    const double kk = static_cast<double>(k);
    const double mu = p1 + (p0 - p1) * pops[lane];
    double total = mu * kk;
    if (ro.shot_noise && total > 0.0) {
      std::poisson_distribution<long long> photons(total);
      total = static_cast<double>(photons(rng));
    }
    lane_shots[lane] = kk;
    lane_mean[lane] = total / kk;
    signal_sum += total;
  }
  const double signal_mean = signal_sum / shots;
  double signal_var = 0.0;  // per-shot variance
  for (std::size_t lane = 0; lane < lanes; ++lane) {
    if (lane_shots[lane] == 0.0) continue;
    const double d = lane_mean[lane] - signal_mean;
    const double within = ro.shot_noise ? lane_mean[lane] : 0.0;
    signal_var += lane_shots[lane] * (within + d * d);
  }
  signal_var /= std::max(shots - 1.0, 1.0);

  if (ro.mode == ReadoutMode::counts) return {signal_mean, std::sqrt(signal_var / shots)};

  double ref_mean = p0;
  if (ro.shot_noise) {
    std::poisson_distribution<long long> reference(p0 * shots);
    ref_mean = static_cast<double>(reference(rng)) / shots;
  }
  const double ref_var = ro.shot_noise ? ref_mean : 0.0;
  return {(signal_mean - ref_mean) / ref_mean, std::sqrt((signal_var + ref_var) / shots) / ref_mean};
}

MeasurementRecord sweep(const SequenceFamily& family, std::span<const double> x_values,
                        const SimulationSetup& setup, std::uint64_t seed) {
  MeasurementRecord rec;
  rec.x_name = "time_s";
  rec.x.assign(x_values.begin(), x_values.end());
  for (std::size_t i = 1; i < rec.x.size(); ++i)
    if (!(rec.x[i] > rec.x[i - 1]))
      throw std::invalid_argument("sweep: x values must be strictly increasing");
  rec.y.reserve(rec.x.size());
  rec.y_err.reserve(rec.x.size());
  for (std::size_t i = 0; i < rec.x.size(); ++i) {
    const PointResult r = run_point(family.make(rec.x[i]), setup, derive_seed(seed, i));
    rec.y.push_back(r.mean);
    rec.y_err.push_back(r.std_error);
  }
  rec.meta["family"] = family.name;
  rec.meta["n"] = std::to_string(family.n);
  rec.meta["seed"] = std::to_string(seed);
  rec.meta["shots"] = std::to_string(setup.readout.shots);
  rec.meta["readout"] = to_string(setup.readout.mode);
  return rec;
}

MeasurementRecord simulate_odmr(const SpinParameters& spin, double temperature,
                                const OdmrSettings& settings, const ReadoutModel& readout,
                                std::uint64_t seed) {
  if (!(settings.linewidth > 0.0)) throw std::invalid_argument("odmr: linewidth must be positive");
  if (!(settings.contrast >= 0.0 && settings.contrast < 1.0))
    throw std::invalid_argument("odmr: contrast must be in [0, 1)");
  if (settings.shots < 1) throw std::invalid_argument("odmr: shots must be >= 1");
  const TransitionPair f = transition_frequencies(spin, temperature);

  MeasurementRecord rec;
  rec.x_name = "frequency_hz";
  rec.x = settings.freq_grid;
  rec.y.resize(rec.x.size());
  rec.y_err.assign(rec.x.size(), 0.0);
  kernels::lorentzian_pair(rec.x, rec.y, readout.p0(),
                           {f.minus, settings.linewidth, settings.contrast},
                           {f.plus, settings.linewidth, settings.contrast});
  if (readout.shot_noise) {
    Engine rng = make_engine(seed);
    const double shots = static_cast<double>(settings.shots);
    for (std::size_t i = 0; i < rec.y.size(); ++i) {
      const double expected = rec.y[i] * shots;
      std::poisson_distribution<long long> counts(std::max(expected, 1e-300));
      const double total = expected > 0.0 ? static_cast<double>(counts(rng)) : 0.0;
      rec.y[i] = total / shots;
      rec.y_err[i] = std::sqrt(std::max(total, 1.0)) / shots;
    }
  }
  rec.validate();
  rec.meta["temperature_k"] = std::to_string(temperature);
  rec.meta["seed"] = std::to_string(seed);
  rec.meta["shots"] = std::to_string(settings.shots);
  return rec;
}

}  // namespace divtherm
