#pragma once

// Monte-Carlo experiment engine. A sweep point simulates a batch of bath
// realisations (NoiseModel::trajectories), evolves the qutrit through the
// sequence for each of them, and turns the resulting |0> populations into
// photon counts shot by shot (shot i uses realisation i mod trajectories).

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "divtherm/noise.hpp"
#include "divtherm/sequences.hpp"
#include "divtherm/spin_model.hpp"

namespace divtherm {

enum class ReadoutMode {
  population,  // mean P0 over bath realisations; no photons
  counts,      // mean photon counts per shot
  lockin,      // (signal - reference) / reference, reference = no-microwave shot
};

std::string to_string(ReadoutMode mode);
ReadoutMode readout_mode_from_string(const std::string& name);

struct ReadoutModel {
  double i_sat = 458e6;        // counts/s
  double p_sat = 182e-3;       // W
  double laser_power = 170e-3; // W
  double shot_window = 3e-6;   // s
  double contrast = 0.01;      // relative fluorescence drop of the dark state
  int shots = 20000;
  ReadoutMode mode = ReadoutMode::lockin;
  bool shot_noise = true;

  void validate() const;
  /// Bright-state counts per shot, I(P) * shot_window.
  double p0() const;
  /// Dark-state counts per shot, p0 * (1 - contrast).
  double p1() const;
};

/// I(P) = I_s / (P_0 / P + 1); 0 at P = 0.
double saturation_counts(const ReadoutModel& model, double power);

struct SimulationSetup {
  SpinParameters spin;
  MicrowaveConfig mw;
  EnvironmentState env;  // mean environment: thermal shift and static field offset
  NoiseModel noise;
  ReadoutModel readout;
};

struct PointResult {
  double mean = 0.0;
  double std_error = 0.0;
};

struct MeasurementRecord {
  std::string x_name;  // e.g. "time_s", "frequency_hz", "power_w"
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> y_err;
  std::map<std::string, std::string> meta;

  void validate() const;
  std::size_t size() const { return x.size(); }
};

/// Noiseless |0> population after the sequence for one fixed environment.
double evolve_population(const PulseSequence& seq, const SpinParameters& spin,
                         const MicrowaveConfig& mw, const EnvironmentState& env);

/// |0> populations for `trajectories` bath realisations (or one, if the noise
/// model is inactive).
std::vector<double> simulate_populations(const PulseSequence& seq, const SimulationSetup& setup,
                                         Engine& rng);

PointResult run_point(const PulseSequence& seq, const SimulationSetup& setup, std::uint64_t seed);

/// One run_point per x value, seeded with derive_seed(seed, index).
MeasurementRecord sweep(const SequenceFamily& family, std::span<const double> x_values,
                        const SimulationSetup& setup, std::uint64_t seed);

struct OdmrSettings {
  double linewidth = 4e6;  // Hz, half width at half maximum
  double contrast = 0.02;  // dip depth of each line
  std::vector<double> freq_grid;
  int shots = 100000;      // averaged shots per frequency point
};

/// baseline * (1 - sum over +- of contrast * L(f; f_+-, linewidth)) with
/// Poisson noise on the accumulated counts; baseline = readout.p0().
MeasurementRecord simulate_odmr(const SpinParameters& spin, double temperature,
                                const OdmrSettings& settings, const ReadoutModel& readout,
                                std::uint64_t seed);

}  // namespace divtherm
