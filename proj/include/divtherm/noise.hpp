#pragma once

// Classical stochastic magnetic field standing in for the spin bath: a
// quasi-static Gaussian offset per shot plus a stationary Ornstein-Uhlenbeck
// process. Both add to the axial field and therefore shift the two
// transitions in opposite directions.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "divtherm/rng.hpp"

namespace divtherm {

struct NoiseModel {
  double sigma_static = 50.1e-7;  // T
  double sigma_ou = 20.4e-7;      // T
  double tau_c = 3e-6;            // s
  bool static_enabled = true;
  bool ou_enabled = true;
  /// Bath realisations simulated per sweep point.
  int trajectories = 400;
  /// OU sub-step; 0 selects min(tau_c / 20, total_delay / 100).
  double dt = 0.0;

  void validate() const;
  bool active() const {
    return (static_enabled && sigma_static > 0.0) || (ou_enabled && sigma_ou > 0.0);
  }
  /// Sub-step target for a sequence with the given total delay.
  double step_for(double total_delay) const;
};

struct NoiseTrajectory {
  double dt = 0.0;
  std::vector<double> samples;  // T, samples[k] at time k * dt

  double duration() const { return dt * static_cast<double>(samples.size() - 1); }
};

/// Quasi-static offset: N(0, sigma_static^2), exactly 0 when disabled.
double sample_static(const NoiseModel& model, std::uint64_t seed);
double sample_static(const NoiseModel& model, Engine& rng);

/// Stationary OU path of n_steps samples spaced dt, x_0 ~ N(0, sigma_ou^2),
/// x_{k+1} = x_k e^{-dt/tau_c} + sigma_ou sqrt(1 - e^{-2 dt/tau_c}) g_k.
NoiseTrajectory sample_ou(const NoiseModel& model, double dt, int n_steps, std::uint64_t seed);

/// 2 pi gyro sign * integral of the field over [t_start, t_end] (trapezoid on
/// the samples, linear interpolation at window edges that fall between samples).
double phase_integral(const NoiseTrajectory& traj, std::pair<double, double> window, int sign,
                      double gyro);

/// Decay and diffusion coefficients of one exact OU step of length dt.
struct OuStep {
  double decay;
  double diffusion;
};
OuStep ou_step(const NoiseModel& model, double dt);

/// Batch of OU paths advanced in lock-step, one lane per bath realisation.
/// Used by the simulator to integrate the field over each delay segment.
class OuBatch {
 public:
  OuBatch(const NoiseModel& model, std::size_t lanes, Engine& rng);

  /// Advances every lane by `steps` steps of length `dt` and returns the
  /// per-lane field integral over that span (T*s).
  std::span<const double> advance(double dt, int steps, Engine& rng);

 private:
  NoiseModel model_;
  std::vector<double> x_;
  std::vector<double> integral_;
  std::vector<double> gauss_;
};

}  // namespace divtherm
