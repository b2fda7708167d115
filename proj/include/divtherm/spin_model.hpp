#pragma once

// Spin-1 ground state of the divacancy in the doubly rotating frame.
//
// Basis order is (|-1>, |0>, |+1>) everywhere. Each microwave drive addresses
// one transition |0> <-> |m> (m = -1 or +1). Pulses are ideal rotations inside
// that two-level subspace with the subspace ordered (|0>, |m>): phase 0 rotates
// about sigma_x, phase pi/2 about sigma_y,
//   R(theta, phi) = cos(theta/2) I - i sin(theta/2) (cos phi sigma_x + sin phi sigma_y).
// Free evolution only accumulates detuning phases on |+-1>.

#include <Eigen/Core>
#include <complex>
#include <string>

namespace divtherm {

using Complex = std::complex<double>;
using Propagator = Eigen::Matrix3cd;
using QutritState = Eigen::Vector3cd;

enum class Transition { minus, plus };

std::string to_string(Transition t);
Transition transition_from_string(const std::string& name);
/// Index of |m> in the (|-1>, |0>, |+1>) basis.
constexpr int level_index(Transition t) { return t == Transition::minus ? 0 : 2; }
constexpr int kZeroLevel = 1;
constexpr Transition other(Transition t) {
  return t == Transition::minus ? Transition::plus : Transition::minus;
}

struct TemperatureWindow {
  double low = 250.0;
  double high = 350.0;
};

struct SpinParameters {
  double d_ref = 1350.6e6;  // Hz, zero-field splitting at t_ref
  double t_ref = 299.1;     // K
  double d_slope = -99.7e3; // Hz/K
  double gyro = 28.024e9;   // Hz/T
  double b_field = 32.1e-4; // T, axial
  TemperatureWindow validity{};

  /// Throws std::invalid_argument on broken invariants. Returns false when
  /// d_slope is non-negative (allowed for synthetic studies, but unphysical).
  bool validate() const;
  /// D(T) on the linear calibration line; no window check.
  double zfs(double temperature) const { return d_ref + d_slope * (temperature - t_ref); }
};

struct MicrowaveConfig {
  double omega_minus = 0.0;  // Hz, drive on |0> <-> |-1>
  double omega_plus = 0.0;   // Hz, drive on |0> <-> |+1>
};

struct EnvironmentState {
  double delta_d = 0.0;  // Hz, D(T) - d_ref
  double delta_b = 0.0;  // T, field fluctuation on top of b_field
};

struct TransitionPair {
  double minus;
  double plus;
};

/// f_-+ = D(T) -+ gyro * b_field. Throws std::out_of_range outside p.validity.
TransitionPair transition_frequencies(const SpinParameters& p, double temperature);

/// Drives placed `detuning` above both transitions at t_ref, so the common-mode
/// detuning seen by the spin is delta_d - detuning ("positive microwave detuning").
MicrowaveConfig drive_with_detuning(const SpinParameters& p, double detuning);

/// Thermal shift delta_d = D(T) - d_ref and a static field offset.
EnvironmentState environment_at(const SpinParameters& p, double temperature,
                                double field_offset = 0.0);

/// Delta_-+ = delta_d -+ gyro * delta_b + (calibrated transition - drive).
TransitionPair detunings(const SpinParameters& p, const MicrowaveConfig& mw,
                         const EnvironmentState& env);

Propagator pulse_propagator(Transition transition, double angle, double phase);

/// diag(exp(-i 2pi Delta_- tau), 1, exp(-i 2pi Delta_+ tau)). Throws on tau < 0.
Propagator free_propagator(double delta_minus, double delta_plus, double tau);

/// Triple-pi block pi_{-1} pi_{+1} pi_{-1} (applied left to right in time).
Propagator swap_propagator();

QutritState ground_state();

double population(const QutritState& psi, int level);

}  // namespace divtherm
