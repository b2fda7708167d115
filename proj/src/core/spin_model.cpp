#include "divtherm/spin_model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "divtherm/units.hpp"

namespace divtherm {

std::string to_string(Transition t) { return t == Transition::minus ? "minus" : "plus"; }

Transition transition_from_string(const std::string& name) {
  if (name == "minus") return Transition::minus;
  if (name == "plus") return Transition::plus;
  throw std::invalid_argument("unknown transition '" + name + "' (expected minus|plus)");
}

bool SpinParameters::validate() const {
  if (!(d_ref > 0.0)) throw std::invalid_argument("spin: d_ref must be positive");
  if (!(gyro > 0.0)) throw std::invalid_argument("spin: gyro must be positive");
  if (!(b_field >= 0.0)) throw std::invalid_argument("spin: b_field must be non-negative");
  if (!(validity.low < validity.high))
    throw std::invalid_argument("spin: temperature validity window is empty");
  if (!std::isfinite(d_slope) || !std::isfinite(t_ref))
    throw std::invalid_argument("spin: d_slope and t_ref must be finite");
  return d_slope < 0.0;
}

TransitionPair transition_frequencies(const SpinParameters& p, double temperature) {
  if (!(temperature >= p.validity.low && temperature <= p.validity.high)) {
    std::ostringstream msg;
    msg << "temperature " << temperature << " K outside calibration validity window ["
        << p.validity.low << ", " << p.validity.high << "] K";
    throw std::out_of_range(msg.str());
  }
  const double d = p.zfs(temperature);
  const double zeeman = p.gyro * p.b_field;
  return {d - zeeman, d + zeeman};
}

MicrowaveConfig drive_with_detuning(const SpinParameters& p, double detuning) {
  const double zeeman = p.gyro * p.b_field;
  return {p.d_ref - zeeman + detuning, p.d_ref + zeeman + detuning};
}

EnvironmentState environment_at(const SpinParameters& p, double temperature,
                                double field_offset) {
  return {p.d_slope * (temperature - p.t_ref), field_offset};
}

TransitionPair detunings(const SpinParameters& p, const MicrowaveConfig& mw,
                         const EnvironmentState& env) {
  const double zeeman = p.gyro * p.b_field;
  const double offset_minus = (p.d_ref - zeeman) - mw.omega_minus;
  const double offset_plus = (p.d_ref + zeeman) - mw.omega_plus;
  const double magnetic = p.gyro * env.delta_b;
  return {env.delta_d - magnetic + offset_minus, env.delta_d + magnetic + offset_plus};
}

Propagator pulse_propagator(Transition transition, double angle, double phase) {
  const int m = level_index(transition);
  const int z = kZeroLevel;
  const double c = std::cos(0.5 * angle);
  const double s = std::sin(0.5 * angle);
  const Complex minus_i{0.0, -1.0};
  Propagator u = Propagator::Identity();
  u(z, z) = c;
  u(m, m) = c;
  // (|0>,|m>) block of cos(phi) sigma_x + sin(phi) sigma_y is [[0, e^{-i phi}], [e^{i phi}, 0]].
  u(z, m) = minus_i * s * std::polar(1.0, -phase);
  u(m, z) = minus_i * s * std::polar(1.0, phase);
  return u;
}

Propagator free_propagator(double delta_minus, double delta_plus, double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("free_propagator: tau must be non-negative");
  Propagator u = Propagator::Zero();
  u(0, 0) = std::polar(1.0, -units::kTwoPi * delta_minus * tau);
  u(1, 1) = 1.0;
  u(2, 2) = std::polar(1.0, -units::kTwoPi * delta_plus * tau);
  return u;
}

Propagator swap_propagator() {
  const double pi = std::numbers::pi;
  const Propagator a = pulse_propagator(Transition::minus, pi, 0.0);
  const Propagator b = pulse_propagator(Transition::plus, pi, 0.0);
  return a * b * a;
}

QutritState ground_state() { return QutritState{0.0, 1.0, 0.0}; }

double population(const QutritState& psi, int level) { return std::norm(psi(level)); }

}  // namespace divtherm
