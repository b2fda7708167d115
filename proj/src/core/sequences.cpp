#include "divtherm/sequences.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "divtherm/units.hpp"

namespace divtherm {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kAngleTol = 1e-12;

Pulse half_pi(Transition t, double phase = 0.0) { return {t, 0.5 * kPi, phase}; }

void append_swap(std::vector<PulseElement>& out) {
  out.emplace_back(Pulse{Transition::minus, kPi, 0.0});
  out.emplace_back(Pulse{Transition::plus, kPi, 0.0});
  out.emplace_back(Pulse{Transition::minus, kPi, 0.0});
}

void check_time(double t, const char* what) {
  if (!(t >= 0.0) || !std::isfinite(t))
    throw std::invalid_argument(std::string(what) + ": time must be finite and non-negative");
}

// CPMG-style timing: edge = total / (2n), inner = total / n. Computed once here
// so every generator splits time the same way.
struct CpmgTiming {
  double edge;
  double inner;
};

CpmgTiming cpmg_timing(double total, int n) {
  return {total / (2.0 * n), total / static_cast<double>(n)};
}

bool near(double a, double b) { return std::abs(a - b) <= kAngleTol; }

}  // namespace

double PulseSequence::total_delay() const {
  double total = 0.0;
  for (const auto& e : elements)
    if (const auto* d = std::get_if<Delay>(&e)) total += d->duration;
  return total;
}

int PulseSequence::swap_count() const {
  int count = 0;
  for (std::size_t i = 0; i + 2 < elements.size(); ++i) {
    const auto* a = std::get_if<Pulse>(&elements[i]);
    const auto* b = std::get_if<Pulse>(&elements[i + 1]);
    const auto* c = std::get_if<Pulse>(&elements[i + 2]);
    if (a && b && c && near(a->angle, kPi) && near(b->angle, kPi) && near(c->angle, kPi) &&
        a->transition == Transition::minus && b->transition == Transition::plus &&
        c->transition == Transition::minus) {
      ++count;
      i += 2;
    }
  }
  return count;
}

PulseSequence make_ramsey(Transition transition, double tau, double detuning_phase) {
  check_time(tau, "make_ramsey");
  PulseSequence seq;
  seq.elements = {half_pi(transition), Delay{tau}, half_pi(transition, detuning_phase)};
  seq.label = {"ramsey", 0, tau};
  return seq;
}

PulseSequence make_thermal_ramsey(double tau, double readout_phase) {
  check_time(tau, "make_thermal_ramsey");
  PulseSequence seq;
  seq.elements.emplace_back(half_pi(Transition::minus));
  seq.elements.emplace_back(Delay{tau});
  append_swap(seq.elements);
  seq.elements.emplace_back(Delay{tau});
  seq.elements.emplace_back(half_pi(Transition::plus, readout_phase));
  seq.label = {"thermal-ramsey", 1, tau};
  return seq;
}

PulseSequence make_thermal_echo(double tau, double readout_phase) {
  check_time(tau, "make_thermal_echo");
  // One refocusing swap per arm: the coherence spends tau/2 + tau/2 on -1 and
  // tau on +1, so thermal phase adds up while static and linear-drift
  // magnetic phase cancel.
  const double half = 0.5 * tau;
  PulseSequence seq;
  seq.elements.emplace_back(half_pi(Transition::minus));
  seq.elements.emplace_back(Delay{half});
  append_swap(seq.elements);
  seq.elements.emplace_back(Delay{tau});
  append_swap(seq.elements);
  seq.elements.emplace_back(Delay{half});
  seq.elements.emplace_back(half_pi(Transition::minus, readout_phase));
  seq.label = {"thermal-echo", 2, tau};
  return seq;
}

PulseSequence make_tcpmg(int n, double total_time, double readout_phase) {
  if (n < 1) throw std::invalid_argument("make_tcpmg: n must be >= 1");
  check_time(total_time, "make_tcpmg");
  const auto [edge, inner] = cpmg_timing(total_time, n);
  PulseSequence seq;
  seq.elements.emplace_back(half_pi(Transition::minus));
  seq.elements.emplace_back(Delay{edge});
  for (int k = 0; k < n; ++k) {
    append_swap(seq.elements);
    seq.elements.emplace_back(Delay{k + 1 < n ? inner : edge});
  }
  const Transition last = (n % 2 == 1) ? Transition::plus : Transition::minus;
  seq.elements.emplace_back(half_pi(last, readout_phase));
  seq.label = {"tcpmg", n, total_time};
  return seq;
}

SequenceFamily make_family(const std::string& name, int n, double readout_phase) {
  if (name == "ramsey") {
    return {name, 0, [readout_phase](double x) {
              return make_ramsey(Transition::minus, x, readout_phase);
            }};
  }
  if (name == "thermal-ramsey") {
    return {name, 1, [readout_phase](double x) { return make_thermal_ramsey(0.5 * x, readout_phase); }};
  }
  if (name == "thermal-echo") {
    return {name, 2, [readout_phase](double x) { return make_thermal_echo(0.5 * x, readout_phase); }};
  }
  if (name == "tcpmg") {
    if (n < 1) throw std::invalid_argument("tcpmg: n must be >= 1");
    return {name, n, [n, readout_phase](double x) { return make_tcpmg(n, x, readout_phase); }};
  }
  std::string valid;
  for (const auto& f : kFamilyNames) valid += (valid.empty() ? "" : ", ") + f;
  throw std::invalid_argument("unknown sequence family '" + name + "' (valid: " + valid + ")");
}

namespace {

// Phase bookkeeping for ideal pulses: after the opening pi/2 the state is a
// sum of two single-level components. pi pulses permute levels with constant
// phase factors; delays add 2 pi Delta_L tau to the phase of the component on
// level L (Delta on |0> is zero). No matrices are involved.
struct Component {
  int level;
  Complex constant;
  double phase;  // amplitude carries exp(-i phase)
};

int partner_level(Transition t) { return level_index(t); }

void apply_pi(std::vector<Component>& comps, const Pulse& p) {
  const int m = partner_level(p.transition);
  const Complex minus_i{0.0, -1.0};
  for (auto& c : comps) {
    if (c.level == kZeroLevel) {
      c.level = m;
      c.constant *= minus_i * std::polar(1.0, p.phase);
    } else if (c.level == m) {
      c.level = kZeroLevel;
      c.constant *= minus_i * std::polar(1.0, -p.phase);
    }
  }
}

double wrap_phase(double x) {
  double r = std::remainder(x, units::kTwoPi);
  if (r <= -kPi) r += units::kTwoPi;
  return r;
}

}  // namespace

double analytic_phase(const PulseSequence& seq, double delta_d, double delta_b_static,
                      double gyro, double drive_offset_minus, double drive_offset_plus) {
  const double magnetic = gyro * delta_b_static;
  const std::array<double, 3> detuning{delta_d - magnetic + drive_offset_minus, 0.0,
                                       delta_d + magnetic + drive_offset_plus};

  // Index range of pulses.
  std::optional<std::size_t> first_pulse;
  std::optional<std::size_t> last_pulse;
  for (std::size_t i = 0; i < seq.elements.size(); ++i) {
    if (std::holds_alternative<Pulse>(seq.elements[i])) {
      if (!first_pulse) first_pulse = i;
      last_pulse = i;
    }
  }
  if (!first_pulse) return 0.0;  // nothing opens a coherence
  if (*first_pulse == *last_pulse)
    throw UnsupportedSequence("analytic_phase: a single pulse opens no interferometer");

  const auto& open = std::get<Pulse>(seq.elements[*first_pulse]);
  const auto& close = std::get<Pulse>(seq.elements[*last_pulse]);
  if (!near(open.angle, 0.5 * kPi) || !near(close.angle, 0.5 * kPi))
    throw UnsupportedSequence("analytic_phase: sequence must open and close with pi/2 pulses");

  const double s = std::sqrt(0.5);
  std::vector<Component> comps{
      {kZeroLevel, Complex{s, 0.0}, 0.0},
      {partner_level(open.transition), Complex{0.0, -s} * std::polar(1.0, open.phase), 0.0}};

  for (std::size_t i = *first_pulse + 1; i < *last_pulse; ++i) {
    const auto& e = seq.elements[i];
    if (const auto* d = std::get_if<Delay>(&e)) {
      if (d->duration < 0.0) throw UnsupportedSequence("analytic_phase: negative delay");
      for (auto& c : comps) c.phase += units::kTwoPi * detuning[c.level] * d->duration;
      continue;
    }
    const auto& p = std::get<Pulse>(e);
    if (!near(p.angle, kPi))
      throw UnsupportedSequence("analytic_phase: only pi pulses are supported mid-sequence");
    apply_pi(comps, p);
  }

  const int readout_level = partner_level(close.transition);
  const Component* zero = nullptr;
  const Component* partner = nullptr;
  for (const auto& c : comps) {
    if (c.level == kZeroLevel) zero = &c;
    if (c.level == readout_level) partner = &c;
  }
  if (!zero || !partner)
    throw UnsupportedSequence(
        "analytic_phase: coherence is not on the read-out transition at the closing pulse");

  // P0 = (1 + cos psi)/2 with psi = arg(conj(c0) * (-i e^{-i phi_r}) * c_m) + (theta_0 - theta_m).
  const Complex cross = std::conj(zero->constant) * Complex{0.0, -1.0} *
                        std::polar(1.0, -close.phase) * partner->constant;
  return (partner->phase - zero->phase) - wrap_phase(std::arg(cross));
}

nlohmann::json to_json(const PulseSequence& seq) {
  nlohmann::json elements = nlohmann::json::array();
  for (const auto& e : seq.elements) {
    if (const auto* p = std::get_if<Pulse>(&e)) {
      elements.push_back({{"type", "pulse"},
                          {"transition", to_string(p->transition)},
                          {"angle_rad", p->angle},
                          {"phase_rad", p->phase}});
    } else {
      elements.push_back({{"type", "delay"}, {"duration_s", std::get<Delay>(e).duration}});
    }
  }
  return {{"label",
           {{"family", seq.label.family}, {"n", seq.label.n}, {"tau_s", seq.label.tau}}},
          {"readout_basis", "population_0"},
          {"total_delay_s", seq.total_delay()},
          {"elements", std::move(elements)}};
}

}  // namespace divtherm
