#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <variant>

#include "divtherm/sequences.hpp"
#include "divtherm/units.hpp"
#include "oracles.hpp"

using namespace divtherm;
using namespace divtherm::units;

namespace {

const double kGyro = kElectronGyro;

// Element-by-element matrix evolution, written against the spin-model
// primitives only. Returns the state just before the closing pulse when
// `stop_before_last` is set.
QutritState run_elements(const PulseSequence& seq, double dm, double dp, bool stop_before_last) {
  QutritState psi = ground_state();
  const std::size_t end = seq.elements.size() - (stop_before_last ? 1 : 0);
  for (std::size_t i = 0; i < end; ++i) {
    const auto& e = seq.elements[i];
    if (const auto* p = std::get_if<Pulse>(&e))
      psi = pulse_propagator(p->transition, p->angle, p->phase) * psi;
    else
      psi = free_propagator(dm, dp, std::get<Delay>(e).duration) * psi;
  }
  return psi;
}

double p0_direct(const PulseSequence& seq, double delta_d, double delta_b) {
  const double dm = delta_d - kGyro * delta_b;
  const double dp = delta_d + kGyro * delta_b;
  return population(run_elements(seq, dm, dp, false), kZeroLevel);
}

std::vector<double> delays(const PulseSequence& seq) {
  std::vector<double> out;
  for (const auto& e : seq.elements)
    if (const auto* d = std::get_if<Delay>(&e)) out.push_back(d->duration);
  return out;
}

const Pulse& pulse_at(const PulseSequence& seq, std::size_t i) {
  return std::get<Pulse>(seq.elements.at(i));
}

}  // namespace

TEST_SUITE("sequences") {

TEST_CASE("ramsey structure") {
  const auto s = make_ramsey(Transition::plus, 2e-6, 0.3);
  REQUIRE(s.elements.size() == 3);
  CHECK(pulse_at(s, 0).angle == doctest::Approx(oracle::kPi / 2));
  CHECK(pulse_at(s, 0).transition == Transition::plus);
  CHECK(pulse_at(s, 2).phase == 0.3);
  CHECK(s.total_delay() == 2e-6);
  CHECK(s.swap_count() == 0);
  CHECK_THROWS_AS(make_ramsey(Transition::minus, -1e-9, 0.0), std::invalid_argument);
}

TEST_CASE("ramsey with zero delay and phase 0 transfers fully") {
  const auto s = make_ramsey(Transition::minus, 0.0, 0.0);
  CHECK(p0_direct(s, 0.0, 0.0) < 1e-30);
  CHECK(oracle::p0_from_phase(analytic_phase(s, 0.0, 0.0, kGyro)) < 1e-30);
}

TEST_CASE("thermal ramsey structure") {
  const auto s = make_thermal_ramsey(1.5e-6);
  CHECK(s.swap_count() == 1);
  CHECK(delays(s) == std::vector<double>{1.5e-6, 1.5e-6});
  CHECK(s.total_delay() == doctest::Approx(3e-6).epsilon(1e-15));
  CHECK(pulse_at(s, 0).transition == Transition::minus);
  CHECK(pulse_at(s, s.elements.size() - 1).transition == Transition::plus);
  CHECK(s.label.family == "thermal-ramsey");
  CHECK_THROWS_AS(make_thermal_ramsey(-1.0), std::invalid_argument);
}

TEST_CASE("thermal echo structure") {
  const auto s = make_thermal_echo(2e-6);
  CHECK(s.swap_count() == 2);
  CHECK(delays(s) == std::vector<double>{1e-6, 2e-6, 1e-6});
  CHECK(s.total_delay() == doctest::Approx(4e-6).epsilon(1e-15));
  CHECK(pulse_at(s, 0).angle == doctest::Approx(oracle::kPi / 2));
  CHECK(pulse_at(s, s.elements.size() - 1).angle == doctest::Approx(oracle::kPi / 2));
}

TEST_CASE("tcpmg timing and swap parity for n = 1..8") {
  for (int n = 1; n <= 8; ++n) {
    CAPTURE(n);
    const double t = 12e-6;
    const auto s = make_tcpmg(n, t);
    CHECK(s.swap_count() == n);
    const auto d = delays(s);
    REQUIRE(d.size() == static_cast<std::size_t>(n + 1));
    CHECK(d.front() == doctest::Approx(t / (2 * n)).epsilon(1e-15));
    CHECK(d.back() == doctest::Approx(t / (2 * n)).epsilon(1e-15));
    for (int k = 1; k < n; ++k) CHECK(d[k] == doctest::Approx(t / n).epsilon(1e-15));
    CHECK(std::abs(s.total_delay() - t) <= 1e-15 * t * (n + 1));

    const Transition expected = n % 2 == 1 ? Transition::plus : Transition::minus;
    const auto& last = pulse_at(s, s.elements.size() - 1);
    CHECK(last.transition == expected);

    // The matrix evolution agrees: just before readout the coherence sits on
    // the branch addressed by the closing pulse.
    const QutritState psi = run_elements(s, 1.3e5, -2.1e5, true);
    const int occupied = level_index(expected);
    CHECK(std::norm(psi(occupied)) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::norm(psi(level_index(other(expected)))) < 1e-24);
  }
  CHECK_THROWS_AS(make_tcpmg(0, 1e-6), std::invalid_argument);
}

TEST_CASE("phase examples") {
  // thermal ramsey with 10 mG and no thermal shift: zero phase
  CHECK(std::abs(analytic_phase(make_thermal_ramsey(1e-6), 0.0, 10 * milligauss, kGyro)) < 1e-12);
  // plain ramsey on -1 picks up the magnetic phase
  const double expected = -kTwoPi * 28.024 * kHz * 1 * us;
  CHECK(analytic_phase(make_ramsey(Transition::minus, 1 * us, oracle::kPi), 0.0,
                       10 * milligauss, kGyro) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(oracle::ramsey_phase(0.0, kGyro, 10 * milligauss, -1, 1 * us)));
  // 250 kHz over t = 2 us: phase pi, P0 = 0
  const double ph = analytic_phase(make_thermal_ramsey(1 * us), 250 * kHz, 0.0, kGyro);
  CHECK(ph == doctest::Approx(oracle::kPi).epsilon(1e-12));
  CHECK(oracle::p0_from_phase(ph) < 1e-24);
  // no pulses at all
  CHECK(analytic_phase(PulseSequence{}, 1e6, 1e-6, kGyro) == 0.0);
  PulseSequence only_delays;
  only_delays.elements = {Delay{1e-6}, Delay{2e-6}};
  CHECK(analytic_phase(only_delays, 1e6, 1e-6, kGyro) == 0.0);
}

TEST_CASE("thermal phase is 2 pi delta_d t for every thermal family") {
  const double dd = 317 * kHz;
  const double t = 6.4e-6;
  CHECK(analytic_phase(make_thermal_ramsey(t / 2), dd, 0.0, kGyro) ==
        doctest::Approx(oracle::thermal_phase(dd, t)).epsilon(1e-12));
  CHECK(analytic_phase(make_thermal_echo(t / 2), dd, 0.0, kGyro) ==
        doctest::Approx(oracle::thermal_phase(dd, t)).epsilon(1e-12));
  for (int n = 1; n <= 6; ++n)
    CHECK(analytic_phase(make_tcpmg(n, t), dd, 0.0, kGyro) ==
          doctest::Approx(oracle::thermal_phase(dd, t)).epsilon(1e-12));
}

TEST_CASE("magnetic immunity: two static field values give the same phase") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> ud(-1e6, 1e6), ub(-1e-5, 1e-5), ut(0.0, 2e-5);
  for (int i = 0; i < 100; ++i) {
    const double dd = ud(rng), t = ut(rng), b1 = ub(rng), b2 = ub(rng);
    std::vector<PulseSequence> seqs{make_thermal_ramsey(t / 2), make_thermal_echo(t / 2)};
    for (int n = 1; n <= 5; ++n) seqs.push_back(make_tcpmg(n, t));
    for (const auto& s : seqs) {
      const double a = analytic_phase(s, dd, b1, kGyro);
      const double b = analytic_phase(s, dd, b2, kGyro);
      CHECK(std::abs(a - b) <= 1e-9 * (1.0 + std::abs(a)));
    }
  }
}

TEST_CASE("linear field drift is refocused by the echo") {
  // Piecewise-constant field per delay, c * (segment midpoint): the echo's
  // antisymmetric weights cancel it. Built as detuning offsets per segment.
  const double tau = 4e-6;
  const auto s = make_thermal_echo(tau);
  const double c = 1e-7 / 1e-6;  // T/s
  // segments: [0, tau/2] on -1, [tau/2, 3tau/2] on +1, [3tau/2, 2tau] on -1
  const double mid1 = tau / 4, mid2 = tau, mid3 = 7 * tau / 4;
  const double mag = kTwoPi * kGyro * c *
                     (-mid1 * (tau / 2) + mid2 * tau - mid3 * (tau / 2));
  CHECK(std::abs(mag) < 1e-12);
  // the same bookkeeping run through the matrix evolution with a ramp
  QutritState psi = ground_state();
  double t_now = 0.0;
  for (const auto& e : s.elements) {
    if (const auto* p = std::get_if<Pulse>(&e)) {
      psi = pulse_propagator(p->transition, p->angle, p->phase) * psi;
      continue;
    }
    const double dur = std::get<Delay>(e).duration;
    const int steps = 400;
    for (int k = 0; k < steps; ++k) {
      const double tm = t_now + (k + 0.5) * dur / steps;
      const double db = c * tm;
      psi = free_propagator(-kGyro * db, kGyro * db, dur / steps) * psi;
    }
    t_now += dur;
  }
  CHECK(population(psi, kZeroLevel) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("tcpmg cancels static field exactly") {
  for (int n = 1; n <= 8; ++n) {
    const auto s = make_tcpmg(n, 9e-6);
    CHECK(std::abs(analytic_phase(s, 0.0, 37 * milligauss, kGyro)) < 1e-12);
  }
}

TEST_CASE("thermal linearity: three collinear points with slope 2 pi t") {
  const double t = 5e-6;
  for (const auto& s : {make_thermal_ramsey(t / 2), make_thermal_echo(t / 2), make_tcpmg(3, t)}) {
    const double p1 = analytic_phase(s, -2e5, 12 * milligauss, kGyro);
    const double p2 = analytic_phase(s, 1e5, 12 * milligauss, kGyro);
    const double p3 = analytic_phase(s, 4e5, 12 * milligauss, kGyro);
    CHECK((p2 - p1) == doctest::Approx(p3 - p2).epsilon(1e-10));
    CHECK((p2 - p1) / 3e5 == doctest::Approx(kTwoPi * t).epsilon(1e-10));
  }
}

TEST_CASE("matrix evolution matches the phase bookkeeping") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> ud(-2e6, 2e6), ub(-2e-5, 2e-5), ut(0.0, 2e-5),
      uph(-3.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    const double dd = ud(rng), db = ub(rng), t = ut(rng), ph = uph(rng);
    std::vector<PulseSequence> seqs{make_ramsey(Transition::minus, t, ph),
                                    make_ramsey(Transition::plus, t, ph),
                                    make_thermal_ramsey(t / 2, ph), make_thermal_echo(t / 2, ph)};
    for (int n = 1; n <= 4; ++n) seqs.push_back(make_tcpmg(n, t, ph));
    for (const auto& s : seqs) {
      const double want = oracle::p0_from_phase(analytic_phase(s, dd, db, kGyro));
      CHECK(std::abs(p0_direct(s, dd, db) - want) < 1e-9);
    }
  }
}

TEST_CASE("unsupported sequences") {
  PulseSequence s = make_thermal_ramsey(1e-6);
  std::get<Pulse>(s.elements[2]).angle = 1.0;
  CHECK_THROWS_AS(analytic_phase(s, 0, 0, kGyro), UnsupportedSequence);
  PulseSequence one;
  one.elements = {Pulse{Transition::minus, oracle::kPi / 2, 0.0}, Delay{1e-6}};
  CHECK_THROWS_AS(analytic_phase(one, 0, 0, kGyro), UnsupportedSequence);
  PulseSequence wrong_close = make_ramsey(Transition::minus, 1e-6, 0.0);
  std::get<Pulse>(wrong_close.elements[2]).transition = Transition::plus;
  CHECK_THROWS_AS(analytic_phase(wrong_close, 0, 0, kGyro), UnsupportedSequence);
}

TEST_CASE("families") {
  const auto tr = make_family("thermal-ramsey");
  CHECK(tr.make(4e-6).total_delay() == doctest::Approx(4e-6));
  const auto te = make_family("thermal-echo");
  CHECK(te.make(4e-6).total_delay() == doctest::Approx(4e-6));
  const auto tc = make_family("tcpmg", 3);
  CHECK(tc.make(4e-6).swap_count() == 3);
  CHECK(make_family("ramsey").make(1e-6).label.family == "ramsey");
  try {
    make_family("hahn");
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    for (const auto& name : kFamilyNames) CHECK(msg.find(name) != std::string::npos);
  }
  CHECK_THROWS_AS(make_family("tcpmg", 0), std::invalid_argument);
}

TEST_CASE("json description matches the golden file") {
  const auto j = to_json(make_tcpmg(2, 8e-6));
  std::ifstream in(std::string(DIVTHERM_SOURCE_DIR) + "/tests/golden/tcpmg_n2_8us.json");
  REQUIRE(in.good());
  const auto golden = nlohmann::json::parse(in);
  CHECK(j == golden);
  CHECK(j["elements"].size() == 11);
  CHECK(j["label"]["family"] == "tcpmg");
}

}  // TEST_SUITE
