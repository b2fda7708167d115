#include <doctest.h>

#include <cmath>
#include <vector>

#include "divtherm/noise.hpp"
#include "divtherm/units.hpp"
#include "oracles.hpp"

using namespace divtherm;
using namespace divtherm::units;

TEST_SUITE("noise") {

TEST_CASE("defaults and validation") {
  NoiseModel m;
  CHECK(m.sigma_static == doctest::Approx(50.1 * milligauss));
  CHECK(m.sigma_ou == doctest::Approx(20.4 * milligauss));
  CHECK(m.tau_c == doctest::Approx(3 * us));
  CHECK_NOTHROW(m.validate());
  CHECK(m.active());
  CHECK(m.step_for(100 * us) == doctest::Approx(m.tau_c / 20));
  CHECK(m.step_for(1 * us) == doctest::Approx(1e-8));
  m.dt = 5e-9;
  CHECK(m.step_for(100 * us) == 5e-9);

  NoiseModel bad;
  bad.sigma_ou = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = NoiseModel{};
  bad.tau_c = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.ou_enabled = false;
  CHECK_NOTHROW(bad.validate());
  bad.trajectories = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  NoiseModel off;
  off.static_enabled = false;
  off.ou_enabled = false;
  CHECK_FALSE(off.active());
}

TEST_CASE("static offset: zero sigma and disabled give exactly zero") {
  NoiseModel m;
  m.sigma_static = 0.0;
  CHECK(sample_static(m, 42u) == 0.0);
  m.sigma_static = 1e-6;
  m.static_enabled = false;
  CHECK(sample_static(m, 42u) == 0.0);
}

TEST_CASE("static offset moments over 1e5 draws") {
  NoiseModel m;
  Engine rng = make_engine(2024);
  const int n = 100000;
  std::vector<double> v(n);
  for (auto& x : v) x = sample_static(m, rng);
  const auto [mean, sd] = oracle::mean_std(v);
  CHECK(std::abs(mean) < 4.0 * m.sigma_static / std::sqrt(n));
  CHECK(sd * sd == doctest::Approx(m.sigma_static * m.sigma_static).epsilon(0.05));
}

TEST_CASE("OU argument errors and zero sigma") {
  NoiseModel m;
  CHECK_THROWS_AS(sample_ou(m, 0.0, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_ou(m, 1e-8, 0, 1), std::invalid_argument);
  m.sigma_ou = 0.0;
  const auto t = sample_ou(m, 1e-8, 50, 1);
  REQUIRE(t.samples.size() == 50);
  for (double x : t.samples) CHECK(x == 0.0);
}

TEST_CASE("OU determinism") {
  NoiseModel m;
  const auto a = sample_ou(m, 1e-7, 500, 99);
  const auto b = sample_ou(m, 1e-7, 500, 99);
  const auto c = sample_ou(m, 1e-7, 500, 100);
  CHECK(a.samples == b.samples);
  CHECK(a.samples != c.samples);
  CHECK(sample_static(m, 7u) == sample_static(m, 7u));
}

TEST_CASE("OU ensemble autocorrelation follows exp(-lag/tau_c)") {
  NoiseModel m;
  const double dt = 0.25 * us;
  const int steps = 64;
  const int traj = 10000;
  const int lags[] = {0, 2, 4, 8, 12};
  std::vector<double> acc(std::size(lags), 0.0);
  std::vector<double> count(std::size(lags), 0.0);
  for (int r = 0; r < traj; ++r) {
    const auto t = sample_ou(m, dt, steps, derive_seed(5, r));
    for (std::size_t li = 0; li < std::size(lags); ++li) {
      const int lag = lags[li];
      for (int k = 0; k + lag < steps; k += 4) {
        acc[li] += t.samples[k] * t.samples[k + lag];
        count[li] += 1.0;
      }
    }
  }
  const double var = m.sigma_ou * m.sigma_ou;
  for (std::size_t li = 0; li < std::size(lags); ++li) {
    CAPTURE(lags[li]);
    const double expected = var * std::exp(-lags[li] * dt / m.tau_c);
    CHECK(acc[li] / count[li] == doctest::Approx(expected).epsilon(0.05));
  }
}

TEST_CASE("OU marginal variance does not depend on the sample index") {
  NoiseModel m;
  const int steps = 40;
  const int traj = 20000;
  std::vector<double> s2(steps, 0.0);
  for (int r = 0; r < traj; ++r) {
    const auto t = sample_ou(m, 0.5 * us, steps, derive_seed(77, r));
    for (int k = 0; k < steps; ++k) s2[k] += t.samples[k] * t.samples[k];
  }
  const double var = m.sigma_ou * m.sigma_ou;
  for (int k : {0, 1, 10, 20, 39}) CHECK(s2[k] / traj == doctest::Approx(var).epsilon(0.05));
}

TEST_CASE("OU white-noise limit: dt >> tau_c decorrelates successive samples") {
  NoiseModel m;
  const auto t = sample_ou(m, 100.0 * m.tau_c, 50000, 3);
  double c = 0.0, v = 0.0;
  for (std::size_t k = 0; k + 1 < t.samples.size(); ++k) {
    c += t.samples[k] * t.samples[k + 1];
    v += t.samples[k] * t.samples[k];
  }
  // |rho| below 4 standard errors of a zero correlation
  CHECK(std::abs(c / v) < 4.0 / std::sqrt(50000.0));
}

TEST_CASE("phase integral of simple trajectories") {
  const double gyro = kElectronGyro;
  NoiseTrajectory zero{1e-8, std::vector<double>(101, 0.0)};
  CHECK(phase_integral(zero, {0.0, 1e-6}, 1, gyro) == 0.0);

  const double c = 30 * milligauss;
  NoiseTrajectory flat{1e-8, std::vector<double>(101, c)};
  CHECK(phase_integral(flat, {0.0, 1e-6}, 1, gyro) ==
        doctest::Approx(kTwoPi * gyro * c * 1e-6).epsilon(1e-12));
  CHECK(phase_integral(flat, {0.13e-6, 0.577e-6}, -1, gyro) ==
        doctest::Approx(-kTwoPi * gyro * c * 0.447e-6).epsilon(1e-12));

  // ramp b(t) = s t is integrated exactly by the trapezoid rule
  const double s = 2e-2;  // T/s
  NoiseTrajectory ramp{1e-8, std::vector<double>(201)};
  for (std::size_t k = 0; k < ramp.samples.size(); ++k) ramp.samples[k] = s * 1e-8 * k;
  const double t0 = 0.215e-6, t1 = 1.733e-6;
  CHECK(phase_integral(ramp, {t0, t1}, 1, gyro) ==
        doctest::Approx(kTwoPi * gyro * 0.5 * s * (t1 * t1 - t0 * t0)).epsilon(1e-10));
  // window inside one sample interval
  CHECK(phase_integral(ramp, {0.2101e-6, 0.2109e-6}, 1, gyro) ==
        doctest::Approx(kTwoPi * gyro * 0.5 * s * (0.2109e-6 * 0.2109e-6 - 0.2101e-6 * 0.2101e-6))
            .epsilon(1e-9));
  CHECK(phase_integral(ramp, {1e-6, 1e-6}, 1, gyro) == 0.0);
}

TEST_CASE("phase integral range errors") {
  NoiseTrajectory flat{1e-8, std::vector<double>(101, 1e-6)};
  CHECK_THROWS_AS(phase_integral(flat, {-1e-7, 1e-7}, 1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(phase_integral(flat, {0.0, 2e-6}, 1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(phase_integral(flat, {5e-7, 4e-7}, 1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(phase_integral(flat, {0.0, 1e-7}, 0, 1.0), std::invalid_argument);
}

TEST_CASE("OU batch integral variance") {
  // integral of a stationary OU over T has variance
  // 2 sigma^2 tau^2 (T/tau - 1 + e^{-T/tau})
  NoiseModel m;
  Engine b = make_engine(9);
  const int lanes = 20000;
  OuBatch big(m, lanes, b);
  const double dt = 1e-7;
  const int steps = 60;
  const auto out = big.advance(dt, steps, b);
  double s2 = 0.0;
  for (double x : out) s2 += x * x;
  const double T = dt * steps, tau = m.tau_c;
  const double expected = 2.0 * m.sigma_ou * m.sigma_ou * tau * tau * (T / tau - 1.0 + std::exp(-T / tau));
  CHECK(s2 / lanes == doctest::Approx(expected).epsilon(0.05));
}

}  // TEST_SUITE
