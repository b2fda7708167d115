#include "divtherm/noise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "divtherm/kernels.hpp"
#include "divtherm/units.hpp"

namespace divtherm {

void NoiseModel::validate() const {
  if (!(sigma_static >= 0.0) || !(sigma_ou >= 0.0))
    throw std::invalid_argument("noise: sigma values must be non-negative");
  if (ou_enabled && !(tau_c > 0.0))
    throw std::invalid_argument("noise: tau_c must be positive when the OU component is enabled");
  if (trajectories < 1) throw std::invalid_argument("noise: trajectories must be >= 1");
  if (!(dt >= 0.0)) throw std::invalid_argument("noise: dt must be non-negative");
}

double NoiseModel::step_for(double total_delay) const {
  if (dt > 0.0) return dt;
  double step = tau_c / 20.0;
  if (total_delay > 0.0) step = std::min(step, total_delay / 100.0);
  return step;
}

double sample_static(const NoiseModel& model, Engine& rng) {
  if (!model.static_enabled || model.sigma_static == 0.0) return 0.0;
  std::normal_distribution<double> gauss(0.0, model.sigma_static);
  return gauss(rng);
}

double sample_static(const NoiseModel& model, std::uint64_t seed) {
  Engine rng = make_engine(seed);
  return sample_static(model, rng);
}

OuStep ou_step(const NoiseModel& model, double dt) {
  const double decay = std::exp(-dt / model.tau_c);
  // 1 - e^{-2x} via expm1 keeps the diffusion accurate for dt << tau_c.
  const double diffusion = model.sigma_ou * std::sqrt(-std::expm1(-2.0 * dt / model.tau_c));
  return {decay, diffusion};
}

NoiseTrajectory sample_ou(const NoiseModel& model, double dt, int n_steps, std::uint64_t seed) {
  if (!(dt > 0.0)) throw std::invalid_argument("sample_ou: dt must be positive");
  if (n_steps < 1) throw std::invalid_argument("sample_ou: n_steps must be >= 1");
  NoiseTrajectory traj{dt, std::vector<double>(static_cast<std::size_t>(n_steps), 0.0)};
  if (!model.ou_enabled || model.sigma_ou == 0.0) return traj;

  Engine rng = make_engine(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto [decay, diffusion] = ou_step(model, dt);
  double x = model.sigma_ou * gauss(rng);
  traj.samples[0] = x;
  for (int k = 1; k < n_steps; ++k) {
    x = decay * x + diffusion * gauss(rng);
    traj.samples[static_cast<std::size_t>(k)] = x;
  }
  return traj;
}

double phase_integral(const NoiseTrajectory& traj, std::pair<double, double> window, int sign,
                      double gyro) {
  const auto [t0, t1] = window;
  const double span = traj.duration();
  const double slack = 1e-12 * std::max(span, traj.dt);
  if (!(t0 >= -slack && t1 >= t0 && t1 <= span + slack))
    throw std::invalid_argument("phase_integral: window outside trajectory span");
  if (sign != 1 && sign != -1) throw std::invalid_argument("phase_integral: sign must be +-1");
  if (traj.samples.size() < 2 || t1 == t0) return 0.0;

  const auto& y = traj.samples;
  const std::size_t last = y.size() - 1;
  auto value_at = [&](double t) {
    const double u = std::clamp(t / traj.dt, 0.0, static_cast<double>(last));
    const std::size_t k = std::min(static_cast<std::size_t>(u), last - 1);
    const double frac = u - static_cast<double>(k);
    return y[k] + frac * (y[k + 1] - y[k]);
  };

  // Whole sample intervals inside the window go through the trapezoid kernel;
  // partial intervals at the edges use the interpolated endpoint values.
  const double u0 = std::clamp(t0 / traj.dt, 0.0, static_cast<double>(last));
  const double u1 = std::clamp(t1 / traj.dt, 0.0, static_cast<double>(last));
  const double eps = 1e-9;
  std::size_t first = static_cast<std::size_t>(std::ceil(u0 - eps));
  std::size_t end = static_cast<std::size_t>(std::floor(u1 + eps));
  double integral = 0.0;
  if (first >= end) {
    integral = 0.5 * (value_at(t0) + value_at(t1)) * (t1 - t0);
  } else {
    const double tf = static_cast<double>(first) * traj.dt;
    const double te = static_cast<double>(end) * traj.dt;
    integral = traj.dt * kernels::trapezoid_sum(std::span(y).subspan(first, end - first + 1));
    if (tf > t0) integral += 0.5 * (value_at(t0) + y[first]) * (tf - t0);
    if (t1 > te) integral += 0.5 * (y[end] + value_at(t1)) * (t1 - te);
  }
  return units::kTwoPi * gyro * sign * integral;
}

OuBatch::OuBatch(const NoiseModel& model, std::size_t lanes, Engine& rng)
    : model_(model), x_(lanes, 0.0), integral_(lanes, 0.0), gauss_(lanes, 0.0) {
  if (model_.ou_enabled && model_.sigma_ou > 0.0) {
    std::normal_distribution<double> gauss(0.0, model_.sigma_ou);
    for (auto& x : x_) x = gauss(rng);
  }
}

std::span<const double> OuBatch::advance(double dt, int steps, Engine& rng) {
  std::fill(integral_.begin(), integral_.end(), 0.0);
  if (!model_.ou_enabled || model_.sigma_ou == 0.0 || steps <= 0) return integral_;
  const auto [decay, diffusion] = ou_step(model_, dt);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int s = 0; s < steps; ++s) {
    for (auto& g : gauss_) g = gauss(rng);
    kernels::ou_step_accumulate(x_, integral_, gauss_, decay, diffusion, 0.5 * dt);
  }
  return integral_;
}

}  // namespace divtherm
