#include "divtherm/kernels.hpp"

#include <cassert>

namespace divtherm::kernels::scalar {

void ou_step_accumulate(std::span<double> x, std::span<double> integral,
                        std::span<const double> gauss, double decay,
                        double diffusion, double half_dt) {
  assert(integral.size() == x.size() && gauss.size() == x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double acc = integral[i] + half_dt * x[i];
    const double next = decay * x[i] + diffusion * gauss[i];
    integral[i] = acc + half_dt * next;
    x[i] = next;
  }
}

double trapezoid_sum(std::span<const double> y) {
  if (y.size() < 2) return 0.0;
  const std::size_t n = y.size() - 1;
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t k = 0; k < 4; ++k) s[k] += 0.5 * (y[i + k] + y[i + k + 1]);
  }
  double total = (s[0] + s[1]) + (s[2] + s[3]);
  for (; i < n; ++i) total += 0.5 * (y[i] + y[i + 1]);
  return total;
}

void lorentzian_pair(std::span<const double> freq, std::span<double> out,
                     double baseline, const LorentzianDip& first,
                     const LorentzianDip& second) {
  assert(out.size() == freq.size());
  const double w1 = first.half_width * first.half_width;
  const double w2 = second.half_width * second.half_width;
  for (std::size_t i = 0; i < freq.size(); ++i) {
    const double d1 = freq[i] - first.center;
    const double d2 = freq[i] - second.center;
    const double l1 = w1 / (d1 * d1 + w1);
    const double l2 = w2 / (d2 * d2 + w2);
    out[i] = baseline * ((1.0 - first.contrast * l1) - second.contrast * l2);
  }
}

double weighted_sum_squares(std::span<const double> r, std::span<const double> w) {
  assert(r.size() == w.size());
  const std::size_t n = r.size();
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t k = 0; k < 4; ++k) s[k] += w[i + k] * (r[i + k] * r[i + k]);
  }
  double total = (s[0] + s[1]) + (s[2] + s[3]);
  for (; i < n; ++i) total += w[i] * (r[i] * r[i]);
  return total;
}

}  // namespace divtherm::kernels::scalar
