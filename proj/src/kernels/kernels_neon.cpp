// NEON variants (AArch64). Two float64x2 registers stand in for the four
// scalar lanes so reductions combine in the reference order. Built with
// -ffp-contract=off; vmulq/vaddq are used explicitly instead of vfmaq.

#include "kernels_internal.hpp"

#include <arm_neon.h>

namespace divtherm::kernels::neon {

void ou_step_accumulate(std::span<double> x, std::span<double> integral,
                        std::span<const double> gauss, double decay,
                        double diffusion, double half_dt) {
  const std::size_t n = x.size();
  const float64x2_t vdecay = vdupq_n_f64(decay);
  const float64x2_t vdiff = vdupq_n_f64(diffusion);
  const float64x2_t vhalf = vdupq_n_f64(half_dt);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t xv = vld1q_f64(x.data() + i);
    const float64x2_t gv = vld1q_f64(gauss.data() + i);
    float64x2_t acc = vaddq_f64(vld1q_f64(integral.data() + i), vmulq_f64(vhalf, xv));
    const float64x2_t next = vaddq_f64(vmulq_f64(vdecay, xv), vmulq_f64(vdiff, gv));
    acc = vaddq_f64(acc, vmulq_f64(vhalf, next));
    vst1q_f64(integral.data() + i, acc);
    vst1q_f64(x.data() + i, next);
  }
  if (i < n) {
    scalar::ou_step_accumulate(x.subspan(i), integral.subspan(i), gauss.subspan(i), decay,
                               diffusion, half_dt);
  }
}

double trapezoid_sum(std::span<const double> y) {
  if (y.size() < 2) return 0.0;
  const std::size_t n = y.size() - 1;
  const float64x2_t half = vdupq_n_f64(0.5);
  float64x2_t lo = vdupq_n_f64(0.0);
  float64x2_t hi = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    lo = vaddq_f64(lo, vmulq_f64(half, vaddq_f64(vld1q_f64(y.data() + i),
                                                 vld1q_f64(y.data() + i + 1))));
    hi = vaddq_f64(hi, vmulq_f64(half, vaddq_f64(vld1q_f64(y.data() + i + 2),
                                                 vld1q_f64(y.data() + i + 3))));
  }
  double total = (vgetq_lane_f64(lo, 0) + vgetq_lane_f64(lo, 1)) +
                 (vgetq_lane_f64(hi, 0) + vgetq_lane_f64(hi, 1));
  for (; i < n; ++i) total += 0.5 * (y[i] + y[i + 1]);
  return total;
}

void lorentzian_pair(std::span<const double> freq, std::span<double> out,
                     double baseline, const LorentzianDip& first,
                     const LorentzianDip& second) {
  const std::size_t n = freq.size();
  const float64x2_t c1 = vdupq_n_f64(first.center);
  const float64x2_t c2 = vdupq_n_f64(second.center);
  const float64x2_t w1 = vdupq_n_f64(first.half_width * first.half_width);
  const float64x2_t w2 = vdupq_n_f64(second.half_width * second.half_width);
  const float64x2_t k1 = vdupq_n_f64(first.contrast);
  const float64x2_t k2 = vdupq_n_f64(second.contrast);
  const float64x2_t base = vdupq_n_f64(baseline);
  const float64x2_t one = vdupq_n_f64(1.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t f = vld1q_f64(freq.data() + i);
    const float64x2_t d1 = vsubq_f64(f, c1);
    const float64x2_t d2 = vsubq_f64(f, c2);
    const float64x2_t l1 = vdivq_f64(w1, vaddq_f64(vmulq_f64(d1, d1), w1));
    const float64x2_t l2 = vdivq_f64(w2, vaddq_f64(vmulq_f64(d2, d2), w2));
    const float64x2_t inner = vsubq_f64(vsubq_f64(one, vmulq_f64(k1, l1)), vmulq_f64(k2, l2));
    vst1q_f64(out.data() + i, vmulq_f64(base, inner));
  }
  if (i < n) scalar::lorentzian_pair(freq.subspan(i), out.subspan(i), baseline, first, second);
}

double weighted_sum_squares(std::span<const double> r, std::span<const double> w) {
  const std::size_t n = r.size();
  float64x2_t lo = vdupq_n_f64(0.0);
  float64x2_t hi = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float64x2_t r0 = vld1q_f64(r.data() + i);
    const float64x2_t r1 = vld1q_f64(r.data() + i + 2);
    lo = vaddq_f64(lo, vmulq_f64(vld1q_f64(w.data() + i), vmulq_f64(r0, r0)));
    hi = vaddq_f64(hi, vmulq_f64(vld1q_f64(w.data() + i + 2), vmulq_f64(r1, r1)));
  }
  double total = (vgetq_lane_f64(lo, 0) + vgetq_lane_f64(lo, 1)) +
                 (vgetq_lane_f64(hi, 0) + vgetq_lane_f64(hi, 1));
  for (; i < n; ++i) total += w[i] * (r[i] * r[i]);
  return total;
}

}  // namespace divtherm::kernels::neon
