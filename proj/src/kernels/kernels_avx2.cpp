// AVX2 variants. Built with -mavx2 only (no -mfma): each lane performs the
// scalar reference's multiply/add sequence exactly.

#include "kernels_internal.hpp"

#include <immintrin.h>

namespace divtherm::kernels::avx2 {

void ou_step_accumulate(std::span<double> x, std::span<double> integral,
                        std::span<const double> gauss, double decay,
                        double diffusion, double half_dt) {
  const std::size_t n = x.size();
  const __m256d vdecay = _mm256_set1_pd(decay);
  const __m256d vdiff = _mm256_set1_pd(diffusion);
  const __m256d vhalf = _mm256_set1_pd(half_dt);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x.data() + i);
    const __m256d gv = _mm256_loadu_pd(gauss.data() + i);
    __m256d acc = _mm256_add_pd(_mm256_loadu_pd(integral.data() + i), _mm256_mul_pd(vhalf, xv));
    const __m256d next = _mm256_add_pd(_mm256_mul_pd(vdecay, xv), _mm256_mul_pd(vdiff, gv));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(vhalf, next));
    _mm256_storeu_pd(integral.data() + i, acc);
    _mm256_storeu_pd(x.data() + i, next);
  }
  if (i < n) {
    scalar::ou_step_accumulate(x.subspan(i), integral.subspan(i), gauss.subspan(i), decay,
                               diffusion, half_dt);
  }
}

namespace {
double horizontal_sum(__m256d v) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, v);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}
}  // namespace

double trapezoid_sum(std::span<const double> y) {
  if (y.size() < 2) return 0.0;
  const std::size_t n = y.size() - 1;
  const __m256d half = _mm256_set1_pd(0.5);
  __m256d s = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_loadu_pd(y.data() + i);
    const __m256d b = _mm256_loadu_pd(y.data() + i + 1);
    s = _mm256_add_pd(s, _mm256_mul_pd(half, _mm256_add_pd(a, b)));
  }
  double total = horizontal_sum(s);
  for (; i < n; ++i) total += 0.5 * (y[i] + y[i + 1]);
  return total;
}

void lorentzian_pair(std::span<const double> freq, std::span<double> out,
                     double baseline, const LorentzianDip& first,
                     const LorentzianDip& second) {
  const std::size_t n = freq.size();
  const double w1s = first.half_width * first.half_width;
  const double w2s = second.half_width * second.half_width;
  const __m256d c1 = _mm256_set1_pd(first.center);
  const __m256d c2 = _mm256_set1_pd(second.center);
  const __m256d w1 = _mm256_set1_pd(w1s);
  const __m256d w2 = _mm256_set1_pd(w2s);
  const __m256d k1 = _mm256_set1_pd(first.contrast);
  const __m256d k2 = _mm256_set1_pd(second.contrast);
  const __m256d base = _mm256_set1_pd(baseline);
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d f = _mm256_loadu_pd(freq.data() + i);
    const __m256d d1 = _mm256_sub_pd(f, c1);
    const __m256d d2 = _mm256_sub_pd(f, c2);
    const __m256d l1 = _mm256_div_pd(w1, _mm256_add_pd(_mm256_mul_pd(d1, d1), w1));
    const __m256d l2 = _mm256_div_pd(w2, _mm256_add_pd(_mm256_mul_pd(d2, d2), w2));
    const __m256d inner =
        _mm256_sub_pd(_mm256_sub_pd(one, _mm256_mul_pd(k1, l1)), _mm256_mul_pd(k2, l2));
    _mm256_storeu_pd(out.data() + i, _mm256_mul_pd(base, inner));
  }
  if (i < n) scalar::lorentzian_pair(freq.subspan(i), out.subspan(i), baseline, first, second);
}

double weighted_sum_squares(std::span<const double> r, std::span<const double> w) {
  const std::size_t n = r.size();
  __m256d s = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d rv = _mm256_loadu_pd(r.data() + i);
    const __m256d wv = _mm256_loadu_pd(w.data() + i);
    s = _mm256_add_pd(s, _mm256_mul_pd(wv, _mm256_mul_pd(rv, rv)));
  }
  double total = horizontal_sum(s);
  for (; i < n; ++i) total += w[i] * (r[i] * r[i]);
  return total;
}

}  // namespace divtherm::kernels::avx2
