#pragma once

// Data-parallel inner loops of the simulator and the fitters.
//
// Every kernel has a scalar reference in kernels::scalar and ISA variants
// (AVX2 on x86-64, NEON on AArch64) behind the dispatching entry points.
// Elementwise kernels perform the same IEEE operations in the same order as
// the scalar reference, so results are bit-identical on every ISA. Reductions
// accumulate in four interleaved partial sums, combined as (s0+s1)+(s2+s3),
// which is also what the vector variants do.

#include <cstddef>
#include <span>
#include <string_view>

namespace divtherm::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);

/// ISA selected at first use from CPU feature detection.
Isa detected_isa();
/// ISA currently used by the dispatching entry points.
Isa active_isa();
/// Overrides dispatch, e.g. to compare variants in tests. Requesting an ISA
/// the binary or CPU lacks falls back to scalar; the effective ISA is returned.
Isa force_isa(Isa isa);

struct LorentzianDip {
  double center;
  double half_width;
  double contrast;
};

// One exact Ornstein-Uhlenbeck step for a batch of independent trajectories,
// with trapezoidal accumulation of the field integral over the step:
//   integral += half_dt * x;  x = decay * x + diffusion * gauss;  integral += half_dt * x
void ou_step_accumulate(std::span<double> x, std::span<double> integral,
                        std::span<const double> gauss, double decay,
                        double diffusion, double half_dt);

/// Sum over i of (y[i] + y[i+1]) / 2; zero for fewer than two samples.
double trapezoid_sum(std::span<const double> y);

/// out[i] = baseline * (1 - c1 * L1(f[i]) - c2 * L2(f[i])), L a unit-peak Lorentzian.
void lorentzian_pair(std::span<const double> freq, std::span<double> out,
                     double baseline, const LorentzianDip& first,
                     const LorentzianDip& second);

/// Sum of w[i] * r[i]^2.
double weighted_sum_squares(std::span<const double> r, std::span<const double> w);

namespace scalar {
void ou_step_accumulate(std::span<double> x, std::span<double> integral,
                        std::span<const double> gauss, double decay,
                        double diffusion, double half_dt);
double trapezoid_sum(std::span<const double> y);
void lorentzian_pair(std::span<const double> freq, std::span<double> out,
                     double baseline, const LorentzianDip& first,
                     const LorentzianDip& second);
double weighted_sum_squares(std::span<const double> r, std::span<const double> w);
}  // namespace scalar

}  // namespace divtherm::kernels
