#pragma once

#include "divtherm/kernels.hpp"

namespace divtherm::kernels {

#define DIVTHERM_KERNEL_DECLS                                                              \
  void ou_step_accumulate(std::span<double> x, std::span<double> integral,                 \
                          std::span<const double> gauss, double decay, double diffusion,   \
                          double half_dt);                                                 \
  double trapezoid_sum(std::span<const double> y);                                         \
  void lorentzian_pair(std::span<const double> freq, std::span<double> out,                \
                       double baseline, const LorentzianDip& first,                        \
                       const LorentzianDip& second);                                       \
  double weighted_sum_squares(std::span<const double> r, std::span<const double> w);

namespace avx2 {
DIVTHERM_KERNEL_DECLS
}
namespace neon {
DIVTHERM_KERNEL_DECLS
}

#undef DIVTHERM_KERNEL_DECLS

}  // namespace divtherm::kernels
