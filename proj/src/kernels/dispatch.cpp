#include "kernels_internal.hpp"

#include <atomic>

namespace divtherm::kernels {

namespace {

struct KernelTable {
  Isa isa;
  void (*ou_step_accumulate)(std::span<double>, std::span<double>, std::span<const double>,
                             double, double, double);
  double (*trapezoid_sum)(std::span<const double>);
  void (*lorentzian_pair)(std::span<const double>, std::span<double>, double,
                          const LorentzianDip&, const LorentzianDip&);
  double (*weighted_sum_squares)(std::span<const double>, std::span<const double>);
};

constexpr KernelTable kScalarTable{Isa::scalar, scalar::ou_step_accumulate,
                                   scalar::trapezoid_sum, scalar::lorentzian_pair,
                                   scalar::weighted_sum_squares};
#if defined(DIVTHERM_HAVE_AVX2)
constexpr KernelTable kAvx2Table{Isa::avx2, avx2::ou_step_accumulate, avx2::trapezoid_sum,
                                 avx2::lorentzian_pair, avx2::weighted_sum_squares};
#endif
#if defined(DIVTHERM_HAVE_NEON)
constexpr KernelTable kNeonTable{Isa::neon, neon::ou_step_accumulate, neon::trapezoid_sum,
                                 neon::lorentzian_pair, neon::weighted_sum_squares};
#endif

const KernelTable* table_for(Isa isa) {
  switch (isa) {
#if defined(DIVTHERM_HAVE_AVX2)
    case Isa::avx2:
      if (__builtin_cpu_supports("avx2")) return &kAvx2Table;
      break;
#endif
#if defined(DIVTHERM_HAVE_NEON)
    case Isa::neon:
      return &kNeonTable;
#endif
    default:
      break;
  }
  return &kScalarTable;
}

Isa detect() {
#if defined(DIVTHERM_HAVE_AVX2)
  if (__builtin_cpu_supports("avx2")) return Isa::avx2;
#endif
#if defined(DIVTHERM_HAVE_NEON)
  return Isa::neon;
#endif
  return Isa::scalar;
}

std::atomic<const KernelTable*>& active_table() {
  static std::atomic<const KernelTable*> table{table_for(detect())};
  return table;
}

const KernelTable& current() { return *active_table().load(std::memory_order_relaxed); }

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

Isa detected_isa() { return detect(); }

Isa active_isa() { return current().isa; }

Isa force_isa(Isa isa) {
  const KernelTable* table = table_for(isa);
  active_table().store(table, std::memory_order_relaxed);
  return table->isa;
}

void ou_step_accumulate(std::span<double> x, std::span<double> integral,
                        std::span<const double> gauss, double decay, double diffusion,
                        double half_dt) {
  current().ou_step_accumulate(x, integral, gauss, decay, diffusion, half_dt);
}

double trapezoid_sum(std::span<const double> y) { return current().trapezoid_sum(y); }

void lorentzian_pair(std::span<const double> freq, std::span<double> out, double baseline,
                     const LorentzianDip& first, const LorentzianDip& second) {
  current().lorentzian_pair(freq, out, baseline, first, second);
}

double weighted_sum_squares(std::span<const double> r, std::span<const double> w) {
  return current().weighted_sum_squares(r, w);
}

}  // namespace divtherm::kernels
