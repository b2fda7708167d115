#pragma once

// Parameter extraction from measurement records: damped-cosine and
// Lorentzian-pair fits, straight lines, the saturation curve, the shot-noise
// sensitivity formula and the frequency -> temperature inversion.

#include <json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "divtherm/errors.hpp"
#include "divtherm/simulator.hpp"

namespace divtherm {

struct FitParameter {
  std::string name;
  double value = 0.0;
  double std_error = 0.0;
};

struct FitResult {
  std::string model;
  std::vector<FitParameter> params;
  /// Quantities computed from params (e.g. D and zeeman for the Lorentzian pair).
  std::vector<FitParameter> derived;
  double residual_norm = 0.0;  // sqrt(sum w r^2) in data units
  int dof = 0;
  bool converged = false;
  int iterations = 0;
  std::string message;

  /// Looks up params first, then derived. Throws std::out_of_range.
  const FitParameter& at(const std::string& name) const;
  double value(const std::string& name) const { return at(name).value; }
  double std_error(const std::string& name) const { return at(name).std_error; }
};

nlohmann::json to_json(const FitResult& fit);

/// Thrown when the optimiser hits its iteration limit; carries the best
/// parameters reached.
class FitNotConverged : public FitError {
 public:
  FitNotConverged(const std::string& what, FitResult best)
      : FitError(what), best_(std::move(best)) {}
  const FitResult& best() const { return best_; }

 private:
  FitResult best_;
};

/// y = a exp(-(|t| / t_d)^n) cos(2 pi f t + phi) + b.
struct DampedCosineParams {
  double a = 1.0;
  double t_d = 1.0;  // s
  double n = 2.0;
  double f = 0.0;    // Hz
  double phi = 0.0;  // rad
  double b = 0.0;
};

double damped_cosine(const DampedCosineParams& p, double t);

inline constexpr double kStretchMin = 0.5;
inline constexpr double kStretchMax = 4.0;

/// Parameters: a, t_d, n, f, phi, b. Weighted by 1/y_err^2 when every y_err is
/// positive, unit weights otherwise. Normalised so a >= 0 and phi in (-pi, pi].
/// Throws InsufficientDataError for < 8 points or < 1.5 periods in the span,
/// FitNotConverged on the iteration limit.
FitResult fit_damped_cosine(const MeasurementRecord& rec,
                            const std::optional<DampedCosineParams>& init = std::nullopt);

/// Parameters: baseline, center_minus, width_minus, contrast_minus,
/// center_plus, width_plus, contrast_plus (widths are HWHM, Hz).
/// Derived: d (center mean) and zeeman (half splitting).
/// Throws ResolutionError when fewer than two dips are found.
FitResult fit_lorentzian_pair(const MeasurementRecord& rec);

/// Closed-form weighted line y = slope x + intercept. Derived: r_squared.
/// Throws InsufficientDataError for < 3 points, std::invalid_argument for
/// constant x.
FitResult fit_linear(std::span<const double> x, std::span<const double> y,
                     std::span<const double> y_err = {});

/// I = i_sat P / (P + p_sat), initialised from a 1/I vs 1/P regression.
FitResult fit_saturation(std::span<const double> power, std::span<const double> counts,
                         std::span<const double> counts_err = {});

struct Calibration {
  double d_ref = 0.0;      // Hz, D at t_ref
  double t_ref = 0.0;      // K
  double slope = 0.0;      // Hz/K
  double slope_err = 0.0;  // Hz/K
  TemperatureWindow valid_range{};

  void validate() const;
  double zfs(double temperature) const { return d_ref + slope * (temperature - t_ref); }
};

nlohmann::json to_json(const Calibration& cal);
Calibration calibration_from_json(const nlohmann::json& j);

/// Line through (temperature, D) pairs re-expressed at t_ref.
Calibration make_calibration(std::span<const double> temperatures, std::span<const double> zfs,
                             std::span<const double> zfs_err, double t_ref);

struct SensitivityInput {
  double p0 = 0.0;    // bright counts per shot
  double p1 = 0.0;    // dark counts per shot
  double dddt = 0.0;  // Hz/K
  double t_d = 0.0;   // s
  double n = 2.0;
  double t = 0.0;     // s, interrogation time
};

/// eta = sqrt(2 (p0 + p1)) / (p0 - p1) / (2 pi |dD/dT| exp(-(t/t_d)^n) sqrt(t)),
/// K/sqrt(Hz). Throws ZeroContrastError for p0 == p1, std::invalid_argument
/// for other broken inputs.
double sensitivity(const SensitivityInput& in);

/// Maximiser of sqrt(t) exp(-(t/t_d)^n): t_d (1 / 2n)^(1/n).
double optimal_interrogation_time(double t_d, double n);

/// Which side of the transitions the drives sit on.
enum class DetuningConvention {
  positive,  // drives above the transitions: signed frequency = -|f_fit|
  negative,  // drives below: signed frequency = +|f_fit|
};

struct TemperatureEstimate {
  double temperature = 0.0;  // K
  double std_error = 0.0;    // K
  bool extrapolated = false; // outside cal.valid_range
};

/// T = t_ref + (f_signed - detuning_cal) / slope, where detuning_cal is the
/// signed spin-frame detuning at t_ref, (transition - drive), i.e. minus the
/// microwave detuning. Throws std::invalid_argument for slope == 0.
TemperatureEstimate frequency_to_temperature(double f_fit, double f_err, double detuning_cal,
                                             const Calibration& cal,
                                             DetuningConvention convention =
                                                 DetuningConvention::positive);

/// |f| expected at a temperature; inverse of frequency_to_temperature.
double expected_frequency(double temperature, double detuning_cal, const Calibration& cal);

/// Rejects a microwave detuning that does not keep the sign of the spin-frame
/// detuning fixed over cal.valid_range.
void check_detuning_convention(double microwave_detuning, const Calibration& cal,
                               DetuningConvention convention = DetuningConvention::positive);

}  // namespace divtherm
