#include "divtherm/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "divtherm/kernels.hpp"
#include "divtherm/least_squares.hpp"
#include "divtherm/units.hpp"

namespace divtherm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

const FitParameter& FitResult::at(const std::string& name) const {
  for (const auto& p : params)
    if (p.name == name) return p;
  for (const auto& p : derived)
    if (p.name == name) return p;
  throw std::out_of_range("fit result has no parameter '" + name + "'");
}

nlohmann::json to_json(const FitResult& fit) {
  auto list = [](const std::vector<FitParameter>& ps) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& p : ps) out[p.name] = {{"value", p.value}, {"stderr", p.std_error}};
    return out;
  };
  return {{"model", fit.model},
          {"params", list(fit.params)},
          {"derived", list(fit.derived)},
          {"residual_norm", fit.residual_norm},
          {"dof", fit.dof},
          {"converged", fit.converged},
          {"iterations", fit.iterations},
          {"message", fit.message}};
}

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_phase(double x) {
  double r = std::remainder(x, units::kTwoPi);
  if (r <= -kPi) r += units::kTwoPi;
  return r;
}

bool have_errors(std::span<const double> y_err, std::size_t n) {
  if (y_err.size() != n) return false;
  return std::all_of(y_err.begin(), y_err.end(), [](double e) { return e > 0.0; });
}

// Weights for data scaled by 1/yscale.
VectorXd weights_for(std::span<const double> y_err, std::size_t n, double yscale) {
  VectorXd w = VectorXd::Ones(static_cast<Eigen::Index>(n));
  if (have_errors(y_err, n))
    for (std::size_t i = 0; i < n; ++i) w(i) = (yscale * yscale) / (y_err[i] * y_err[i]);
  return w;
}

// Covariance of the scaled parameters, inflated by the reduced chi^2 when
// the weights are not real inverse variances.
MatrixXd covariance(const LeastSquaresOutcome& out, bool real_weights, int dof) {
  MatrixXd cov = out.normal_inverse;
  if (!real_weights) cov *= dof > 0 ? out.cost / dof : 0.0;
  return cov;
}

double sd(const MatrixXd& cov, Eigen::Index j) { return std::sqrt(std::max(cov(j, j), 0.0)); }

// ---------------------------------------------------------------------------
// Damped cosine. Internal parameters: a, b in scaled y units; t_d and f in
// units of the time span.

double dft_power(const std::vector<double>& t, const std::vector<double>& y, double f) {
  double re = 0.0;
  double im = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double arg = units::kTwoPi * f * t[i];
    re += y[i] * std::cos(arg);
    im -= y[i] * std::sin(arg);
  }
  return re * re + im * im;
}

double peak_frequency(const std::vector<double>& t, const std::vector<double>& y) {
  // Zero padding x4 relative to the natural resolution of 1 cycle per span.
  const double pad = 4.0;
  const std::size_t n = t.size();
  const double nyquist = 0.5 * static_cast<double>(n - 1);
  const std::size_t bins = static_cast<std::size_t>(std::floor(nyquist * pad)) + 1;
  std::vector<double> power(bins);
  for (std::size_t k = 0; k < bins; ++k) power[k] = dft_power(t, y, static_cast<double>(k) / pad);
  std::size_t best = 0;
  for (std::size_t k = 1; k < bins; ++k)
    if (power[k] > power[best]) best = k;  // strict: ties keep the lower frequency
  double offset = 0.0;
  if (best > 0 && best + 1 < bins) {
    const double l = power[best - 1];
    const double c = power[best];
    const double r = power[best + 1];
    const double denom = l - 2.0 * c + r;
    if (denom < 0.0) offset = std::clamp(0.5 * (l - r) / denom, -0.5, 0.5);
  }
  return (static_cast<double>(best) + offset) / pad;
}

// Linear least squares for (C, S, b) in e(t) (C cos + S sin) + b at fixed
// envelope; returns the residual sum of squares.
double linear_cosine(const std::vector<double>& t, const std::vector<double>& y, const VectorXd& w,
                     double t_d, double n, double f, std::array<double, 3>& coef) {
  const Eigen::Index m = static_cast<Eigen::Index>(t.size());
  MatrixXd A(m, 3);
  VectorXd yy(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double e = std::exp(-std::pow(std::abs(t[i]) / t_d, n));
    const double arg = units::kTwoPi * f * t[i];
    const double sw = std::sqrt(w(i));
    A(i, 0) = sw * e * std::cos(arg);
    A(i, 1) = sw * e * std::sin(arg);
    A(i, 2) = sw;
    yy(i) = sw * y[i];
  }
  const VectorXd c = A.colPivHouseholderQr().solve(yy);
  coef = {c(0), c(1), c(2)};
  return (A * c - yy).squaredNorm();
}

// Envelope decay time from per-period amplitudes, assuming n = 2.
double envelope_time(const std::vector<double>& t, const std::vector<double>& y, double f) {
  const double period = 1.0 / f;
  std::vector<double> tc;
  std::vector<double> amp;
  std::size_t i = 0;
  while (i < t.size()) {
    const double start = t[i];
    double lo = y[i];
    double hi = y[i];
    double sum_t = 0.0;
    std::size_t count = 0;
    for (; i < t.size() && t[i] < start + period; ++i) {
      lo = std::min(lo, y[i]);
      hi = std::max(hi, y[i]);
      sum_t += t[i];
      ++count;
    }
    if (count >= 3 && hi > lo) {
      tc.push_back(sum_t / static_cast<double>(count));
      amp.push_back(0.5 * (hi - lo));
    }
  }
  if (tc.size() < 3) return 10.0;
  // log amp = log a - t^2 / T^2
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = static_cast<double>(tc.size());
  for (std::size_t j = 0; j < tc.size(); ++j) {
    const double x = tc[j] * tc[j];
    const double v = std::log(amp[j]);
    sx += x;
    sy += v;
    sxx += x * x;
    sxy += x * v;
  }
  const double denom = k * sxx - sx * sx;
  if (denom <= 0.0) return 10.0;
  const double slope = (k * sxy - sx * sy) / denom;
  if (!(slope < 0.0)) return 10.0;
  return std::clamp(1.0 / std::sqrt(-slope), 0.02, 100.0);
}

struct CosineProblem {
  std::vector<double> t;  // scaled time
  std::vector<double> y;  // scaled data
  VectorXd w;

  void eval(const VectorXd& p, VectorXd& f, MatrixXd* jac) const {
    const double a = p(0), td = p(1), n = p(2), fr = p(3), phi = p(4), b = p(5);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double ti = std::abs(t[i]);
      const double u = std::pow(ti / td, n);
      const double e = std::exp(-u);
      const double arg = units::kTwoPi * fr * t[i] + phi;
      const double c = std::cos(arg);
      const double s = std::sin(arg);
      const Eigen::Index r = static_cast<Eigen::Index>(i);
      f(r) = a * e * c + b;
      if (jac) {
        (*jac)(r, 0) = e * c;
        (*jac)(r, 1) = a * c * e * n * u / td;
        (*jac)(r, 2) = ti > 0.0 ? -a * c * e * u * std::log(ti / td) : 0.0;
        (*jac)(r, 3) = -a * e * s * units::kTwoPi * t[i];
        (*jac)(r, 4) = -a * e * s;
        (*jac)(r, 5) = 1.0;
      }
    }
  }
};

VectorXd cosine_start(const CosineProblem& pr, double t_d, double n, double f) {
  std::array<double, 3> coef{};
  linear_cosine(pr.t, pr.y, pr.w, t_d, n, f, coef);
  VectorXd p(6);
  p << std::hypot(coef[0], coef[1]), t_d, n, f, std::atan2(-coef[1], coef[0]), coef[2];
  return p;
}

}  // namespace

double damped_cosine(const DampedCosineParams& p, double t) {
  return p.a * std::exp(-std::pow(std::abs(t) / p.t_d, p.n)) *
             std::cos(units::kTwoPi * p.f * t + p.phi) +
         p.b;
}

FitResult fit_damped_cosine(const MeasurementRecord& rec,
                            const std::optional<DampedCosineParams>& init) {
  rec.validate();
  const std::size_t m = rec.size();
  if (m < 8) throw InsufficientDataError("damped cosine: need at least 8 points");
  const double span = rec.x.back() - rec.x.front();
  if (!(span > 0.0)) throw InsufficientDataError("damped cosine: zero time span");

  const double ymean = std::accumulate(rec.y.begin(), rec.y.end(), 0.0) / static_cast<double>(m);
  double yscale = 0.0;
  for (double v : rec.y) yscale = std::max(yscale, std::abs(v - ymean));
  if (!(yscale > 0.0)) throw InsufficientDataError("damped cosine: constant data, no oscillation");

  CosineProblem pr;
  pr.t.resize(m);
  pr.y.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    pr.t[i] = rec.x[i] / span;
    pr.y[i] = (rec.y[i] - ymean) / yscale;
  }
  const bool real_weights = have_errors(rec.y_err, m);
  pr.w = weights_for(rec.y_err, m, yscale);

  std::vector<VectorXd> starts;
  if (init) {
    VectorXd p(6);
    p << init->a / yscale, init->t_d / span, init->n, init->f * span, init->phi,
        (init->b - ymean) / yscale;
    starts.push_back(p);
  } else {
    std::vector<double> shifted(m);
    for (std::size_t i = 0; i < m; ++i) shifted[i] = pr.t[i] - pr.t.front();
    const double f0 = peak_frequency(shifted, pr.y);
    if (f0 < 1.5)
      throw InsufficientDataError("damped cosine: fewer than 1.5 oscillation periods in the data");
    // Coarse scan of the decay time at n = 2, seeded by the envelope estimate.
    double best_td = envelope_time(pr.t, pr.y, f0);
    std::array<double, 3> coef{};
    double best_ssr = linear_cosine(pr.t, pr.y, pr.w, best_td, 2.0, f0, coef);
    for (int k = 0; k <= 60; ++k) {
      const double td = 0.02 * std::pow(10.0, 3.0 * k / 60.0);  // 0.02 .. 20 spans
      const double ssr = linear_cosine(pr.t, pr.y, pr.w, td, 2.0, f0, coef);
      if (ssr < best_ssr) {
        best_ssr = ssr;
        best_td = td;
      }
    }
    starts.push_back(cosine_start(pr, best_td, 2.0, f0));
    starts.push_back(cosine_start(pr, best_td, 1.0, f0));
    starts.push_back(cosine_start(pr, best_td, 3.0, f0));
  }

  const double nyquist = static_cast<double>(m);
  const std::vector<ParameterBounds> bounds{{},
                                            {1e-2, 1e4},
                                            {kStretchMin, kStretchMax},
                                            {0.0, nyquist},
                                            {},
                                            {}};
  const VectorXd y = Eigen::Map<const VectorXd>(pr.y.data(), static_cast<Eigen::Index>(m));
  const ModelFunction model = [&pr](const VectorXd& p, VectorXd& f, MatrixXd* jac) {
    pr.eval(p, f, jac);
  };

  std::optional<LeastSquaresOutcome> best;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    LeastSquaresOutcome out = solve_least_squares(model, y, pr.w, starts[k], bounds);
    const bool better = !best || (out.converged && !best->converged) ||
                        (out.converged == best->converged && out.cost < best->cost);
    if (better) best = std::move(out);
    // Alternative stretch starts only when the first run failed or hit a bound.
    if (k == 0 && best->converged && best->params(2) > kStretchMin &&
        best->params(2) < kStretchMax)
      break;
  }

  VectorXd p = best->params;
  const int dof = static_cast<int>(m) - 6;
  const MatrixXd cov = covariance(*best, real_weights, dof);
  if (p(0) < 0.0) {
    p(0) = -p(0);
    p(4) += kPi;
  }
  p(4) = wrap_phase(p(4));

  FitResult fit;
  fit.model = "damped_cosine";
  fit.params = {{"a", p(0) * yscale, sd(cov, 0) * yscale},
                {"t_d", p(1) * span, sd(cov, 1) * span},
                {"n", p(2), sd(cov, 2)},
                {"f", p(3) / span, sd(cov, 3) / span},
                {"phi", p(4), sd(cov, 4)},
                {"b", p(5) * yscale + ymean, sd(cov, 5) * yscale}};
  fit.residual_norm = std::sqrt(best->cost) * yscale;
  fit.dof = dof;
  fit.converged = best->converged;
  fit.iterations = best->iterations;
  fit.message = best->message;
  if (!fit.converged) throw FitNotConverged("damped cosine: " + best->message, fit);
  return fit;
}

// ---------------------------------------------------------------------------
// Lorentzian pair. Internal units: baseline and data scaled by the baseline
// estimate; frequencies in MHz from the grid center.

namespace {

struct Dip {
  std::size_t lo;
  std::size_t hi;   // inclusive
  std::size_t min;  // index of the deepest point
};

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t i = static_cast<std::size_t>(std::floor(pos));
  const std::size_t j = std::min(i + 1, v.size() - 1);
  return v[i] + (pos - static_cast<double>(i)) * (v[j] - v[i]);
}

double median(std::vector<double> v) { return percentile(std::move(v), 0.5); }

}  // namespace

FitResult fit_lorentzian_pair(const MeasurementRecord& rec) {
  rec.validate();
  const std::size_t m = rec.size();
  if (m < 8) throw ResolutionError("lorentzian pair: need at least 8 points");

  const double base = percentile(rec.y, 0.9);
  if (!(base > 0.0)) throw ResolutionError("lorentzian pair: non-positive baseline");
  std::vector<double> diffs(m - 1);
  for (std::size_t i = 0; i + 1 < m; ++i) diffs[i] = rec.y[i + 1] - rec.y[i];
  const double med = median(diffs);
  for (auto& d : diffs) d = std::abs(d - med);
  const double noise = 1.4826 * median(diffs) / std::sqrt(2.0);
  const double ymin = *std::min_element(rec.y.begin(), rec.y.end());
  const double depth_cut = std::max(5.0 * noise, 0.2 * (base - ymin));
  if (!(base - ymin > 5.0 * noise) || !(depth_cut > 0.0))
    throw ResolutionError("lorentzian pair: no dip above the noise");

  std::vector<Dip> dips;
  for (std::size_t i = 0; i < m;) {
    if (base - rec.y[i] < depth_cut) {
      ++i;
      continue;
    }
    Dip d{i, i, i};
    while (i < m && base - rec.y[i] >= depth_cut) {
      if (rec.y[i] < rec.y[d.min]) d.min = i;
      d.hi = i++;
    }
    dips.push_back(d);
  }
  if (dips.size() < 2)
    throw ResolutionError("lorentzian pair: found " + std::to_string(dips.size()) +
                          " resolvable dip(s), need 2");
  std::sort(dips.begin(), dips.end(),
            [&](const Dip& a, const Dip& b) { return rec.y[a.min] < rec.y[b.min]; });
  dips.resize(2);
  std::sort(dips.begin(), dips.end(), [](const Dip& a, const Dip& b) { return a.min < b.min; });

  const double center = 0.5 * (rec.x.front() + rec.x.back());
  const double fscale = units::MHz;
  const double step = (rec.x.back() - rec.x.front()) / static_cast<double>(m - 1) / fscale;
  std::vector<double> fx(m);
  std::vector<double> ys(m);
  for (std::size_t i = 0; i < m; ++i) {
    fx[i] = (rec.x[i] - center) / fscale;
    ys[i] = rec.y[i] / base;
  }

  VectorXd start(7);
  start(0) = 1.0;
  for (int k = 0; k < 2; ++k) {
    const Dip& d = dips[k];
    const double depth = 1.0 - ys[d.min];
    // Half width at half depth, walking out from the minimum.
    std::size_t l = d.min;
    while (l > 0 && 1.0 - ys[l] > 0.5 * depth) --l;
    std::size_t r = d.min;
    while (r + 1 < m && 1.0 - ys[r] > 0.5 * depth) ++r;
    const double hw = std::max(0.5 * (fx[r] - fx[l]), step);
    start(1 + 3 * k) = fx[d.min];
    start(2 + 3 * k) = hw;
    start(3 + 3 * k) = std::clamp(depth, 1e-6, 1.0);
  }

  const bool real_weights = have_errors(rec.y_err, m);
  const VectorXd w = weights_for(rec.y_err, m, base);
  const VectorXd y = Eigen::Map<const VectorXd>(ys.data(), static_cast<Eigen::Index>(m));
  const double half_span = 0.5 * (fx.back() - fx.front());
  const std::vector<ParameterBounds> bounds{{0.0, 10.0},
                                            {fx.front(), fx.back()},
                                            {1e-3 * step, 2.0 * half_span},
                                            {0.0, 1.0},
                                            {fx.front(), fx.back()},
                                            {1e-3 * step, 2.0 * half_span},
                                            {0.0, 1.0}};

  const ModelFunction model = [&fx](const VectorXd& p, VectorXd& f, MatrixXd* jac) {
    kernels::lorentzian_pair(fx, {f.data(), static_cast<std::size_t>(f.size())}, p(0),
                             {p(1), p(2), p(3)}, {p(4), p(5), p(6)});
    if (!jac) return;
    for (std::size_t i = 0; i < fx.size(); ++i) {
      const Eigen::Index r = static_cast<Eigen::Index>(i);
      double shape = 1.0;
      for (int k = 0; k < 2; ++k) {
        const double c = p(1 + 3 * k), hw = p(2 + 3 * k), k0 = p(3 + 3 * k);
        const double dx = fx[i] - c;
        const double q = dx * dx + hw * hw;
        const double L = hw * hw / q;
        shape -= k0 * L;
        (*jac)(r, 1 + 3 * k) = -p(0) * k0 * (2.0 * hw * hw * dx / (q * q));
        (*jac)(r, 2 + 3 * k) = -p(0) * k0 * (2.0 * hw * dx * dx / (q * q));
        (*jac)(r, 3 + 3 * k) = -p(0) * L;
      }
      (*jac)(r, 0) = shape;
    }
  };

  const LeastSquaresOutcome out = solve_least_squares(model, y, w, start, bounds);
  const int dof = static_cast<int>(m) - 7;
  const MatrixXd cov = covariance(out, real_weights, dof);
  const VectorXd& p = out.params;

  FitResult fit;
  fit.model = "lorentzian_pair";
  auto freq = [&](Eigen::Index j) { return center + p(j) * fscale; };
  fit.params = {{"baseline", p(0) * base, sd(cov, 0) * base},
                {"center_minus", freq(1), sd(cov, 1) * fscale},
                {"width_minus", p(2) * fscale, sd(cov, 2) * fscale},
                {"contrast_minus", p(3), sd(cov, 3)},
                {"center_plus", freq(4), sd(cov, 4) * fscale},
                {"width_plus", p(5) * fscale, sd(cov, 5) * fscale},
                {"contrast_plus", p(6), sd(cov, 6)}};
  const double var_sum = cov(1, 1) + cov(4, 4) + 2.0 * cov(1, 4);
  const double var_diff = cov(1, 1) + cov(4, 4) - 2.0 * cov(1, 4);
  fit.derived = {{"d", 0.5 * (freq(1) + freq(4)), 0.5 * std::sqrt(std::max(var_sum, 0.0)) * fscale},
                 {"zeeman", 0.5 * (freq(4) - freq(1)),
                  0.5 * std::sqrt(std::max(var_diff, 0.0)) * fscale}};
  fit.residual_norm = std::sqrt(out.cost) * base;
  fit.dof = dof;
  fit.converged = out.converged;
  fit.iterations = out.iterations;
  fit.message = out.message;
  if (!fit.converged) throw FitNotConverged("lorentzian pair: " + out.message, fit);
  return fit;
}

FitResult fit_linear(std::span<const double> x, std::span<const double> y,
                     std::span<const double> y_err) {
  const std::size_t m = x.size();
  if (y.size() != m || (!y_err.empty() && y_err.size() != m))
    throw std::invalid_argument("fit_linear: x, y and y_err lengths differ");
  if (m < 3) throw InsufficientDataError("fit_linear: need at least 3 points");
  const bool real_weights = have_errors(y_err, m);

  double sw = 0.0, sx = 0.0, sy = 0.0;
  std::vector<double> w(m, 1.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (real_weights) w[i] = 1.0 / (y_err[i] * y_err[i]);
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double xm = sx / sw;
  const double ym = sy / sw;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double dx = x[i] - xm;
    const double dy = y[i] - ym;
    sxx += w[i] * dx * dx;
    sxy += w[i] * dx * dy;
    syy += w[i] * dy * dy;
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_linear: x has zero variance");

  const double slope = sxy / sxx;
  const double intercept = ym - slope * xm;
  double chi2 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = y[i] - (slope * x[i] + intercept);
    chi2 += w[i] * r * r;
  }
  const int dof = static_cast<int>(m) - 2;
  const double scale = real_weights ? 1.0 : chi2 / dof;
  const double var_slope = scale / sxx;
  const double var_intercept = scale * (1.0 / sw + xm * xm / sxx);

  FitResult fit;
  fit.model = "linear";
  fit.params = {{"slope", slope, std::sqrt(var_slope)},
                {"intercept", intercept, std::sqrt(var_intercept)}};
  fit.derived = {{"r_squared", syy > 0.0 ? 1.0 - chi2 / syy : 1.0, 0.0}};
  fit.residual_norm = std::sqrt(chi2);
  fit.dof = dof;
  fit.converged = true;
  fit.iterations = 0;
  fit.message = "closed form";
  return fit;
}

FitResult fit_saturation(std::span<const double> power, std::span<const double> counts,
                         std::span<const double> counts_err) {
  const std::size_t m = power.size();
  if (counts.size() != m || (!counts_err.empty() && counts_err.size() != m))
    throw std::invalid_argument("fit_saturation: power, counts and errors lengths differ");
  if (m < 3) throw InsufficientDataError("fit_saturation: need at least 3 points");

  // 1/I = 1/I_s + (P_0/I_s) (1/P)
  std::vector<double> inv_p;
  std::vector<double> inv_i;
  for (std::size_t i = 0; i < m; ++i) {
    if (power[i] > 0.0 && counts[i] > 0.0) {
      inv_p.push_back(1.0 / power[i]);
      inv_i.push_back(1.0 / counts[i]);
    }
  }
  if (inv_p.size() < 3) throw InsufficientDataError("fit_saturation: need 3 points with P, I > 0");
  double i_s = 0.0;
  double p_s = 0.0;
  try {
    const FitResult line = fit_linear(inv_p, inv_i);
    i_s = 1.0 / line.value("intercept");
    p_s = line.value("slope") * i_s;
  } catch (const std::invalid_argument&) {
    throw InsufficientDataError("fit_saturation: all powers equal");
  }
  const double pmax = *std::max_element(power.begin(), power.end());
  const double imax = *std::max_element(counts.begin(), counts.end());
  if (!(i_s > 0.0) || !(p_s > 0.0) || !std::isfinite(i_s)) {
    i_s = 2.0 * imax;
    p_s = pmax;
  }

  std::vector<double> pw(m);
  std::vector<double> ys(m);
  for (std::size_t i = 0; i < m; ++i) {
    pw[i] = power[i] / pmax;
    ys[i] = counts[i] / imax;
  }
  const bool real_weights = have_errors(counts_err, m);
  const VectorXd w = weights_for(counts_err, m, imax);
  const VectorXd y = Eigen::Map<const VectorXd>(ys.data(), static_cast<Eigen::Index>(m));
  VectorXd start(2);
  start << i_s / imax, p_s / pmax;
  const std::vector<ParameterBounds> bounds{{1e-6, 1e6}, {1e-6, 1e6}};
  const ModelFunction model = [&pw](const VectorXd& p, VectorXd& f, MatrixXd* jac) {
    for (std::size_t i = 0; i < pw.size(); ++i) {
      const Eigen::Index r = static_cast<Eigen::Index>(i);
      const double q = pw[i] + p(1);
      f(r) = p(0) * pw[i] / q;
      if (jac) {
        (*jac)(r, 0) = pw[i] / q;
        (*jac)(r, 1) = -p(0) * pw[i] / (q * q);
      }
    }
  };
  const LeastSquaresOutcome out = solve_least_squares(model, y, w, start, bounds);
  const int dof = static_cast<int>(m) - 2;
  const MatrixXd cov = covariance(out, real_weights, dof);

  FitResult fit;
  fit.model = "saturation";
  fit.params = {{"i_sat", out.params(0) * imax, sd(cov, 0) * imax},
                {"p_sat", out.params(1) * pmax, sd(cov, 1) * pmax}};
  fit.residual_norm = std::sqrt(out.cost) * imax;
  fit.dof = dof;
  fit.converged = out.converged;
  fit.iterations = out.iterations;
  fit.message = out.message;
  if (!fit.converged) throw FitNotConverged("saturation: " + out.message, fit);
  return fit;
}

void Calibration::validate() const {
  if (!(slope_err >= 0.0)) throw std::invalid_argument("calibration: slope_err must be >= 0");
  if (!(valid_range.low < valid_range.high))
    throw std::invalid_argument("calibration: valid_range must be non-empty");
  if (!std::isfinite(d_ref) || !std::isfinite(t_ref) || !std::isfinite(slope))
    throw std::invalid_argument("calibration: non-finite value");
}

nlohmann::json to_json(const Calibration& cal) {
  return {{"d_ref_hz", cal.d_ref},
          {"t_ref_k", cal.t_ref},
          {"slope_hz_per_k", cal.slope},
          {"slope_err_hz_per_k", cal.slope_err},
          {"valid_range_k", {cal.valid_range.low, cal.valid_range.high}}};
}

Calibration calibration_from_json(const nlohmann::json& j) {
  Calibration cal;
  cal.d_ref = j.at("d_ref_hz").get<double>();
  cal.t_ref = j.at("t_ref_k").get<double>();
  cal.slope = j.at("slope_hz_per_k").get<double>();
  cal.slope_err = j.at("slope_err_hz_per_k").get<double>();
  const auto& r = j.at("valid_range_k");
  if (!r.is_array() || r.size() != 2)
    throw std::invalid_argument("calibration: valid_range_k must be [low, high]");
  cal.valid_range = {r[0].get<double>(), r[1].get<double>()};
  cal.validate();
  return cal;
}

Calibration make_calibration(std::span<const double> temperatures, std::span<const double> zfs,
                             std::span<const double> zfs_err, double t_ref) {
  const FitResult line = fit_linear(temperatures, zfs, zfs_err);
  Calibration cal;
  cal.t_ref = t_ref;
  cal.slope = line.value("slope");
  cal.slope_err = line.std_error("slope");
  cal.d_ref = cal.slope * t_ref + line.value("intercept");
  cal.valid_range = {*std::min_element(temperatures.begin(), temperatures.end()),
                     *std::max_element(temperatures.begin(), temperatures.end())};
  cal.validate();
  return cal;
}

double sensitivity(const SensitivityInput& in) {
  if (in.p0 == in.p1) throw ZeroContrastError("sensitivity: p0 == p1, zero contrast");
  if (!(in.p0 > in.p1 && in.p1 > 0.0))
    throw std::invalid_argument("sensitivity: need p0 > p1 > 0");
  if (!(in.t > 0.0 && in.t_d > 0.0 && in.n > 0.0))
    throw std::invalid_argument("sensitivity: t, t_d and n must be positive");
  if (in.dddt == 0.0) throw std::invalid_argument("sensitivity: dD/dT must be non-zero");
  const double contrast = in.p0 - in.p1;
  const double noise = std::sqrt(2.0 * (in.p0 + in.p1) / (contrast * contrast));
  const double signal = units::kTwoPi * std::abs(in.dddt) *
                        std::exp(-std::pow(in.t / in.t_d, in.n)) * std::sqrt(in.t);
  return noise / signal;
}

double optimal_interrogation_time(double t_d, double n) {
  if (!(t_d > 0.0 && n > 0.0))
    throw std::invalid_argument("optimal_interrogation_time: t_d and n must be positive");
  return t_d * std::pow(1.0 / (2.0 * n), 1.0 / n);
}

TemperatureEstimate frequency_to_temperature(double f_fit, double f_err, double detuning_cal,
                                             const Calibration& cal,
                                             DetuningConvention convention) {
  if (cal.slope == 0.0) throw std::invalid_argument("frequency_to_temperature: zero slope");
  const double f_signed =
      convention == DetuningConvention::positive ? -std::abs(f_fit) : std::abs(f_fit);
  TemperatureEstimate est;
  const double dt = (f_signed - detuning_cal) / cal.slope;
  est.temperature = cal.t_ref + dt;
  const double rel = cal.slope_err / cal.slope;
  est.std_error = std::hypot(f_err / cal.slope, dt * rel);
  est.extrapolated =
      est.temperature < cal.valid_range.low || est.temperature > cal.valid_range.high;
  return est;
}

double expected_frequency(double temperature, double detuning_cal, const Calibration& cal) {
  return std::abs(detuning_cal + cal.slope * (temperature - cal.t_ref));
}

void check_detuning_convention(double microwave_detuning, const Calibration& cal,
                               DetuningConvention convention) {
  const double shift = std::abs(cal.slope) * std::max(std::abs(cal.valid_range.low - cal.t_ref),
                                                      std::abs(cal.valid_range.high - cal.t_ref));
  const bool ok = convention == DetuningConvention::positive ? microwave_detuning > shift
                                                             : microwave_detuning < -shift;
  if (!ok)
    throw std::invalid_argument(
        "microwave detuning " + std::to_string(microwave_detuning) +
        " Hz does not dominate the largest thermal shift " + std::to_string(shift) +
        " Hz over the calibrated range; the frequency sign would be ambiguous");
}

}  // namespace divtherm
