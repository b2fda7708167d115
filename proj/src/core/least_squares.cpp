#include "divtherm/least_squares.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "divtherm/kernels.hpp"

namespace divtherm {

namespace {

Eigen::VectorXd clamp_to(const Eigen::VectorXd& p, const std::vector<ParameterBounds>& bounds) {
  Eigen::VectorXd out = p;
  for (Eigen::Index j = 0; j < p.size(); ++j)
    out(j) = std::clamp(p(j), bounds[j].lo, bounds[j].hi);
  return out;
}

double cost_of(const Eigen::VectorXd& y, const Eigen::VectorXd& f, const Eigen::VectorXd& w,
               Eigen::VectorXd& r) {
  r = y - f;
  if (!r.allFinite()) return std::numeric_limits<double>::infinity();
  return kernels::weighted_sum_squares({r.data(), static_cast<std::size_t>(r.size())},
                                       {w.data(), static_cast<std::size_t>(w.size())});
}

}  // namespace

LeastSquaresOutcome solve_least_squares(const ModelFunction& model, const Eigen::VectorXd& y,
                                        const Eigen::VectorXd& weights, Eigen::VectorXd start,
                                        const std::vector<ParameterBounds>& bounds,
                                        const LeastSquaresOptions& options) {
  const Eigen::Index m = y.size();
  const Eigen::Index np = start.size();
  if (weights.size() != m) throw std::invalid_argument("least squares: weight length mismatch");
  if (static_cast<Eigen::Index>(bounds.size()) != np)
    throw std::invalid_argument("least squares: bounds length mismatch");
  if (m < np) throw std::invalid_argument("least squares: fewer points than parameters");

  LeastSquaresOutcome out;
  Eigen::VectorXd p = clamp_to(start, bounds);
  Eigen::VectorXd f(m), r(m), f_try(m), r_try(m);
  Eigen::MatrixXd jac(m, np);

  model(p, f, &jac);
  double cost = cost_of(y, f, weights, r);
  if (!std::isfinite(cost)) throw std::invalid_argument("least squares: non-finite start");

  double lambda = 1e-3;
  Eigen::MatrixXd normal(np, np);
  for (int it = 1; it <= options.max_iterations; ++it) {
    out.iterations = it;
    const Eigen::MatrixXd wj = weights.asDiagonal() * jac;
    normal = jac.transpose() * wj;
    const Eigen::VectorXd grad = wj.transpose() * r;

    // Components pinned at a bound and pushing outward do not count, and are
    // held fixed for this step.
    double grad_norm = 0.0;
    std::vector<bool> pinned(static_cast<std::size_t>(np), false);
    for (Eigen::Index j = 0; j < np; ++j) {
      const bool pinned_lo = p(j) <= bounds[j].lo && grad(j) < 0.0;
      const bool pinned_hi = p(j) >= bounds[j].hi && grad(j) > 0.0;
      pinned[static_cast<std::size_t>(j)] = pinned_lo || pinned_hi;
      if (!pinned_lo && !pinned_hi) grad_norm = std::max(grad_norm, std::abs(grad(j)));
    }
    if (grad_norm < options.gradient_tolerance) {
      out.converged = true;
      out.message = "gradient below tolerance";
      break;
    }

    Eigen::VectorXd diag = normal.diagonal();
    const double diag_floor = 1e-12 * std::max(diag.maxCoeff(), 1e-300);
    for (Eigen::Index j = 0; j < np; ++j) diag(j) = std::max(diag(j), diag_floor);

    bool accepted = false;
    double max_rel_step = 0.0;
    while (!accepted && lambda < 1e16) {
      Eigen::MatrixXd damped = normal;
      damped.diagonal() += lambda * diag;
      Eigen::VectorXd rhs = grad;
      for (Eigen::Index j = 0; j < np; ++j) {
        if (!pinned[static_cast<std::size_t>(j)]) continue;
        damped.row(j).setZero();
        damped.col(j).setZero();
        damped(j, j) = 1.0;
        rhs(j) = 0.0;
      }
      const Eigen::VectorXd delta = damped.ldlt().solve(rhs);
      if (!delta.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      double scale = 1.0;
      for (int half = 0; half < 8 && !accepted; ++half, scale *= 0.5) {
        const Eigen::VectorXd p_try = clamp_to(p + scale * delta, bounds);
        model(p_try, f_try, nullptr);
        const double c_try = cost_of(y, f_try, weights, r_try);
        if (c_try <= cost) {
          max_rel_step = 0.0;
          for (Eigen::Index j = 0; j < np; ++j) {
            const double ref = std::max(std::abs(p(j)), 1e-12);
            max_rel_step = std::max(max_rel_step, std::abs(p_try(j) - p(j)) / ref);
          }
          const bool improved = c_try < cost;
          p = p_try;
          cost = c_try;
          accepted = true;
          if (!improved) max_rel_step = 0.0;
          lambda = half == 0 ? std::max(lambda * 0.3, 1e-12) : lambda;
        }
      }
      if (!accepted) lambda *= 10.0;
    }

    model(p, f, &jac);
    cost = cost_of(y, f, weights, r);
    if (!accepted) {
      // No decrease at any damping: numerically at the minimum.
      out.converged = true;
      out.message = "no further decrease possible";
      break;
    }
    if (max_rel_step < options.step_tolerance) {
      out.converged = true;
      out.message = "relative step below tolerance";
      break;
    }
  }
  if (!out.converged) out.message = "iteration limit reached";

  normal = jac.transpose() * weights.asDiagonal() * jac;
  out.normal_inverse = normal.completeOrthogonalDecomposition().pseudoInverse();
  out.params = p;
  out.cost = cost;
  return out;
}

}  // namespace divtherm
