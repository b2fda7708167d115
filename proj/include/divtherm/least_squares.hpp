#pragma once

// Bounded, weighted nonlinear least squares by damped Gauss-Newton
// (Marquardt-scaled damping) with step halving.

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace divtherm {

struct ParameterBounds {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

/// Fills model values at the current parameters and, when non-null, the
/// Jacobian d model_i / d p_j.
using ModelFunction =
    std::function<void(const Eigen::VectorXd& params, Eigen::VectorXd& model, Eigen::MatrixXd* jac)>;

struct LeastSquaresOptions {
  int max_iterations = 200;
  double step_tolerance = 1e-10;      // max relative parameter step
  double gradient_tolerance = 1e-12;  // max |J^T W r| component
};

struct LeastSquaresOutcome {
  Eigen::VectorXd params;
  /// (J^T W J)^+ ; scale by reduced chi^2 when the weights are not 1/sigma^2.
  Eigen::MatrixXd normal_inverse;
  double cost = 0.0;  // sum w r^2
  int iterations = 0;
  bool converged = false;
  std::string message;
};

LeastSquaresOutcome solve_least_squares(const ModelFunction& model, const Eigen::VectorXd& y,
                                        const Eigen::VectorXd& weights, Eigen::VectorXd start,
                                        const std::vector<ParameterBounds>& bounds,
                                        const LeastSquaresOptions& options = {});

}  // namespace divtherm
