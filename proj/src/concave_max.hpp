#pragma once

#include <cstddef>
#include <functional>

#include "dvcert/core.hpp"

namespace dvcert::detail {

// Evaluates f at x; fills the gradient and Hessian when the pointers are set.
using ConcaveFn = std::function<double(const Vector& x, Vector* grad, Matrix* hess)>;

enum class MaxStatus { converged, diverged, max_iterations, stalled };

struct MaximizeOptions {
  double tol_grad = 1e-9;
  std::size_t max_iter = 100000;
  double x_cap = 50.0;            // divergence threshold on the sup-norm of x
  double divergence_grad = 1e-6;  // gradient must stay above this to declare divergence
  double step_cap = 10.0;         // sup-norm cap on a single search direction
  std::ptrdiff_t anchor = -1;     // coordinate pinned at its initial value
};

struct MaximizeResult {
  Vector x;
  double value = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
  MaxStatus status = MaxStatus::max_iterations;
};

// Damped Newton ascent for smooth concave f: Levenberg-regularized Newton
// directions (falling back to the gradient) with Armijo backtracking.
MaximizeResult maximize_concave(const ConcaveFn& f, Vector x0, const MaximizeOptions& opts);

}  // namespace dvcert::detail
