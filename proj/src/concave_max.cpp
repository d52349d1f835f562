#include "concave_max.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dvcert::detail {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kMinStep = 1e-14;
constexpr std::size_t kMaxIdle = 200;  // iterations without a representable gain

void pin_anchor(std::ptrdiff_t anchor, Vector& g, Matrix& H) {
  if (anchor < 0) return;
  g[anchor] = 0.0;
  H.row(anchor).setZero();
  H.col(anchor).setZero();
  H(anchor, anchor) = -1.0;
}

Vector newton_direction(const Matrix& H, const Vector& g, double lambda) {
  const auto n = g.size();
  for (int attempt = 0; attempt < 8; ++attempt) {
    Matrix M = -H;
    M.diagonal().array() += lambda;
    Eigen::LLT<Matrix> llt(M);
    if (llt.info() == Eigen::Success) {
      Vector d = llt.solve(g);
      if (d.allFinite()) return d;
    }
    lambda = std::max(lambda * 100.0, 1e-10);
  }
  return Vector::Zero(n);
}

}  // namespace

MaximizeResult maximize_concave(const ConcaveFn& f, Vector x0, const MaximizeOptions& opts) {
  const auto n = x0.size();
  MaximizeResult res;
  res.x = std::move(x0);
  Vector g(n);
  Matrix H(n, n);

  double best = -std::numeric_limits<double>::infinity();
  std::size_t idle = 0;
  for (std::size_t it = 0;; ++it) {
    res.value = f(res.x, &g, &H);
    pin_anchor(opts.anchor, g, H);
    res.grad_norm = n > 0 ? g.lpNorm<Eigen::Infinity>() : 0.0;
    res.iterations = it;
    if (res.grad_norm <= opts.tol_grad) {
      res.status = MaxStatus::converged;
      return res;
    }
    if (n > 0 && res.x.lpNorm<Eigen::Infinity>() > opts.x_cap && res.grad_norm > opts.divergence_grad) {
      res.status = MaxStatus::diverged;
      return res;
    }
    if (it == 0 || res.value > best + 1e-15 * (1.0 + std::abs(best))) {
      best = res.value;
      idle = 0;
    } else if (++idle > kMaxIdle) {
      res.status = MaxStatus::stalled;
      return res;
    }
    if (it >= opts.max_iter) {
      res.status = MaxStatus::max_iterations;
      return res;
    }

    const double lambda = std::max(std::min(res.grad_norm, 1.0), 1e-12);
    Vector d = newton_direction(H, g, lambda);
    if (!(g.dot(d) > 0.0)) d = g;

    bool accepted = false;
    // Near the optimum the change in f drops below rounding; the gradient
    // norm still resolves progress there.
    if (g.dot(d) <= 1e-10 * (1.0 + std::abs(res.value))) {
      Vector trial = res.x + d;
      Vector gt(n);
      Matrix Ht(n, n);
      const double ft = f(trial, &gt, &Ht);
      pin_anchor(opts.anchor, gt, Ht);
      const double noise = 1e-13 * (1.0 + std::abs(res.value));
      if (d.lpNorm<Eigen::Infinity>() <= opts.step_cap && std::isfinite(ft) && std::abs(ft - res.value) <= noise &&
          gt.lpNorm<Eigen::Infinity>() < 0.5 * res.grad_norm) {
        res.x = std::move(trial);
        accepted = true;
      }
    }
    for (int pass = 0; pass < 2 && !accepted; ++pass) {
      if (pass == 1) d = g;  // steepest ascent fallback
      const double dmax = d.lpNorm<Eigen::Infinity>();
      if (dmax > opts.step_cap) d *= opts.step_cap / dmax;
      const double slope = g.dot(d);
      for (double t = 1.0; t >= kMinStep; t *= 0.5) {
        Vector trial = res.x + t * d;
        const double ft = f(trial, nullptr, nullptr);
        if (std::isfinite(ft) && ft >= res.value + kArmijo * t * slope) {
          res.x = std::move(trial);
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) {
      res.status = MaxStatus::stalled;
      return res;
    }
  }
}

}  // namespace dvcert::detail
