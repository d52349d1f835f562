#include "dvcert/rate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "concave_max.hpp"
#include "phi_terms.hpp"

namespace dvcert {

namespace {

SubsetSpec full_subset(const FiniteChain& chain) {
  std::vector<State> all(chain.size());
  std::iota(all.begin(), all.end(), State{0});
  return SubsetSpec{all, all};
}

void check_measure(const SubsetSpec& Y, const Vector& mu) {
  if (static_cast<std::size_t>(mu.size()) != Y.size()) throw InvalidArgument("measure dimension does not match Y");
  if (!mu.allFinite() || (mu.array() < 0.0).any()) throw InvalidArgument("measure has negative or non-finite mass");
  if (std::abs(mu.sum() - 1.0) > 1e-9) throw InvalidArgument("measure does not sum to 1");
}

RateResult solve(const FiniteChain& chain, const SubsetSpec& Y, const Vector& mu, bool constrained,
                 const RateOptions& opts, const Vector* warm_start) {
  check_measure(Y, mu);
  const auto d = static_cast<Eigen::Index>(chain.size());
  const State anchor = Y.Y.front();
  const std::vector<State> outside = constrained ? detail::complement(chain, Y) : std::vector<State>{};

  Vector x = Vector::Zero(d);
  if (warm_start) {
    if (warm_start->size() != d) throw InvalidArgument("warm start has wrong dimension");
    if (warm_start->allFinite()) x = warm_start->array() - (*warm_start)[anchor];
  }

  std::vector<double> schedule{0.0};
  if (!outside.empty()) schedule = opts.penalty_schedule;

  detail::MaximizeOptions mopts;
  mopts.max_iter = opts.max_iter;
  mopts.x_cap = opts.phi_cap;
  mopts.divergence_grad = opts.divergence_grad;
  mopts.anchor = anchor;

  RateResult result;
  detail::MaximizeResult stage;
  bool diverged = false;
  for (double rho : schedule) {
    auto f = [&](const Vector& phi, Vector* g, Matrix* H) {
      double value = 0.0;
      if (g) g->setZero(d);
      if (H) H->setZero(d, d);
      detail::add_phi_terms(chain, Y, mu, phi, 1.0, value, g, H);
      if (rho > 0.0) detail::add_penalty_terms(chain, outside, rho, phi, value, g, H);
      return value;
    };
    // The penalized gradient carries rho-scaled rounding; hold it to a
    // correspondingly relaxed tolerance.
    mopts.tol_grad = std::max(opts.tol_grad, rho * 1e-15 * (1.0 + x.lpNorm<Eigen::Infinity>()));
    stage = detail::maximize_concave(f, x, mopts);
    result.iterations += stage.iterations;
    x = stage.x;
    if (stage.status == detail::MaxStatus::diverged) {
      diverged = true;
      break;
    }
  }

  if (!outside.empty()) detail::restore_superharmonic(chain, outside, x);
  result.last_phi = x;
  result.gradient_norm = stage.grad_norm;
  result.tolerance = mopts.tol_grad;
  result.max_violation = detail::max_violation(chain, outside, x);

  if (diverged) {
    result.status = RateStatus::infinite;
    result.value = ExtReal::infinity();
    return result;
  }
  double value = 0.0;
  detail::add_phi_terms(chain, Y, mu, x, 1.0, value, nullptr, nullptr);
  if (value < 0.0) {
    // phi = 0 is always admissible with value 0.
    x.setZero();
    value = 0.0;
    result.last_phi = x;
    result.max_violation = 0.0;
  }
  result.value = ExtReal(value);
  result.maximizer = LogPotential{x, anchor};
  result.status = stage.status == detail::MaxStatus::converged ? RateStatus::converged : RateStatus::max_iterations;
  return result;
}

}  // namespace

std::string to_string(RateStatus s) {
  switch (s) {
    case RateStatus::converged:
      return "converged";
    case RateStatus::infinite:
      return "infinite";
    case RateStatus::max_iterations:
      return "max_iterations";
  }
  return "unknown";
}

PhiValue phi_objective(const FiniteChain& chain, const SubsetSpec& Y, const Vector& mu, const Vector& phi) {
  if (static_cast<std::size_t>(phi.size()) != chain.size()) throw InvalidArgument("phi dimension mismatch");
  if (static_cast<std::size_t>(mu.size()) != Y.size()) throw InvalidArgument("measure dimension does not match Y");
  PhiValue out;
  out.gradient = Vector::Zero(phi.size());
  detail::add_phi_terms(chain, Y, mu, phi, 1.0, out.value, &out.gradient, nullptr);
  return out;
}

Vector phi_slopes(const FiniteChain& chain, const SubsetSpec& Y, const Vector& phi) {
  Vector g(static_cast<Eigen::Index>(Y.size()));
  for (std::size_t i = 0; i < Y.size(); ++i)
    g[static_cast<Eigen::Index>(i)] = phi[Y.Y[i]] - detail::row_lse(chain, Y.Y[i], phi);
  return g;
}

RateResult rate_compact(const FiniteChain& chain, const Vector& mu, const RateOptions& opts,
                        const Vector* warm_start) {
  return solve(chain, full_subset(chain), mu, false, opts, warm_start);
}

RateResult rate_constrained(const FiniteChain& chain, const SubsetSpec& Y, const Vector& mu,
                            const RateOptions& opts, const Vector* warm_start) {
  return solve(chain, Y, mu, true, opts, warm_start);
}

RateResult rate_relaxed(const FiniteChain& chain, const SubsetSpec& Y, const Vector& mu, const RateOptions& opts,
                        const Vector* warm_start) {
  return solve(chain, Y, mu, false, opts, warm_start);
}

std::vector<Violation> superharmonic_check(const FiniteChain& chain, const SubsetSpec& Y, const Vector& u,
                                           double tol) {
  if (static_cast<std::size_t>(u.size()) != chain.size()) throw InvalidArgument("superharmonic_check: dimension");
  if ((u.array() <= 0.0).any()) throw InvalidArgument("superharmonic_check: u must be positive");
  std::vector<Violation> out;
  for (State z : detail::complement(chain, Y)) {
    const double pu = chain.transition().row(z).dot(u);
    const double deficit = pu - u[z];
    if (deficit > tol) out.push_back({z, deficit});
  }
  return out;
}

bool holder_closure_check(const FiniteChain& chain, const SubsetSpec& Y, const Vector& u, const Vector& v,
                          double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("holder_closure_check: alpha must lie in (0,1)");
  if (u.size() != v.size()) throw InvalidArgument("holder_closure_check: dimension mismatch");
  const Vector w = (alpha * u.array().log() + (1.0 - alpha) * v.array().log()).exp();
  return superharmonic_check(chain, Y, w, 1e-10).empty();
}

}  // namespace dvcert
