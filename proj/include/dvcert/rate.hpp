#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "dvcert/chain.hpp"
#include "dvcert/extended_real.hpp"

namespace dvcert {

struct RateOptions {
  double tol_grad = 1e-9;
  std::size_t max_iter = 100000;
  double phi_cap = 50.0;
  double divergence_grad = 1e-6;
  std::vector<double> penalty_schedule{1.0, 1e2, 1e4, 1e6, 1e8};
};

/// phi = ln u, gauge-fixed by phi(anchor) = 0.
struct LogPotential {
  Vector phi;
  State anchor = 0;

  [[nodiscard]] Vector u() const { return phi.array().exp(); }
};

enum class RateStatus { converged, infinite, max_iterations };

std::string to_string(RateStatus s);

struct RateResult {
  ExtReal value;
  std::optional<LogPotential> maximizer;  // absent when value is infinite
  RateStatus status = RateStatus::max_iterations;
  double gradient_norm = 0.0;
  double tolerance = 0.0;  // gradient tolerance the final stage was held to
  std::size_t iterations = 0;
  double max_violation = 0.0;  // worst lse_z(phi) - phi(z) off Y at the returned iterate
  Vector last_phi;             // final iterate, kept also when the value is infinite
};

struct PhiValue {
  double value = 0.0;
  Vector gradient;  // over all states
};

/// Phi(phi, mu) = sum_{y in Y} mu(y) [phi(y) - ln (P e^phi)(y)], with its
/// exact gradient in phi. mu is indexed like Y.Y.
PhiValue phi_objective(const FiniteChain& chain, const SubsetSpec& Y, const Vector& mu, const Vector& phi);

/// g(y) = phi(y) - ln (P e^phi)(y) for y in Y; Phi(phi, mu) = <g, mu>.
Vector phi_slopes(const FiniteChain& chain, const SubsetSpec& Y, const Vector& phi);

/// sup over all phi of Phi(phi, mu) with Y = X. mu is over all states.
RateResult rate_compact(const FiniteChain& chain, const Vector& mu, const RateOptions& opts = {},
                        const Vector* warm_start = nullptr);

/// sup of Phi(phi, mu) over phi with lse_z(phi) <= phi(z) for every z outside Y.
RateResult rate_constrained(const FiniteChain& chain, const SubsetSpec& Y, const Vector& mu,
                            const RateOptions& opts = {}, const Vector* warm_start = nullptr);

/// Same objective as rate_constrained with the superharmonic constraints dropped.
RateResult rate_relaxed(const FiniteChain& chain, const SubsetSpec& Y, const Vector& mu, const RateOptions& opts = {},
                        const Vector* warm_start = nullptr);

struct Violation {
  State state;
  double deficit;  // (P u)(state) - u(state)
};

/// States z outside Y with u(z) < (P u)(z) - tol.
std::vector<Violation> superharmonic_check(const FiniteChain& chain, const SubsetSpec& Y, const Vector& u,
                                           double tol = 0.0);

/// Whether u^alpha v^(1-alpha) stays superharmonic off Y (tolerance 1e-10).
bool holder_closure_check(const FiniteChain& chain, const SubsetSpec& Y, const Vector& u, const Vector& v,
                          double alpha);

}  // namespace dvcert
