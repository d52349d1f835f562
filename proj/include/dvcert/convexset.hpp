#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "dvcert/chain.hpp"
#include "dvcert/extended_real.hpp"
#include "dvcert/rate.hpp"

namespace dvcert {

/// a . mu <= b
struct Halfspace {
  Vector a;
  double b = 0.0;
};

/// Closed convex subset of the probability simplex over Y: the simplex
/// constraints are implicit, `halfspaces` add further cuts.
struct Polytope {
  std::size_t dim = 0;
  std::vector<Halfspace> halfspaces;
};

inline constexpr std::size_t kMaxLpDim = 8;

Polytope simplex(std::size_t dim);

/// Sup-norm ball { mu : |mu(s) - center(s)| <= radius for all s }.
Polytope ball_linf(const Vector& center, double radius);

bool member(const Polytope& C, const Vector& mu, double tol = 1e-12);

/// Vertices of C, deduplicated and sorted lexicographically. Empty iff C is empty.
std::vector<Vector> enumerate_vertices(const Polytope& C);

struct LpSolution {
  Vector mu;
  double value = 0.0;
};

/// argmin of c . mu over C by vertex enumeration; nullopt when C is empty.
/// Ties go to the lexicographically smallest vertex.
std::optional<LpSolution> linear_minimize(const Polytope& C, const Vector& c);

/// inner is contained in outer (every vertex of inner lies in outer).
bool is_subset(const Polytope& inner, const Polytope& outer, double tol = 1e-10);

enum class RateMode { compact, constrained };

struct InfimumOptions {
  RateOptions rate;
  double gap_tol = 1e-6;
  std::size_t max_iter = 500;
};

struct InfimumResult {
  /// Smallest I over the visited iterates; infinite when no finite iterate was found.
  ExtReal value;
  Vector argmin;
  /// Certified lower bound on inf_C I: the best min_{mu in C} Phi(phi_k, mu)
  /// over the feasible potentials phi_k produced along the way (>= 0).
  double lower_bound = 0.0;
  Vector witness_phi;  // potential attaining lower_bound
  double gap = 0.0;    // value - lower_bound (inf when value is infinite)
  std::size_t iterations = 0;
  bool converged = false;
};

/// inf over C of I by pairwise Frank-Wolfe with exact line search. For
/// RateMode::compact, Y must be the whole state space.
InfimumResult infimum_rate_over_C(const FiniteChain& chain, const SubsetSpec& Y, const Polytope& C, RateMode mode,
                                  const InfimumOptions& opts = {});

/// min over C of Phi(phi, .) for a fixed potential phi.
double inner_infimum(const FiniteChain& chain, const SubsetSpec& Y, const Polytope& C, const Vector& phi);

struct MinimaxReport {
  double sup_inf = 0.0;  // sup over admissible phi of min_C Phi(phi, .)
  ExtReal inf_sup;       // inf over C of I
  double gap = 0.0;      // inf_sup - sup_inf
  Vector phi_star;       // potential attaining sup_inf
  Vector mu_star;        // measure attaining inf_sup
};

/// Both sides of the minimax equality, each by its own solver: the inf-sup
/// side by Frank-Wolfe over C, the sup-inf side by maximizing a smoothed
/// minimum of Phi(phi, v) over the vertices v of C.
MinimaxReport minimax_gap(const FiniteChain& chain, const SubsetSpec& Y, const Polytope& C,
                          const InfimumOptions& opts = {});

}  // namespace dvcert
