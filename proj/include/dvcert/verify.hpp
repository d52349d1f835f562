#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dvcert/chain.hpp"
#include "dvcert/convexset.hpp"
#include "dvcert/extended_real.hpp"
#include "dvcert/montecarlo.hpp"

namespace dvcert {

enum class RowMode { theorem, corollary, witness };
enum class LhsKind { exact, bracket };

std::string to_string(RowMode m);

/// One instance of inf_x P_x(event) <= exp(-n * rate) at a fixed n.
///
/// In exact rows lhs is the exact infimum over starts and the row holds when
/// slack >= -tol. In bracket rows [lhs_low, lhs_high] is a sampled bracket for
/// the smallest start probability and the row holds when lhs_high <= rhs.
struct VerificationRow {
  RowMode mode = RowMode::theorem;
  LhsKind kind = LhsKind::exact;
  std::size_t n = 0;
  double lhs = 0.0;
  double lhs_low = 0.0;
  double lhs_high = 0.0;
  ExtReal rate;             // computed inf over C of I (or the witness exponent)
  double rate_lower = 0.0;  // certified lower bound on that infimum
  double rhs = 1.0;         // exp(-n * rate_lower)
  double slack = 0.0;       // rhs - lhs (rhs - lhs_high for brackets)
  bool holds = false;
  std::uint64_t seed = 0;
  double tol = 1e-9;
  State argmin_start = 0;
  std::optional<double> best_start_lhs;  // diagnostic only
};

struct VerifyOptions {
  InfimumOptions infimum;
  double tol = 1e-9;
  std::uint64_t seed = 0;
  /// When a row exceeds the exact-DP guard: sample instead of throwing.
  bool mc_fallback = false;
  std::size_t samples = 100000;
  std::size_t horizon = 10000;
  unsigned jobs = 1;
};

/// Stopped-measure rows: lhs = inf over Y_tilde of P_x(L_n^Y in C), rhs from
/// the constrained rate. An empty C gives lhs = rhs = 0.
std::vector<VerificationRow> verify_theorem(const FiniteChain& chain, const SubsetSpec& Y, const Polytope& C,
                                            const std::vector<std::size_t>& n_list, const VerifyOptions& opts = {});

/// Empirical-measure rows with Y = X and the unconstrained rate. The best
/// start probability is attached as a diagnostic.
std::vector<VerificationRow> verify_corollary(const FiniteChain& chain, const Polytope& C,
                                              const std::vector<std::size_t>& n_list, const VerifyOptions& opts = {});

/// Exact lhs against the single-witness bound for u.
std::vector<VerificationRow> verify_witness(const FiniteChain& chain, const SubsetSpec& Y, const Polytope& C,
                                            const std::vector<std::size_t>& n_list, const Vector& u,
                                            const VerifyOptions& opts = {});

/// Sampled brackets at the listed starts against the witness bound. Only the
/// listed starts are bracketed; the infimum over an infinite Y_tilde is not
/// attempted.
std::vector<VerificationRow> verify_witness(const LazyChain& chain, const SubsetSpec& Y, const Polytope& C,
                                            const std::vector<std::size_t>& n_list, const Witness& u,
                                            const std::vector<State>& starts, const VerifyOptions& opts = {});

std::string to_csv(const std::vector<VerificationRow>& rows);

struct SupermultiplicativeRow {
  std::size_t m = 0;
  std::size_t n = 0;
  double phi_m = 0.0;
  double phi_n = 0.0;
  double phi_sum = 0.0;  // phi_{m+n}
  bool holds = false;    // phi_{m+n} >= phi_m * phi_n - 1e-12
};

/// phi_k = inf_x P_x(L_k / k in C), computed exactly.
std::vector<SupermultiplicativeRow> verify_supermultiplicative(
    const FiniteChain& chain, const Polytope& C, const std::vector<std::pair<std::size_t, std::size_t>>& pairs);

struct SubadditiveReport {
  bool is_subadditive = true;
  std::vector<std::pair<std::size_t, std::size_t>> failures;  // (m, n) with f(m+n) > f(m) + f(n)
  std::vector<ExtReal> running_min_ratio;                       // min_{k<=n} f(k)/k
  ExtReal inf_ratio;                                            // min over the whole range
  ExtReal tail_min_ratio;                                       // min over the last third
};

/// f[0] is f(1). Subadditivity is checked on every pair with m + n in range.
SubadditiveReport subadditive_limit_check(const std::vector<ExtReal>& f, double tol = 1e-12);

struct TrendRow {
  std::size_t n = 0;
  double phi_n = 0.0;
  ExtReal rate_n;  // -(1/n) ln phi_n, infinite when phi_n = 0
  bool above_bound = true;
};

struct TrendReport {
  std::vector<TrendRow> rows;
  ExtReal inf_rate;
  double inf_rate_lower = 0.0;
  bool bound_ok = true;     // every finite rate_n >= inf_rate_lower - 1e-9
  bool doubling_ok = true;  // rate_{2n} <= rate_n + 1e-12 whenever n and 2n are listed
};

TrendReport convergence_trend(const FiniteChain& chain, const Polytope& C, const std::vector<std::size_t>& n_list,
                              const InfimumOptions& opts = {});

std::string to_csv(const TrendReport& report);

struct RandomInstanceParams {
  std::size_t min_states = 2;
  std::size_t max_states = 4;
  std::size_t max_Y = 3;  // 0 means Y = X
  bool irreducible = false;
  double zero_prob = 0.25;  // chance that an off-diagonal entry is forced to 0
  std::size_t max_halfspaces = 2;
};

struct RandomInstance {
  FiniteChain chain;
  SubsetSpec Y;
  Polytope C;
  std::uint64_t seed = 0;
};

/// Row-stochastic d x d matrix with Dirichlet(1) rows on a random support.
Matrix random_stochastic(std::size_t d, Rng& rng, double zero_prob = 0.0);

/// Resamples until irreducible when requested.
FiniteChain random_chain(std::size_t d, Rng& rng, bool irreducible, double zero_prob = 0.0);

/// Cuts a . mu <= a . c + delta through a random center c of the simplex.
/// delta may be negative, so the result is sometimes empty.
Polytope random_polytope(std::size_t dim, Rng& rng, std::size_t max_halfspaces);

RandomInstance random_instance(std::uint64_t seed, const RandomInstanceParams& params = {});

}  // namespace dvcert
