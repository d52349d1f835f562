#include "dvcert/verify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "dvcert/exact.hpp"

namespace dvcert {

std::string to_string(RowMode m) {
  switch (m) {
    case RowMode::theorem:
      return "theorem";
    case RowMode::corollary:
      return "corollary";
    case RowMode::witness:
      return "witness";
  }
  return "unknown";
}

namespace {

bool is_empty(const Polytope& C) { return enumerate_vertices(C).empty(); }

void finish_exact(VerificationRow& row) {
  row.kind = LhsKind::exact;
  row.lhs_low = row.lhs_high = row.lhs;
  row.slack = row.rhs - row.lhs;
  row.holds = row.slack >= -row.tol;
}

void finish_bracket(VerificationRow& row) {
  row.kind = LhsKind::bracket;
  row.slack = row.rhs - row.lhs_high;
  row.holds = row.lhs_high <= row.rhs;
}

VerificationRow base_row(RowMode mode, std::size_t n, const VerifyOptions& opts) {
  VerificationRow row;
  row.mode = mode;
  row.n = n;
  row.seed = opts.seed;
  row.tol = opts.tol;
  return row;
}

std::vector<VerificationRow> empty_set_rows(RowMode mode, const std::vector<std::size_t>& n_list,
                                            const VerifyOptions& opts) {
  std::vector<VerificationRow> rows;
  for (std::size_t n : n_list) {
    auto row = base_row(mode, n, opts);
    row.lhs = 0.0;
    row.rate = ExtReal::infinity();
    row.rate_lower = std::numeric_limits<double>::infinity();
    row.rhs = 0.0;
    finish_exact(row);
    rows.push_back(row);
  }
  return rows;
}

std::uint64_t start_seed(std::uint64_t seed, std::size_t n, State x) {
  Rng r = Rng(seed).split(static_cast<std::uint64_t>(n) * 1000003ULL + static_cast<std::uint64_t>(x));
  return r.next_u64();
}

// Sets lhs/lhs_low/lhs_high from per-start brackets: the smallest upper end
// bounds the infimum from above.
template <typename Sampler>
void bracket_over_starts(VerificationRow& row, const std::vector<State>& starts, const Sampler& sample) {
  row.lhs_high = 1.0;
  row.lhs_low = 1.0;
  row.lhs = 1.0;
  for (State x : starts) {
    const McEstimate e = sample(x);
    if (e.high < row.lhs_high) {
      row.lhs_high = e.high;
      row.argmin_start = x;
    }
    row.lhs_low = std::min(row.lhs_low, e.low);
    row.lhs = std::min(row.lhs, e.point);
  }
  finish_bracket(row);
}

}  // namespace

std::vector<VerificationRow> verify_theorem(const FiniteChain& chain, const SubsetSpec& Y, const Polytope& C,
                                            const std::vector<std::size_t>& n_list, const VerifyOptions& opts) {
  if (C.dim != Y.size()) throw InvalidArgument("verify_theorem: polytope dimension must equal |Y|");
  if (is_empty(C)) return empty_set_rows(RowMode::theorem, n_list, opts);
  const auto inf = infimum_rate_over_C(chain, Y, C, RateMode::constrained, opts.infimum);
  std::vector<VerificationRow> rows;
  for (std::size_t n : n_list) {
    auto row = base_row(RowMode::theorem, n, opts);
    row.rate = inf.value;
    row.rate_lower = inf.lower_bound;
    row.rhs = std::exp(-static_cast<double>(n) * inf.lower_bound);
    if (Y.size() <= kExactMaxStates && n <= kExactMaxVisits && n > 0) {
      const auto report = exact_prob_stopped(chain, Y, n, C);
      row.lhs = report.infimum;
      row.argmin_start = report.argmin_start;
      row.best_start_lhs = *std::max_element(report.probability.begin(), report.probability.end());
      finish_exact(row);
    } else if (opts.mc_fallback) {
      bracket_over_starts(row, Y.Y_tilde, [&](State x) {
        return mc_prob_stopped(chain, Y, x, n, C, opts.samples, opts.horizon, start_seed(opts.seed, n, x), opts.jobs);
      });
    } else {
      throw SizeGuardError("verify_theorem: row n = " + std::to_string(n) +
                           " exceeds the exact guard and Monte Carlo fallback is disabled");
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<VerificationRow> verify_corollary(const FiniteChain& chain, const Polytope& C,
                                              const std::vector<std::size_t>& n_list, const VerifyOptions& opts) {
  if (C.dim != chain.size()) throw InvalidArgument("verify_corollary: polytope dimension must equal d");
  if (is_empty(C)) return empty_set_rows(RowMode::corollary, n_list, opts);
  std::vector<State> all(chain.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<State>(i);
  const SubsetSpec X = exit_set(chain, all);
  const auto inf = infimum_rate_over_C(chain, X, C, RateMode::compact, opts.infimum);
  std::vector<VerificationRow> rows;
  for (std::size_t n : n_list) {
    auto row = base_row(RowMode::corollary, n, opts);
    row.rate = inf.value;
    row.rate_lower = inf.lower_bound;
    row.rhs = std::exp(-static_cast<double>(n) * inf.lower_bound);
    if (chain.size() <= kExactMaxStates && n <= kExactMaxVisits && n > 0) {
      const auto report = exact_prob_compact(chain, n, C);
      row.lhs = report.infimum;
      row.argmin_start = report.argmin_start;
      row.best_start_lhs = *std::max_element(report.probability.begin(), report.probability.end());
      finish_exact(row);
    } else if (opts.mc_fallback) {
      bracket_over_starts(row, all, [&](State x) {
        return mc_prob_compact(chain, x, n, C, opts.samples, start_seed(opts.seed, n, x), opts.jobs);
      });
    } else {
      throw SizeGuardError("verify_corollary: row n = " + std::to_string(n) +
                           " exceeds the exact guard and Monte Carlo fallback is disabled");
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<VerificationRow> verify_witness(const FiniteChain& chain, const SubsetSpec& Y, const Polytope& C,
                                            const std::vector<std::size_t>& n_list, const Vector& u,
                                            const VerifyOptions& opts) {
  if (C.dim != Y.size()) throw InvalidArgument("verify_witness: polytope dimension must equal |Y|");
  if (is_empty(C)) return empty_set_rows(RowMode::witness, n_list, opts);
  std::vector<VerificationRow> rows;
  for (std::size_t n : n_list) {
    const auto wb = witness_bound(chain, Y, u, C, n);
    auto row = base_row(RowMode::witness, n, opts);
    row.rate = ExtReal(wb.exponent);
    row.rate_lower = wb.exponent;
    row.rhs = wb.bound;
    if (Y.size() <= kExactMaxStates && n <= kExactMaxVisits) {
      const auto report = exact_prob_stopped(chain, Y, n, C);
      row.lhs = report.infimum;
      row.argmin_start = report.argmin_start;
      finish_exact(row);
    } else if (opts.mc_fallback) {
      bracket_over_starts(row, Y.Y_tilde, [&](State x) {
        return mc_prob_stopped(chain, Y, x, n, C, opts.samples, opts.horizon, start_seed(opts.seed, n, x), opts.jobs);
      });
    } else {
      throw SizeGuardError("verify_witness: row n = " + std::to_string(n) +
                           " exceeds the exact guard and Monte Carlo fallback is disabled");
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<VerificationRow> verify_witness(const LazyChain& chain, const SubsetSpec& Y, const Polytope& C,
                                            const std::vector<std::size_t>& n_list, const Witness& u,
                                            const std::vector<State>& starts, const VerifyOptions& opts) {
  if (starts.empty()) throw InvalidArgument("verify_witness: no starts listed");
  for (State x : starts)
    if (!Y.in_Y_tilde(x)) throw InvalidArgument("verify_witness: start " + std::to_string(x) + " is not in Y_tilde");
  std::vector<VerificationRow> rows;
  for (std::size_t n : n_list) {
    const auto wb = witness_bound(chain, Y, u, C, n);
    auto row = base_row(RowMode::witness, n, opts);
    row.rate = ExtReal(wb.exponent);
    row.rate_lower = wb.exponent;
    row.rhs = wb.bound;
    bracket_over_starts(row, starts, [&](State x) {
      return mc_prob_stopped(chain, Y, x, n, C, opts.samples, opts.horizon, start_seed(opts.seed, n, x), opts.jobs);
    });
    rows.push_back(row);
  }
  return rows;
}

std::string to_csv(const std::vector<VerificationRow>& rows) {
  std::ostringstream out;
  out.precision(17);
  out << "mode,n,lhs,rhs,slack,holds,seed\n";
  for (const auto& r : rows) {
    const double lhs = r.kind == LhsKind::exact ? r.lhs : r.lhs_high;
    out << to_string(r.mode) << ',' << r.n << ',' << lhs << ',' << r.rhs << ',' << r.slack << ','
        << (r.holds ? "true" : "false") << ',' << r.seed << '\n';
  }
  return out.str();
}

std::vector<SupermultiplicativeRow> verify_supermultiplicative(
    const FiniteChain& chain, const Polytope& C, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  std::map<std::size_t, double> cache;
  auto phi = [&](std::size_t k) {
    auto it = cache.find(k);
    if (it == cache.end()) it = cache.emplace(k, exact_prob_compact(chain, k, C).infimum).first;
    return it->second;
  };
  std::vector<SupermultiplicativeRow> rows;
  for (const auto& [m, n] : pairs) {
    if (m == 0 || n == 0) throw InvalidArgument("verify_supermultiplicative: m and n must be positive");
    if (m + n > kExactMaxVisits) throw SizeGuardError("verify_supermultiplicative: m + n exceeds the exact guard");
    SupermultiplicativeRow row{m, n, phi(m), phi(n), phi(m + n), false};
    row.holds = row.phi_sum >= row.phi_m * row.phi_n - 1e-12;
    rows.push_back(row);
  }
  return rows;
}

SubadditiveReport subadditive_limit_check(const std::vector<ExtReal>& f, double tol) {
  SubadditiveReport report;
  const std::size_t N = f.size();
  for (std::size_t m = 1; m <= N; ++m)
    for (std::size_t n = m; m + n <= N; ++n) {
      const ExtReal sum = f[m - 1] + f[n - 1];
      if (sum.is_infinite()) continue;
      if (f[m + n - 1] > ExtReal(sum.value() + tol)) {
        report.is_subadditive = false;
        report.failures.emplace_back(m, n);
      }
    }
  auto ratio = [&](std::size_t k) {
    return f[k - 1].is_infinite() ? ExtReal::infinity() : ExtReal(f[k - 1].value() / static_cast<double>(k));
  };
  report.inf_ratio = ExtReal::infinity();
  for (std::size_t k = 1; k <= N; ++k) {
    report.inf_ratio = std::min(report.inf_ratio, ratio(k));
    report.running_min_ratio.push_back(report.inf_ratio);
  }
  report.tail_min_ratio = ExtReal::infinity();
  const std::size_t tail_from = N - N / 3;
  for (std::size_t k = std::max<std::size_t>(tail_from, 1); k <= N; ++k)
    report.tail_min_ratio = std::min(report.tail_min_ratio, ratio(k));
  return report;
}

TrendReport convergence_trend(const FiniteChain& chain, const Polytope& C, const std::vector<std::size_t>& n_list,
                              const InfimumOptions& opts) {
  if (C.dim != chain.size()) throw InvalidArgument("convergence_trend: polytope dimension must equal d");
  TrendReport report;
  if (is_empty(C)) {
    report.inf_rate = ExtReal::infinity();
    report.inf_rate_lower = std::numeric_limits<double>::infinity();
  } else {
    std::vector<State> all(chain.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<State>(i);
    const auto inf = infimum_rate_over_C(chain, exit_set(chain, all), C, RateMode::compact, opts);
    report.inf_rate = inf.value;
    report.inf_rate_lower = inf.lower_bound;
  }
  std::map<std::size_t, ExtReal> by_n;
  for (std::size_t n : n_list) {
    TrendRow row;
    row.n = n;
    row.phi_n = exact_prob_compact(chain, n, C).infimum;
    row.rate_n = row.phi_n > 0.0 ? ExtReal(std::max(0.0, -std::log(row.phi_n) / static_cast<double>(n)))
                                 : ExtReal::infinity();
    if (row.rate_n.is_finite()) row.above_bound = row.rate_n.value() >= report.inf_rate_lower - 1e-9;
    report.bound_ok = report.bound_ok && row.above_bound;
    by_n[n] = row.rate_n;
    report.rows.push_back(row);
  }
  for (const auto& [n, r] : by_n) {
    const auto it = by_n.find(2 * n);
    if (it == by_n.end() || r.is_infinite()) continue;
    if (it->second.is_infinite() || it->second.value() > r.value() + 1e-12) report.doubling_ok = false;
  }
  return report;
}

std::string to_csv(const TrendReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "n,phi_n,rate_n,inf_rate\n";
  for (const auto& r : report.rows) out << r.n << ',' << r.phi_n << ',' << r.rate_n << ',' << report.inf_rate << '\n';
  return out.str();
}

Matrix random_stochastic(std::size_t d, Rng& rng, double zero_prob) {
  const auto dd = static_cast<Eigen::Index>(d);
  Matrix P = Matrix::Zero(dd, dd);
  for (Eigen::Index r = 0; r < dd; ++r) {
    double total = 0.0;
    for (Eigen::Index c = 0; c < dd; ++c) {
      const bool drop = c != r && rng.uniform() < zero_prob;
      const double w = rng.exponential();
      if (!drop) {
        P(r, c) = w;
        total += w;
      }
    }
    if (!(total > 0.0)) {
      P(r, r) = 1.0;
      total = 1.0;
    }
    P.row(r) /= total;
  }
  return P;
}

FiniteChain random_chain(std::size_t d, Rng& rng, bool irreducible, double zero_prob) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    FiniteChain chain(random_stochastic(d, rng, zero_prob));
    if (!irreducible || is_irreducible(chain)) return chain;
  }
  throw NumericalError("random_chain: no irreducible draw in 10000 attempts");
}

Polytope random_polytope(std::size_t dim, Rng& rng, std::size_t max_halfspaces) {
  Vector center(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < center.size(); ++i) center[i] = rng.exponential();
  center /= center.sum();
  Polytope C = simplex(dim);
  const auto k = rng.below(max_halfspaces + 1);
  for (std::uint64_t j = 0; j < k; ++j) {
    Vector a(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = rng.normal();
    const double delta = -0.1 + 0.3 * rng.uniform();
    C.halfspaces.push_back({a, a.dot(center) + delta});
  }
  return C;
}

RandomInstance random_instance(std::uint64_t seed, const RandomInstanceParams& params) {
  Rng rng(seed);
  const std::size_t span = params.max_states - params.min_states + 1;
  const std::size_t d = params.min_states + rng.below(span);
  FiniteChain chain = random_chain(d, rng, params.irreducible, params.zero_prob);
  std::vector<State> Y;
  if (params.max_Y == 0) {
    for (std::size_t i = 0; i < d; ++i) Y.push_back(static_cast<State>(i));
  } else {
    const std::size_t size = 1 + rng.below(std::min(params.max_Y, d));
    std::vector<State> all(d);
    for (std::size_t i = 0; i < d; ++i) all[i] = static_cast<State>(i);
    for (std::size_t i = 0; i < size; ++i) {
      const auto j = i + rng.below(d - i);
      std::swap(all[i], all[j]);
      Y.push_back(all[i]);
    }
  }
  SubsetSpec spec = exit_set(chain, Y);
  Polytope C = random_polytope(spec.size(), rng, params.max_halfspaces);
  return RandomInstance{std::move(chain), std::move(spec), std::move(C), seed};
}

}  // namespace dvcert
