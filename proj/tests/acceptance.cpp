// Acceptance runner. With no argument every criterion runs; with a number
// only that one. Prints one PASS/FAIL line per criterion and exits nonzero if
// any selected criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "dvcert/exact.hpp"
#include "dvcert/montecarlo.hpp"
#include "dvcert/verify.hpp"
#include "test_support.hpp"

using namespace dvcert;
using namespace dvcert::testing;

namespace {

// Tolerances and budgets, one block per criterion.
constexpr double kMartingaleTol = 1e-9;
constexpr double kMartingaleSeconds = 60;

constexpr double kStationaryTol = 1e-8;
constexpr double kIidTol = 1e-6;
constexpr double kKernelTol = 1e-5;
constexpr double kGradientRelTol = 1e-6;
constexpr double kGradientStep = 1e-5;
constexpr double kRateSeconds = 300;

constexpr double kTheoremTol = 1e-9;
// Solved to well below the slacks compared against, so that the point
// estimate of inf I is a meaningful reference.
constexpr double kFwGapTol = 1e-12;
constexpr std::size_t kFwMaxIter = 5000;
constexpr double kTheoremSeconds = 600;

constexpr double kCorollaryRhs = 0.7698;
constexpr double kCorollaryRhsTol = 1e-4;
constexpr double kCorollarySeconds = 600;

constexpr double kMinimaxTol = 1e-5;
constexpr double kMinimaxSeconds = 600;

constexpr double kSupermultTol = 1e-12;
constexpr double kDoublingTol = 1e-12;
constexpr double kTrendTol = 1e-9;
constexpr double kSupermultSeconds = 300;

constexpr double kHolderTol = 1e-10;
constexpr double kHolderSeconds = 60;

constexpr std::size_t kWitnessSamples = 100000;
constexpr std::size_t kWitnessHorizon = 10000;
constexpr double kWitnessTruncation = 1e-3;
constexpr int kWitnessRepetitions = 100;
constexpr int kWitnessRequired = 95;
constexpr double kWitnessSeconds = 600;

constexpr double kBruteForceTol = 1e-12;
constexpr double kBruteForceSeconds = 120;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

VerifyOptions tight_verify() {
  VerifyOptions o;
  o.infimum.gap_tol = kFwGapTol;
  o.infimum.max_iter = kFwMaxIter;
  return o;
}

Polytope with(std::size_t dim, std::vector<Halfspace> hs) {
  Polytope C = simplex(dim);
  C.halfspaces = std::move(hs);
  return C;
}

// ---------------------------------------------------------------------------

Outcome martingale_suite() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const std::size_t d = 2 + seed % 3;
    const FiniteChain chain = random_chain(d, rng, false, 0.3);
    std::vector<State> Y;
    for (std::size_t s = 0; s < d; ++s)
      if (rng.uniform() < 0.5) Y.push_back(static_cast<State>(s));
    if (Y.empty()) Y.push_back(static_cast<State>(rng.below(d)));
    const SubsetSpec spec = exit_set(chain, Y);
    Vector u(static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = std::exp(2.0 * (rng.uniform() - 0.5));
    const std::size_t n = 1 + seed % 3;
    for (State x = 0; x < static_cast<State>(d); ++x) worst = std::max(worst, martingale_check(chain, spec, u, x, 8, n));
  }
  return {worst <= kMartingaleTol, fmt("max |E M_{t^T} - u(x)| = %.2e", worst)};
}

Outcome rate_oracles() {
  double a = 0.0, b = 0.0, c = 0.0, g = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed + 1);
    const FiniteChain chain = random_chain(2 + seed % 5, rng, true, 0.3);
    a = std::max(a, rate_compact(chain, stationary_distribution(chain)).value.value());
  }
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed + 2);
    const std::size_t d = 2 + seed % 5;
    const Vector alpha = dirichlet(d, rng);
    Matrix P(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (Eigen::Index r = 0; r < P.rows(); ++r) P.row(r) = alpha.transpose();
    const Vector mu = dirichlet(d, rng);
    const auto r = rate_compact(FiniteChain(P), mu);
    b = std::max(b, r.value.is_finite() ? std::abs(r.value.value() - kl(mu, alpha)) : INFINITY);
  }
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed + 3);
    const std::size_t d = 2 + seed % 2;
    const FiniteChain chain(random_stochastic(d, rng));
    const Vector mu = dirichlet(d, rng);
    const auto r = rate_compact(chain, mu);
    c = std::max(c, r.value.is_finite() ? std::abs(r.value.value() - kernel_form_rate(chain.transition(), mu))
                                        : INFINITY);
  }
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto inst = random_instance(seed + 4, {2, 6, 4, false, 0.3, 0});
    Rng rng(seed + 4);
    const Vector mu = dirichlet(inst.Y.size(), rng);
    Vector phi(static_cast<Eigen::Index>(inst.chain.size()));
    for (Eigen::Index i = 0; i < phi.size(); ++i) phi[i] = rng.normal();
    const Vector grad = phi_objective(inst.chain, inst.Y, mu, phi).gradient;
    for (Eigen::Index i = 0; i < phi.size(); ++i) {
      Vector p = phi, m = phi;
      p[i] += kGradientStep;
      m[i] -= kGradientStep;
      const double fd = (phi_objective(inst.chain, inst.Y, mu, p).value -
                         phi_objective(inst.chain, inst.Y, mu, m).value) / (2 * kGradientStep);
      g = std::max(g, std::abs(fd - grad[i]) / std::max(1.0, std::abs(grad[i])));
    }
  }
  const bool pass = a <= kStationaryTol && b <= kIidTol && c <= kKernelTol && g <= kGradientRelTol;
  return {pass, fmt("(a) %.1e", a) + fmt(" (b) %.1e", b) + fmt(" (c) %.1e", c) + fmt(" (d) %.1e", g)};
}

Outcome theorem_battery() {
  const std::vector<std::size_t> n_list{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  int rows = 0, failures = 0, strict_failures = 0;
  double worst = -INFINITY;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto inst = random_instance(seed, {2, 4, 3, false, 0.3, 2});
    for (const auto& r : verify_theorem(inst.chain, inst.Y, inst.C, n_list, tight_verify())) {
      ++rows;
      worst = std::max(worst, r.lhs - r.rhs);
      if (r.lhs > r.rhs + kTheoremTol) ++failures;
      const double point_rhs = r.rate.is_finite() ? std::exp(-static_cast<double>(r.n) * r.rate.value()) : 0.0;
      if (r.lhs > point_rhs + kTheoremTol) ++strict_failures;
    }
  }
  return {failures == 0, std::to_string(rows) + " rows, " + std::to_string(failures) + " failures" +
                             fmt(", max lhs - rhs = %.2e", worst) + "; against the point estimate of inf I: " +
                             std::to_string(strict_failures) + " failures"};
}

Outcome corollary_battery() {
  const std::vector<std::size_t> n_list{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  int rows = 0, failures = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto inst = random_instance(seed + 10000, {2, 4, 0, false, 0.3, 2});
    for (const auto& r : verify_corollary(inst.chain, inst.C, n_list)) {
      ++rows;
      if (r.lhs > r.rhs + kTheoremTol) ++failures;
    }
  }
  const FiniteChain iid(mat({{0.5, 0.5}, {0.5, 0.5}}));
  const auto row = verify_corollary(iid, with(2, {{vec({-1, 0}), -0.75}}), {2}).front();
  const bool worked = row.lhs == 0.0 && row.best_start_lhs && *row.best_start_lhs == 0.5 &&
                      std::abs(row.rhs - kCorollaryRhs) <= kCorollaryRhsTol && row.holds;
  return {failures == 0 && worked, std::to_string(rows) + " rows, " + std::to_string(failures) +
                                       " failures; worked example lhs = " + fmt("%.4g", row.lhs) +
                                       fmt(", best start = %.4g", row.best_start_lhs.value_or(-1)) +
                                       fmt(", rhs = %.6f", row.rhs)};
}

Outcome minimax_battery() {
  double worst = 0.0;
  int instances = 0;
  for (std::uint64_t seed = 0; instances < 100; ++seed) {
    Rng rng(seed + 20000);
    const FiniteChain chain = random_chain(3, rng, false, 0.0);
    const bool constrained = seed % 2 == 1;
    const SubsetSpec Y = constrained ? exit_set(chain, {0, 2}) : exit_set(chain, {0, 1, 2});
    const std::size_t dim = Y.size();
    const Vector center = dirichlet(dim, rng);
    Polytope C = simplex(dim);
    for (int k = 0; k < 2; ++k) {
      Vector a(static_cast<Eigen::Index>(dim));
      for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = rng.normal();
      C.halfspaces.push_back({a, a.dot(center) + 0.2 * rng.uniform()});
    }
    const auto m = minimax_gap(chain, Y, C);
    worst = std::max(worst, m.inf_sup.is_finite() ? std::abs(m.gap) : INFINITY);
    ++instances;
  }
  return {worst <= kMinimaxTol, fmt("max |sup inf - inf sup| = %.2e over 100 instances", worst)};
}

Outcome supermultiplicativity() {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t m = 1; m <= 11; ++m)
    for (std::size_t n = m; m + n <= 12; ++n) pairs.emplace_back(m, n);
  const std::vector<std::size_t> n_list{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  int failures = 0, doubling = 0, below = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto inst = random_instance(seed + 30000, {2, 3, 0, false, 0.3, 2});
    for (const auto& r : verify_supermultiplicative(inst.chain, inst.C, pairs)) {
      worst = std::max(worst, r.phi_m * r.phi_n - r.phi_sum);
      if (r.phi_sum < r.phi_m * r.phi_n - kSupermultTol) ++failures;
    }
    const auto t = convergence_trend(inst.chain, inst.C, n_list, tight_verify().infimum);
    for (const auto& a : t.rows)
      for (const auto& b : t.rows)
        if (b.n == 2 * a.n && a.rate_n.is_finite() && b.rate_n > ExtReal(a.rate_n.value() + kDoublingTol)) ++doubling;
    if (t.inf_rate.is_finite())
      for (const auto& r : t.rows)
        if (r.rate_n < ExtReal(t.inf_rate.value() - kTrendTol)) ++below;
  }
  return {failures == 0 && doubling == 0 && below == 0,
          std::to_string(failures) + " product failures" + fmt(" (max phi_m phi_n - phi_{m+n} = %.1e), ", worst) +
              std::to_string(doubling) + " doubling failures, " + std::to_string(below) + " rows below inf_C I"};
}

Outcome holder_closure() {
  int failures = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto inst = random_instance(seed + 40000, {2, 5, 3, false, 0.3, 0});
    Rng rng(seed);
    const Vector u = random_superharmonic(inst.chain, inst.Y, rng, 4.0);
    const Vector v = random_superharmonic(inst.chain, inst.Y, rng, 4.0);
    if (!superharmonic_check(inst.chain, inst.Y, u, kHolderTol).empty() ||
        !superharmonic_check(inst.chain, inst.Y, v, kHolderTol).empty()) {
      ++failures;
      continue;
    }
    const double alpha = 0.01 + 0.98 * rng.uniform();
    if (!holder_closure_check(inst.chain, inst.Y, u, v, alpha)) ++failures;
  }
  return {failures == 0, std::to_string(failures) + " failures in 500 triples"};
}

Outcome witness_vs_mc() {
  // Witness: optimal certified potential of the walk reflected at K, which
  // agrees with the infinite walk on {0..K-1} and at K when u is constant beyond K.
  const double p_up = 0.3;
  const State K = 12;
  const FiniteChain truncated = reflected_walk_finite(p_up, K);
  const LazyChain walk = reflected_walk(p_up);
  const std::vector<State> Yset{0, 1, 2, 3, 4};
  const SubsetSpec Yf = exit_set(truncated, Yset);
  const SubsetSpec Y = exit_set(walk, Yset);
  const Polytope C = ball_linf(Vector::Constant(5, 0.2), 0.2);
  const auto inf = infimum_rate_over_C(truncated, Yf, C, RateMode::constrained);
  Witness w;
  w.lo = 0;
  w.hi = K;
  for (State s = 0; s <= K; ++s) w.values.push_back(std::exp(inf.witness_phi[s]));
  w.tail_constant = w.values.back();

  const std::vector<std::size_t> ns{5, 10, 20};
  std::vector<double> bounds;
  for (std::size_t n : ns) bounds.push_back(witness_bound(walk, Y, w, C, n).bound);

  const std::vector<State> starts{5};
  int passed = 0;
  double worst_trunc = 0.0, worst_ratio = 0.0;
  for (int rep = 0; rep < kWitnessRepetitions; ++rep) {
    bool ok = true;
    for (std::size_t k = 0; k < ns.size(); ++k) {
      double high = 1.0;
      for (State x : starts) {
        const auto e = mc_prob_stopped(walk, Y, x, ns[k], C, kWitnessSamples, kWitnessHorizon,
                                       Rng(static_cast<std::uint64_t>(rep)).split(ns[k] * 100 + x).next_u64());
        worst_trunc = std::max(worst_trunc, e.truncated_mass);
        if (e.truncated_mass >= kWitnessTruncation) ok = false;
        high = std::min(high, e.high);
      }
      worst_ratio = std::max(worst_ratio, high / bounds[k]);
      if (high > bounds[k]) ok = false;
    }
    if (ok) ++passed;
  }
  return {passed >= kWitnessRequired,
          std::to_string(passed) + "/100 repetitions" + fmt(", bounds %.4f", bounds[0]) + fmt(" %.4f", bounds[1]) +
              fmt(" %.4f", bounds[2]) + fmt(", max bracket/bound %.3f", worst_ratio) +
              fmt(", max truncated mass %.1e", worst_trunc)};
}

Outcome exact_vs_brute_force() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto inst = random_instance(seed + 50000, {2, 3, 0, false, 0.3, 3});
    for (std::size_t n = 1; n <= 6; ++n) {
      const auto rep = exact_prob_compact(inst.chain, n, inst.C);
      for (State x = 0; x < static_cast<State>(inst.chain.size()); ++x)
        worst = std::max(worst, std::abs(rep.at(x) - brute_force_compact(inst.chain, x, n, inst.C)));
    }
  }
  return {worst <= kBruteForceTol, fmt("max |DP - enumeration| = %.2e", worst)};
}

struct Criterion {
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"martingale optional stopping", kMartingaleSeconds, martingale_suite},
      {"rate oracles", kRateSeconds, rate_oracles},
      {"theorem battery", kTheoremSeconds, theorem_battery},
      {"corollary battery", kCorollarySeconds, corollary_battery},
      {"minimax gap", kMinimaxSeconds, minimax_battery},
      {"supermultiplicativity and doubling", kSupermultSeconds, supermultiplicativity},
      {"Hoelder closure", kHolderSeconds, holder_closure},
      {"witness certificate vs Monte Carlo", kWitnessSeconds, witness_vs_mc},
      {"exact DP vs brute force", kBruteForceSeconds, exact_vs_brute_force},
  };
  std::size_t first = 0, last = criteria.size();
  if (argc > 1) {
    const int k = std::atoi(argv[1]);
    if (k < 1 || k > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "usage: %s [1-%zu]\n", argv[0], criteria.size());
      return 2;
    }
    first = static_cast<std::size_t>(k - 1);
    last = first + 1;
  }
  bool all = true;
  for (std::size_t i = first; i < last; ++i) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool in_time = secs <= criteria[i].budget_seconds;
    const bool pass = o.pass && in_time;
    all = all && pass;
    std::printf("[%s] %zu. %s: %s; %.1f s (budget %.0f s)\n", pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
                o.detail.c_str(), secs, criteria[i].budget_seconds);
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
