#include <doctest.h>

#include <map>

#include "dvcert/exact.hpp"
#include "dvcert/montecarlo.hpp"
#include "dvcert/verify.hpp"
#include "test_support.hpp"

using namespace dvcert;
using namespace dvcert::testing;

namespace {

Polytope with(std::size_t dim, std::vector<Halfspace> hs) {
  Polytope C = simplex(dim);
  C.halfspaces = std::move(hs);
  return C;
}

FiniteChain iid() { return FiniteChain(mat({{0.5, 0.5}, {0.5, 0.5}})); }

// u(s) = lambda^min(s, K): superharmonic above Y = {0..4} for the p_up = 0.3
// walk whenever 1 <= lambda <= 7/3.
Witness geometric_witness(double lambda, State K) {
  Witness w;
  w.lo = 0;
  w.hi = K;
  for (State s = 0; s <= K; ++s) w.values.push_back(std::pow(lambda, static_cast<double>(s)));
  w.tail_constant = w.values.back();
  return w;
}

}  // namespace

TEST_SUITE("montecarlo") {
  TEST_CASE("wilson interval") {
    const auto [lo, hi] = wilson_interval(50, 100);
    CHECK(lo == doctest::Approx(0.4038).epsilon(1e-3));
    CHECK(hi == doctest::Approx(0.5962).epsilon(1e-3));
    const auto [z0, z1] = wilson_interval(0, 100);
    CHECK(z0 == 0.0);
    CHECK(z1 > 0.0);
    CHECK(z1 < 0.05);
  }

  TEST_CASE("compact examples") {
    const FiniteChain c = iid();
    const auto all = mc_prob_compact(c, 0, 4, simplex(2), 1000, 1);
    CHECK(all.point == 1.0);
    CHECK(all.truncated_mass == 0.0);
    const auto none = mc_prob_compact(c, 0, 4, with(2, {{vec({1, 0}), -1}}), 1000, 1);
    CHECK(none.point == 0.0);
    const auto half = mc_prob_compact(c, 0, 2, with(2, {{vec({-1, 0}), -0.75}}), 100000, 7);
    CHECK(half.low <= 0.5);
    CHECK(half.high >= 0.5);
    CHECK(half.low <= half.point);
    CHECK(half.point <= half.high);
  }

  TEST_CASE("determinism across runs and worker counts") {
    const FiniteChain c(mat({{0, .5, .5}, {.5, .5, 0}, {1, 0, 0}}));
    const auto Y = exit_set(c, {0, 1});
    const Polytope C = ball_linf(vec({0.5, 0.5}), 0.2);
    const auto a = mc_prob_stopped(c, Y, 2, 6, C, 5000, 100, 99, 1);
    const auto b = mc_prob_stopped(c, Y, 2, 6, C, 5000, 100, 99, 1);
    const auto d = mc_prob_stopped(c, Y, 2, 6, C, 5000, 100, 99, 3);
    CHECK(a.successes == b.successes);
    CHECK(a.successes == d.successes);
    CHECK(a.point == d.point);
    CHECK(mc_prob_stopped(c, Y, 2, 6, C, 5000, 100, 100, 1).successes != a.successes);
  }

  TEST_CASE("stopped with full Y matches compact distributionally") {
    const FiniteChain c(mat({{0.2, 0.8}, {0.6, 0.4}}));
    const auto X = exit_set(c, {0, 1});
    const Polytope C = with(2, {{vec({-1, 0}), -0.5}});
    const auto a = mc_prob_compact(c, 0, 6, C, 50000, 1);
    const auto b = mc_prob_stopped(c, X, 0, 6, C, 50000, 6, 2);
    CHECK(b.truncated == 0);
    CHECK(a.low <= b.high);
    CHECK(b.low <= a.high);
  }

  TEST_CASE("absorbing Y with horizon n has no truncation") {
    const FiniteChain c(mat({{1, 0}, {0.5, 0.5}}));
    const auto Y = exit_set(c, {0});
    const auto e = mc_prob_stopped(c, Y, 0, 5, simplex(1), 1000, 5, 3);
    CHECK(e.truncated_mass == 0.0);
    CHECK(e.point == 1.0);
    CHECK_THROWS_AS(mc_prob_stopped(c, Y, 0, 5, simplex(1), 1000, 4, 3), InvalidArgument);
  }

  TEST_CASE("reflected walk desk run") {
    const LazyChain walk = reflected_walk(0.3);
    const auto Y = exit_set(walk, {0, 1, 2, 3, 4});
    const Polytope C = ball_linf(Vector::Constant(5, 0.2), 0.2);
    const auto a = mc_prob_stopped(walk, Y, 0, 10, C, 100000, 10000, 11);
    const auto b = mc_prob_stopped(walk, Y, 0, 10, C, 100000, 10000, 12);
    CHECK(a.truncated_mass < 1e-3);
    CHECK(a.low <= b.high);
    CHECK(b.low <= a.high);
  }

  TEST_CASE("brackets contain exact probabilities") {
    int instances = 0;
    for (std::uint64_t seed = 0; instances < 5; ++seed) {
      const auto inst = random_instance(seed, {2, 4, 2, true, 0.3, 2});
      if (enumerate_vertices(inst.C).empty()) continue;
      ++instances;
      const std::size_t n = 4;
      const auto rep = exact_prob_stopped(inst.chain, inst.Y, n, inst.C);
      const State x = inst.Y.Y_tilde.back();
      int covered = 0;
      for (std::uint64_t rep_seed = 0; rep_seed < 100; ++rep_seed) {
        const auto e = mc_prob_stopped(inst.chain, inst.Y, x, n, inst.C, 2000, 200, rep_seed);
        if (rep.at(x) >= e.low - 1e-12 && rep.at(x) <= e.high + 1e-12) ++covered;
      }
      CHECK(covered >= 90);
    }
  }

  TEST_CASE("first-n-visit histograms match the exact DP") {
    const FiniteChain c(mat({{.3, .2, .5, 0}, {.1, .4, .2, .3}, {.6, .1, .1, .2}, {.2, .3, .4, .1}}));
    const auto Y = exit_set(c, {0, 1});
    const std::size_t n = 3, samples = 100000;
    std::map<std::vector<int>, int> freq;
    for (std::uint64_t s = 0; s < samples; ++s) {
      const Path p = simulate(c, 2, 200, s);
      const auto m = stopped_measure(p, Y, n);
      REQUIRE(m.has_value());
      freq[{static_cast<int>(std::lround((*m)[0] * n)), static_cast<int>(std::lround((*m)[1] * n))}]++;
    }
    for (int k = 0; k <= static_cast<int>(n); ++k) {
      const Vector point = vec({static_cast<double>(k) / n, static_cast<double>(static_cast<int>(n) - k) / n});
      const double p = exact_prob_stopped(c, Y, n, ball_linf(point, 0.0)).at(2);
      const double f = static_cast<double>(freq[{k, static_cast<int>(n) - k}]) / samples;
      const double sigma = std::sqrt(p * (1 - p) / samples);
      CHECK(std::abs(f - p) <= 4 * sigma + 1e-12);
    }
  }

  TEST_CASE("finite witness bounds") {
    const FiniteChain c(mat({{0, .5, .5}, {.5, .5, 0}, {1, 0, 0}}));
    const auto Y = exit_set(c, {0, 1});
    const Polytope C = ball_linf(vec({0.5, 0.5}), 0.1);
    const auto one = witness_bound(c, Y, Vector::Ones(3), C, 5);
    CHECK(one.bound == 1.0);
    CHECK_FALSE(one.informative);
    CHECK_THROWS_AS(witness_bound(c, Y, vec({4, 1, 2}), C, 5), CertificateRefused);
    try {
      (void)witness_bound(c, Y, vec({4, 1, 2}), C, 5);
    } catch (const CertificateRefused& e) {
      REQUIRE(e.violations().size() == 1);
      CHECK(e.violations()[0].state == 2);
    }
    const auto poor = witness_bound(c, Y, vec({0.2, 1, 1}), C, 3);
    CHECK(poor.exponent < 0.0);
    CHECK(poor.bound > 1.0);
    CHECK_FALSE(poor.informative);
  }

  TEST_CASE("witness soundness on random finite instances") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const auto inst = random_instance(seed, {2, 4, 2, false, 0.3, 2});
      if (enumerate_vertices(inst.C).empty()) continue;
      Rng rng(seed);
      const Vector u = random_superharmonic(inst.chain, inst.Y, rng, 3.0);
      const auto inf = infimum_rate_over_C(inst.chain, inst.Y, inst.C, RateMode::constrained);
      for (std::size_t n : {2, 5, 9}) {
        const auto wb = witness_bound(inst.chain, inst.Y, u, inst.C, n, 1e-10);
        const double theorem_rhs = inf.value.is_finite() ? std::exp(-static_cast<double>(n) * inf.value.value()) : 0.0;
        CHECK(wb.bound >= theorem_rhs - 1e-9);
        CHECK(exact_prob_stopped(inst.chain, inst.Y, n, inst.C).infimum <= wb.bound + 1e-9);
      }
    }
  }

  TEST_CASE("lazy witness checks") {
    const LazyChain walk = reflected_walk(0.3);
    const auto Y = exit_set(walk, {0, 1, 2, 3, 4});
    const Witness good = geometric_witness(1.5, 10);
    CHECK(superharmonic_check(walk, Y, good).empty());
    CHECK(superharmonic_check(walk, Y, geometric_witness(3.0, 10)).size() > 0);

    Witness bad_tail = good;
    bad_tail.tail_constant = 3.0 * good.values.back();
    const auto v = superharmonic_check(walk, Y, bad_tail);
    REQUIRE_FALSE(v.empty());
    CHECK(v.front().state == 10);

    const Polytope C = simplex(5);
    const auto wb = witness_bound(walk, Y, good, C, 4);
    // Over the whole simplex the exponent is the smallest log-ratio, found at y = 0.
    CHECK(wb.exponent == doctest::Approx(std::log(1.0 / (0.7 + 0.3 * 1.5))).epsilon(1e-12));

    const Polytope upper = with(5, {{vec({1, 1, 0, 0, 0}), 0.0}});
    const auto informative = witness_bound(walk, Y, good, upper, 4);
    CHECK(informative.informative);
    CHECK(informative.exponent == doctest::Approx(-std::log(0.3 * 1.5 + 0.7 / 1.5)).epsilon(1e-12));

    Witness narrow = geometric_witness(1.5, 4);
    CHECK_THROWS_AS(witness_bound(walk, Y, narrow, C, 4), InvalidArgument);
    CHECK_THROWS_AS(witness_bound(walk, Y, bad_tail, C, 4), CertificateRefused);
    Witness negative = good;
    negative.values[3] = -1.0;
    CHECK_THROWS_AS(superharmonic_check(walk, Y, negative), InvalidArgument);
  }
}
