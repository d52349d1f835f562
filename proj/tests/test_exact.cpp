#include <doctest.h>

#include "dvcert/exact.hpp"
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
FiniteChain three_state() { return FiniteChain(mat({{0, .5, .5}, {.5, .5, 0}, {1, 0, 0}})); }

}  // namespace

TEST_SUITE("exact") {
  TEST_CASE("compact examples") {
    const auto full = exact_prob_compact(three_state(), 5, simplex(3));
    for (double p : full.probability) CHECK(p == doctest::Approx(1.0).epsilon(1e-14));
    const auto none = exact_prob_compact(three_state(), 5, with(3, {{vec({1, 0, 0}), -1}}));
    for (double p : none.probability) CHECK(p == 0.0);
    const auto rep = exact_prob_compact(iid(), 2, with(2, {{vec({-1, 0}), -0.75}}));
    CHECK(rep.at(0) == 0.5);
    CHECK(rep.at(1) == 0.0);
    CHECK(rep.infimum == 0.0);
    CHECK(rep.argmin_start == 1);
  }

  TEST_CASE("size guards") {
    CHECK_THROWS_AS(exact_prob_compact(iid(), 15, simplex(2)), SizeGuardError);
    CHECK_THROWS_AS(exact_prob_compact(FiniteChain(Matrix::Identity(7, 7)), 2, simplex(7)), SizeGuardError);
    CHECK_THROWS_AS(exact_prob_compact(iid(), 0, simplex(2)), InvalidArgument);
    CHECK_THROWS_AS(enumerate_paths_expectation(three_state(), 0, 13, [](auto) { return 1.0; }), SizeGuardError);
  }

  TEST_CASE("stopped examples") {
    const FiniteChain c = three_state();
    const auto Y = exit_set(c, {0, 1});
    const auto even = exact_prob_stopped(c, Y, 2, ball_linf(vec({0.5, 0.5}), 0.0));
    CHECK(even.starts == std::vector<State>{0, 1, 2});
    CHECK(even.at(0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(even.at(1) == doctest::Approx(0.5).epsilon(1e-14));

    // Every visit to Y = {0} is followed by absorption in 1: escape is total.
    const FiniteChain absorb(mat({{0, 1}, {0, 1}}));
    const auto esc = exact_prob_stopped(absorb, exit_set(absorb, {0}), 1, simplex(1));
    CHECK(esc.at(0) == doctest::Approx(1.0));
    const auto esc2 = exact_prob_stopped(absorb, exit_set(absorb, {0}), 2, simplex(1));
    CHECK(esc2.at(0) == 0.0);
    CHECK(esc2.escape_mass[0] == doctest::Approx(1.0));
  }

  TEST_CASE("stopped with full Y equals compact") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const auto inst = random_instance(seed, {2, 4, 0, false, 0.3, 2});
      for (std::size_t n : {1, 3, 6}) {
        const auto a = exact_prob_compact(inst.chain, n, inst.C);
        const auto b = exact_prob_stopped(inst.chain, inst.Y, n, inst.C);
        for (std::size_t i = 0; i < a.probability.size(); ++i)
          CHECK(std::abs(a.probability[i] - b.probability[i]) <= 1e-12);
      }
    }
  }

  TEST_CASE("compact agrees with brute-force enumeration") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const auto inst = random_instance(seed, {2, 3, 0, false, 0.3, 3});
      for (std::size_t n = 1; n <= 6; ++n) {
        const auto rep = exact_prob_compact(inst.chain, n, inst.C);
        for (State x = 0; x < static_cast<State>(inst.chain.size()); ++x)
          CHECK(std::abs(rep.at(x) - brute_force_compact(inst.chain, x, n, inst.C)) <= 1e-12);
      }
    }
  }

  TEST_CASE("stopped agrees with truncated enumeration") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const auto inst = random_instance(seed, {2, 4, 2, false, 0.4, 2});
      for (std::size_t n = 1; n <= 4; ++n) {
        const auto rep = exact_prob_stopped(inst.chain, inst.Y, n, inst.C);
        for (State x : inst.Y.Y_tilde) {
          const auto [hit, open] = brute_force_stopped(inst.chain, inst.Y, x, n, inst.C, 22);
          CHECK(rep.at(x) >= hit - 1e-10);
          CHECK(rep.at(x) <= hit + open + 1e-10);
        }
      }
    }
  }

  TEST_CASE("stopped agrees exactly when excursions are short") {
    // Outside states lead straight back to Y, so every excursion has length <= 2
    // and 3n steps resolve every path.
    const FiniteChain c(mat({{.3, .2, .5, 0}, {.1, .4, 0, .5}, {.6, .4, 0, 0}, {.5, .5, 0, 0}}));
    const auto Y = exit_set(c, {0, 1});
    const Polytope C = with(2, {{vec({1, -1}), 0.2}});
    for (std::size_t n = 1; n <= 5; ++n) {
      const auto rep = exact_prob_stopped(c, Y, n, C);
      for (State x : Y.Y_tilde) {
        const auto [hit, open] = brute_force_stopped(c, Y, x, n, C, 3 * n + 2);
        CHECK(open == 0.0);
        CHECK(std::abs(rep.at(x) - hit) <= 1e-10);
      }
    }
  }

  TEST_CASE("disjoint partition sums to one") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(seed);
      const FiniteChain c = random_chain(3, rng, false, 0.3);
      // mu(0) <= 1/2 - eps and mu(0) > 1/2, split on a threshold no multiple of 1/n hits.
      const double t = 0.5 + 1.0 / 97.0;
      const Polytope lowC = with(3, {{vec({1, 0, 0}), t}});
      const Polytope highC = with(3, {{vec({-1, 0, 0}), -t}});
      for (std::size_t n : {3, 5, 8}) {
        const auto a = exact_prob_compact(c, n, lowC), b = exact_prob_compact(c, n, highC);
        for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(a.probability[i] + b.probability[i] - 1.0) <= 1e-10);
      }
    }
  }

  TEST_CASE("path expectation examples") {
    const FiniteChain c = three_state();
    CHECK(enumerate_paths_expectation(c, 0, 6, [](auto) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-15));
    const FiniteChain id(Matrix::Identity(3, 3));
    for (State x = 0; x < 3; ++x)
      CHECK(enumerate_paths_expectation(id, x, 4, [](auto p) { return p.back() == 1 ? 1.0 : 0.0; }) ==
            (x == 1 ? 1.0 : 0.0));
    const Vector u = vec({1.5, 0.7, 2.2});
    const Vector pu = pi_apply(c, u);
    for (State x = 0; x < 3; ++x)
      CHECK(enumerate_paths_expectation(c, x, 1, [&](auto p) { return u[p[1]]; }) ==
            doctest::Approx(pu[x]).epsilon(1e-15));
  }

  TEST_CASE("martingale examples") {
    const FiniteChain c = three_state();
    const auto Y = exit_set(c, {0, 1});
    CHECK(martingale_check(c, Y, Vector::Ones(3), 0, 8, 2) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(martingale_check(c, Y, vec({1.3, 0.4, 2.0}), 2, 0, 2) == 0.0);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(seed);
      const FiniteChain r = random_chain(3, rng, false, 0.2);
      const auto Yr = exit_set(r, {static_cast<State>(seed % 3)});
      Vector u(3);
      for (int i = 0; i < 3; ++i) u[i] = 0.2 + 3.0 * rng.uniform();
      for (State x = 0; x < 3; ++x) {
        CHECK(martingale_check(r, Yr, u, x, 8, 2) <= 1e-9);
        CHECK(martingale_check(r, Yr, u, x, 8, std::nullopt) <= 1e-9);
      }
    }
  }

  TEST_CASE("csv") {
    const auto rep = exact_prob_compact(iid(), 2, with(2, {{vec({-1, 0}), -0.75}}));
    const std::string csv = to_csv(rep, {"a", "b"});
    CHECK(csv.rfind("start_state,probability,escape_mass\n", 0) == 0);
    CHECK(csv.find("a,0.5,0\n") != std::string::npos);
    CHECK(csv.find("b,0,0\n") != std::string::npos);
  }
}
