#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dvcert/chain.hpp"
#include "dvcert/convexset.hpp"

namespace dvcert {

inline constexpr std::size_t kExactMaxStates = 6;
inline constexpr std::size_t kExactMaxVisits = 14;
inline constexpr double kEnumerationMaxPaths = 1e6;

/// Per-start probabilities of an empirical-measure event and their infimum.
struct ProbabilityReport {
  std::size_t n = 0;
  std::vector<State> starts;
  std::vector<double> probability;
  std::vector<double> escape_mass;  // mass of runs that never complete n visits
  State argmin_start = 0;
  double infimum = 0.0;

  [[nodiscard]] double at(State x) const;
};

/// P_x(L_n / n in C) for every start x, by dynamic programming over
/// (visit-count vector, current state). Requires d <= 6 and n <= 14.
ProbabilityReport exact_prob_compact(const FiniteChain& chain, std::size_t n, const Polytope& C);

/// P_x(L_n^Y in C) for every start x in Y_tilde, via the return kernel.
/// Requires |Y| <= 6 and n <= 14.
ProbabilityReport exact_prob_stopped(const FiniteChain& chain, const SubsetSpec& Y, std::size_t n, const Polytope& C);

using PathFunctional = std::function<double(std::span<const State>)>;

/// E_x[f(X_0..X_t)] by summing over every path of length t. Requires d^t <= 1e6.
double enumerate_paths_expectation(const FiniteChain& chain, State x, std::size_t horizon, const PathFunctional& f);

/// max over t <= horizon of |E_x[M_{t ^ T}] - u(x)| where
/// M_t = prod_{k<t} (u / Pu)(X_k) * u(X_t) and T = tau(Y, n) - 1.
/// With n unset the process is not stopped.
double martingale_check(const FiniteChain& chain, const SubsetSpec& Y, const Vector& u, State x, std::size_t horizon,
                        std::optional<std::size_t> n);

/// CSV rows start_state,probability,escape_mass.
std::string to_csv(const ProbabilityReport& report, const std::vector<std::string>& labels);

}  // namespace dvcert
