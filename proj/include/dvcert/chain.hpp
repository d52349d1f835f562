#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dvcert/core.hpp"
#include "dvcert/rng.hpp"

namespace dvcert {

/// Finite Markov chain: ordered state labels plus a row-stochastic matrix.
/// Row y of the transition matrix is P(y, .), so (P u)(x) = E_x[u(X_1)].
class FiniteChain {
 public:
  FiniteChain(std::vector<std::string> labels, Matrix transition);
  explicit FiniteChain(const Matrix& transition);

  [[nodiscard]] std::size_t size() const { return labels_.size(); }
  [[nodiscard]] const Matrix& transition() const { return transition_; }
  [[nodiscard]] double prob(State from, State to) const { return transition_(from, to); }
  [[nodiscard]] const std::vector<std::string>& labels() const { return labels_; }
  [[nodiscard]] bool valid_state(State s) const { return s >= 0 && static_cast<std::size_t>(s) < size(); }

  /// Successors with positive probability, in increasing index order.
  [[nodiscard]] const std::vector<State>& successors(State s) const { return successors_[s]; }

  /// Draws X_1 given X_0 = s.
  State sample_next(State s, Rng& rng) const;

 private:
  std::vector<std::string> labels_;
  Matrix transition_;
  std::vector<std::vector<State>> successors_;
  std::vector<std::vector<double>> cumulative_;
};

struct Transition {
  State to;
  double prob;
};

/// Countable-state chain with bounded jumps, described by a step function.
/// The step function fills `out` with the law of X_1 given X_0 = state.
struct LazyChain {
  using StepFn = std::function<void(State, std::vector<Transition>&)>;

  std::string family;
  StepFn step;
  std::int64_t jump_bound = 1;
  State min_state = 0;  // smallest valid state

  [[nodiscard]] bool valid_state(State s) const { return s >= min_state; }
  [[nodiscard]] std::vector<Transition> transitions(State s) const;
  State sample_next(State s, Rng& rng, std::vector<Transition>& scratch) const;

  /// Checks the step-law invariants at one state; throws InvalidArgument.
  void validate_at(State s) const;
};

/// Random walk on {0, 1, ...} (or {0..cap}) moving up with probability p_up
/// and down otherwise; at 0 a down move stays put, as does an up move at cap.
LazyChain reflected_walk(double p_up, std::optional<State> cap = std::nullopt);

/// Same walk materialized as a finite chain on {0..cap}.
FiniteChain reflected_walk_finite(double p_up, State cap);

/// The window Y together with its one-step exit set.
struct SubsetSpec {
  std::vector<State> Y;        // sorted, unique
  std::vector<State> Y_tilde;  // sorted, unique, contains Y

  [[nodiscard]] bool in_Y(State s) const;
  [[nodiscard]] bool in_Y_tilde(State s) const;
  /// Position of s inside Y; -1 when s is not in Y.
  [[nodiscard]] std::ptrdiff_t index_in_Y(State s) const;
  [[nodiscard]] std::size_t size() const { return Y.size(); }
};

struct Path {
  std::vector<State> states;
  std::optional<std::uint64_t> seed;

  [[nodiscard]] std::size_t size() const { return states.size(); }
};

/// Law of successive visits to Y. Row y of R is the (possibly defective) law
/// of the next Y-visit after a visit at y; escape(y) is the missing mass.
/// Row x of entry is the law of the first Y-visit at or after time 0 from x.
struct ReturnKernel {
  Matrix R;       // |Y| x |Y|
  Vector escape;  // |Y|
  Matrix entry;   // d x |Y|
};

Vector pi_apply(const FiniteChain& chain, const Vector& u);

Path simulate(const FiniteChain& chain, State x, std::size_t steps, std::uint64_t seed);
Path simulate(const LazyChain& chain, State x, std::size_t steps, std::uint64_t seed);

/// Visit counts of X_0..X_{n-1} for every state of a finite chain.
std::vector<std::size_t> local_time(const Path& path, std::size_t n, std::size_t num_states);
/// Number of k in [0, n-1] with X_k in Y.
std::size_t local_time(const Path& path, std::size_t n, const SubsetSpec& Y);

/// Smallest k >= 1 such that exactly n of X_0..X_{k-1} lie in Y.
std::optional<std::size_t> stopping_time_tau(const Path& path, const SubsetSpec& Y, std::size_t n);

/// Histogram of the first n Y-visits divided by n, indexed like Y.Y.
std::optional<Vector> stopped_measure(const Path& path, const SubsetSpec& Y, std::size_t n);

SubsetSpec exit_set(const FiniteChain& chain, std::vector<State> Y);
SubsetSpec exit_set(const LazyChain& chain, std::vector<State> Y);

ReturnKernel return_kernel(const FiniteChain& chain, const SubsetSpec& Y);

/// True when every state reaches every other state.
bool is_irreducible(const FiniteChain& chain);

Vector stationary_distribution(const FiniteChain& chain);

/// Sub-chain view used by the exact DP: the return kernel as a finite chain on
/// Y when it is stochastic.
FiniteChain induced_chain(const FiniteChain& chain, const SubsetSpec& Y);

}  // namespace dvcert
