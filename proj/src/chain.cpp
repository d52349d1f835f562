#include "dvcert/chain.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

namespace dvcert {

namespace {

constexpr double kRowTol = 1e-12;

std::vector<std::string> default_labels(std::size_t d) {
  std::vector<std::string> labels;
  labels.reserve(d);
  for (std::size_t i = 0; i < d; ++i) labels.push_back(std::to_string(i));
  return labels;
}

State pick(const std::vector<State>& support, const std::vector<double>& cumulative, double u) {
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) return support.back();
  return support[static_cast<std::size_t>(it - cumulative.begin())];
}

std::vector<State> sorted_unique(std::vector<State> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// States from which `targets` is reachable in zero or more steps.
std::vector<bool> can_reach(const FiniteChain& chain, const std::vector<bool>& targets) {
  const std::size_t d = chain.size();
  std::vector<std::vector<State>> preds(d);
  for (std::size_t x = 0; x < d; ++x)
    for (State z : chain.successors(static_cast<State>(x))) preds[z].push_back(static_cast<State>(x));
  std::vector<bool> seen = targets;
  std::deque<State> queue;
  for (std::size_t x = 0; x < d; ++x)
    if (targets[x]) queue.push_back(static_cast<State>(x));
  while (!queue.empty()) {
    const State z = queue.front();
    queue.pop_front();
    for (State w : preds[z])
      if (!seen[w]) {
        seen[w] = true;
        queue.push_back(w);
      }
  }
  return seen;
}

}  // namespace

FiniteChain::FiniteChain(const Matrix& transition) : FiniteChain(default_labels(transition.rows()), transition) {}

FiniteChain::FiniteChain(std::vector<std::string> labels, Matrix transition)
    : labels_(std::move(labels)), transition_(std::move(transition)) {
  const auto d = static_cast<std::size_t>(transition_.rows());
  if (d == 0) throw InvalidArgument("chain needs at least one state");
  if (transition_.cols() != transition_.rows()) throw InvalidArgument("transition matrix must be square");
  if (labels_.size() != d) throw InvalidArgument("label count does not match transition matrix");
  successors_.resize(d);
  cumulative_.resize(d);
  for (std::size_t x = 0; x < d; ++x) {
    double sum = 0.0;
    for (std::size_t z = 0; z < d; ++z) {
      const double p = transition_(x, z);
      if (!(p >= 0.0 && p <= 1.0)) {
        std::ostringstream msg;
        msg << "transition entry (" << x << "," << z << ") = " << p << " outside [0,1]";
        throw InvalidArgument(msg.str());
      }
      if (p > 0.0) {
        sum += p;
        successors_[x].push_back(static_cast<State>(z));
        cumulative_[x].push_back(sum);
      }
    }
    if (std::abs(sum - 1.0) > kRowTol) {
      std::ostringstream msg;
      msg << "row " << x << " sums to " << sum;
      throw InvalidArgument(msg.str());
    }
  }
}

State FiniteChain::sample_next(State s, Rng& rng) const {
  const auto& cum = cumulative_[s];
  return pick(successors_[s], cum, rng.uniform() * cum.back());
}

std::vector<Transition> LazyChain::transitions(State s) const {
  std::vector<Transition> out;
  step(s, out);
  return out;
}

State LazyChain::sample_next(State s, Rng& rng, std::vector<Transition>& scratch) const {
  scratch.clear();
  step(s, scratch);
  double u = rng.uniform();
  for (const auto& t : scratch) {
    if (u < t.prob) return t.to;
    u -= t.prob;
  }
  for (auto it = scratch.rbegin(); it != scratch.rend(); ++it)
    if (it->prob > 0.0) return it->to;
  return s;
}

void LazyChain::validate_at(State s) const {
  auto out = transitions(s);
  double sum = 0.0;
  for (const auto& t : out) {
    if (!(t.prob >= 0.0)) throw InvalidArgument("negative step probability at state " + std::to_string(s));
    if (std::llabs(t.to - s) > jump_bound)
      throw InvalidArgument("jump from " + std::to_string(s) + " exceeds jump_bound");
    if (!valid_state(t.to)) throw InvalidArgument("step leaves the state space at " + std::to_string(s));
    sum += t.prob;
  }
  if (std::abs(sum - 1.0) > kRowTol) throw InvalidArgument("step law at " + std::to_string(s) + " does not sum to 1");
}

LazyChain reflected_walk(double p_up, std::optional<State> cap) {
  if (!(p_up > 0.0 && p_up < 1.0)) throw InvalidArgument("p_up must lie in (0,1)");
  if (cap && *cap < 1) throw InvalidArgument("cap must be at least 1");
  LazyChain chain;
  chain.family = "reflected_walk";
  chain.jump_bound = 1;
  chain.min_state = 0;
  chain.step = [p_up, cap](State s, std::vector<Transition>& out) {
    const double q = 1.0 - p_up;
    const bool at_floor = s <= 0;
    const bool at_cap = cap && s >= *cap;
    if (at_floor) {
      out.push_back({0, q});
      out.push_back({1, p_up});
    } else if (at_cap) {
      out.push_back({s - 1, q});
      out.push_back({s, p_up});
    } else {
      out.push_back({s - 1, q});
      out.push_back({s + 1, p_up});
    }
  };
  return chain;
}

FiniteChain reflected_walk_finite(double p_up, State cap) {
  auto lazy = reflected_walk(p_up, cap);
  const auto d = static_cast<Eigen::Index>(cap + 1);
  Matrix P = Matrix::Zero(d, d);
  for (State s = 0; s <= cap; ++s)
    for (const auto& t : lazy.transitions(s)) P(s, t.to) += t.prob;
  return FiniteChain(P);
}

bool SubsetSpec::in_Y(State s) const { return std::binary_search(Y.begin(), Y.end(), s); }

bool SubsetSpec::in_Y_tilde(State s) const { return std::binary_search(Y_tilde.begin(), Y_tilde.end(), s); }

std::ptrdiff_t SubsetSpec::index_in_Y(State s) const {
  auto it = std::lower_bound(Y.begin(), Y.end(), s);
  if (it == Y.end() || *it != s) return -1;
  return it - Y.begin();
}

Vector pi_apply(const FiniteChain& chain, const Vector& u) {
  if (static_cast<std::size_t>(u.size()) != chain.size()) throw InvalidArgument("pi_apply: dimension mismatch");
  if ((u.array() <= 0.0).any()) throw InvalidArgument("pi_apply: u must be strictly positive");
  return chain.transition() * u;
}

Path simulate(const FiniteChain& chain, State x, std::size_t steps, std::uint64_t seed) {
  if (!chain.valid_state(x)) throw InvalidArgument("simulate: invalid start state");
  Rng rng(seed);
  Path path;
  path.seed = seed;
  path.states.reserve(steps + 1);
  path.states.push_back(x);
  for (std::size_t k = 0; k < steps; ++k) path.states.push_back(chain.sample_next(path.states.back(), rng));
  return path;
}

Path simulate(const LazyChain& chain, State x, std::size_t steps, std::uint64_t seed) {
  if (!chain.valid_state(x)) throw InvalidArgument("simulate: invalid start state");
  Rng rng(seed);
  std::vector<Transition> scratch;
  Path path;
  path.seed = seed;
  path.states.reserve(steps + 1);
  path.states.push_back(x);
  for (std::size_t k = 0; k < steps; ++k) path.states.push_back(chain.sample_next(path.states.back(), rng, scratch));
  return path;
}

std::vector<std::size_t> local_time(const Path& path, std::size_t n, std::size_t num_states) {
  if (n == 0) throw InvalidArgument("local_time: n must be at least 1");
  if (path.size() < n) throw InvalidArgument("local_time: path too short");
  std::vector<std::size_t> counts(num_states, 0);
  for (std::size_t k = 0; k < n; ++k) {
    const State s = path.states[k];
    if (s < 0 || static_cast<std::size_t>(s) >= num_states) throw InvalidArgument("local_time: state out of range");
    ++counts[s];
  }
  return counts;
}

std::size_t local_time(const Path& path, std::size_t n, const SubsetSpec& Y) {
  if (n == 0) throw InvalidArgument("local_time: n must be at least 1");
  if (path.size() < n) throw InvalidArgument("local_time: path too short");
  return static_cast<std::size_t>(
      std::count_if(path.states.begin(), path.states.begin() + static_cast<std::ptrdiff_t>(n),
                    [&](State s) { return Y.in_Y(s); }));
}

std::optional<std::size_t> stopping_time_tau(const Path& path, const SubsetSpec& Y, std::size_t n) {
  if (n == 0) throw InvalidArgument("stopping_time_tau: n must be at least 1");
  std::size_t visits = 0;
  for (std::size_t k = 0; k < path.size(); ++k) {
    if (Y.in_Y(path.states[k]) && ++visits == n) return k + 1;
  }
  return std::nullopt;
}

std::optional<Vector> stopped_measure(const Path& path, const SubsetSpec& Y, std::size_t n) {
  if (n == 0) throw InvalidArgument("stopped_measure: n must be at least 1");
  Vector hist = Vector::Zero(static_cast<Eigen::Index>(Y.size()));
  std::size_t visits = 0;
  for (State s : path.states) {
    const auto idx = Y.index_in_Y(s);
    if (idx < 0) continue;
    hist[idx] += 1.0;
    if (++visits == n) return Vector(hist / static_cast<double>(n));
  }
  return std::nullopt;
}

SubsetSpec exit_set(const FiniteChain& chain, std::vector<State> Y) {
  if (Y.empty()) throw InvalidArgument("exit_set: Y must be nonempty");
  for (State y : Y)
    if (!chain.valid_state(y)) throw InvalidArgument("exit_set: invalid state in Y");
  SubsetSpec spec;
  spec.Y = sorted_unique(std::move(Y));
  std::vector<State> tilde = spec.Y;
  for (State y : spec.Y)
    for (State z : chain.successors(y)) tilde.push_back(z);
  spec.Y_tilde = sorted_unique(std::move(tilde));
  return spec;
}

SubsetSpec exit_set(const LazyChain& chain, std::vector<State> Y) {
  if (Y.empty()) throw InvalidArgument("exit_set: Y must be nonempty");
  SubsetSpec spec;
  spec.Y = sorted_unique(std::move(Y));
  std::vector<State> tilde = spec.Y;
  for (State y : spec.Y) {
    if (!chain.valid_state(y)) throw InvalidArgument("exit_set: invalid state in Y");
    for (const auto& t : chain.transitions(y))
      if (t.prob > 0.0) tilde.push_back(t.to);
  }
  spec.Y_tilde = sorted_unique(std::move(tilde));
  return spec;
}

ReturnKernel return_kernel(const FiniteChain& chain, const SubsetSpec& Y) {
  const std::size_t d = chain.size();
  const auto dy = static_cast<Eigen::Index>(Y.size());
  if (dy == 0) throw InvalidArgument("return_kernel: Y must be nonempty");
  const Matrix& P = chain.transition();

  std::vector<bool> in_y(d, false);
  for (State y : Y.Y) {
    if (!chain.valid_state(y)) throw InvalidArgument("return_kernel: invalid state in Y");
    in_y[y] = true;
  }

  // Outside states that can reach Y; the rest never return and carry their
  // mass to escape.
  const auto reach = can_reach(chain, in_y);
  std::vector<State> transient;
  for (std::size_t z = 0; z < d; ++z)
    if (!in_y[z] && reach[z]) transient.push_back(static_cast<State>(z));
  const auto dt = static_cast<Eigen::Index>(transient.size());

  Matrix H = Matrix::Zero(dt, dy);
  if (dt > 0) {
    Matrix A = Matrix::Identity(dt, dt);
    Matrix B(dt, dy);
    for (Eigen::Index i = 0; i < dt; ++i) {
      for (Eigen::Index j = 0; j < dt; ++j) A(i, j) -= P(transient[i], transient[j]);
      for (Eigen::Index j = 0; j < dy; ++j) B(i, j) = P(transient[i], Y.Y[j]);
    }
    Eigen::PartialPivLU<Matrix> lu(A);
    H = lu.solve(B);
    const double residual = (A * H - B).lpNorm<Eigen::Infinity>();
    if (!(residual <= 1e-10)) throw NumericalError("return_kernel: first-entry solve residual too large");
    H = H.cwiseMax(0.0);
  }

  ReturnKernel kernel;
  kernel.R.resize(dy, dy);
  for (Eigen::Index i = 0; i < dy; ++i)
    for (Eigen::Index j = 0; j < dy; ++j) {
      double r = P(Y.Y[i], Y.Y[j]);
      for (Eigen::Index t = 0; t < dt; ++t) r += P(Y.Y[i], transient[t]) * H(t, j);
      kernel.R(i, j) = r;
    }
  kernel.escape.resize(dy);
  for (Eigen::Index i = 0; i < dy; ++i) {
    const double e = 1.0 - kernel.R.row(i).sum();
    kernel.escape[i] = std::clamp(std::abs(e) < 1e-14 ? 0.0 : e, 0.0, 1.0);
  }
  kernel.entry = Matrix::Zero(static_cast<Eigen::Index>(d), dy);
  for (Eigen::Index i = 0; i < dy; ++i) kernel.entry(Y.Y[i], i) = 1.0;
  for (Eigen::Index t = 0; t < dt; ++t) kernel.entry.row(transient[t]) = H.row(t);
  return kernel;
}

bool is_irreducible(const FiniteChain& chain) {
  const std::size_t d = chain.size();
  std::vector<bool> target(d, false);
  target[0] = true;
  const auto to0 = can_reach(chain, target);
  if (std::find(to0.begin(), to0.end(), false) != to0.end()) return false;
  std::vector<bool> seen(d, false);
  std::deque<State> queue{0};
  seen[0] = true;
  while (!queue.empty()) {
    const State s = queue.front();
    queue.pop_front();
    for (State z : chain.successors(s))
      if (!seen[z]) {
        seen[z] = true;
        queue.push_back(z);
      }
  }
  return std::find(seen.begin(), seen.end(), false) == seen.end();
}

Vector stationary_distribution(const FiniteChain& chain) {
  if (!is_irreducible(chain)) throw InvalidArgument("stationary_distribution: chain is reducible");
  const auto d = static_cast<Eigen::Index>(chain.size());
  const Matrix& P = chain.transition();
  Matrix A = P.transpose() - Matrix::Identity(d, d);
  A.row(d - 1).setOnes();
  Vector b = Vector::Zero(d);
  b[d - 1] = 1.0;
  Eigen::PartialPivLU<Matrix> lu(A);
  Vector mu = lu.solve(b);
  mu += lu.solve(b - A * mu);  // one step of iterative refinement
  mu = mu.cwiseMax(0.0);
  mu /= mu.sum();
  const double residual = (P.transpose() * mu - mu).lpNorm<Eigen::Infinity>();
  if (!(residual <= 1e-12)) throw NumericalError("stationary_distribution: balance residual too large");
  return mu;
}

FiniteChain induced_chain(const FiniteChain& chain, const SubsetSpec& Y) {
  const auto kernel = return_kernel(chain, Y);
  if (kernel.escape.maxCoeff() > 1e-12) throw InvalidArgument("induced_chain: return kernel is defective");
  Matrix R = kernel.R;
  for (Eigen::Index i = 0; i < R.rows(); ++i) R.row(i) /= R.row(i).sum();
  std::vector<std::string> labels;
  for (State y : Y.Y) labels.push_back(chain.labels()[y]);
  return FiniteChain(std::move(labels), std::move(R));
}

}  // namespace dvcert
