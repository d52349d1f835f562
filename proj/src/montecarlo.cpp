#include "dvcert/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace dvcert {

namespace {

struct Tally {
  std::size_t successes = 0;
  std::size_t truncated = 0;
};

// Runs sample(i, rng) for i in [0, samples) across `jobs` threads. Stream i is
// always Rng(seed).split(i), so the merged tally does not depend on jobs.
template <typename Sample>
Tally run_samples(std::size_t samples, std::uint64_t seed, unsigned jobs, const Sample& sample) {
  const Rng root(seed);
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(samples, 1))));
  std::vector<Tally> parts(jobs);
  auto block = [&](unsigned j) {
    const std::size_t begin = samples * j / jobs;
    const std::size_t end = samples * (j + 1) / jobs;
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng = root.split(i);
      switch (sample(rng)) {
        case 1:
          ++parts[j].successes;
          break;
        case 2:
          ++parts[j].truncated;
          break;
        default:
          break;
      }
    }
  };
  if (jobs == 1) {
    block(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(block, j);
    for (auto& t : pool) t.join();
  }
  Tally total;
  for (const auto& p : parts) {
    total.successes += p.successes;
    total.truncated += p.truncated;
  }
  return total;
}

McEstimate summarize(const Tally& t, std::size_t samples, std::uint64_t seed) {
  McEstimate e;
  e.samples = samples;
  e.successes = t.successes;
  e.truncated = t.truncated;
  e.seed = seed;
  e.point = static_cast<double>(t.successes) / static_cast<double>(samples);
  e.truncated_mass = static_cast<double>(t.truncated) / static_cast<double>(samples);
  const auto [lo, hi] = wilson_interval(t.successes, samples);
  e.low = std::min(lo, e.point);
  e.high = std::min(1.0, std::max(hi, e.point) + e.truncated_mass);
  return e;
}

// Outcome codes: 0 failure, 1 success, 2 truncated before tau(Y, n).
template <typename Next>
int stopped_run(const SubsetSpec& Y, State x, std::size_t n, const Polytope& C, std::size_t horizon, Vector& counts,
                Next&& next) {
  counts.setZero();
  std::size_t visits = 0;
  State s = x;
  for (std::size_t k = 0; k < horizon; ++k) {
    const auto idx = Y.index_in_Y(s);
    if (idx >= 0) {
      counts[idx] += 1.0;
      if (++visits == n) return member(C, counts / static_cast<double>(n), 1e-12) ? 1 : 0;
    }
    if (k + 1 < horizon) s = next(s);
  }
  return 2;
}

void check_common(std::size_t samples, std::size_t n, std::size_t horizon, const SubsetSpec& Y, const Polytope& C) {
  if (samples == 0) throw InvalidArgument("samples must be at least 1");
  if (n == 0) throw InvalidArgument("visit budget n must be at least 1");
  if (horizon < n) throw InvalidArgument("horizon must be at least n");
  if (C.dim != Y.size()) throw InvalidArgument("polytope dimension must equal |Y|");
}

}  // namespace

std::pair<double, double> wilson_interval(std::size_t successes, std::size_t samples, double z) {
  if (samples == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(samples);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  // The limits are exactly 0 and 1 at the ends; the closed form only reaches them up to rounding.
  const double lo = successes == 0 ? 0.0 : std::max(0.0, center - half);
  const double hi = successes == samples ? 1.0 : std::min(1.0, center + half);
  return {lo, hi};
}

McEstimate mc_prob_compact(const FiniteChain& chain, State x, std::size_t n, const Polytope& C, std::size_t samples,
                           std::uint64_t seed, unsigned jobs) {
  if (!chain.valid_state(x)) throw InvalidArgument("mc_prob_compact: invalid start");
  if (samples == 0) throw InvalidArgument("samples must be at least 1");
  if (n == 0) throw InvalidArgument("visit budget n must be at least 1");
  if (C.dim != chain.size()) throw InvalidArgument("polytope dimension must equal d");
  const auto d = static_cast<Eigen::Index>(chain.size());
  const auto tally = run_samples(samples, seed, jobs, [&](Rng& rng) {
    Vector counts = Vector::Zero(d);
    State s = x;
    for (std::size_t k = 0; k < n; ++k) {
      counts[s] += 1.0;
      if (k + 1 < n) s = chain.sample_next(s, rng);
    }
    return member(C, counts / static_cast<double>(n), 1e-12) ? 1 : 0;
  });
  return summarize(tally, samples, seed);
}

McEstimate mc_prob_stopped(const FiniteChain& chain, const SubsetSpec& Y, State x, std::size_t n, const Polytope& C,
                           std::size_t samples, std::size_t horizon, std::uint64_t seed, unsigned jobs) {
  if (!chain.valid_state(x)) throw InvalidArgument("mc_prob_stopped: invalid start");
  check_common(samples, n, horizon, Y, C);
  const auto tally = run_samples(samples, seed, jobs, [&](Rng& rng) {
    Vector counts(static_cast<Eigen::Index>(Y.size()));
    return stopped_run(Y, x, n, C, horizon, counts, [&](State s) { return chain.sample_next(s, rng); });
  });
  return summarize(tally, samples, seed);
}

McEstimate mc_prob_stopped(const LazyChain& chain, const SubsetSpec& Y, State x, std::size_t n, const Polytope& C,
                           std::size_t samples, std::size_t horizon, std::uint64_t seed, unsigned jobs) {
  if (!chain.valid_state(x)) throw InvalidArgument("mc_prob_stopped: invalid start");
  check_common(samples, n, horizon, Y, C);
  const auto tally = run_samples(samples, seed, jobs, [&](Rng& rng) {
    Vector counts(static_cast<Eigen::Index>(Y.size()));
    std::vector<Transition> scratch;
    scratch.reserve(static_cast<std::size_t>(2 * chain.jump_bound + 1));
    return stopped_run(Y, x, n, C, horizon, counts, [&](State s) { return chain.sample_next(s, rng, scratch); });
  });
  return summarize(tally, samples, seed);
}

void Witness::validate() const {
  if (hi < lo) throw InvalidArgument("witness window is empty");
  if (values.size() != static_cast<std::size_t>(hi - lo + 1))
    throw InvalidArgument("witness needs one value per window state");
  for (double v : values)
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("witness values must be positive and finite");
  if (!(tail_constant > 0.0) || !std::isfinite(tail_constant))
    throw InvalidArgument("witness tail constant must be positive and finite");
}

std::vector<Violation> superharmonic_check(const LazyChain& chain, const SubsetSpec& Y, const Witness& u, double tol) {
  u.validate();
  std::vector<Violation> out;
  const State from = std::max(chain.min_state, u.lo - chain.jump_bound);
  const State to = u.hi + chain.jump_bound;
  std::vector<Transition> step;
  for (State z = from; z <= to; ++z) {
    if (Y.in_Y(z)) continue;
    step.clear();
    chain.step(z, step);
    double pu = 0.0;
    for (const auto& t : step) pu += t.prob * u(t.to);
    const double deficit = pu - u(z);
    if (deficit > tol) out.push_back({z, deficit});
  }
  return out;
}

namespace {

WitnessBound bound_from_log_ratio(const Polytope& C, const Vector& log_ratio, std::size_t n) {
  if (n == 0) throw InvalidArgument("visit budget n must be at least 1");
  const auto lp = linear_minimize(C, log_ratio);
  if (!lp) throw InvalidArgument("witness_bound: C is empty");
  WitnessBound out;
  out.exponent = lp->value;
  out.mu_star = lp->mu;
  out.bound = std::exp(-static_cast<double>(n) * out.exponent);
  out.informative = out.exponent > 0.0;
  return out;
}

}  // namespace

WitnessBound witness_bound(const LazyChain& chain, const SubsetSpec& Y, const Witness& u, const Polytope& C,
                           std::size_t n, double tol) {
  u.validate();
  if (C.dim != Y.size()) throw InvalidArgument("polytope dimension must equal |Y|");
  const State low_needed = std::max(chain.min_state, Y.Y_tilde.front() - chain.jump_bound);
  if (u.lo > low_needed || u.hi < Y.Y_tilde.back() + chain.jump_bound)
    throw InvalidArgument("witness window must cover Y_tilde plus one jump");
  auto violations = superharmonic_check(chain, Y, u, tol);
  if (!violations.empty()) throw CertificateRefused(std::move(violations));
  Vector log_ratio(static_cast<Eigen::Index>(Y.size()));
  std::vector<Transition> step;
  for (std::size_t i = 0; i < Y.size(); ++i) {
    step.clear();
    chain.step(Y.Y[i], step);
    double pu = 0.0;
    for (const auto& t : step) pu += t.prob * u(t.to);
    log_ratio[static_cast<Eigen::Index>(i)] = std::log(u(Y.Y[i]) / pu);
  }
  return bound_from_log_ratio(C, log_ratio, n);
}

WitnessBound witness_bound(const FiniteChain& chain, const SubsetSpec& Y, const Vector& u, const Polytope& C,
                           std::size_t n, double tol) {
  if (C.dim != Y.size()) throw InvalidArgument("polytope dimension must equal |Y|");
  auto violations = superharmonic_check(chain, Y, u, tol);
  if (!violations.empty()) throw CertificateRefused(std::move(violations));
  const Vector pu = pi_apply(chain, u);
  Vector log_ratio(static_cast<Eigen::Index>(Y.size()));
  for (std::size_t i = 0; i < Y.size(); ++i)
    log_ratio[static_cast<Eigen::Index>(i)] = std::log(u[Y.Y[i]] / pu[Y.Y[i]]);
  return bound_from_log_ratio(C, log_ratio, n);
}

}  // namespace dvcert
