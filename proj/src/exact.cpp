#include "dvcert/exact.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

namespace dvcert {

namespace {

// Neumaier-compensated accumulator.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      carry += (sum - t) + x;
    else
      carry += (x - t) + sum;
    sum = t;
  }
  [[nodiscard]] double value() const { return sum + carry; }
};

struct VisitMass {
  double in_C = 0.0;
  double completed = 0.0;  // mass reaching n visits at all
};

// Runs the visit-count DP for a chain on k states with (sub)stochastic kernel
// K started from `init`. Keys pack the count vector in base n+1 with the
// current state.
VisitMass count_dp(const Matrix& K, const Vector& init, std::size_t n, const Polytope& C) {
  const auto k = static_cast<std::size_t>(K.rows());
  const std::uint64_t base = n + 1;
  std::vector<std::uint64_t> place(k);
  std::uint64_t p = 1;
  for (std::size_t i = 0; i < k; ++i, p *= base) place[i] = p;

  std::vector<std::vector<std::pair<std::size_t, double>>> succ(k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b)
      if (K(a, b) > 0.0) succ[a].emplace_back(b, K(a, b));

  std::unordered_map<std::uint64_t, CompensatedSum> stage;
  for (std::size_t s = 0; s < k; ++s)
    if (init[static_cast<Eigen::Index>(s)] > 0.0) stage[place[s] * k + s].add(init[static_cast<Eigen::Index>(s)]);

  for (std::size_t visit = 1; visit < n; ++visit) {
    std::unordered_map<std::uint64_t, CompensatedSum> next;
    next.reserve(stage.size() * 2);
    for (const auto& [key, acc] : stage) {
      const std::size_t last = key % k;
      const std::uint64_t code = key / k;
      const double mass = acc.value();
      for (const auto& [to, prob] : succ[last]) next[(code + place[to]) * k + to].add(mass * prob);
    }
    stage = std::move(next);
  }

  CompensatedSum in_c, completed;
  Vector mu(static_cast<Eigen::Index>(k));
  for (const auto& [key, acc] : stage) {
    std::uint64_t code = key / k;
    for (std::size_t i = 0; i < k; ++i) {
      mu[static_cast<Eigen::Index>(i)] = static_cast<double>(code % base) / static_cast<double>(n);
      code /= base;
    }
    const double mass = acc.value();
    completed.add(mass);
    if (member(C, mu, 1e-12)) in_c.add(mass);
  }
  return {in_c.value(), completed.value()};
}

void finish(ProbabilityReport& report) {
  const auto it = std::min_element(report.probability.begin(), report.probability.end());
  report.infimum = *it;
  report.argmin_start = report.starts[static_cast<std::size_t>(it - report.probability.begin())];
}

void check_guard(std::size_t states, std::size_t n) {
  if (n == 0) throw InvalidArgument("visit budget n must be at least 1");
  if (states > kExactMaxStates || n > kExactMaxVisits)
    throw SizeGuardError("exact DP limited to " + std::to_string(kExactMaxStates) + " states and n <= " +
                         std::to_string(kExactMaxVisits));
}

}  // namespace

double ProbabilityReport::at(State x) const {
  const auto it = std::find(starts.begin(), starts.end(), x);
  if (it == starts.end()) throw InvalidArgument("state not among the report's starts");
  return probability[static_cast<std::size_t>(it - starts.begin())];
}

ProbabilityReport exact_prob_compact(const FiniteChain& chain, std::size_t n, const Polytope& C) {
  check_guard(chain.size(), n);
  if (C.dim != chain.size()) throw InvalidArgument("exact_prob_compact: polytope dimension must equal d");
  ProbabilityReport report;
  report.n = n;
  const auto d = static_cast<Eigen::Index>(chain.size());
  for (Eigen::Index x = 0; x < d; ++x) {
    Vector init = Vector::Zero(d);
    init[x] = 1.0;
    const auto mass = count_dp(chain.transition(), init, n, C);
    report.starts.push_back(x);
    report.probability.push_back(std::clamp(mass.in_C, 0.0, 1.0));
    report.escape_mass.push_back(0.0);
  }
  finish(report);
  return report;
}

ProbabilityReport exact_prob_stopped(const FiniteChain& chain, const SubsetSpec& Y, std::size_t n,
                                     const Polytope& C) {
  check_guard(Y.size(), n);
  if (C.dim != Y.size()) throw InvalidArgument("exact_prob_stopped: polytope dimension must equal |Y|");
  const auto kernel = return_kernel(chain, Y);
  ProbabilityReport report;
  report.n = n;
  for (State x : Y.Y_tilde) {
    const Vector init = kernel.entry.row(x).transpose();
    const auto mass = count_dp(kernel.R, init, n, C);
    report.starts.push_back(x);
    report.probability.push_back(std::clamp(mass.in_C, 0.0, 1.0));
    report.escape_mass.push_back(std::clamp(1.0 - mass.completed, 0.0, 1.0));
  }
  finish(report);
  return report;
}

double enumerate_paths_expectation(const FiniteChain& chain, State x, std::size_t horizon,
                                   const PathFunctional& f) {
  if (!chain.valid_state(x)) throw InvalidArgument("enumerate_paths_expectation: invalid start");
  if (std::pow(static_cast<double>(chain.size()), static_cast<double>(horizon)) > kEnumerationMaxPaths)
    throw SizeGuardError("path enumeration limited to 1e6 paths");
  std::vector<State> path{x};
  CompensatedSum total;
  std::function<void(double)> walk = [&](double prob) {
    if (path.size() == horizon + 1) {
      total.add(prob * f(std::span<const State>(path)));
      return;
    }
    const State s = path.back();
    for (State z : chain.successors(s)) {
      path.push_back(z);
      walk(prob * chain.prob(s, z));
      path.pop_back();
    }
  };
  walk(1.0);
  return total.value();
}

double martingale_check(const FiniteChain& chain, const SubsetSpec& Y, const Vector& u, State x, std::size_t horizon,
                        std::optional<std::size_t> n) {
  if (!chain.valid_state(x)) throw InvalidArgument("martingale_check: invalid start");
  if (n && *n == 0) throw InvalidArgument("martingale_check: visit budget must be at least 1");
  if (std::pow(static_cast<double>(chain.size()), static_cast<double>(horizon)) > kEnumerationMaxPaths)
    throw SizeGuardError("path enumeration limited to 1e6 paths");
  const Vector pu = pi_apply(chain, u);
  const Vector ratio = u.cwiseQuotient(pu);

  // acc[t] accumulates E_x[M_{t ^ T}] over prefixes X_0..X_t.
  std::vector<CompensatedSum> acc(horizon + 1);
  std::function<void(State, std::size_t, double, double, std::size_t)> walk =
      [&](State s, std::size_t t, double prob, double product, std::size_t visits) {
        if (Y.in_Y(s)) ++visits;
        const double m_t = product * u[s];
        if (n && visits == *n) {
          // T = t: the process is frozen at M_T from here on.
          for (std::size_t r = t; r <= horizon; ++r) acc[r].add(prob * m_t);
          return;
        }
        acc[t].add(prob * m_t);
        if (t == horizon) return;
        for (State z : chain.successors(s)) walk(z, t + 1, prob * chain.prob(s, z), product * ratio[s], visits);
      };
  walk(x, 0, 1.0, 1.0, 0);

  double worst = 0.0;
  for (const auto& a : acc) worst = std::max(worst, std::abs(a.value() - u[x]));
  return worst;
}

std::string to_csv(const ProbabilityReport& report, const std::vector<std::string>& labels) {
  std::ostringstream out;
  out.precision(17);
  out << "start_state,probability,escape_mass\n";
  for (std::size_t i = 0; i < report.starts.size(); ++i) {
    const State s = report.starts[i];
    const std::string label = s >= 0 && static_cast<std::size_t>(s) < labels.size() ? labels[s] : std::to_string(s);
    out << label << ',' << report.probability[i] << ',' << report.escape_mass[i] << '\n';
  }
  return out.str();
}

}  // namespace dvcert
