#include "dvcert/convexset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "concave_max.hpp"
#include "phi_terms.hpp"

namespace dvcert {

namespace {

constexpr double kVertexTol = 1e-9;
constexpr double kTieTol = 1e-12;

bool lex_less(const Vector& a, const Vector& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

void check_dim(const Polytope& C, const Vector& v) {
  if (static_cast<std::size_t>(v.size()) != C.dim) throw InvalidArgument("polytope dimension mismatch");
}

// Index of the minimizer of c . v over vertices (sorted lexicographically, so
// the first index within the tie tolerance is the lexicographic tie-break).
std::size_t argmin_over(const std::vector<Vector>& vertices, const Vector& c) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& v : vertices) best = std::min(best, c.dot(v));
  const double slack = kTieTol * (1.0 + std::abs(best));
  for (std::size_t i = 0; i < vertices.size(); ++i)
    if (c.dot(vertices[i]) <= best + slack) return i;
  return 0;
}

struct Eval {
  ExtReal value;
  Vector phi;     // feasible potential (maximizer, or last iterate when infinite)
  Vector slopes;  // phi(y) - lse_y(phi) over Y
};

class RateOracle {
 public:
  RateOracle(const FiniteChain& chain, const SubsetSpec& Y, RateMode mode, const RateOptions& opts)
      : chain_(chain), Y_(Y), mode_(mode), opts_(opts) {}

  Eval operator()(const Vector& mu, const Vector& warm) const {
    Vector clean = mu.cwiseMax(0.0);
    clean /= clean.sum();
    RateResult r = mode_ == RateMode::compact ? rate_compact(chain_, clean, opts_, &warm)
                                              : rate_constrained(chain_, Y_, clean, opts_, &warm);
    Eval e;
    e.value = r.value;
    e.phi = r.last_phi;
    e.slopes = phi_slopes(chain_, Y_, e.phi);
    return e;
  }

 private:
  const FiniteChain& chain_;
  const SubsetSpec& Y_;
  RateMode mode_;
  RateOptions opts_;
};

double min_slope(const std::vector<Vector>& vertices, const Vector& slopes) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& v : vertices) best = std::min(best, slopes.dot(v));
  return best;
}

}  // namespace

Polytope simplex(std::size_t dim) {
  if (dim == 0) throw InvalidArgument("simplex: dimension must be positive");
  return Polytope{dim, {}};
}

Polytope ball_linf(const Vector& center, double radius) {
  if (!(radius >= 0.0)) throw InvalidArgument("ball_linf: radius must be nonnegative");
  Polytope C{static_cast<std::size_t>(center.size()), {}};
  for (Eigen::Index s = 0; s < center.size(); ++s) {
    Vector e = Vector::Zero(center.size());
    e[s] = 1.0;
    C.halfspaces.push_back({e, center[s] + radius});
    C.halfspaces.push_back({-e, radius - center[s]});
  }
  return C;
}

bool member(const Polytope& C, const Vector& mu, double tol) {
  check_dim(C, mu);
  if ((mu.array() < -tol).any()) return false;
  if (std::abs(mu.sum() - 1.0) > tol) return false;
  for (const auto& h : C.halfspaces)
    if (h.a.dot(mu) > h.b + tol) return false;
  return true;
}

std::vector<Vector> enumerate_vertices(const Polytope& C) {
  const std::size_t k = C.dim;
  if (k == 0) throw InvalidArgument("polytope dimension must be positive");
  if (k > kMaxLpDim) throw SizeGuardError("linear_minimize: dimension above " + std::to_string(kMaxLpDim));
  for (const auto& h : C.halfspaces) {
    if (static_cast<std::size_t>(h.a.size()) != k) throw InvalidArgument("halfspace dimension mismatch");
    if (!h.a.allFinite() || !std::isfinite(h.b)) throw InvalidArgument("halfspace must be finite");
    if (h.a.isZero(0.0)) throw InvalidArgument("halfspace normal must be nonzero");
  }

  // Inequality rows G mu <= h: the cuts, then -mu_i <= 0.
  const std::size_t m = C.halfspaces.size() + k;
  Matrix G(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
  Vector h(static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < C.halfspaces.size(); ++j) {
    G.row(static_cast<Eigen::Index>(j)) = C.halfspaces[j].a.transpose();
    h[static_cast<Eigen::Index>(j)] = C.halfspaces[j].b;
  }
  for (std::size_t i = 0; i < k; ++i) {
    const auto row = static_cast<Eigen::Index>(C.halfspaces.size() + i);
    G.row(row).setZero();
    G(row, static_cast<Eigen::Index>(i)) = -1.0;
    h[row] = 0.0;
  }

  std::vector<Vector> found;
  const std::size_t r = k - 1;  // active inequalities alongside sum(mu) = 1
  std::vector<std::size_t> idx(r);
  for (std::size_t i = 0; i < r; ++i) idx[i] = i;
  Matrix A(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  Vector rhs(static_cast<Eigen::Index>(k));
  while (true) {
    A.row(0).setOnes();
    rhs[0] = 1.0;
    for (std::size_t i = 0; i < r; ++i) {
      A.row(static_cast<Eigen::Index>(i + 1)) = G.row(static_cast<Eigen::Index>(idx[i]));
      rhs[static_cast<Eigen::Index>(i + 1)] = h[static_cast<Eigen::Index>(idx[i])];
    }
    Eigen::FullPivLU<Matrix> lu(A);
    if (lu.rank() == static_cast<Eigen::Index>(k)) {
      Vector x = lu.solve(rhs);
      bool feasible = x.allFinite();
      for (Eigen::Index j = 0; feasible && j < static_cast<Eigen::Index>(m); ++j)
        feasible = G.row(j).dot(x) <= h[j] + kVertexTol * (1.0 + std::abs(h[j]));
      if (feasible) {
        x = x.cwiseMax(0.0);
        x /= x.sum();
        found.push_back(std::move(x));
      }
    }
    // next combination
    if (r == 0) break;
    std::size_t pos = r;
    while (pos > 0 && idx[pos - 1] == m - r + pos - 1) --pos;
    if (pos == 0) break;
    ++idx[pos - 1];
    for (std::size_t i = pos; i < r; ++i) idx[i] = idx[i - 1] + 1;
  }

  std::sort(found.begin(), found.end(), lex_less);
  std::vector<Vector> unique;
  for (auto& v : found)
    if (unique.empty() || (unique.back() - v).lpNorm<Eigen::Infinity>() > kVertexTol) unique.push_back(std::move(v));
  return unique;
}

std::optional<LpSolution> linear_minimize(const Polytope& C, const Vector& c) {
  check_dim(C, c);
  const auto vertices = enumerate_vertices(C);
  if (vertices.empty()) return std::nullopt;
  const auto i = argmin_over(vertices, c);
  return LpSolution{vertices[i], c.dot(vertices[i])};
}

bool is_subset(const Polytope& inner, const Polytope& outer, double tol) {
  if (inner.dim != outer.dim) throw InvalidArgument("is_subset: dimension mismatch");
  for (const auto& v : enumerate_vertices(inner))
    if (!member(outer, v, tol)) return false;
  return true;
}

double inner_infimum(const FiniteChain& chain, const SubsetSpec& Y, const Polytope& C, const Vector& phi) {
  const auto lp = linear_minimize(C, phi_slopes(chain, Y, phi));
  if (!lp) throw InvalidArgument("inner_infimum: C is empty");
  return lp->value;
}

InfimumResult infimum_rate_over_C(const FiniteChain& chain, const SubsetSpec& Y, const Polytope& C, RateMode mode,
                                  const InfimumOptions& opts) {
  if (C.dim != Y.size()) throw InvalidArgument("infimum_rate_over_C: polytope dimension must equal |Y|");
  if (mode == RateMode::compact && Y.size() != chain.size())
    throw InvalidArgument("infimum_rate_over_C: compact mode needs Y = whole state space");
  const auto vertices = enumerate_vertices(C);
  if (vertices.empty()) throw InvalidArgument("infimum_rate_over_C: C is empty");

  const RateOracle rate(chain, Y, mode, opts.rate);
  const auto d = static_cast<Eigen::Index>(chain.size());
  InfimumResult out;
  out.witness_phi = Vector::Zero(d);
  out.lower_bound = 0.0;  // phi = 0 certifies inf_C I >= 0
  auto record_bound = [&](const Eval& e) {
    const double lb = min_slope(vertices, e.slopes);
    if (lb > out.lower_bound) {
      out.lower_bound = lb;
      out.witness_phi = e.phi;
    }
  };

  // Active-set representation mu = sum_i w_i vertices[i], started at the
  // vertex barycenter: at a face of the simplex the potential is not unique
  // in the unvisited coordinates and its slopes there mislead the first step.
  const auto combine = [&](const std::vector<double>& w) {
    Vector m = Vector::Zero(static_cast<Eigen::Index>(C.dim));
    for (std::size_t i = 0; i < vertices.size(); ++i) m += w[i] * vertices[i];
    return m;
  };
  std::vector<double> weight(vertices.size(), 1.0 / static_cast<double>(vertices.size()));
  Vector mu = combine(weight);
  Eval cur = rate(mu, Vector::Zero(d));
  record_bound(cur);

  if (cur.value.is_infinite()) {
    // Look for a point of C where I is finite: vertices ranked by the
    // diverging potential's slopes, then the vertex barycenter.
    std::vector<std::size_t> order(vertices.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const Vector slopes = cur.slopes;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return slopes.dot(vertices[a]) < slopes.dot(vertices[b]); });
    std::vector<std::vector<double>> candidates;
    for (std::size_t i : order) {
      std::vector<double> w(vertices.size(), 0.0);
      w[i] = 1.0;
      candidates.push_back(std::move(w));
    }
    for (const auto& w : candidates) {
      const Vector trial = combine(w);
      Eval e = rate(trial, Vector::Zero(d));
      record_bound(e);
      if (e.value.is_finite()) {
        cur = std::move(e);
        mu = trial;
        weight = w;
        break;
      }
    }
    if (cur.value.is_infinite()) {
      out.value = ExtReal::infinity();
      out.argmin = mu;
      out.gap = std::numeric_limits<double>::infinity();
      return out;
    }
  }

  // Minimizes I over the segment from mu toward v by golden sections.
  auto golden_search = [&](const Vector& from, const Vector& v, const Eval& at_from) {
    constexpr double kInvPhi = 0.6180339887498949;
    auto value_at = [&](double t, Eval& e) {
      e = rate(from + t * (v - from), at_from.phi);
      return e.value.is_finite() ? e.value.value() : std::numeric_limits<double>::infinity();
    };
    double lo = 0.0, hi = 1.0;
    Eval e1, e2;
    double t1 = hi - kInvPhi * (hi - lo), t2 = lo + kInvPhi * (hi - lo);
    double f1 = value_at(t1, e1), f2 = value_at(t2, e2);
    double best_t = 0.0;
    Eval best = at_from;
    auto consider = [&](double t, const Eval& e) {
      if (e.value < best.value) {
        best = e;
        best_t = t;
      }
    };
    consider(t1, e1);
    consider(t2, e2);
    Eval end;
    value_at(1.0, end);
    consider(1.0, end);
    for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
      if (f1 <= f2) {
        hi = t2;
        t2 = t1;
        f2 = f1;
        t1 = hi - kInvPhi * (hi - lo);
        f1 = value_at(t1, e1);
        consider(t1, e1);
      } else {
        lo = t1;
        t1 = t2;
        f1 = f2;
        t2 = lo + kInvPhi * (hi - lo);
        f2 = value_at(t2, e2);
        consider(t2, e2);
      }
    }
    return std::pair<double, Eval>{best_t, best};
  };

  out.value = cur.value;
  out.argmin = mu;
  for (std::size_t k = 0; k < opts.max_iter; ++k) {
    out.iterations = k + 1;
    const std::size_t s = argmin_over(vertices, cur.slopes);
    const double lb = cur.slopes.dot(vertices[s]);
    record_bound(cur);
    const double gap = cur.slopes.dot(mu) - lb;
    if (gap <= opts.gap_tol) {
      out.converged = true;
      break;
    }

    // Pairwise direction: move weight from the worst active vertex to s.
    std::size_t a = s;
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < vertices.size(); ++i)
      if (weight[i] > 0.0 && cur.slopes.dot(vertices[i]) > worst) {
        worst = cur.slopes.dot(vertices[i]);
        a = i;
      }
    Vector dir = vertices[s] - vertices[a];
    double gmax = weight[a];
    bool pairwise = true;
    if (a == s || !(cur.slopes.dot(dir) < 0.0)) {
      dir = vertices[s] - mu;
      gmax = 1.0;
      pairwise = false;
    }

    // Exact line search on the convex map t -> I(mu + t dir): Illinois
    // regula falsi on the directional derivative <slopes, dir>.
    double lo = 0.0, dlo = cur.slopes.dot(dir);
    double hi = gmax, dhi = std::numeric_limits<double>::infinity();
    double best_t = 0.0;
    Eval best = cur;
    Eval at_hi = rate(mu + hi * dir, cur.phi);
    if (at_hi.value.is_finite()) {
      dhi = at_hi.slopes.dot(dir);
      if (at_hi.value < best.value) {
        best = at_hi;
        best_t = hi;
      }
    }
    if (!(at_hi.value.is_finite() && dhi <= 0.0)) {
      int side = 0;
      for (int iter = 0; iter < 80 && hi - lo > 1e-13 * gmax; ++iter) {
        double t;
        if (std::isfinite(dhi)) {
          t = lo - dlo * (hi - lo) / (dhi - dlo);
          if (!(t > lo && t < hi)) t = 0.5 * (lo + hi);
        } else {
          t = 0.5 * (lo + hi);
        }
        Eval e = rate(mu + t * dir, best.phi);
        if (e.value.is_infinite()) {
          hi = t;
          dhi = std::numeric_limits<double>::infinity();
          continue;
        }
        if (e.value < best.value) {
          best = e;
          best_t = t;
        }
        const double dt = e.slopes.dot(dir);
        if (std::abs(dt) <= 1e-13) break;
        if (dt < 0.0) {
          lo = t;
          dlo = dt;
          if (side == -1 && std::isfinite(dhi)) dhi *= 0.5;
          side = -1;
        } else {
          hi = t;
          dhi = dt;
          if (side == 1) dlo *= 0.5;
          side = 1;
        }
      }
    }
    if (best_t > 0.0) {
      if (pairwise) {
        weight[s] += best_t;
        weight[a] -= best_t;
        if (weight[a] <= 1e-15) weight[a] = 0.0;
      } else {
        for (double& w : weight) w *= 1.0 - best_t;
        weight[s] += best_t;
      }
    } else {
      // The slopes gave no descent (they can be off on faces of the simplex):
      // search toward every vertex directly.
      std::size_t to = vertices.size();
      for (std::size_t i = 0; i < vertices.size(); ++i) {
        auto [t, e] = golden_search(mu, vertices[i], cur);
        if (t > 0.0 && e.value < best.value) {
          best = std::move(e);
          best_t = t;
          to = i;
        }
      }
      if (to == vertices.size()) break;  // no decrease is representable
      for (double& w : weight) w *= 1.0 - best_t;
      weight[to] += best_t;
    }
    mu = combine(weight);
    cur = std::move(best);
    if (cur.value < out.value) {
      out.value = cur.value;
      out.argmin = mu;
    }
  }
  record_bound(cur);
  out.gap = out.value.value() - out.lower_bound;
  if (!out.converged) out.converged = out.gap <= opts.gap_tol;
  return out;
}

MinimaxReport minimax_gap(const FiniteChain& chain, const SubsetSpec& Y, const Polytope& C,
                          const InfimumOptions& opts) {
  MinimaxReport report;
  const bool compact = Y.size() == chain.size();
  const auto inf = infimum_rate_over_C(chain, Y, C, compact ? RateMode::compact : RateMode::constrained, opts);
  report.inf_sup = inf.value;
  report.mu_star = inf.argmin;

  // sup side: maximize the soft minimum over vertices, sharpening it (and the
  // superharmonic penalty) stage by stage.
  const auto vertices = enumerate_vertices(C);
  const auto d = static_cast<Eigen::Index>(chain.size());
  const std::vector<State> outside = detail::complement(chain, Y);
  detail::MaximizeOptions mopts;
  mopts.max_iter = opts.rate.max_iter;
  mopts.x_cap = opts.rate.phi_cap;
  mopts.divergence_grad = opts.rate.divergence_grad;
  mopts.anchor = Y.Y.front();

  Vector phi = Vector::Zero(d);
  const std::size_t nv = vertices.size();
  std::vector<double> F(nv);
  std::vector<Vector> G(nv, Vector(d));
  std::vector<Matrix> H(nv, Matrix(d, d));
  for (double beta = 1.0; beta <= 1e8 * 1.5; beta *= 10.0) {
    const double rho = outside.empty() ? 0.0 : beta;
    auto f = [&](const Vector& x, Vector* g, Matrix* hess) {
      double lo = std::numeric_limits<double>::infinity();
      for (std::size_t v = 0; v < nv; ++v) {
        F[v] = 0.0;
        if (g || hess) G[v].setZero();
        if (hess) H[v].setZero();
        detail::add_phi_terms(chain, Y, vertices[v], x, 1.0, F[v], (g || hess) ? &G[v] : nullptr,
                              hess ? &H[v] : nullptr);
        lo = std::min(lo, F[v]);
      }
      double sum = 0.0;
      std::vector<double> w(nv);
      for (std::size_t v = 0; v < nv; ++v) sum += (w[v] = std::exp(-beta * (F[v] - lo)));
      double value = lo - std::log(sum) / beta;
      Vector gbar = Vector::Zero(d);
      if (g || hess)
        for (std::size_t v = 0; v < nv; ++v) gbar += (w[v] / sum) * G[v];
      if (g) *g = gbar;
      if (hess) {
        hess->setZero(d, d);
        for (std::size_t v = 0; v < nv; ++v) {
          const double p = w[v] / sum;
          *hess += p * H[v];
          *hess -= (beta * p) * (G[v] * G[v].transpose());
        }
        *hess += beta * (gbar * gbar.transpose());
      }
      if (rho > 0.0) detail::add_penalty_terms(chain, outside, rho, x, value, g, hess);
      return value;
    };
    mopts.tol_grad = std::max(opts.rate.tol_grad, 1e-15 * beta * (1.0 + phi.lpNorm<Eigen::Infinity>()));
    const auto stage = detail::maximize_concave(f, phi, mopts);
    phi = stage.x;
    if (stage.status == detail::MaxStatus::diverged) break;
  }
  if (!outside.empty()) detail::restore_superharmonic(chain, outside, phi);

  report.sup_inf = inner_infimum(chain, Y, C, phi);
  report.phi_star = phi;
  if (report.sup_inf < 0.0) {
    report.sup_inf = 0.0;
    report.phi_star = Vector::Zero(d);
  }
  report.gap = report.inf_sup.is_infinite() ? std::numeric_limits<double>::infinity()
                                            : report.inf_sup.value() - report.sup_inf;
  return report;
}

}  // namespace dvcert
