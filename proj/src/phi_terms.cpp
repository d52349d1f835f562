#include "phi_terms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dvcert::detail {

double row_lse(const FiniteChain& chain, State r, const Vector& phi, std::vector<double>* weights) {
  const auto& succ = chain.successors(r);
  double m = -std::numeric_limits<double>::infinity();
  for (State z : succ) m = std::max(m, phi[z]);
  double s = 0.0;
  if (weights) weights->resize(succ.size());
  for (std::size_t k = 0; k < succ.size(); ++k) {
    const double w = chain.prob(r, succ[k]) * std::exp(phi[succ[k]] - m);
    s += w;
    if (weights) (*weights)[k] = w;
  }
  if (weights)
    for (double& w : *weights) w /= s;
  return m + std::log(s);
}

namespace {

// Adds c * (e_r' - w_r) to g and -c * (diag w - w w^T) to H, where r' is the
// anchored coordinate and w the tilted law over successors(r).
void add_row_hessian(const std::vector<State>& succ, const std::vector<double>& w, double c, Matrix& H) {
  for (std::size_t a = 0; a < succ.size(); ++a) {
    H(succ[a], succ[a]) -= c * w[a];
    for (std::size_t b = 0; b < succ.size(); ++b) H(succ[a], succ[b]) += c * w[a] * w[b];
  }
}

}  // namespace

void add_phi_terms(const FiniteChain& chain, const SubsetSpec& Y, const Vector& mu, const Vector& phi, double scale,
                   double& f, Vector* g, Matrix* H) {
  std::vector<double> w;
  const bool need_w = g || H;
  for (std::size_t i = 0; i < Y.size(); ++i) {
    const double m = mu[static_cast<Eigen::Index>(i)] * scale;
    if (m == 0.0) continue;  // zero-mass states contribute nothing
    const State y = Y.Y[i];
    const double lse = row_lse(chain, y, phi, need_w ? &w : nullptr);
    f += m * (phi[y] - lse);
    if (!need_w) continue;
    const auto& succ = chain.successors(y);
    if (g) {
      (*g)[y] += m;
      for (std::size_t k = 0; k < succ.size(); ++k) (*g)[succ[k]] -= m * w[k];
    }
    if (H) add_row_hessian(succ, w, m, *H);
  }
}

void add_penalty_terms(const FiniteChain& chain, const std::vector<State>& outside, double rho, const Vector& phi,
                       double& f, Vector* g, Matrix* H) {
  std::vector<double> w;
  const bool need_w = g || H;
  for (State z : outside) {
    const double lse = row_lse(chain, z, phi, need_w ? &w : nullptr);
    const double s = lse - phi[z];
    if (s <= 0.0) continue;
    f -= rho * s * s;
    if (!need_w) continue;
    const auto& succ = chain.successors(z);
    // grad of s is w - e_z
    if (g) {
      for (std::size_t k = 0; k < succ.size(); ++k) (*g)[succ[k]] -= 2.0 * rho * s * w[k];
      (*g)[z] += 2.0 * rho * s;
    }
    if (H) {
      Vector ds = Vector::Zero(phi.size());
      for (std::size_t k = 0; k < succ.size(); ++k) ds[succ[k]] += w[k];
      ds[z] -= 1.0;
      for (Eigen::Index a = 0; a < ds.size(); ++a) {
        if (ds[a] == 0.0) continue;
        for (Eigen::Index b = 0; b < ds.size(); ++b) (*H)(a, b) -= 2.0 * rho * ds[a] * ds[b];
      }
      add_row_hessian(succ, w, 2.0 * rho * s, *H);
    }
  }
}

double max_violation(const FiniteChain& chain, const std::vector<State>& outside, const Vector& phi) {
  double worst = 0.0;
  for (State z : outside) worst = std::max(worst, row_lse(chain, z, phi) - phi[z]);
  return worst;
}

void restore_superharmonic(const FiniteChain& chain, const std::vector<State>& outside, Vector& phi) {
  constexpr int kMaxSweeps = 100000;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool changed = false;
    for (State z : outside) {
      const double lse = row_lse(chain, z, phi);
      if (lse > phi[z]) {
        phi[z] = lse;
        changed = true;
      }
    }
    if (!changed) return;
  }
}

std::vector<State> complement(const FiniteChain& chain, const SubsetSpec& Y) {
  std::vector<State> out;
  for (std::size_t z = 0; z < chain.size(); ++z)
    if (!Y.in_Y(static_cast<State>(z))) out.push_back(static_cast<State>(z));
  return out;
}

}  // namespace dvcert::detail
