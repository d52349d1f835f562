#pragma once

#include <vector>

#include "dvcert/chain.hpp"

namespace dvcert::detail {

// ln sum_z P(r,z) exp(phi(z)) with the max shift applied; when `weights` is
// set it receives the tilted law P(r,z) e^{phi(z)} / sum over successors(r).
double row_lse(const FiniteChain& chain, State r, const Vector& phi, std::vector<double>* weights = nullptr);

// f += scale * sum_{y in Y, mu_y > 0} mu_y (phi(y) - lse_y(phi)), with
// gradient and Hessian contributions when requested. mu is indexed like Y.Y.
void add_phi_terms(const FiniteChain& chain, const SubsetSpec& Y, const Vector& mu, const Vector& phi, double scale,
                   double& f, Vector* g, Matrix* H);

// f -= rho * sum_{z in outside} max(0, lse_z(phi) - phi(z))^2.
void add_penalty_terms(const FiniteChain& chain, const std::vector<State>& outside, double rho, const Vector& phi,
                       double& f, Vector* g, Matrix* H);

// Largest lse_z(phi) - phi(z) over z in outside (0 when none is positive).
double max_violation(const FiniteChain& chain, const std::vector<State>& outside, const Vector& phi);

// Raises phi on `outside` to the least fixed point of phi(z) = max(phi(z), lse_z(phi)),
// i.e. the smallest superharmonic majorant off Y in u = e^phi coordinates.
void restore_superharmonic(const FiniteChain& chain, const std::vector<State>& outside, Vector& phi);

std::vector<State> complement(const FiniteChain& chain, const SubsetSpec& Y);

}  // namespace dvcert::detail
