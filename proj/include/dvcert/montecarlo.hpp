#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dvcert/chain.hpp"
#include "dvcert/convexset.hpp"
#include "dvcert/rate.hpp"

namespace dvcert {

/// Sampled probability with a Wilson 95% interval. For stopped events the
/// upper end is widened by the truncated fraction, which makes [low, high] a
/// bracket: truncated runs can only hide successes.
struct McEstimate {
  double point = 0.0;
  double low = 0.0;
  double high = 1.0;
  std::size_t samples = 0;
  std::size_t successes = 0;
  std::size_t truncated = 0;
  double truncated_mass = 0.0;
  std::uint64_t seed = 0;
};

std::pair<double, double> wilson_interval(std::size_t successes, std::size_t samples, double z = 1.959963984540054);

McEstimate mc_prob_compact(const FiniteChain& chain, State x, std::size_t n, const Polytope& C, std::size_t samples,
                           std::uint64_t seed, unsigned jobs = 1);

McEstimate mc_prob_stopped(const FiniteChain& chain, const SubsetSpec& Y, State x, std::size_t n, const Polytope& C,
                           std::size_t samples, std::size_t horizon, std::uint64_t seed, unsigned jobs = 1);

McEstimate mc_prob_stopped(const LazyChain& chain, const SubsetSpec& Y, State x, std::size_t n, const Polytope& C,
                           std::size_t samples, std::size_t horizon, std::uint64_t seed, unsigned jobs = 1);

/// Positive function on a countable state space: explicit values on the
/// window [lo, hi] and a constant beyond it.
struct Witness {
  State lo = 0;
  State hi = 0;
  std::vector<double> values;  // values[s - lo]
  double tail_constant = 1.0;

  [[nodiscard]] double operator()(State s) const {
    return s < lo || s > hi ? tail_constant : values[static_cast<std::size_t>(s - lo)];
  }
  /// Throws InvalidArgument unless every value is positive and finite.
  void validate() const;
};

/// Violations of u(z) >= (P u)(z) - tol for z outside Y. Only states within
/// one jump of the window need checking: further out u and P u both equal the
/// tail constant.
std::vector<Violation> superharmonic_check(const LazyChain& chain, const SubsetSpec& Y, const Witness& u,
                                           double tol = 0.0);

class CertificateRefused : public std::runtime_error {
 public:
  explicit CertificateRefused(std::vector<Violation> violations)
      : std::runtime_error("certificate refused: witness is not superharmonic outside Y"),
        violations_(std::move(violations)) {}
  [[nodiscard]] const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

struct WitnessBound {
  double bound = 1.0;     // exp(-n * exponent)
  double exponent = 0.0;  // min over C of sum_y mu(y) ln(u(y) / Pu(y))
  bool informative = false;
  Vector mu_star;         // minimizer of the exponent over C
};

/// Single-witness upper bound on inf_{x in Y_tilde} P_x(L_n^Y in C).
/// Throws CertificateRefused when u is not superharmonic off Y within tol.
WitnessBound witness_bound(const LazyChain& chain, const SubsetSpec& Y, const Witness& u, const Polytope& C,
                           std::size_t n, double tol = 1e-12);

WitnessBound witness_bound(const FiniteChain& chain, const SubsetSpec& Y, const Vector& u, const Polytope& C,
                           std::size_t n, double tol = 1e-12);

}  // namespace dvcert
