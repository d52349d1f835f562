#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dvcert/chain.hpp"
#include "dvcert/convexset.hpp"
#include "dvcert/montecarlo.hpp"
#include "dvcert/rate.hpp"

namespace dvcert {

class ParseError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct RunSpec {
  std::vector<std::size_t> n_list{1, 2, 4};
  std::size_t samples = 10000;
  std::uint64_t seed = 0;
  std::size_t horizon = 10000;
  std::vector<State> starts;  // lazy chains only
  double tol = 1e-9;
  bool mc_fallback = false;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

/// Parsed instance file.
///
/// {
///   "chain":   {"states": [...], "transition": [[...]]}
///            | {"family": "reflected_walk", "p_up": p, "cap": k},
///   "Y":       [state indices]                       (default: all states)
///   "C":       {"halfspaces": [{"a": [...], "b": b}],
///               "ball_linf": {"center": [...], "radius": r}}  (default: simplex)
///   "witness": {"values": [...] | {"label": value}}  (finite chains)
///            | {"values": {"0": value, ...}, "tail_constant": c,
///               "window": [lo, hi]}                  (lazy chains)
///   "rate":    {"tol_grad", "max_iter", "phi_cap", "divergence_grad",
///               "penalty_schedule"}
///   "run":     {"n_list", "samples", "seed", "horizon", "starts",
///               "tol", "mc_fallback", "pairs"}
/// }
///
/// Unknown keys are rejected at every level.
struct Instance {
  std::optional<FiniteChain> finite;
  std::optional<LazyChain> lazy;
  double p_up = 0.5;             // lazy family parameter
  std::optional<State> cap;      // lazy family parameter
  bool Y_given = false;
  SubsetSpec Y;
  Polytope C;                          // simplex cut by both parts below
  std::vector<Halfspace> C_halfspaces;  // as listed in the file
  std::optional<Vector> ball_center;
  double ball_radius = 0.0;
  std::optional<Vector> witness_u;     // finite chains
  std::optional<Witness> witness_lazy; // lazy chains
  RunSpec run;
  RateOptions rate;

  [[nodiscard]] bool is_lazy() const { return lazy.has_value(); }
};

Instance parse_instance(const nlohmann::json& j);
Instance parse_instance_text(const std::string& text);
Instance load_instance(const std::string& path);

nlohmann::json to_json(const Instance& inst);

}  // namespace dvcert
