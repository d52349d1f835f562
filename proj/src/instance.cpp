#include "dvcert/instance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace dvcert {

using nlohmann::json;

namespace {

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!ok.count(key)) throw ParseError(where + ": unknown key \"" + key + "\"");
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(where + ": expected a number");
  return j.get<double>();
}

std::size_t count(const json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) throw ParseError(where + ": expected a nonnegative integer");
  return j.get<std::size_t>();
}

Vector vector_of(const json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = number(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

std::vector<State> states_of(const json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array of integers");
  std::vector<State> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number_integer()) throw ParseError(where + "[" + std::to_string(i) + "]: expected an integer");
    out.push_back(j[i].get<State>());
  }
  return out;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

void parse_chain(const json& j, Instance& inst) {
  if (j.contains("family")) {
    only_keys(j, "chain", {"family", "p_up", "cap"});
    if (!j["family"].is_string() || j["family"].get<std::string>() != "reflected_walk")
      throw ParseError("chain.family: only \"reflected_walk\" is supported");
    if (j.contains("p_up")) inst.p_up = number(j["p_up"], "chain.p_up");
    if (j.contains("cap") && !j["cap"].is_null()) inst.cap = static_cast<State>(count(j["cap"], "chain.cap"));
    inst.lazy = reflected_walk(inst.p_up, inst.cap);
    return;
  }
  only_keys(j, "chain", {"states", "transition"});
  if (!j.contains("transition")) throw ParseError("chain: missing \"transition\"");
  const json& rows = j["transition"];
  if (!rows.is_array() || rows.empty()) throw ParseError("chain.transition: expected a nonempty matrix");
  const auto d = static_cast<Eigen::Index>(rows.size());
  Matrix P(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    const Vector row = vector_of(rows[static_cast<std::size_t>(r)], "chain.transition[" + std::to_string(r) + "]");
    if (row.size() != d) throw ParseError("chain.transition: matrix is not square");
    P.row(r) = row.transpose();
  }
  std::vector<std::string> labels;
  if (j.contains("states")) {
    if (!j["states"].is_array() || j["states"].size() != rows.size())
      throw ParseError("chain.states: expected one label per row");
    for (const auto& s : j["states"]) {
      if (!s.is_string()) throw ParseError("chain.states: labels must be strings");
      labels.push_back(s.get<std::string>());
    }
  } else {
    for (Eigen::Index i = 0; i < d; ++i) labels.push_back(std::to_string(i));
  }
  inst.finite = FiniteChain(std::move(labels), std::move(P));
}

void parse_C(const json& j, Instance& inst) {
  only_keys(j, "C", {"halfspaces", "ball_linf"});
  const std::size_t dim = inst.Y.size();
  inst.C = simplex(dim);
  if (j.contains("ball_linf")) {
    const json& b = j["ball_linf"];
    only_keys(b, "C.ball_linf", {"center", "radius"});
    if (!b.contains("center") || !b.contains("radius")) throw ParseError("C.ball_linf: needs center and radius");
    inst.ball_center = vector_of(b["center"], "C.ball_linf.center");
    inst.ball_radius = number(b["radius"], "C.ball_linf.radius");
    if (static_cast<std::size_t>(inst.ball_center->size()) != dim)
      throw ParseError("C.ball_linf.center: length must equal |Y|");
    const Polytope ball = ball_linf(*inst.ball_center, inst.ball_radius);
    inst.C.halfspaces.insert(inst.C.halfspaces.end(), ball.halfspaces.begin(), ball.halfspaces.end());
  }
  if (j.contains("halfspaces")) {
    if (!j["halfspaces"].is_array()) throw ParseError("C.halfspaces: expected an array");
    for (std::size_t i = 0; i < j["halfspaces"].size(); ++i) {
      const std::string where = "C.halfspaces[" + std::to_string(i) + "]";
      const json& h = j["halfspaces"][i];
      only_keys(h, where, {"a", "b"});
      if (!h.contains("a") || !h.contains("b")) throw ParseError(where + ": needs a and b");
      Halfspace hs{vector_of(h["a"], where + ".a"), number(h["b"], where + ".b")};
      if (static_cast<std::size_t>(hs.a.size()) != dim) throw ParseError(where + ".a: length must equal |Y|");
      inst.C_halfspaces.push_back(hs);
      inst.C.halfspaces.push_back(std::move(hs));
    }
  }
}

// Witness values come either as an array over the window or as an object
// keyed by state.
void parse_witness(const json& j, Instance& inst) {
  if (inst.is_lazy()) {
    only_keys(j, "witness", {"values", "tail_constant", "window"});
    if (!j.contains("values") || !j.contains("tail_constant") || !j.contains("window"))
      throw ParseError("witness: lazy chains need values, tail_constant and window");
    const auto window = states_of(j["window"], "witness.window");
    if (window.size() != 2 || window[1] < window[0]) throw ParseError("witness.window: expected [lo, hi]");
    Witness w;
    w.lo = window[0];
    w.hi = window[1];
    const std::size_t len = static_cast<std::size_t>(w.hi - w.lo + 1);
    const json& values = j["values"];
    if (values.is_object()) {
      w.values.assign(len, std::numeric_limits<double>::quiet_NaN());
      for (const auto& [key, value] : values.items()) {
        State s = 0;
        try {
          std::size_t used = 0;
          s = std::stoll(key, &used);
          if (used != key.size()) throw std::invalid_argument(key);
        } catch (const std::exception&) {
          throw ParseError("witness.values: key \"" + key + "\" is not a state");
        }
        if (s < w.lo || s > w.hi) throw ParseError("witness.values: state " + key + " lies outside the window");
        w.values[static_cast<std::size_t>(s - w.lo)] = number(value, "witness.values." + key);
      }
      for (double v : w.values)
        if (std::isnan(v)) throw ParseError("witness.values: every window state needs a value");
    } else {
      const Vector v = vector_of(values, "witness.values");
      if (static_cast<std::size_t>(v.size()) != len) throw ParseError("witness.values: one value per window state");
      w.values.assign(v.data(), v.data() + v.size());
    }
    w.tail_constant = number(j["tail_constant"], "witness.tail_constant");
    w.validate();
    inst.witness_lazy = std::move(w);
    return;
  }
  only_keys(j, "witness", {"values"});
  if (!j.contains("values")) throw ParseError("witness: missing values");
  const std::size_t d = inst.finite->size();
  Vector u;
  if (j["values"].is_object()) {
    u = Vector::Constant(static_cast<Eigen::Index>(d), std::numeric_limits<double>::quiet_NaN());
    const auto& labels = inst.finite->labels();
    for (const auto& [key, value] : j["values"].items()) {
      const auto it = std::find(labels.begin(), labels.end(), key);
      if (it == labels.end()) throw ParseError("witness.values: unknown state \"" + key + "\"");
      u[it - labels.begin()] = number(value, "witness.values." + key);
    }
  } else {
    u = vector_of(j["values"], "witness.values");
  }
  if (static_cast<std::size_t>(u.size()) != d) throw ParseError("witness.values: length must equal the number of states");
  for (Eigen::Index i = 0; i < u.size(); ++i)
    if (!(u[i] > 0.0) || !std::isfinite(u[i])) throw ParseError("witness.values: every state needs a positive value");
  inst.witness_u = std::move(u);
}

void parse_rate(const json& j, RateOptions& opts) {
  only_keys(j, "rate", {"tol_grad", "max_iter", "phi_cap", "divergence_grad", "penalty_schedule"});
  if (j.contains("tol_grad")) opts.tol_grad = number(j["tol_grad"], "rate.tol_grad");
  if (j.contains("max_iter")) opts.max_iter = count(j["max_iter"], "rate.max_iter");
  if (j.contains("phi_cap")) opts.phi_cap = number(j["phi_cap"], "rate.phi_cap");
  if (j.contains("divergence_grad")) opts.divergence_grad = number(j["divergence_grad"], "rate.divergence_grad");
  if (j.contains("penalty_schedule")) {
    const Vector s = vector_of(j["penalty_schedule"], "rate.penalty_schedule");
    if (s.size() == 0) throw ParseError("rate.penalty_schedule: must not be empty");
    opts.penalty_schedule.assign(s.data(), s.data() + s.size());
  }
}

void parse_run(const json& j, RunSpec& run) {
  only_keys(j, "run", {"n_list", "samples", "seed", "horizon", "starts", "tol", "mc_fallback", "pairs"});
  if (j.contains("n_list")) {
    if (!j["n_list"].is_array()) throw ParseError("run.n_list: expected an array");
    run.n_list.clear();
    for (const auto& n : j["n_list"]) {
      const auto v = count(n, "run.n_list");
      if (v == 0) throw ParseError("run.n_list: entries must be positive");
      run.n_list.push_back(v);
    }
  }
  if (j.contains("samples")) run.samples = count(j["samples"], "run.samples");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
      throw ParseError("run.seed: expected an integer");
    run.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("horizon")) run.horizon = count(j["horizon"], "run.horizon");
  if (j.contains("starts")) run.starts = states_of(j["starts"], "run.starts");
  if (j.contains("tol")) run.tol = number(j["tol"], "run.tol");
  if (j.contains("mc_fallback")) {
    if (!j["mc_fallback"].is_boolean()) throw ParseError("run.mc_fallback: expected a boolean");
    run.mc_fallback = j["mc_fallback"].get<bool>();
  }
  if (j.contains("pairs")) {
    if (!j["pairs"].is_array()) throw ParseError("run.pairs: expected an array of [m, n]");
    for (const auto& p : j["pairs"]) {
      if (!p.is_array() || p.size() != 2) throw ParseError("run.pairs: expected an array of [m, n]");
      run.pairs.emplace_back(count(p[0], "run.pairs"), count(p[1], "run.pairs"));
    }
  }
}

}  // namespace

Instance parse_instance(const json& j) {
  only_keys(j, "instance", {"chain", "Y", "C", "witness", "run", "rate"});
  if (!j.contains("chain")) throw ParseError("instance: missing \"chain\"");
  Instance inst;
  try {
    parse_chain(j["chain"], inst);
    if (j.contains("Y")) {
      inst.Y_given = true;
      auto Y = states_of(j["Y"], "Y");
      inst.Y = inst.is_lazy() ? exit_set(*inst.lazy, std::move(Y)) : exit_set(*inst.finite, std::move(Y));
    } else if (inst.is_lazy()) {
      throw ParseError("Y: required for chain families");
    } else {
      std::vector<State> all(inst.finite->size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<State>(i);
      inst.Y = exit_set(*inst.finite, std::move(all));
    }
    if (j.contains("C"))
      parse_C(j["C"], inst);
    else
      inst.C = simplex(inst.Y.size());
    if (j.contains("witness")) parse_witness(j["witness"], inst);
    if (j.contains("run")) parse_run(j["run"], inst.run);
    if (j.contains("rate")) parse_rate(j["rate"], inst.rate);
  } catch (const ParseError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what());
  } catch (const json::exception& e) {
    throw ParseError(e.what());
  }
  return inst;
}

Instance parse_instance_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  return parse_instance(j);
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open instance file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_instance_text(buf.str());
}

json to_json(const Instance& inst) {
  json j;
  if (inst.is_lazy()) {
    j["chain"] = {{"family", "reflected_walk"}, {"p_up", inst.p_up}};
    if (inst.cap) j["chain"]["cap"] = *inst.cap;
  } else {
    json rows = json::array();
    const Matrix& P = inst.finite->transition();
    for (Eigen::Index r = 0; r < P.rows(); ++r) rows.push_back(vector_json(P.row(r).transpose()));
    j["chain"] = {{"states", inst.finite->labels()}, {"transition", rows}};
  }
  if (inst.Y_given) j["Y"] = inst.Y.Y;
  json C = json::object();
  if (inst.ball_center) C["ball_linf"] = {{"center", vector_json(*inst.ball_center)}, {"radius", inst.ball_radius}};
  if (!inst.C_halfspaces.empty()) {
    C["halfspaces"] = json::array();
    for (const auto& h : inst.C_halfspaces) C["halfspaces"].push_back({{"a", vector_json(h.a)}, {"b", h.b}});
  }
  j["C"] = C;
  if (inst.witness_u) j["witness"] = {{"values", vector_json(*inst.witness_u)}};
  if (inst.witness_lazy) {
    const auto& w = *inst.witness_lazy;
    json values = json::object();
    for (State s = w.lo; s <= w.hi; ++s) values[std::to_string(s)] = w(s);
    j["witness"] = {{"values", values}, {"tail_constant", w.tail_constant}, {"window", {w.lo, w.hi}}};
  }
  j["rate"] = {{"tol_grad", inst.rate.tol_grad},
               {"max_iter", inst.rate.max_iter},
               {"phi_cap", inst.rate.phi_cap},
               {"divergence_grad", inst.rate.divergence_grad},
               {"penalty_schedule", inst.rate.penalty_schedule}};
  const auto& r = inst.run;
  j["run"] = {{"n_list", r.n_list}, {"samples", r.samples},     {"seed", r.seed},
              {"horizon", r.horizon}, {"tol", r.tol},         {"mc_fallback", r.mc_fallback}};
  if (!r.starts.empty()) j["run"]["starts"] = r.starts;
  if (!r.pairs.empty()) {
    j["run"]["pairs"] = json::array();
    for (const auto& [m, n] : r.pairs) j["run"]["pairs"].push_back({m, n});
  }
  return j;
}

}  // namespace dvcert
