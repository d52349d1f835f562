#include "dvcert/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dvcert/exact.hpp"
#include "dvcert/instance.hpp"
#include "dvcert/montecarlo.hpp"
#include "dvcert/rate.hpp"
#include "dvcert/verify.hpp"

namespace dvcert {

using nlohmann::json;

namespace {

struct Args {
  std::string instance;
  std::string out;
  std::string mode;
  std::string mu;
  std::optional<std::uint64_t> seed_override;
  unsigned jobs = 1;
};

json ext_json(ExtReal x) { return x.is_infinite() ? json("inf") : json(x.value()); }

json vec_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

std::string label(const Instance& inst, State s) {
  return inst.finite ? inst.finite->labels()[static_cast<std::size_t>(s)] : std::to_string(s);
}

const FiniteChain& need_finite(const Instance& inst, const std::string& what) {
  if (!inst.finite) throw ParseError(what + " needs a finite chain");
  return *inst.finite;
}

bool y_is_everything(const Instance& inst) { return inst.finite && inst.Y.size() == inst.finite->size(); }

Vector parse_mu(const std::string& text, const Instance& inst, RateMode mode) {
  const FiniteChain& chain = *inst.finite;
  if (text == "stationary") {
    const Vector pi = stationary_distribution(chain);
    if (mode == RateMode::compact) return pi;
    Vector mu(static_cast<Eigen::Index>(inst.Y.size()));
    for (std::size_t i = 0; i < inst.Y.size(); ++i) mu[static_cast<Eigen::Index>(i)] = pi[inst.Y.Y[i]];
    return mu / mu.sum();
  }
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ParseError("--mu: cannot read \"" + item + "\"");
    }
  }
  Vector mu = Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
  const std::size_t want = mode == RateMode::compact ? chain.size() : inst.Y.size();
  if (static_cast<std::size_t>(mu.size()) != want)
    throw ParseError("--mu: expected " + std::to_string(want) + " entries");
  return mu;
}

void emit(const std::string& text, const Args& args, std::ostream& out) {
  out << text;
  if (!args.out.empty()) {
    std::ofstream file(args.out);
    if (!file) throw ParseError("cannot write " + args.out);
    file << text;
  }
}

int cmd_rate(const Instance& inst, const Args& args, std::ostream& out) {
  const FiniteChain& chain = need_finite(inst, "rate");
  RateMode mode = y_is_everything(inst) ? RateMode::compact : RateMode::constrained;
  if (args.mode == "compact") {
    if (!y_is_everything(inst)) throw ParseError("--mode compact needs Y to be the whole state space");
    mode = RateMode::compact;
  } else if (args.mode == "constrained") {
    mode = RateMode::constrained;
  } else if (!args.mode.empty()) {
    throw ParseError("rate: --mode must be compact or constrained");
  }
  if (args.mu.empty()) throw ParseError("rate: --mu is required");
  const Vector mu = parse_mu(args.mu, inst, mode);
  const RateResult r = mode == RateMode::compact ? rate_compact(chain, mu, inst.rate) : rate_constrained(chain, inst.Y, mu, inst.rate);

  json j;
  j["command"] = "rate";
  j["mode"] = mode == RateMode::compact ? "compact" : "constrained";
  j["mu"] = vec_json(mu);
  j["value"] = ext_json(r.value);
  j["status"] = to_string(r.status);
  j["gradient_norm"] = r.gradient_norm;
  j["iterations"] = r.iterations;
  j["max_violation"] = r.max_violation;
  if (r.maximizer) {
    j["maximizer"] = {{"anchor", r.maximizer->anchor}, {"phi", vec_json(r.maximizer->phi)},
                      {"u", vec_json(r.maximizer->u())}};
  } else {
    j["maximizer"] = nullptr;
  }
  emit(j.dump(2) + "\n", args, out);
  return r.status == RateStatus::max_iterations ? kExitNumeric : kExitOk;
}

json report_json(const Instance& inst, const ProbabilityReport& rep) {
  json starts = json::array();
  for (State s : rep.starts) starts.push_back(label(inst, s));
  return {{"n", rep.n},
          {"starts", starts},
          {"probability", rep.probability},
          {"escape_mass", rep.escape_mass},
          {"infimum", rep.infimum},
          {"argmin_start", label(inst, rep.argmin_start)}};
}

json estimate_json(const Instance& inst, std::size_t n, State x, const McEstimate& e) {
  return {{"n", n},
          {"start", label(inst, x)},
          {"point", e.point},
          {"low", e.low},
          {"high", e.high},
          {"samples", e.samples},
          {"successes", e.successes},
          {"truncated", e.truncated},
          {"truncated_mass", e.truncated_mass},
          {"seed", e.seed}};
}

std::vector<State> mc_starts(const Instance& inst) { return inst.run.starts.empty() ? inst.Y.Y_tilde : inst.run.starts; }

int cmd_prob(const Instance& inst, const Args& args, std::ostream& out) {
  const std::string mode = args.mode.empty() ? "exact" : args.mode;
  json j;
  j["command"] = "prob";
  j["mode"] = mode;
  j["seed"] = inst.run.seed;
  if (mode == "exact") {
    const FiniteChain& chain = need_finite(inst, "prob --mode exact");
    j["reports"] = json::array();
    for (std::size_t n : inst.run.n_list) {
      const auto rep = y_is_everything(inst) ? exact_prob_compact(chain, n, inst.C)
                                             : exact_prob_stopped(chain, inst.Y, n, inst.C);
      j["reports"].push_back(report_json(inst, rep));
    }
  } else if (mode == "mc") {
    j["estimates"] = json::array();
    for (std::size_t n : inst.run.n_list)
      for (State x : mc_starts(inst)) {
        if (inst.finite && !inst.finite->valid_state(x)) throw ParseError("run.starts: invalid state");
        const std::uint64_t seed = Rng(inst.run.seed).split(n * 1000003ULL + static_cast<std::uint64_t>(x)).next_u64();
        McEstimate e;
        if (inst.lazy)
          e = mc_prob_stopped(*inst.lazy, inst.Y, x, n, inst.C, inst.run.samples, inst.run.horizon, seed, args.jobs);
        else if (y_is_everything(inst))
          e = mc_prob_compact(*inst.finite, x, n, inst.C, inst.run.samples, seed, args.jobs);
        else
          e = mc_prob_stopped(*inst.finite, inst.Y, x, n, inst.C, inst.run.samples, inst.run.horizon, seed, args.jobs);
        j["estimates"].push_back(estimate_json(inst, n, x, e));
      }
  } else if (mode == "witness") {
    if (!inst.witness_u && !inst.witness_lazy) throw ParseError("prob --mode witness: instance has no witness");
    j["bounds"] = json::array();
    for (std::size_t n : inst.run.n_list) {
      const WitnessBound wb = inst.lazy ? witness_bound(*inst.lazy, inst.Y, *inst.witness_lazy, inst.C, n)
                                        : witness_bound(*inst.finite, inst.Y, *inst.witness_u, inst.C, n);
      j["bounds"].push_back({{"n", n},
                             {"bound", wb.bound},
                             {"exponent", wb.exponent},
                             {"informative", wb.informative},
                             {"mu_star", vec_json(wb.mu_star)}});
    }
  } else {
    throw ParseError("prob: --mode must be exact, mc or witness");
  }
  emit(j.dump(2) + "\n", args, out);
  return kExitOk;
}

VerifyOptions verify_options(const Instance& inst, const Args& args) {
  VerifyOptions o;
  o.tol = inst.run.tol;
  o.seed = inst.run.seed;
  o.mc_fallback = inst.run.mc_fallback;
  o.samples = inst.run.samples;
  o.horizon = inst.run.horizon;
  o.jobs = args.jobs;
  o.infimum.rate = inst.rate;
  return o;
}

int cmd_verify(const Instance& inst, const Args& args, std::ostream& out) {
  const VerifyOptions opts = verify_options(inst, args);
  std::string mode = args.mode;
  if (mode.empty()) mode = inst.lazy ? "witness" : (y_is_everything(inst) ? "corollary" : "theorem");
  std::vector<VerificationRow> rows;
  if (mode == "witness") {
    if (inst.lazy) {
      if (!inst.witness_lazy) throw ParseError("verify --mode witness: instance has no witness");
      rows = verify_witness(*inst.lazy, inst.Y, inst.C, inst.run.n_list, *inst.witness_lazy, mc_starts(inst), opts);
    } else {
      if (!inst.witness_u) throw ParseError("verify --mode witness: instance has no witness");
      rows = verify_witness(*inst.finite, inst.Y, inst.C, inst.run.n_list, *inst.witness_u, opts);
    }
  } else if (mode == "theorem") {
    rows = verify_theorem(need_finite(inst, "verify --mode theorem"), inst.Y, inst.C, inst.run.n_list, opts);
  } else if (mode == "corollary") {
    if (!y_is_everything(inst)) throw ParseError("verify --mode corollary needs Y to be the whole state space");
    rows = verify_corollary(*inst.finite, inst.C, inst.run.n_list, opts);
  } else {
    throw ParseError("verify: --mode must be theorem, corollary or witness");
  }
  emit(to_csv(rows), args, out);
  for (const auto& r : rows)
    if (!r.holds) return kExitRowFailed;
  return kExitOk;
}

int cmd_trend(const Instance& inst, const Args& args, std::ostream& out) {
  const FiniteChain& chain = need_finite(inst, "trend");
  if (!y_is_everything(inst)) throw ParseError("trend needs Y to be the whole state space");
  const TrendReport rep = convergence_trend(chain, inst.C, inst.run.n_list, InfimumOptions{inst.rate});
  std::string text = to_csv(rep);
  bool ok = rep.bound_ok && rep.doubling_ok;
  if (!inst.run.pairs.empty()) {
    std::ostringstream extra;
    extra.precision(17);
    extra << "m,n,phi_m,phi_n,phi_m_plus_n,holds\n";
    for (const auto& r : verify_supermultiplicative(chain, inst.C, inst.run.pairs)) {
      extra << r.m << ',' << r.n << ',' << r.phi_m << ',' << r.phi_n << ',' << r.phi_sum << ','
            << (r.holds ? "true" : "false") << '\n';
      ok = ok && r.holds;
    }
    text += "\n" + extra.str();
  }
  emit(text, args, out);
  return ok ? kExitOk : kExitRowFailed;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Certified large-deviation upper bounds for empirical measures of Markov chains", "dvcert"};
  app.require_subcommand(1);
  Args args;
  std::uint64_t seed_override = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--instance", args.instance, "Instance file (JSON)")->required();
    sub->add_option("--out", args.out, "Also write the report to this file");
    sub->add_option("--mode", args.mode, "Mode for this subcommand");
    sub->add_option("--seed-override", seed_override, "Replace run.seed from the instance");
    sub->add_option("--jobs", args.jobs, "Worker threads for sampling")->check(CLI::PositiveNumber);
  };
  auto* rate = app.add_subcommand("rate", "Rate functional at a measure");
  add_common(rate);
  rate->add_option("--mu", args.mu, "\"stationary\" or comma-separated weights");
  auto* prob = app.add_subcommand("prob", "Event probabilities (exact, mc or witness)");
  add_common(prob);
  auto* verify = app.add_subcommand("verify", "Check the bound row by row");
  add_common(verify);
  auto* trend = app.add_subcommand("trend", "Finite-n rates against the limiting rate");
  add_common(trend);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitParse;
  }
  for (auto* sub : {rate, prob, verify, trend})
    if (sub->count("--seed-override")) args.seed_override = seed_override;

  try {
    Instance inst = load_instance(args.instance);
    if (args.seed_override) inst.run.seed = *args.seed_override;
    if (*rate) return cmd_rate(inst, args, out);
    if (*prob) return cmd_prob(inst, args, out);
    if (*verify) return cmd_verify(inst, args, out);
    return cmd_trend(inst, args, out);
  } catch (const CertificateRefused& e) {
    err << e.what() << '\n';
    for (const auto& v : e.violations()) err << "  state " << v.state << ": Pu - u = " << v.deficit << '\n';
    return kExitRefused;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitParse;
  } catch (const SizeGuardError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
}

}  // namespace dvcert
