#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bloom/io.hpp"
#include "bloom/lower_bound.hpp"
#include "bloom/sparse_bound.hpp"
#include "bloom/version.hpp"

namespace bloom {

inline const std::vector<std::string>& known_suites() {
  static const std::vector<std::string> s{"dyadic", "kernel-cert", "lemma-s2", "upper", "lower-median", "lower-awf"};
  return s;
}

struct SpaceSource {
  std::optional<std::string> file;
  std::optional<Json> document;
  std::string kind = "grid-1d";
  int size = 16;
  std::uint64_t seed = 0;
  double epsilon = 0.5;
};

/// Explicit values, or log-uniform in [−spread, spread] with a seed; spread 0 gives λ ≡ 1.
struct WeightSource {
  std::optional<RealVector> values;
  double spread = 0.0;
  std::uint64_t seed = 0;
};

struct SymbolSource {
  std::string kind = "real";  ///< real | complex | signs | values
  std::uint64_t seed = 0;
  std::optional<ComplexVector> values;
};

struct ExperimentConfig {
  SpaceSource space;
  KernelSpec kernel;
  WeightSource lambda1, lambda2;
  SymbolSource symbol;
  double p = 2.0, q = 2.0;
  std::vector<std::string> suites;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> dyadic_seeds{1, 2, 3};
  int systems = 3;
  std::optional<double> delta;
  double tol = 1e-9;
  std::string output;
  Json echo;
};

namespace detail {

inline std::uint64_t seed_field(const Json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0))
    throw ConfigError(path, "expected a nonnegative integer");
  return j.get<std::uint64_t>();
}

inline WeightSource weight_source(const Json& j, const std::string& path) {
  WeightSource w;
  if (j.is_array()) {
    w.values = real_array(j, path);
    require_positive(*w.values);
    return w;
  }
  if (!j.is_object()) throw ConfigError(path, "expected an array or {spread, seed}");
  if (j.contains("spread")) w.spread = number(j.at("spread"), path + ".spread");
  if (j.contains("seed")) w.seed = seed_field(j.at("seed"), path + ".seed");
  if (w.spread < 0.0) throw ConfigError(path + ".spread", "must be nonnegative");
  return w;
}

inline RealVector realise(const WeightSource& w, int n, const std::string& path) {
  if (w.values) {
    if (w.values->size() != n) throw ConfigError(path, "length differs from the space size");
    return *w.values;
  }
  return w.spread == 0.0 ? RealVector::Ones(n) : random_weight(n, w.seed, w.spread);
}

inline ComplexVector realise(const SymbolSource& b, int n) {
  if (b.values) {
    if (b.values->size() != n) throw ConfigError("symbol.values", "length differs from the space size");
    return *b.values;
  }
  if (b.kind == "complex") return random_complex(n, b.seed);
  if (b.kind == "signs") return random_signs(n, b.seed);
  return to_complex(random_real(n, b.seed));
}

}  // namespace detail

/// Parses and validates a configuration document; errors carry the field path.
inline ExperimentConfig parse_config(const Json& j) {
  if (!j.is_object()) throw ConfigError("$", "configuration must be an object");
  ExperimentConfig c;
  c.echo = j;
  const auto& sp = detail::field(j, "space", "$");
  if (sp.is_object() && sp.contains("file")) {
    c.space.file = sp.at("file").get<std::string>();
  } else if (sp.is_object() && sp.contains("points")) {
    c.space.document = sp;
  } else if (sp.is_object() && sp.contains("generator")) {
    const auto& g = sp.at("generator");
    c.space.kind = detail::field(g, "kind", "space.generator").get<std::string>();
    c.space.size = detail::field(g, "size", "space.generator").get<int>();
    if (g.contains("seed")) c.space.seed = detail::seed_field(g.at("seed"), "space.generator.seed");
    if (g.contains("epsilon")) c.space.epsilon = detail::number(g.at("epsilon"), "space.generator.epsilon");
    static const std::vector<std::string> kinds{"grid-1d", "grid-2d", "random-cloud", "snowflake", "tree"};
    if (std::find(kinds.begin(), kinds.end(), c.space.kind) == kinds.end())
      throw ConfigError("space.generator.kind", "unknown generator '" + c.space.kind + "'");
    if (c.space.size < 2) throw ConfigError("space.generator.size", "must be at least 2");
    if (c.space.size > 1024) throw ConfigError("space.generator.size", "must not exceed 1024");
  } else {
    throw ConfigError("space", "expected {file}, {generator} or an inline space document");
  }
  c.kernel = j.contains("kernel") ? kernel_from_json(j.at("kernel")) : KernelSpec{};
  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    if (w.contains("lambda1")) c.lambda1 = detail::weight_source(w.at("lambda1"), "weights.lambda1");
    if (w.contains("lambda2")) c.lambda2 = detail::weight_source(w.at("lambda2"), "weights.lambda2");
  }
  if (j.contains("symbol")) {
    const auto& b = j.at("symbol");
    if (b.is_array()) {
      c.symbol.kind = "values";
      c.symbol.values = vector_from_json(b, "symbol");
    } else {
      if (b.contains("kind")) c.symbol.kind = b.at("kind").get<std::string>();
      if (b.contains("seed")) c.symbol.seed = detail::seed_field(b.at("seed"), "symbol.seed");
      if (c.symbol.kind != "real" && c.symbol.kind != "complex" && c.symbol.kind != "signs")
        throw ConfigError("symbol.kind", "must be real, complex or signs");
    }
  }
  if (j.contains("exponents")) {
    const auto& e = j.at("exponents");
    if (e.contains("p")) c.p = detail::number(e.at("p"), "exponents.p");
    if (e.contains("q")) c.q = detail::number(e.at("q"), "exponents.q");
  }
  if (!(c.p > 1.0) || !std::isfinite(c.q)) throw ConfigError("exponents", "need 1 < p <= q < infinity");
  if (c.p > c.q) throw ConfigError("exponents", "p must not exceed q");
  const auto& su = detail::field(j, "suites", "$");
  if (!su.is_array() || su.empty()) throw ConfigError("suites", "expected a nonempty array");
  for (std::size_t i = 0; i < su.size(); ++i) {
    const auto name = su[i].get<std::string>();
    if (std::find(known_suites().begin(), known_suites().end(), name) == known_suites().end())
      throw ConfigError("suites[" + std::to_string(i) + "]", "unknown suite '" + name + "'");
    c.suites.push_back(name);
  }
  if (j.contains("seed")) c.seed = detail::seed_field(j.at("seed"), "seed");
  if (j.contains("dyadic")) {
    const auto& d = j.at("dyadic");
    if (d.contains("systems")) c.systems = d.at("systems").get<int>();
    if (d.contains("delta")) c.delta = detail::number(d.at("delta"), "dyadic.delta");
    if (d.contains("seeds")) {
      c.dyadic_seeds.clear();
      for (std::size_t i = 0; i < d.at("seeds").size(); ++i)
        c.dyadic_seeds.push_back(detail::seed_field(d.at("seeds")[i], "dyadic.seeds[" + std::to_string(i) + "]"));
    }
    if (c.systems < 1) throw ConfigError("dyadic.systems", "must be at least 1");
    if (static_cast<int>(c.dyadic_seeds.size()) < c.systems) throw ConfigError("dyadic.seeds", "fewer seeds than systems");
    if (c.delta && !(*c.delta > 0.0 && *c.delta < 1.0)) throw ConfigError("dyadic.delta", "must lie in (0,1)");
  }
  if (j.contains("tolerance")) c.tol = detail::number(j.at("tolerance"), "tolerance");
  if (j.contains("output")) c.output = j.at("output").get<std::string>();
  const bool median = std::find(c.suites.begin(), c.suites.end(), "lower-median") != c.suites.end();
  if (median && (c.symbol.kind == "complex" || (c.symbol.values && !is_real(*c.symbol.values))))
    throw ConfigError("symbol", "lower-median needs a real-valued symbol");
  return c;
}

inline SpaceModel realise_space(const ExperimentConfig& c) {
  if (c.space.file) return load_space(*c.space.file);
  if (c.space.document) return space_from_json(*c.space.document);
  return generate_space(c.space.kind, c.space.size, c.space.seed, c.space.epsilon);
}

/// Shared state handed from suite to suite.
struct Context {
  const ExperimentConfig& config;
  SpaceModel space;
  SpaceProfile profile;
  std::vector<Ball> balls;
  RealVector l1, l2;
  ComplexVector b;
  OperatorMatrix op;
  double delta = 0.25;
  std::optional<KernelCertificate> cert, cert_adjoint;
  std::optional<double> theta;
};

namespace detail {

inline const KernelCertificate& certificate(Context& cx) {
  if (!cx.cert) cx.cert = certify(cx.op.kernel, cx.space, cx.profile);
  return *cx.cert;
}

inline const KernelCertificate& adjoint_certificate(Context& cx) {
  if (!cx.cert_adjoint) cx.cert_adjoint = certify(adjoint(cx.op).kernel, cx.space, cx.profile);
  return *cx.cert_adjoint;
}

inline Json nondeg_json(const SpaceModel& s, const NonDegeneracy& n) {
  return {{"holds", n.holds()}, {"c0", num(n.c0)}, {"annulus_ratio", n.cbar},
          {"witness_center", n.witness_center >= 0 ? Json(s.ids()[static_cast<std::size_t>(n.witness_center)]) : Json(nullptr)},
          {"witness_radius", n.witness_radius}, {"checked", n.checked}, {"skipped", n.skipped}};
}

inline Json suite_dyadic(Context& cx) {
  const auto& c = cx.config;
  Json out{{"delta", cx.delta}, {"systems", Json::array()}};
  bool ok = true;
  RealVector absb = cx.b.cwiseAbs();
  for (int t = 0; t < c.systems; ++t) {
    auto sys = std::make_shared<const DyadicSystem>(build_dyadic_tree(cx.space, cx.delta, c.dyadic_seeds[static_cast<std::size_t>(t)]));
    const auto ax = verify_dyadic_axioms(*sys, cx.space);
    const auto fam = stopping_family(sys, cx.space, absb);
    const auto aug = augment_sparse_family(cx.b, fam, cx.space);
    const auto sp = verify_sparse(aug.family, cx.space);
    const bool exact = aug.family.eta == fam.eta / (2.0 * (fam.eta + 1.0));
    Json viol = Json::array();
    for (const auto& v : ax.violations) viol.push_back({{"axiom", v.axiom}, {"generation", v.gen}, {"detail", v.detail}});
    out["systems"].push_back({{"seed", sys->seed}, {"generations", sys->depth()}, {"axioms_ok", ax.ok()}, {"a_dy", ax.a_dy},
                              {"A_dy", ax.A_dy}, {"branching", ax.branching}, {"violations", viol},
                              {"augmented_cubes", aug.family.size()}, {"augmented_eta", aug.family.eta},
                              {"augmented_sparse", sp.ok}, {"worst_witness_ratio", num(sp.worst_ratio)},
                              {"oscillation_constant", num(aug.constant)}});
    ok = ok && ax.ok() && ax.a_dy > 0.0 && sp.ok && exact;
  }
  out["status"] = ok ? "pass" : "violation";
  return out;
}

inline Json suite_kernel(Context& cx) {
  const auto& k = certificate(cx);
  Json env = Json::array();
  for (const auto& e : k.envelope) env.push_back({e.t, e.omega});
  const bool dini_ok = std::isfinite(k.dini);
  return {{"status", dini_ok && std::isfinite(k.c_k) ? "pass" : "violation"},
          {"size_constant", k.c_k},
          {"dini", num(k.dini)},
          {"dini_tail", k.dini_tail},
          {"subadditivity_defect", k.subadditivity_defect},
          {"nondegenerate_around_x", nondeg_json(cx.space, k.nondeg_y)},
          {"nondegenerate_around_y", nondeg_json(cx.space, k.nondeg_x)},
          {"weak_type", k.weak_type_c},
          {"adjoint_size_bound", adjoint_size_bound(k)},
          {"certified_xi", certified_xi(k)},
          {"envelope", env}};
}

inline Json suite_s2(Context& cx) {
  const auto r = verify_lemma_s2(cx.space, cx.l1, cx.l2, cx.config.p, cx.config.q, cx.profile.q, cx.balls, cx.config.tol);
  Json viol = Json::array();
  for (const auto& v : r.violations) viol.push_back({{"ball", ball_json(cx.space, v.ball)}, {"ratio", v.ratio}});
  return {{"status", r.ok() ? "pass" : "violation"}, {"balls", r.balls}, {"char1", r.char1}, {"char2", r.char2},
          {"nu_As", r.nu_as}, {"min_ratio", r.min_ratio}, {"max_ratio", r.max_ratio}, {"As_bound_ok", r.as_bound_ok},
          {"violations", viol}};
}

inline Json suite_upper(Context& cx) {
  const auto& c = cx.config;
  const auto sys = build_dyadic_tree(cx.space, cx.delta, c.dyadic_seeds.front());
  const auto tests = upper_test_corpus(cx.space, cx.b, cx.op, cx.l1, c.p, cx.l2, c.q, sys, c.seed);
  const auto r = verify_upper_bound(cx.space, cx.b, cx.op, c.p, c.q, cx.l1, cx.l2, cx.profile.q, tests, c.systems,
                                    c.dyadic_seeds, cx.delta);
  Json rows = Json::array();
  double sharp = 0.0;
  for (const auto& row : r.rows) {
    Json sparse = Json::array();
    for (const auto& s : row.sparse) {
      sparse.push_back({{"lhs", s.lhs}, {"tracked_bound", s.tracked_bound}, {"depth", s.depth}, {"holds", s.holds(c.tol)},
                        {"sharpness", num(s.sharpness())}});
      sharp = std::max(sharp, s.sharpness());
    }
    rows.push_back({{"f", row.label}, {"ratio", row.ratio}, {"commutator_norm", row.commutator_norm},
                    {"f_norm", row.f_norm}, {"c_dom", num(row.c_dom)}, {"dominated", row.dominated}, {"sparse", sparse}});
  }
  const bool ok = r.skipped || (r.dominated() && r.sparse_chain_ok() && std::isfinite(r.max_ratio));
  return {{"status", ok ? "pass" : "violation"}, {"skipped", r.skipped}, {"bmo", r.bmo}, {"char1", r.char1},
          {"char2", r.char2}, {"max_ratio", num(r.max_ratio)}, {"max_c_dom", num(r.max_c_dom)},
          {"max_sharpness", num(sharp)}, {"rows", rows}};
}

inline double theta(Context& cx) {
  if (!cx.theta) {
    const auto m = commutator_matrix(cx.b, cx.op);
    const auto& c = cx.config;
    const auto method = c.p == 2.0 && c.q == 2.0 ? NormMethod::SvdExact : NormMethod::MultistartAscent;
    AscentOptions opt;
    opt.seed = c.seed;
    cx.theta = operator_norm(m, cx.space.measure(), c.p, cx.l1, c.q, cx.l2, method, opt).lower;
  }
  return *cx.theta;
}

inline Json suite_lower(Context& cx, LowerMethod method) {
  const double th = theta(cx);
  const auto* adj = method == LowerMethod::Awf ? &adjoint_certificate(cx) : nullptr;
  const auto r = lower_bound_bmo(cx.space, cx.b, cx.op, cx.config.p, cx.config.q, cx.l1, cx.l2, th, method, cx.profile, adj);
  Json rows = Json::array(), skips = Json::array();
  for (const auto& row : r.rows) {
    if (!row.skip.empty()) {
      skips.push_back({{"ball", ball_json(cx.space, row.base)}, {"reason", row.skip}});
      continue;
    }
    if (row.chain.empty()) continue;
    rows.push_back({{"ball", ball_json(cx.space, row.base)}, {"companion", ball_json(cx.space, row.tilde)},
                    {"chain", row.chain}, {"chain_ok", row.chain_ok}, {"constant", row.constant}, {"term", row.term},
                    {"theorem_ok", row.theorem_ok}, {"A", row.a}, {"eps", row.eps}, {"xi", row.xi}, {"xi_dual", row.xi_dual}});
  }
  const bool ok = r.chains_ok() && std::isfinite(r.ratio);
  return {{"status", ok ? "pass" : "violation"}, {"theta", th}, {"bmo", r.bmo}, {"char1", r.char1}, {"char2", r.char2},
          {"ratio", num(r.ratio)}, {"max_constant", r.max_constant}, {"balls", r.balls}, {"skipped", r.skipped},
          {"skip_rate", r.skip_rate()}, {"rows", rows}, {"skips", skips}};
}

}  // namespace detail

/// Report layout: artifact, config, space, suites, timings. Everything except
/// `timings` is a deterministic function of the configuration.
inline Json run(const ExperimentConfig& c) {
  using clock = std::chrono::steady_clock;
  Json report;
  report["artifact"] = {{"name", "bloom"}, {"version", version}};
  report["config"] = c.echo;
  Json timings;
  auto t0 = clock::now();
  SpaceModel s = realise_space(c);
  const auto prof = doubling_profile(s);
  const int n = s.size();
  Context cx{c, s, prof, distinct_balls(s), detail::realise(c.lambda1, n, "weights.lambda1"),
             detail::realise(c.lambda2, n, "weights.lambda2"), detail::realise(c.symbol, n), make_operator(c.kernel, s),
             c.delta.value_or(default_delta(prof.a0)), {}, {}, {}};
  report["space"] = {{"size", n}, {"A0", prof.a0}, {"degenerate", prof.degenerate}, {"C_mu", prof.c_mu},
                     {"upper_dimension", prof.q}, {"geometric_doubling", prof.n_geo}, {"distinct_balls", cx.balls.size()}};
  timings["space"] = std::chrono::duration<double>(clock::now() - t0).count();

  const std::map<std::string, std::function<Json(Context&)>> table{
      {"dyadic", detail::suite_dyadic},
      {"kernel-cert", detail::suite_kernel},
      {"lemma-s2", detail::suite_s2},
      {"upper", detail::suite_upper},
      {"lower-median", [](Context& x) { return detail::suite_lower(x, LowerMethod::Median); }},
      {"lower-awf", [](Context& x) { return detail::suite_lower(x, LowerMethod::Awf); }}};
  Json suites = Json::object();
  for (const auto& name : known_suites()) {
    if (std::find(c.suites.begin(), c.suites.end(), name) == c.suites.end()) continue;
    const auto start = clock::now();
    try {
      suites[name] = table.at(name)(cx);
    } catch (const CapabilityError& e) {
      suites[name] = {{"status", "capability"}, {"reason", e.what()}};
    } catch (const ConsistencyError& e) {
      suites[name] = {{"status", "violation"}, {"reason", e.what()}};
    } catch (const Error& e) {
      suites[name] = {{"status", "error"}, {"reason", e.what()}};
    }
    timings[name] = std::chrono::duration<double>(clock::now() - start).count();
  }
  report["suites"] = suites;
  report["timings"] = timings;
  return report;
}

inline bool has_violation(const Json& report) {
  for (const auto& [name, suite] : report.at("suites").items())
    if (suite.at("status") == "violation" || suite.at("status") == "error") return true;
  return false;
}

/// Per-row CSV tables for plotting, keyed by suite name.
inline std::map<std::string, std::string> csv_tables(const Json& report) {
  std::map<std::string, std::string> out;
  const auto& suites = report.at("suites");
  for (const char* name : {"lower-median", "lower-awf"}) {
    if (!suites.contains(name) || !suites[name].contains("rows")) continue;
    std::ostringstream csv;
    csv << "center,radius,size,constant,term,chain_ok,theorem_ok\n";
    for (const auto& r : suites[name]["rows"])
      csv << r["ball"]["center"].get<std::string>() << ',' << r["ball"]["radius"] << ',' << r["ball"]["size"] << ','
          << r["constant"] << ',' << r["term"] << ',' << r["chain_ok"] << ',' << r["theorem_ok"] << '\n';
    out[name] = csv.str();
  }
  if (suites.contains("upper") && suites["upper"].contains("rows")) {
    std::ostringstream csv;
    csv << "f,ratio,c_dom,dominated\n";
    for (const auto& r : suites["upper"]["rows"])
      csv << r["f"].get<std::string>() << ',' << r["ratio"] << ',' << r["c_dom"] << ',' << r["dominated"] << '\n';
    out["upper"] = csv.str();
  }
  return out;
}

}  // namespace bloom
