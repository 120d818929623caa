// Command-line front end. Exit codes: 0 ok, 1 violation, 2 config error,
// 3 capability exhaustion.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "bloom/experiment.hpp"

namespace {

using bloom::Json;

enum Exit { Ok = 0, Violation = 1, BadConfig = 2, Capability = 3 };

struct Common {
  std::string space_file;
  std::string generator = "grid-1d";
  int size = 16;
  double epsilon = 0.5;
  std::string kernel = "power-sign";
  std::string orientation = "coordinate";
  double spread1 = 0.0, spread2 = 0.0;
  std::string symbol = "real";
  double p = 2.0, q = 2.0;
  std::uint64_t seed = 0;
  double tol = 1e-9;
  std::string out;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--space", c.space_file, "Space document (JSON)");
  app->add_option("--generator", c.generator, "grid-1d | grid-2d | random-cloud | snowflake | tree");
  app->add_option("--size", c.size, "Number of points for generated spaces");
  app->add_option("--epsilon", c.epsilon, "Snowflake exponent");
  app->add_option("--kernel", c.kernel, "power-sign | riesz-like | hilbert-grid");
  app->add_option("--orientation", c.orientation, "power-sign orientation: coordinate | constant");
  app->add_option("--spread1", c.spread1, "log-uniform spread of lambda1 (0: unweighted)");
  app->add_option("--spread2", c.spread2, "log-uniform spread of lambda2 (0: unweighted)");
  app->add_option("--symbol", c.symbol, "real | complex | signs");
  app->add_option("-p", c.p, "Source exponent");
  app->add_option("-q", c.q, "Target exponent");
  app->add_option("--seed", c.seed, "Seed for generators and estimators");
  app->add_option("--tol", c.tol, "Comparison tolerance");
  app->add_option("--out", c.out, "Write the JSON result here instead of stdout");
}

Json config_json(const Common& c, const std::vector<std::string>& suites) {
  Json j;
  if (!c.space_file.empty()) j["space"] = {{"file", c.space_file}};
  else j["space"] = {{"generator", {{"kind", c.generator}, {"size", c.size}, {"seed", c.seed}, {"epsilon", c.epsilon}}}};
  j["kernel"] = {{"family", c.kernel}, {"orientation", c.orientation}};
  j["weights"] = {{"lambda1", {{"spread", c.spread1}, {"seed", c.seed + 101}}},
                  {"lambda2", {{"spread", c.spread2}, {"seed", c.seed + 202}}}};
  j["symbol"] = {{"kind", c.symbol}, {"seed", c.seed + 303}};
  j["exponents"] = {{"p", c.p}, {"q", c.q}};
  j["suites"] = suites;
  j["seed"] = c.seed;
  j["tolerance"] = c.tol;
  return j;
}

void emit(const Json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(out);
  if (!f) throw bloom::ConfigError("--out", "cannot write '" + out + "'");
  f << j.dump(2) << '\n';
}

int emit_report(const Json& report, const std::string& out) {
  emit(report, out);
  if (!out.empty())
    for (const auto& [name, csv] : bloom::csv_tables(report)) std::ofstream(out + "." + name + ".csv") << csv;
  return bloom::has_violation(report) ? Violation : Ok;
}

struct Loaded {
  bloom::ExperimentConfig config;
  bloom::SpaceModel space;
  bloom::SpaceProfile profile;
  bloom::RealVector l1, l2;
  bloom::ComplexVector b;
  bloom::OperatorMatrix op;
};

Loaded load(const Common& c) {
  auto cfg = bloom::parse_config(config_json(c, {"lemma-s2"}));
  auto s = bloom::realise_space(cfg);
  auto prof = bloom::doubling_profile(s);
  const int n = s.size();
  auto l1 = bloom::detail::realise(cfg.lambda1, n, "weights.lambda1");
  auto l2 = bloom::detail::realise(cfg.lambda2, n, "weights.lambda2");
  auto b = bloom::detail::realise(cfg.symbol, n);
  auto op = bloom::make_operator(cfg.kernel, s);
  return {std::move(cfg), std::move(s), prof, std::move(l1), std::move(l2), std::move(b), std::move(op)};
}

int find_point(const bloom::SpaceModel& s, const std::string& id) {
  const auto& ids = s.ids();
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw bloom::ConfigError("--center", "no point '" + id + "'");
  return static_cast<int>(it - ids.begin());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bloom commutator bounds on finite spaces of homogeneous type"};
  app.require_subcommand(1);
  Common c;
  std::string suite_filter, config_file, norm_method = "svd-exact", lower_method = "median", center;
  double radius = 0.0;
  bool commutator = false;

  auto* space = app.add_subcommand("space", "Space tools");
  auto* space_profile = space->add_subcommand("profile", "A0, C_mu, upper dimension, distinct balls");
  add_common(space_profile, c);
  space->require_subcommand(1);

  auto* dyadic = app.add_subcommand("dyadic", "Dyadic systems");
  auto* dyadic_build = dyadic->add_subcommand("build", "Build one system and print its cubes");
  auto* dyadic_verify = dyadic->add_subcommand("verify", "Build adjacent systems and check every axiom");
  add_common(dyadic_build, c);
  add_common(dyadic_verify, c);
  dyadic->require_subcommand(1);

  auto* weights = app.add_subcommand("weights", "Weight characteristics");
  auto* w_char = weights->add_subcommand("char", "[lambda1]_{A_pp}, [lambda2]_{A_qq}");
  auto* w_bmo = weights->add_subcommand("bmo", "Fractional weighted BMO norm of the symbol");
  auto* w_s2 = weights->add_subcommand("s2", "Ball-wise two-weight comparison");
  for (auto* a : {w_char, w_bmo, w_s2}) add_common(a, c);
  weights->require_subcommand(1);

  auto* kernel = app.add_subcommand("kernel", "Kernel tools");
  auto* k_cert = kernel->add_subcommand("certify", "Size, smoothness, non-degeneracy, weak type");
  add_common(k_cert, c);
  kernel->require_subcommand(1);

  auto* op = app.add_subcommand("op", "Operator tools");
  auto* op_norm = op->add_subcommand("norm", "Weighted operator norm of T or [b,T]");
  add_common(op_norm, c);
  op_norm->add_option("--method", norm_method, "svd-exact | brute-oracle | multistart-ascent");
  op_norm->add_flag("--commutator", commutator, "Norm of [b,T] instead of T");
  op->require_subcommand(1);

  auto* verify = app.add_subcommand("verify", "Bound verification");
  auto* v_upper = verify->add_subcommand("upper", "Upper bound with sparse domination");
  auto* v_lower = verify->add_subcommand("lower", "Per-ball lower bound chains");
  add_common(v_upper, c);
  add_common(v_lower, c);
  v_lower->add_option("--method", lower_method, "median | awf")->check(CLI::IsMember({"median", "awf"}));
  verify->require_subcommand(1);

  auto* awf = app.add_subcommand("awf", "Approximate weak factorisation");
  auto* awf_dec = awf->add_subcommand("decompose", "Factorise the oscillation test function of one ball");
  auto* median = app.add_subcommand("median", "Median method");
  auto* med_dec = median->add_subcommand("decompose", "Median sets of one ball against its companion");
  for (auto* a : {awf_dec, med_dec}) {
    add_common(a, c);
    a->add_option("--center", center, "Ball center id")->required();
    a->add_option("--radius", radius, "Ball radius")->required();
  }
  awf->require_subcommand(1);
  median->require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a configuration document");
  run->add_option("config", config_file, "Configuration (JSON)")->required();
  run->add_option("--suite", suite_filter, "Run only this suite");
  run->add_option("--seed", c.seed, "Override the configuration seed");
  run->add_option("--tol", c.tol, "Override the configuration tolerance");
  run->add_option("--out", c.out, "Report path");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto suite = [&](const std::string& name) {
      return emit_report(bloom::run(bloom::parse_config(config_json(c, {name}))), c.out);
    };

    if (run->parsed()) {
      Json j = bloom::read_json_file(config_file);
      if (!suite_filter.empty()) j["suites"] = Json::array({suite_filter});
      if (run->count("--seed")) j["seed"] = c.seed;
      if (run->count("--tol")) j["tolerance"] = c.tol;
      const auto cfg = bloom::parse_config(j);
      const std::string out = c.out.empty() ? cfg.output : c.out;
      return emit_report(bloom::run(cfg), out);
    }
    if (dyadic_verify->parsed()) return suite("dyadic");
    if (w_s2->parsed()) return suite("lemma-s2");
    if (k_cert->parsed()) return suite("kernel-cert");
    if (v_upper->parsed()) return suite("upper");
    if (v_lower->parsed()) return suite(lower_method == "median" ? "lower-median" : "lower-awf");

    auto L = load(c);
    if (space_profile->parsed()) {
      Json r = bloom::run(L.config).at("space");
      emit(r, c.out);
      return Ok;
    }
    if (dyadic_build->parsed()) {
      const auto sys = bloom::build_dyadic_tree(L.space, bloom::default_delta(L.profile.a0), c.seed);
      Json gens = Json::array();
      for (const auto& g : sys.generations) {
        Json cubes = Json::array();
        for (const auto& q : g.cubes)
          cubes.push_back({{"center", L.space.ids()[static_cast<std::size_t>(q.center)]}, {"members", bloom::point_set_json(L.space, q.members)}});
        gens.push_back({{"k", g.k}, {"cubes", cubes}});
      }
      emit({{"delta", sys.delta}, {"seed", sys.seed}, {"generations", gens}}, c.out);
      return Ok;
    }
    const auto balls = bloom::distinct_balls(L.space);
    if (w_char->parsed()) {
      const auto c1 = bloom::app_characteristic(L.space, L.l1, c.p, balls);
      const auto c2 = bloom::app_characteristic(L.space, L.l2, c.q, balls);
      emit({{"char1", c1.value}, {"witness1", bloom::ball_json(L.space, c1.witness)}, {"char2", c2.value},
            {"witness2", bloom::ball_json(L.space, c2.witness)}},
           c.out);
      return Ok;
    }
    if (w_bmo->parsed()) {
      const auto t = bloom::bloom_tuple(L.l1, L.l2, c.p, c.q, L.profile.q);
      const auto n = bloom::bmo_fractional_norm(L.space, L.b, t.nu, t.alpha_over_q, balls);
      emit({{"bmo", n.value}, {"witness", bloom::ball_json(L.space, n.witness)}, {"alpha", t.alpha}}, c.out);
      return Ok;
    }
    if (op_norm->parsed()) {
      const auto m = commutator ? bloom::commutator_matrix(L.b, L.op) : L.op.entries;
      bloom::AscentOptions opt;
      opt.seed = c.seed;
      const auto e = bloom::operator_norm(m, L.space.measure(), c.p, L.l1, c.q, L.l2, bloom::parse_norm_method(norm_method), opt);
      emit({{"method", bloom::to_string(e.method)}, {"lower", e.lower}, {"upper", bloom::num(e.upper)},
            {"evaluations", e.evaluations}, {"witness", bloom::vector_to_json(e.witness)}},
           c.out);
      return Ok;
    }
    const bloom::Ball base = bloom::ball(L.space, find_point(L.space, center), radius);
    if (med_dec->parsed()) {
      if (!bloom::is_real(L.b)) throw bloom::ConfigError("symbol", "median decomposition needs a real symbol");
      const auto comp = bloom::find_median_companion(L.space, L.op.kernel, base);
      const auto d = bloom::median_decomposition(L.space, bloom::RealVector(L.b.real()), base, comp.companion);
      emit({{"ball", bloom::ball_json(L.space, base)}, {"companion", bloom::ball_json(L.space, comp.companion)},
            {"median", d.alpha}, {"kappa", comp.kappa}, {"constant", comp.constant},
            {"E1", bloom::point_set_json(L.space, d.e1)}, {"E2", bloom::point_set_json(L.space, d.e2)},
            {"F1", bloom::point_set_json(L.space, d.f1)}, {"F2", bloom::point_set_json(L.space, d.f2)}},
           c.out);
      return Ok;
    }
    if (awf_dec->parsed()) {
      const auto cert = bloom::certify(L.op.kernel, L.space, L.profile);
      const auto r = bloom::bound_oscillation(L.space, L.b, L.op, base, bloom::Orientation::Opp, cert, L.profile);
      const auto& d = r.awf;
      const bool ok = d.residual <= 1e-9 * (1.0 + bloom::sup_norm(d.g1)) && d.error_in_e && d.mean <= 1e-12;
      emit({{"ball", bloom::ball_json(L.space, base)}, {"companion", bloom::ball_json(L.space, r.tilde)}, {"A", r.a},
            {"eps", r.eps}, {"xi", r.xi}, {"xi_dual", r.xi_dual}, {"xi_inflated", r.xi_inflated},
            {"residual", d.residual}, {"error_mean", d.mean}, {"error_in_E", d.error_in_e}, {"error_ratio", d.error_ratio},
            {"error_constant", bloom::num(d.error_constant)}, {"gh_constant", d.gh_constant}, {"threshold_ok", d.threshold_ok},
            {"oscillation", r.oscillation}, {"pairings", {std::abs(r.pairing1), std::abs(r.pairing2)}},
            {"error_term", r.error_term}, {"g1", bloom::vector_to_json(d.g1)}, {"h1", bloom::vector_to_json(d.h1)},
            {"g2", bloom::vector_to_json(d.g2)}, {"h2", bloom::vector_to_json(d.h2)},
            {"remainder", bloom::vector_to_json(d.error)}},
           c.out);
      return ok ? Ok : Violation;
    }
  } catch (const bloom::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return BadConfig;
  } catch (const bloom::ValidationError& e) {
    std::cerr << "invalid space (" << e.axiom() << "): " << e.what() << '\n';
    return BadConfig;
  } catch (const bloom::CapabilityError& e) {
    std::cerr << "capability: " << e.what() << '\n';
    return Capability;
  } catch (const bloom::DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return BadConfig;
  } catch (const bloom::Error& e) {
    std::cerr << "violation: " << e.what() << '\n';
    return Violation;
  }
  return Ok;
}
