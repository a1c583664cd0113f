#include "cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "swgauge/errors.hpp"
#include "swgauge/gauge_variational.hpp"
#include "swgauge/json_io.hpp"
#include "swgauge/sliced_distance.hpp"
#include "swgauge/wasserstein_calculus.hpp"

namespace swgauge::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

constexpr int kDefaultRuleNodes = 64;
constexpr int kDefaultLegendre = 128;
constexpr double kFiniteDifferenceStep = 1e-5;

template <typename T>
T pick(const std::optional<T>& flag, const json& cfg, const char* key, T fallback) {
  if (flag) return *flag;
  if (cfg.is_object() && cfg.contains(key)) return cfg.at(key).get<T>();
  return fallback;
}

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() ? p : base / p; }

const fs::path& required_path(const std::optional<fs::path>& p, const char* flag) {
  if (!p) throw InvalidInput(std::string("missing required option ") + flag);
  return *p;
}

// Flags override the "rule" object of a config file; k always follows the data.
SphereRule make_rule(const RunConfig& rc, const json& cfg, int k) {
  io::RuleSpec spec;
  if (cfg.is_object() && cfg.contains("rule")) spec = io::rule_spec_from_json(cfg.at("rule"));
  spec.k = k;
  if (!(cfg.is_object() && cfg.contains("rule") && cfg.at("rule").contains("n_nodes"))) spec.n_nodes = kDefaultRuleNodes;
  if (rc.rule_nodes) spec.n_nodes = *rc.rule_nodes;
  if (rc.rule_method) spec.method = parse_sphere_method(*rc.rule_method);
  if (rc.seed) spec.seed = *rc.seed;
  return spec.build();
}

void write_text(const RunConfig& rc, std::ostream& out, const std::string& text) {
  if (rc.out) {
    std::ofstream file(*rc.out);
    if (!file) throw InvalidInput("cannot write " + rc.out->string());
    file << text;
  } else {
    out << text;
  }
}

json base_report(const std::string& command) {
  return {{"command", command}, {"convention", kConventionTag}};
}

double require_positive_sigma(double sigma) {
  if (!(sigma > 0.0)) throw InvalidInput("--sigma must be > 0 for derivative commands");
  return sigma;
}

ExpectationRule expectation_rule(const RunConfig& rc, const json& cfg) {
  ExpectationRule rule;
  rule.order = pick<int>(rc.hermite, cfg, "hermite_order", kDefaultHermiteOrder);
  if (rule.order < kMinHermiteOrder) throw InvalidInput("--hermite must be >= 8");
  rule.method = parse_expectation_method(pick<std::string>(rc.expectation, cfg, "expectation", "panels"));
  return rule;
}

json expectation_to_json(const ExpectationRule& rule) {
  return {{"method", to_string(rule.method)}, {"order", rule.order}};
}

void cmd_dist(const RunConfig& rc, std::ostream& out) {
  const DiscreteMeasure mu = io::read_measure(required_path(rc.mu, "--mu"));
  const DiscreteMeasure nu = io::read_measure(required_path(rc.nu, "--nu"));
  const SmoothingLevel s(rc.sigma.value_or(0.0));
  const SphereRule rule = make_rule(rc, json(), mu.dim());
  const int legendre = rc.legendre.value_or(kDefaultLegendre);
  const SlicedDistanceReport report = sw2_sigma_squared(mu, nu, s, rule, legendre);

  json j = base_report("dist");
  j["inputs"] = {{"mu", io::measure_to_json(mu)},
                 {"nu", io::measure_to_json(nu)},
                 {"sigma", s.sigma()},
                 {"legendre_order", legendre},
                 {"rule", io::rule_to_json(rule)}};
  j["result"] = io::report_to_json(report);
  if (rc.sqrt_display) j["result"]["distance"] = std::sqrt(report.value);
  write_text(rc, out, j.dump(2) + "\n");
}

void cmd_derivative(const RunConfig& rc, std::ostream& out, bool second) {
  const DiscreteMeasure mu = io::read_measure(required_path(rc.mu, "--mu"));
  const DiscreteMeasure nu = io::read_measure(required_path(rc.nu, "--nu"));
  const SmoothingLevel s(require_positive_sigma(rc.sigma.value_or(0.0)));
  const SphereRule rule = make_rule(rc, json(), mu.dim());
  const ExpectationRule expectation = expectation_rule(rc, json());

  json j = base_report(second ? "hess" : "grad");
  j["inputs"] = {{"mu", io::measure_to_json(mu)},
                 {"nu", io::measure_to_json(nu)},
                 {"sigma", s.sigma()},
                 {"expectation", expectation_to_json(expectation)},
                 {"rule", io::rule_to_json(rule)}};
  json atoms = json::array();
  if (second) {
    const HessianField hess = hess_x_measure(mu, nu, s, rule, expectation);
    for (std::size_t i = 0; i < mu.size(); ++i) {
      atoms.push_back({{"atom", io::vector_to_json(mu.atom(i))}, {"hessian", io::matrix_to_json(hess.at_atoms()[i])}});
    }
    j["result"] = {{"per_atom", atoms},
                   {"second_bound", io::bound_to_json(second_bound(hess, mu, nu, s))},
                   {"diagnostics", io::diagnostics_to_json(hess.diagnostics())}};
  } else {
    const GradientField grad = grad_measure(mu, nu, s, rule, expectation);
    for (std::size_t i = 0; i < mu.size(); ++i) {
      atoms.push_back({{"atom", io::vector_to_json(mu.atom(i))}, {"gradient", io::vector_to_json(grad.at_atoms()[i])}});
    }
    j["result"] = {{"per_atom", atoms},
                   {"first_bound", io::bound_to_json(first_bound(grad, mu, nu, s))},
                   {"diagnostics", io::diagnostics_to_json(grad.diagnostics())}};
  }
  write_text(rc, out, j.dump(2) + "\n");
}

TimedMeasure candidate_from_json(const json& c, const fs::path& base, double horizon) {
  if (!c.is_object() || !c.contains("t") || !c.contains("measure")) {
    throw InvalidInput("each candidate needs 't' and 'measure'");
  }
  const json& m = c.at("measure");
  DiscreteMeasure mu = m.is_string() ? io::read_measure(resolve(base, m.get<std::string>())) : io::measure_from_json(m);
  return TimedMeasure(c.at("t").get<double>(), std::move(mu), horizon);
}

Objective objective_from_json(const json& spec, const fs::path& base, const Discretization& disc, double sigma) {
  const std::string type = spec.value("type", std::string("neg_second_moment"));
  const double time_weight = spec.value("time_weight", 0.0);
  if (type == "neg_second_moment") return objectives::negative_second_moment(time_weight);
  if (type == "neg_sw2_to_target") {
    if (!spec.contains("target")) throw InvalidInput("objective neg_sw2_to_target needs 'target'");
    const json& t = spec.at("target");
    DiscreteMeasure target =
        t.is_string() ? io::read_measure(resolve(base, t.get<std::string>())) : io::measure_from_json(t);
    return objectives::negative_sw2_to_target(std::move(target), SmoothingLevel(spec.value("sigma", sigma)), disc,
                                              time_weight);
  }
  if (type == "moment_linear") {
    const auto coeffs = spec.value("mean_coeffs", std::vector<double>{});
    Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
    return objectives::moment_linear(std::move(c), spec.value("second_moment_coeff", 0.0), time_weight);
  }
  throw InvalidInput("unknown objective type '" + type + "'");
}

void cmd_bp_solve(const RunConfig& rc, std::ostream& out) {
  const fs::path config_path = required_path(rc.config, "--config");
  const json cfg = io::read_json_file(config_path);
  const fs::path base = config_path.parent_path();

  const double horizon = pick<double>(rc.horizon, cfg, "horizon", 1.0);
  const double delta = pick<double>(rc.delta, cfg, "delta", 1.0);
  const double lambda = pick<double>(rc.lambda, cfg, "lambda", 1.0);
  if (!cfg.contains("candidates") || !cfg.at("candidates").is_array()) {
    throw InvalidInput(config_path.string() + ": missing 'candidates' array");
  }
  std::vector<TimedMeasure> candidates;
  for (const json& c : cfg.at("candidates")) candidates.push_back(candidate_from_json(c, base, horizon));
  const SearchSpace space(std::move(candidates));
  const GaugeParams params(delta, horizon);
  Discretization disc{make_rule(rc, cfg, space.dim()), expectation_rule(rc, cfg),
                      pick<int>(rc.legendre, cfg, "legendre_order", kDefaultLegendre)};
  const Objective objective = objective_from_json(cfg.value("objective", json::object()), base, disc, params.sigma());
  BPOptions options;
  options.max_iter = cfg.value("max_iter", options.max_iter);
  options.tolerance = cfg.value("tolerance", options.tolerance);
  const std::size_t start = cfg.value("start", std::size_t{0});

  const BPResult result = bp_solve(objective, space, start, lambda, params, disc, options);
  const ConclusionReport verified = verify_conclusions(result, objective, space, lambda, params, disc, options.tolerance);

  std::vector<std::size_t> probes;
  if (cfg.contains("probes")) {
    probes = cfg.at("probes").get<std::vector<std::size_t>>();
  } else {
    for (std::size_t i = 0; i < std::min<std::size_t>(space.size(), 10); ++i) probes.push_back(i);
  }
  json probe_reports = json::array();
  bool probes_hold = true;
  for (std::size_t p : probes) {
    if (p >= space.size()) throw InvalidInput("probe index outside the search space");
    const PhiDerivativeReport r = phi_derivative_bounds(space[p], result, params, disc);
    probes_hold = probes_hold && r.all_hold();
    json entry = io::phi_report_to_json(r);
    entry["candidate"] = p;
    probe_reports.push_back(entry);
  }

  json sequence = json::array();
  for (std::size_t idx : result.sequence_indices) sequence.push_back({{"candidate", idx}, {"t", space[idx].t()}});
  json j = base_report("bp-solve");
  j["inputs"] = {{"config", config_path.string()},
                 {"candidates", space.size()},
                 {"start", start},
                 {"horizon", horizon},
                 {"delta", delta},
                 {"sigma", params.sigma()},
                 {"lambda", lambda},
                 {"expectation", expectation_to_json(disc.expectation)},
                 {"legendre_order", disc.legendre_order},
                 {"rule", io::rule_to_json(disc.rule)},
                 {"objective", cfg.value("objective", json::object())}};
  j["result"] = {{"sequence", sequence},
                 {"selected", {{"candidate", result.selected}, {"t", space[result.selected].t()}}},
                 {"objective_values", result.objective_values},
                 {"phi_values", result.phi_values},
                 {"perturbed_values", result.perturbed_values},
                 {"conclusions", io::conclusions_to_json(result.conclusions)},
                 {"verification", io::conclusions_to_json(verified)},
                 {"derivative_bounds", probe_reports},
                 {"all_pass", verified.all_hold() && result.conclusions.all_hold() && probes_hold}};
  write_text(rc, out, j.dump(2) + "\n");

  std::ostringstream csv;
  csv.precision(17);
  csv << "step,selected,perturbed_value\n";
  for (const BPIteration& it : result.log) csv << it.step << ',' << it.selected << ',' << it.perturbed_value << '\n';
  std::optional<fs::path> log_path = rc.log;
  if (!log_path && rc.out) log_path = fs::path(*rc.out).replace_extension(".csv");
  if (log_path) {
    std::ofstream file(*log_path);
    if (!file) throw InvalidInput("cannot write " + log_path->string());
    file << csv.str();
  }
}

// Max relative gap between the gradient field and central differences of the
// lifted objective, scaled by 1/w_j.
std::pair<double, double> gradient_fd_error(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                            const SmoothingLevel& s, const SphereRule& rule,
                                            const ExpectationRule& expectation, int legendre) {
  const GradientField grad = grad_measure(mu, nu, s, rule, expectation);
  double max_abs = 0.0;
  double max_rel = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    for (int d = 0; d < mu.dim(); ++d) {
      Eigen::VectorXd step = Eigen::VectorXd::Zero(mu.dim());
      step[d] = kFiniteDifferenceStep;
      const double up = sw2_sigma_squared(mu.with_atom_shifted(j, step), nu, s, rule, legendre).value;
      const double down = sw2_sigma_squared(mu.with_atom_shifted(j, -step), nu, s, rule, legendre).value;
      const double fd = (up - down) / (2.0 * kFiniteDifferenceStep) / mu.weight(j);
      const double g = grad.at_atoms()[j][d];
      max_abs = std::max(max_abs, std::abs(fd - g));
      max_rel = std::max(max_rel, std::abs(fd - g) / std::max(std::abs(g), 1e-12));
    }
  }
  return {max_abs, max_rel};
}

void cmd_sweep(const RunConfig& rc, std::ostream& out) {
  const fs::path config_path = required_path(rc.config, "--config");
  const json cfg = io::read_json_file(config_path);
  const fs::path base = config_path.parent_path();
  if (!cfg.contains("mu") || !cfg.contains("nu")) throw InvalidInput("sweep config needs 'mu' and 'nu'");
  const DiscreteMeasure mu = io::read_measure(resolve(base, cfg.at("mu").get<std::string>()));
  const DiscreteMeasure nu = io::read_measure(resolve(base, cfg.at("nu").get<std::string>()));
  const std::string parameter = cfg.value("parameter", std::string());
  if (!cfg.contains("values") || !cfg.at("values").is_array()) throw InvalidInput("sweep config needs 'values'");
  const std::vector<double> values = cfg.at("values").get<std::vector<double>>();
  const double sigma = pick<double>(rc.sigma, cfg, "sigma", 0.0);
  const int legendre = pick<int>(rc.legendre, cfg, "legendre_order", kDefaultLegendre);

  std::ostringstream csv;
  csv.precision(17);
  if (parameter == "n_nodes") {
    csv << "n_nodes,value\n";
    RunConfig local = rc;
    for (double v : values) {
      local.rule_nodes = static_cast<int>(v);
      const SphereRule rule = make_rule(local, cfg, mu.dim());
      csv << *local.rule_nodes << ',' << sw2_sigma_squared(mu, nu, SmoothingLevel(sigma), rule, legendre).value
          << '\n';
    }
  } else if (parameter == "sigma") {
    const SphereRule rule = make_rule(rc, cfg, mu.dim());
    csv << "sigma,value\n";
    for (double v : values) csv << v << ',' << sw2_sigma_squared(mu, nu, SmoothingLevel(v), rule, legendre).value << '\n';
  } else if (parameter == "hermite_order") {
    const SphereRule rule = make_rule(rc, cfg, mu.dim());
    const SmoothingLevel s(require_positive_sigma(sigma));
    csv << "hermite_order,max_abs_error,max_rel_error\n";
    ExpectationRule expectation = expectation_rule(rc, cfg);
    for (double v : values) {
      expectation.order = static_cast<int>(v);
      validate(expectation);
      const auto [abs_err, rel_err] = gradient_fd_error(mu, nu, s, rule, expectation, legendre);
      csv << static_cast<int>(v) << ',' << abs_err << ',' << rel_err << '\n';
    }
  } else {
    throw InvalidInput("sweep 'parameter' must be n_nodes, sigma or hermite_order");
  }
  write_text(rc, out, csv.str());
}

}  // namespace

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    if (config.command == "dist") {
      cmd_dist(config, out);
    } else if (config.command == "grad") {
      cmd_derivative(config, out, false);
    } else if (config.command == "hess") {
      cmd_derivative(config, out, true);
    } else if (config.command == "bp-solve") {
      cmd_bp_solve(config, out);
    } else if (config.command == "sweep") {
      cmd_sweep(config, out);
    } else {
      err << "unknown command '" << config.command << "'\n";
      return kConfigError;
    }
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericFailure& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const std::exception& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  }
  return kSuccess;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Gaussian-smoothed sliced Wasserstein distances, derivatives and a smooth variational principle solver"};
  app.require_subcommand(1);
  RunConfig rc;

  auto add_common = [&rc](CLI::App* sub) {
    sub->add_option("--mu", rc.mu, "first measure (JSON)");
    sub->add_option("--nu", rc.nu, "second measure (JSON)");
    sub->add_option("--config", rc.config, "config file (JSON)");
    sub->add_option("--sigma", rc.sigma, "Gaussian smoothing standard deviation");
    sub->add_option("--delta", rc.delta, "perturbation scale; sigma = 1/delta in bp-solve");
    sub->add_option("--lambda", rc.lambda, "near-optimality gap of the start point");
    sub->add_option("--horizon", rc.horizon, "time horizon T");
    sub->add_option("--rule-nodes", rc.rule_nodes, "number of sphere quadrature nodes");
    sub->add_option("--rule-method", rc.rule_method, "exact-pair | uniform-circle | monte-carlo");
    sub->add_option("--hermite", rc.hermite, "order of the noise expectation rule (nodes per panel, or Hermite nodes)");
    sub->add_option("--expectation", rc.expectation, "panels | hermite");
    sub->add_option("--legendre", rc.legendre, "Gauss-Legendre order for 1D distances");
    sub->add_option("--seed", rc.seed, "seed for Monte Carlo sphere rules");
    sub->add_option("--out", rc.out, "output file (default: stdout)");
  };
  for (const char* name : {"dist", "grad", "hess", "bp-solve", "sweep"}) {
    CLI::App* sub = app.add_subcommand(name);
    add_common(sub);
    if (std::string(name) == "dist") sub->add_flag("--sqrt", rc.sqrt_display, "also print the unsquared distance");
    if (std::string(name) == "bp-solve") sub->add_option("--log", rc.log, "CSV iteration log");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kConfigError;
  }
  rc.command = app.get_subcommands().front()->get_name();
  return run(rc, std::cout, std::cerr);
}

}  // namespace swgauge::cli
