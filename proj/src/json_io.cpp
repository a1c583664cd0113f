#include "swgauge/json_io.hpp"

#include <fstream>
#include <sstream>

#include "swgauge/errors.hpp"

namespace swgauge::io {

namespace {

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    std::ostringstream msg;
    msg << "missing required key '" << key << "'";
    throw InvalidInput(msg.str());
  }
  return j.at(key);
}

double as_number(const json& j, const char* what) {
  if (!j.is_number()) {
    std::ostringstream msg;
    msg << what << " must be a number";
    throw InvalidInput(msg.str());
  }
  return j.get<double>();
}

}  // namespace

DiscreteMeasure measure_from_json(const json& j) {
  const int dim = static_cast<int>(as_number(require(j, "dim"), "dim"));
  if (dim < 1) throw InvalidInput("measure dim must be >= 1");
  const json& atoms = require(j, "atoms");
  if (!atoms.is_array() || atoms.empty()) throw InvalidInput("atoms must be a non-empty array");
  Eigen::MatrixXd points(static_cast<Eigen::Index>(atoms.size()), dim);
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const json& row = atoms[i];
    if (!row.is_array() || static_cast<int>(row.size()) != dim) {
      std::ostringstream msg;
      msg << "atom " << i << " must be an array of " << dim << " numbers";
      throw InvalidInput(msg.str());
    }
    for (int d = 0; d < dim; ++d) {
      points(static_cast<Eigen::Index>(i), d) = as_number(row[static_cast<std::size_t>(d)], "atom coordinate");
    }
  }
  if (!j.contains("weights")) return DiscreteMeasure::uniform(std::move(points));
  const json& weights = j.at("weights");
  if (!weights.is_array() || weights.size() != atoms.size()) {
    throw InvalidInput("weights must be an array with one entry per atom");
  }
  Eigen::VectorXd w(static_cast<Eigen::Index>(weights.size()));
  for (std::size_t i = 0; i < weights.size(); ++i) w[static_cast<Eigen::Index>(i)] = as_number(weights[i], "weight");
  return DiscreteMeasure(std::move(points), std::move(w));
}

json measure_to_json(const DiscreteMeasure& mu) {
  json atoms = json::array();
  for (std::size_t i = 0; i < mu.size(); ++i) atoms.push_back(vector_to_json(mu.atom(i)));
  return {{"dim", mu.dim()}, {"atoms", atoms}, {"weights", vector_to_json(mu.weights())}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    std::ostringstream msg;
    msg << path.string() << ": JSON parse error at byte " << e.byte << ": " << e.what();
    throw InvalidInput(msg.str());
  }
}

DiscreteMeasure read_measure(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  try {
    return measure_from_json(j);
  } catch (const InvalidInput& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

RuleSpec rule_spec_from_json(const json& j) {
  RuleSpec spec;
  spec.k = static_cast<int>(as_number(require(j, "k"), "k"));
  if (j.contains("n_nodes")) spec.n_nodes = static_cast<int>(as_number(j.at("n_nodes"), "n_nodes"));
  if (j.contains("method")) {
    if (!j.at("method").is_string()) throw InvalidInput("rule method must be a string");
    spec.method = parse_sphere_method(j.at("method").get<std::string>());
  }
  if (j.contains("seed")) {
    const double seed = as_number(j.at("seed"), "seed");
    if (seed < 0) throw InvalidInput("seed must be non-negative");
    spec.seed = static_cast<std::uint64_t>(seed);
  }
  return spec;
}

json rule_to_json(const SphereRule& rule) {
  return {{"k", rule.dim()},
          {"n_nodes", rule.requested_nodes()},
          {"nodes_used", rule.size()},
          {"method", to_string(rule.method())},
          {"seed", rule.seed()}};
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(vector_to_json(m.row(i).transpose()));
  return out;
}

json bound_to_json(const BoundCheck& b) {
  return {{"lhs", b.lhs}, {"rhs", b.rhs}, {"constant", b.constant}, {"holds", b.holds()}};
}

json diagnostics_to_json(const TransportDiagnostics& d) {
  return {{"transport_evaluations", d.evaluations},
          {"saturations", d.saturations},
          {"saturation_clamp", kCdfSaturation},
          {"flagged", d.saturations > 0}};
}

json report_to_json(const SlicedDistanceReport& r) {
  json per_direction = json::array();
  for (const DirectionalTerm& term : r.per_direction) {
    per_direction.push_back(
        {{"theta", vector_to_json(term.theta.components())}, {"weight", term.weight}, {"w2_squared", term.value}});
  }
  return {{"value", r.value},
          {"sigma", r.sigma},
          {"rule", {{"k", r.dim}, {"nodes_used", r.rule_nodes}, {"method", to_string(r.method)}, {"seed", r.seed}}},
          {"per_direction", per_direction}};
}

json conclusions_to_json(const ConclusionReport& c) {
  json out = {{"i", {{"holds", c.i_holds},
                     {"margin", c.i_margin},
                     {"rho_to_sequence", c.rho_to_sequence},
                     {"bounds", c.rho_bounds}}},
              {"ii", {{"holds", c.ii_holds}, {"margin", c.ii_margin}}},
              {"iii", {{"holds", c.iii_holds}}},
              {"all_hold", c.all_hold()}};
  if (c.iii_margin) {
    out["iii"]["margin"] = *c.iii_margin;
    out["iii"]["runner_up"] = *c.runner_up;
  } else {
    out["iii"]["margin"] = nullptr;
    out["iii"]["note"] = "no other point in the search space";
  }
  return out;
}

json phi_report_to_json(const PhiDerivativeReport& r) {
  return {{"time_derivative", r.time_derivative},
          {"time_bound", r.time_bound},
          {"time_holds", r.time_holds},
          {"measure_gradient", bound_to_json(r.measure_gradient)},
          {"mixed_hessian", bound_to_json(r.mixed_hessian)},
          {"diagnostics", diagnostics_to_json(r.diagnostics)},
          {"all_hold", r.all_hold()}};
}

}  // namespace swgauge::io
