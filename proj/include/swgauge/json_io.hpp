#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"

#include "swgauge/gauge_variational.hpp"
#include "swgauge/measure.hpp"
#include "swgauge/sliced_distance.hpp"
#include "swgauge/sphere_rule.hpp"
#include "swgauge/wasserstein_calculus.hpp"

namespace swgauge::io {

using nlohmann::json;

/// {"dim": k, "atoms": [[x11, ..., x1k], ...], "weights": [w1, ...]}
/// The weights key is optional (uniform weights when absent).
DiscreteMeasure measure_from_json(const json& j);
json measure_to_json(const DiscreteMeasure& mu);

/// Reads and parses a file; parse errors are rethrown as InvalidInput naming
/// the file and byte offset.
json read_json_file(const std::filesystem::path& path);
DiscreteMeasure read_measure(const std::filesystem::path& path);

/// {"k": 2, "n_nodes": 64, "method": "uniform-circle", "seed": 0}; method and
/// seed are optional.
struct RuleSpec {
  int k = 1;
  int n_nodes = 64;
  std::optional<SphereMethod> method;
  std::uint64_t seed = 0;

  SphereRule build() const { return build_rule(k, n_nodes, method, seed); }
};
RuleSpec rule_spec_from_json(const json& j);
json rule_to_json(const SphereRule& rule);

json vector_to_json(const Eigen::VectorXd& v);
json matrix_to_json(const Eigen::MatrixXd& m);
json bound_to_json(const BoundCheck& b);
json diagnostics_to_json(const TransportDiagnostics& d);
json report_to_json(const SlicedDistanceReport& r);
json conclusions_to_json(const ConclusionReport& c);
json phi_report_to_json(const PhiDerivativeReport& r);

}  // namespace swgauge::io
