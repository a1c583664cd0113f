#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "swgauge/measure.hpp"

namespace swgauge {

enum class SphereMethod {
  exact_pair,      // S^0 = {+1, -1}
  uniform_circle,  // equispaced angles on S^1
  monte_carlo,     // seeded uniform antithetic pairs on S^{k-1}
};

std::string to_string(SphereMethod method);
/// Accepts "exact-pair", "uniform-circle", "monte-carlo"; throws InvalidInput otherwise.
SphereMethod parse_sphere_method(std::string_view name);
/// exact-pair for k = 1, uniform-circle for k = 2, monte-carlo for k >= 3.
SphereMethod default_sphere_method(int k);

/// Quadrature for the spherical measure on S^{k-1}, normalized to total mass 1.
/// Fully determined by (dim, requested nodes, method, seed).
class SphereRule {
 public:
  SphereRule(int dim, std::vector<Direction> nodes, std::vector<double> weights, SphereMethod method,
             std::uint64_t seed, int requested_nodes);

  int dim() const { return dim_; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<Direction>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  SphereMethod method() const { return method_; }
  std::uint64_t seed() const { return seed_; }
  int requested_nodes() const { return requested_nodes_; }

 private:
  int dim_;
  std::vector<Direction> nodes_;
  std::vector<double> weights_;
  SphereMethod method_;
  std::uint64_t seed_;
  int requested_nodes_;
};

/// k = 1: the two points of S^0 with weight 1/2 (n_nodes ignored).
/// uniform-circle (k = 2): n_nodes equispaced angles 2 pi j / n.
/// monte-carlo (k >= 2): ceil(n_nodes / 2) seeded uniform directions, each
/// paired with its antipode, equal weights.
SphereRule build_rule(int k, int n_nodes, std::optional<SphereMethod> method = std::nullopt,
                      std::uint64_t seed = 0);

/// For each node, the index of an earlier node carrying the same weight in the
/// opposite direction (within 1e-14), or the node's own index. Slices along
/// -theta are mirror images of those along theta, so only one of each pair
/// has to be solved. Checks the pairings the built-in rules produce.
std::vector<std::size_t> antipodal_partners(const SphereRule& rule);

/// sum_i w_i theta_i theta_i^T
Eigen::MatrixXd second_moment_matrix(const SphereRule& rule);

/// Best scalar fit kappa I to the second moment matrix: trace / k. Equal to
/// 1/k for every rule, since the nodes are unit vectors.
double kappa(const SphereRule& rule);

}  // namespace swgauge
