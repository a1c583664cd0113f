#include "swgauge/sphere_rule.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "swgauge/errors.hpp"

namespace swgauge {

std::string to_string(SphereMethod method) {
  switch (method) {
    case SphereMethod::exact_pair:
      return "exact-pair";
    case SphereMethod::uniform_circle:
      return "uniform-circle";
    case SphereMethod::monte_carlo:
      return "monte-carlo";
  }
  return "unknown";
}

SphereMethod parse_sphere_method(std::string_view name) {
  if (name == "exact-pair") return SphereMethod::exact_pair;
  if (name == "uniform-circle") return SphereMethod::uniform_circle;
  if (name == "monte-carlo") return SphereMethod::monte_carlo;
  std::ostringstream msg;
  msg << "unknown sphere rule method '" << name << "' (expected exact-pair, uniform-circle or monte-carlo)";
  throw InvalidInput(msg.str());
}

SphereMethod default_sphere_method(int k) {
  if (k == 1) return SphereMethod::exact_pair;
  if (k == 2) return SphereMethod::uniform_circle;
  return SphereMethod::monte_carlo;
}

SphereRule::SphereRule(int dim, std::vector<Direction> nodes, std::vector<double> weights, SphereMethod method,
                       std::uint64_t seed, int requested_nodes)
    : dim_(dim),
      nodes_(std::move(nodes)),
      weights_(std::move(weights)),
      method_(method),
      seed_(seed),
      requested_nodes_(requested_nodes) {
  if (dim_ < 1) throw InvalidInput("sphere rule dimension must be >= 1");
  if (nodes_.empty() || nodes_.size() != weights_.size()) throw InvalidInput("sphere rule nodes/weights mismatch");
  long double total = 0.0L;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].dim() != dim_) throw InvalidInput("sphere rule node has wrong dimension");
    if (!(weights_[i] > 0.0)) throw InvalidInput("sphere rule weights must be positive");
    total += weights_[i];
  }
  if (std::abs(static_cast<double>(total) - 1.0) > 1e-12) throw InvalidInput("sphere rule weights must sum to 1");
}

SphereRule build_rule(int k, int n_nodes, std::optional<SphereMethod> method, std::uint64_t seed) {
  if (k < 1) throw InvalidInput("sphere rule dimension k must be >= 1");
  const SphereMethod chosen = method.value_or(default_sphere_method(k));
  if (k == 1) {
    if (chosen != SphereMethod::exact_pair) throw InvalidInput("k = 1 only supports the exact-pair rule");
    std::vector<Direction> nodes{Direction(Eigen::VectorXd::Constant(1, 1.0)),
                                 Direction(Eigen::VectorXd::Constant(1, -1.0))};
    return SphereRule(1, std::move(nodes), {0.5, 0.5}, chosen, seed, 2);
  }
  if (n_nodes < 1) throw InvalidInput("sphere rule needs n_nodes >= 1");

  switch (chosen) {
    case SphereMethod::exact_pair:
      throw InvalidInput("exact-pair rule is only defined for k = 1");
    case SphereMethod::uniform_circle: {
      if (k != 2) throw InvalidInput("uniform-circle rule is only defined for k = 2");
      std::vector<Direction> nodes;
      nodes.reserve(static_cast<std::size_t>(n_nodes));
      for (int j = 0; j < n_nodes; ++j) {
        const double angle = 2.0 * std::numbers::pi * j / n_nodes;
        Eigen::Vector2d v(std::cos(angle), std::sin(angle));
        nodes.push_back(Direction::normalized(v));
      }
      std::vector<double> weights(static_cast<std::size_t>(n_nodes), 1.0 / n_nodes);
      return SphereRule(2, std::move(nodes), std::move(weights), chosen, seed, n_nodes);
    }
    case SphereMethod::monte_carlo: {
      const int pairs = (n_nodes + 1) / 2;
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> gauss(0.0, 1.0);
      std::vector<Direction> nodes;
      nodes.reserve(static_cast<std::size_t>(2 * pairs));
      for (int p = 0; p < pairs; ++p) {
        Eigen::VectorXd v(k);
        double norm = 0.0;
        do {
          for (int d = 0; d < k; ++d) v[d] = gauss(rng);
          norm = v.norm();
        } while (!(norm > 1e-12));
        Direction theta = Direction::normalized(v);
        nodes.push_back(theta);
        nodes.push_back(Direction(-theta.components()));
      }
      std::vector<double> weights(nodes.size(), 1.0 / static_cast<double>(nodes.size()));
      return SphereRule(k, std::move(nodes), std::move(weights), chosen, seed, n_nodes);
    }
  }
  throw InvalidInput("unsupported sphere rule method");
}

std::vector<std::size_t> antipodal_partners(const SphereRule& rule) {
  const std::size_t n = rule.size();
  std::vector<std::size_t> partner(n);
  auto opposite = [&](std::size_t i, std::size_t j) {
    return rule.weights()[i] == rule.weights()[j] &&
           (rule.nodes()[i].components() + rule.nodes()[j].components()).cwiseAbs().maxCoeff() <= 1e-14;
  };
  for (std::size_t i = 0; i < n; ++i) {
    partner[i] = i;
    // Monte Carlo and the exact pair store antipodes next to each other, an
    // even circle rule half a turn apart.
    for (std::size_t j : {i - 1, i - n / 2}) {
      if (j < i && partner[j] == j && opposite(i, j)) {
        partner[i] = j;
        break;
      }
    }
  }
  return partner;
}

Eigen::MatrixXd second_moment_matrix(const SphereRule& rule) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rule.dim(), rule.dim());
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const auto& theta = rule.nodes()[i].components();
    m.noalias() += rule.weights()[i] * theta * theta.transpose();
  }
  return m;
}

double kappa(const SphereRule& rule) {
  return second_moment_matrix(rule).trace() / static_cast<double>(rule.dim());
}

}  // namespace swgauge
