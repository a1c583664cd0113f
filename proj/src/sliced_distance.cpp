#include "swgauge/sliced_distance.hpp"

#include <cmath>
#include <optional>
#include <sstream>

#include "swgauge/assignment.hpp"
#include "swgauge/errors.hpp"

namespace swgauge {

namespace {

void check_dims(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SphereRule& rule) {
  if (mu.dim() != nu.dim() || mu.dim() != rule.dim()) {
    std::ostringstream msg;
    msg << "dimension mismatch: mu is " << mu.dim() << "-dimensional, nu " << nu.dim() << ", sphere rule "
        << rule.dim();
    throw InvalidInput(msg.str());
  }
}

SlicedDistanceReport empty_report(const SphereRule& rule, double sigma) {
  SlicedDistanceReport report;
  report.dim = rule.dim();
  report.method = rule.method();
  report.seed = rule.seed();
  report.rule_nodes = static_cast<int>(rule.size());
  report.sigma = sigma;
  report.per_direction.reserve(rule.size());
  return report;
}

// Summed in node order so the value is reproducible bit for bit.
template <typename SliceValue>
SlicedDistanceReport accumulate(const SphereRule& rule, double sigma, SliceValue slice_value) {
  SlicedDistanceReport report = empty_report(rule, sigma);
  const std::vector<std::size_t> partner = antipodal_partners(rule);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const Direction& theta = rule.nodes()[i];
    const double value = partner[i] == i ? slice_value(theta) : report.per_direction[partner[i]].value;
    report.per_direction.push_back({theta, rule.weights()[i], value});
    report.value += rule.weights()[i] * value;
  }
  return report;
}

// Smallest N <= max_atoms with every weight an integer multiple of 1/N.
std::optional<int> common_denominator(const DiscreteMeasure& mu, const DiscreteMeasure& nu, int max_atoms) {
  auto fits = [](const DiscreteMeasure& m, int n) {
    long total = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double scaled = m.weight(i) * n;
      const double rounded = std::round(scaled);
      if (std::abs(scaled - rounded) > 1e-9 * n) return false;
      total += static_cast<long>(rounded);
    }
    return total == n;
  };
  for (int n = 1; n <= max_atoms; ++n) {
    if (fits(mu, n) && fits(nu, n)) return n;
  }
  return std::nullopt;
}

Eigen::MatrixXd expand(const DiscreteMeasure& m, int n) {
  Eigen::MatrixXd atoms(n, m.dim());
  int row = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const int copies = static_cast<int>(std::lround(m.weight(i) * n));
    for (int c = 0; c < copies; ++c) atoms.row(row++) = m.atoms().row(static_cast<Eigen::Index>(i));
  }
  return atoms;
}

}  // namespace

GaussianMixture1D smoothed_slice(const DiscreteMeasure& mu, const Direction& theta, double sigma) {
  return GaussianMixture1D::from_measure(project(mu, theta), sigma);
}

SlicedDistanceReport sw2_squared(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SphereRule& rule) {
  check_dims(mu, nu, rule);
  return accumulate(rule, 0.0, [&](const Direction& theta) {
    return w2_squared_discrete(project(mu, theta), project(nu, theta));
  });
}

SlicedDistanceReport sw2_sigma_squared(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SmoothingLevel& s,
                                       const SphereRule& rule, int legendre_order) {
  check_dims(mu, nu, rule);
  if (!s.is_positive()) return sw2_squared(mu, nu, rule);
  const double sigma = s.sigma();
  return accumulate(rule, sigma, [&](const Direction& theta) {
    return w2_squared_1d(smoothed_slice(mu, theta, sigma), smoothed_slice(nu, theta, sigma), legendre_order);
  });
}

double w2_squared_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, int max_atoms) {
  if (mu.dim() != nu.dim()) throw InvalidInput("dimension mismatch between mu and nu");
  const auto n = common_denominator(mu, nu, max_atoms);
  if (!n) {
    std::ostringstream msg;
    msg << "exact W2 oracle needs weights that are multiples of 1/N for a common N <= " << max_atoms
        << "; this pair is beyond the oracle's scale";
    throw InvalidInput(msg.str());
  }
  const Eigen::MatrixXd x = expand(mu, *n);
  const Eigen::MatrixXd y = expand(nu, *n);
  Eigen::MatrixXd cost(*n, *n);
  for (int i = 0; i < *n; ++i) {
    for (int j = 0; j < *n; ++j) cost(i, j) = 0.5 * (x.row(i) - y.row(j)).squaredNorm();
  }
  return solve_assignment(cost).cost / *n;
}

}  // namespace swgauge
