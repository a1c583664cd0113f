#pragma once

#include <cstdint>
#include <vector>

#include "swgauge/measure.hpp"
#include "swgauge/sphere_rule.hpp"
#include "swgauge/univariate_ot.hpp"

namespace swgauge {

/// Convention used by every distance in this library: spherical measure
/// normalized to mass one, transport cost |x - y|^2 / 2.
inline constexpr const char* kConventionTag = "normalized-sphere, half-squared-cost";

struct DirectionalTerm {
  Direction theta;
  double weight;
  double value;  // 1D W2^2 of the two slices
};

struct SlicedDistanceReport {
  double value = 0.0;  // squared distance
  std::vector<DirectionalTerm> per_direction;
  int dim = 0;
  SphereMethod method = SphereMethod::exact_pair;
  std::uint64_t seed = 0;
  int rule_nodes = 0;
  double sigma = 0.0;
};

/// mu_theta * N_sigma as a 1D mixture: means theta^T x_j, mu's weights, width sigma.
GaussianMixture1D smoothed_slice(const DiscreteMeasure& mu, const Direction& theta, double sigma);

/// SW2(mu, nu)^2 = sum_i w_i W2(mu_theta_i, nu_theta_i)^2, each slice solved exactly.
SlicedDistanceReport sw2_squared(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SphereRule& rule);

/// SW2(mu * N_sigma, nu * N_sigma)^2, computed by projecting first and
/// smoothing each slice in 1D. sigma = 0 reduces to sw2_squared.
SlicedDistanceReport sw2_sigma_squared(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SmoothingLevel& s,
                                       const SphereRule& rule, int legendre_order = 128);

/// Largest equal-weight expansion accepted by w2_squared_exact.
inline constexpr int kExactOracleMaxAtoms = 64;

/// Exact W2^2 (cost |x-y|^2 / 2) between two discrete measures whose weights
/// are all multiples of 1/N for a common N <= max_atoms. Both measures are
/// expanded to N equal-weight atoms and matched with the Hungarian method.
/// Throws InvalidInput when no such N exists.
double w2_squared_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, int max_atoms = kExactOracleMaxAtoms);

}  // namespace swgauge
