#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "swgauge/gauge_variational.hpp"

namespace swgauge::fixtures {

/// Seeded search space: `count` candidates with uniform times in [0, horizon]
/// and equal-weight measures of `atoms` Gaussian points in R^k, each with its
/// own spread and centre.
std::vector<TimedMeasure> seeded_candidates(std::uint64_t seed, std::size_t count = 20, int k = 2, int atoms = 4,
                                            double horizon = 1.0);

/// Index of the candidate whose objective value is closest to max G - lambda / 2.
std::size_t near_optimal_start(const std::vector<double>& objective_values, double lambda);

}  // namespace swgauge::fixtures
