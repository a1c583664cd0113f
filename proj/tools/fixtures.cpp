#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "swgauge/errors.hpp"

namespace swgauge::fixtures {

std::vector<TimedMeasure> seeded_candidates(std::uint64_t seed, std::size_t count, int k, int atoms, double horizon) {
  if (count == 0 || k < 1 || atoms < 1) throw InvalidInput("seeded_candidates needs count, k and atoms >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> time(0.0, horizon);
  std::uniform_real_distribution<double> spread(0.3, 1.5);
  std::uniform_real_distribution<double> centre(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<TimedMeasure> out;
  out.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    const double t = time(rng);
    const double s = spread(rng);
    Eigen::VectorXd shift(k);
    for (int d = 0; d < k; ++d) shift[d] = centre(rng);
    Eigen::MatrixXd x(atoms, k);
    for (int i = 0; i < atoms; ++i) {
      for (int d = 0; d < k; ++d) x(i, d) = shift[d] + s * gauss(rng);
    }
    out.emplace_back(t, DiscreteMeasure::uniform(std::move(x)), horizon);
  }
  return out;
}

std::size_t near_optimal_start(const std::vector<double>& objective_values, double lambda) {
  if (objective_values.empty()) throw InvalidInput("no objective values");
  const double goal = *std::max_element(objective_values.begin(), objective_values.end()) - 0.5 * lambda;
  std::size_t best = 0;
  for (std::size_t i = 1; i < objective_values.size(); ++i) {
    if (std::abs(objective_values[i] - goal) < std::abs(objective_values[best] - goal)) best = i;
  }
  return best;
}

}  // namespace swgauge::fixtures
