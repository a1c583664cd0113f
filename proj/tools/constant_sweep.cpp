// Sweep used to choose the constants of the moment bounds and the phi
// derivative bounds. Prints, for each family, the largest lhs / (rhs / C),
// i.e. the smallest constant that would have sufficed.

#include <algorithm>
#include <cstdio>
#include <random>

#include "fixtures.hpp"
#include "swgauge/gauge_variational.hpp"

using namespace swgauge;

namespace {

double needed(const BoundCheck& b) { return b.lhs / (b.rhs / b.constant); }

DiscreteMeasure random_measure(std::mt19937_64& rng, int n, int k, double scale, double shift) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.2, 1.0);
  Eigen::MatrixXd x(n, k);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = unif(rng);
    for (int d = 0; d < k; ++d) x(i, d) = shift + scale * gauss(rng);
  }
  return DiscreteMeasure(x, w / w.sum());
}

void moment_sweep() {
  std::printf("moment bounds (C = %g)\n", kMomentBoundConstant);
  std::printf("| k | sigma | instances | needed C, first | needed C, second |\n|---|---|---|---|---|\n");
  std::mt19937_64 rng(7);
  for (int k = 1; k <= 3; ++k) {
    for (double sigma : {0.1, 0.25, 0.5, 1.0, 2.0}) {
      double first = 0.0;
      double second = 0.0;
      const int instances = 20;
      for (int i = 0; i < instances; ++i) {
        const SphereRule rule = build_rule(k, 64, std::nullopt, static_cast<std::uint64_t>(i));
        const double scale = std::uniform_real_distribution<double>(0.1, 3.0)(rng);
        const double shift = std::uniform_real_distribution<double>(-3.0, 3.0)(rng);
        const DiscreteMeasure mu = random_measure(rng, 5, k, scale, 0.0);
        const DiscreteMeasure nu = random_measure(rng, 5, k, scale, shift);
        first = std::max(first, needed(check_first_bound(mu, nu, SmoothingLevel(sigma), rule)));
        second = std::max(second, needed(check_second_bound(mu, nu, SmoothingLevel(sigma), rule)));
      }
      std::printf("| %d | %g | %d | %.4f | %.4f |\n", k, sigma, instances, first, second);
      std::fflush(stdout);
    }
  }
}

void phi_sweep() {
  std::printf("\nphi derivative bounds (C = %g), 20 candidates, 10 probes per run\n", kPhiBoundConstant);
  std::printf("| k | delta | lambda | seeds | needed C, D_mu phi | needed C, D2_xmu phi | max |d_t phi| / 4T |\n");
  std::printf("|---|---|---|---|---|---|---|\n");
  const Objective objective = objectives::negative_second_moment(1.0);
  for (int k : {2, 3}) {
    for (double delta : {0.5, 1.0, 2.0}) {
      for (double lambda : {1.0, 4.0}) {
        double c_grad = 0.0;
        double c_mixed = 0.0;
        double time_ratio = 0.0;
        const int seeds = 3;
        for (int seed = 1; seed <= seeds; ++seed) {
          const auto candidates = fixtures::seeded_candidates(static_cast<std::uint64_t>(seed), 20, k, 4, 1.0);
          const SearchSpace space(candidates);
          const GaugeParams params(delta, 1.0);
          const Discretization disc{build_rule(k, 64, std::nullopt, static_cast<std::uint64_t>(seed)), {}, 128};
          std::vector<double> values;
          for (const TimedMeasure& c : candidates) values.push_back(objective(c));
          const BPResult result =
              bp_solve(objective, space, fixtures::near_optimal_start(values, lambda), lambda, params, disc);
          for (std::size_t p = 0; p < 10; ++p) {
            const PhiDerivativeReport r = phi_derivative_bounds(candidates[p], result, params, disc);
            c_grad = std::max(c_grad, needed(r.measure_gradient));
            c_mixed = std::max(c_mixed, needed(r.mixed_hessian));
            time_ratio = std::max(time_ratio, std::abs(r.time_derivative) / r.time_bound);
          }
        }
        std::printf("| %d | %g | %g | %d | %.4f | %.4f | %.4f |\n", k, delta, lambda, seeds, c_grad, c_mixed, time_ratio);
        std::fflush(stdout);
      }
    }
  }
}

}  // namespace

int main() {
  moment_sweep();
  phi_sweep();
  return 0;
}
