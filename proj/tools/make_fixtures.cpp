// Writes the bundled example data under the given directory (default: data)
// and checks the Borwein-Preiss example with the exhaustive verifier before
// anything is written.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "fixtures.hpp"
#include "swgauge/json_io.hpp"

using namespace swgauge;
namespace fs = std::filesystem;
using io::json;

namespace {

void write(const fs::path& path, const json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

DiscreteMeasure planar_measure(std::mt19937_64& rng, int n, double spread, Eigen::Vector2d centre) {
  std::normal_distribution<double> gauss(0.0, spread);
  Eigen::MatrixXd x(n, 2);
  for (int i = 0; i < n; ++i) x.row(i) = (centre + Eigen::Vector2d(gauss(rng), gauss(rng))).transpose();
  return DiscreteMeasure::uniform(std::move(x));
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::path("data");
  constexpr std::uint64_t kSeed = 1;
  constexpr double kHorizon = 1.0;
  constexpr double kDelta = 1.0;
  constexpr double kLambda = 1.0;
  constexpr double kTimeWeight = 1.0;

  const auto candidates = fixtures::seeded_candidates(kSeed, 20, 2, 4, kHorizon);
  const SearchSpace space(candidates);
  const GaugeParams params(kDelta, kHorizon);
  const Discretization disc{build_rule(2, 64), {}, 128};
  const Objective objective = objectives::negative_second_moment(kTimeWeight);
  std::vector<double> values;
  for (const TimedMeasure& c : candidates) values.push_back(objective(c));
  const std::size_t start = fixtures::near_optimal_start(values, kLambda);
  const BPResult result = bp_solve(objective, space, start, kLambda, params, disc);
  const ConclusionReport verified = verify_conclusions(result, objective, space, kLambda, params, disc);
  std::printf("bp20: start %zu, selected %zu, (i) %.6g (ii) %.6g (iii) %.6g\n", start, result.selected,
              verified.i_margin, verified.ii_margin, verified.iii_margin.value_or(0.0));
  if (!verified.all_hold()) {
    std::fprintf(stderr, "exhaustive verification failed; nothing written\n");
    return 1;
  }

  json list = json::array();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "candidate_%02zu.json", i);
    write(root / "bp20" / name, io::measure_to_json(candidates[i].mu()));
    list.push_back({{"t", candidates[i].t()}, {"measure", name}});
  }
  json probes = json::array();
  for (std::size_t i = 0; i < 10; ++i) probes.push_back(i);
  write(root / "bp20" / "config.json",
        {{"horizon", kHorizon},
         {"delta", kDelta},
         {"lambda", kLambda},
         {"start", start},
         {"rule", {{"k", 2}, {"n_nodes", 64}, {"method", "uniform-circle"}, {"seed", 0}}},
         {"expectation", "panels"},
         {"hermite_order", kDefaultHermiteOrder},
         {"legendre_order", 128},
         {"objective", {{"type", "neg_second_moment"}, {"time_weight", kTimeWeight}}},
         {"tolerance", 1e-9},
         {"max_iter", 200},
         {"probes", probes},
         {"candidates", list}});

  std::mt19937_64 rng(kSeed);
  write(root / "pair" / "mu.json", io::measure_to_json(planar_measure(rng, 5, 1.0, {0.0, 0.0})));
  write(root / "pair" / "nu.json", io::measure_to_json(planar_measure(rng, 5, 0.8, {1.0, -0.5})));
  const json rule = {{"k", 2}, {"method", "uniform-circle"}, {"seed", 0}};
  write(root / "sweep_n_nodes.json", {{"mu", "pair/mu.json"},
                                      {"nu", "pair/nu.json"},
                                      {"parameter", "n_nodes"},
                                      {"sigma", 0.25},
                                      {"rule", rule},
                                      {"values", {16, 32, 64, 128, 256}}});
  write(root / "sweep_sigma.json", {{"mu", "pair/mu.json"},
                                    {"nu", "pair/nu.json"},
                                    {"parameter", "sigma"},
                                    {"rule", rule},
                                    {"values", {0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0}}});
  json hermite_rule = rule;
  hermite_rule["n_nodes"] = 32;
  write(root / "sweep_hermite.json", {{"mu", "pair/mu.json"},
                                      {"nu", "pair/nu.json"},
                                      {"parameter", "hermite_order"},
                                      {"sigma", 1.0},
                                      {"rule", hermite_rule},
                                      {"values", {8, 16, 24, 32, 48, 64, 96, 128}}});
  std::printf("fixtures written to %s\n", root.string().c_str());
  return 0;
}
