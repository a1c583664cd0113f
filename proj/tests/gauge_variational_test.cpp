#include <cmath>
#include <memory>
#include <vector>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "support/oracles.hpp"
#include "swgauge/errors.hpp"
#include "swgauge/gauge_variational.hpp"
#include "swgauge/sliced_distance.hpp"

namespace swgauge {
namespace {

Discretization circle(int nodes = 32) { return {build_rule(2, nodes), {}, 128}; }

TimedMeasure dirac_at(double t, double x, double y, double horizon = 1.0) {
  return TimedMeasure(t, DiscreteMeasure::dirac(Eigen::Vector2d(x, y)), horizon);
}

TEST(GaugeParams, SigmaIsReciprocalOfDelta) {
  const GaugeParams p(4.0, 2.0);
  EXPECT_EQ(p.sigma(), 0.25);
  EXPECT_EQ(p.smoothing().sigma(), 0.25);
  EXPECT_THROW(GaugeParams(0.0, 1.0), InvalidInput);
  EXPECT_THROW(GaugeParams(-1.0, 1.0), InvalidInput);
  EXPECT_THROW(GaugeParams(1.0, 0.0), InvalidInput);
}

TEST(Rho, ClosedForms) {
  const GaugeParams params(1.0, 1.0);
  const auto disc = circle();
  testing::Rng rng(1);
  const TimedMeasure a(0.3, testing::random_weighted_measure(rng, 3, 2), 1.0);
  EXPECT_EQ(rho_sigma(a, a, params, disc), 0.0);
  const TimedMeasure a_later(a.t() + 0.5, a.mu(), 1.0);
  const TimedMeasure a_start(0.0, a.mu(), 1.0);
  const TimedMeasure a_end(1.0, a.mu(), 1.0);
  EXPECT_NEAR(rho_sigma(a_start, a_end, params, disc), 1.0, 1e-15);
  EXPECT_NEAR(rho_sigma(a, a_later, params, disc), 0.25, 1e-15);
  // Smoothing shifts both point masses by the same Gaussian, so only the
  // mean gap survives: |b|^2 / (2k).
  const Eigen::Vector2d b(1.5, -2.0);
  EXPECT_NEAR(rho_sigma(dirac_at(0.4, 0, 0), dirac_at(0.4, b[0], b[1]), params, disc), b.squaredNorm() / 4.0, 1e-10);
}

TEST(Rho, SymmetricAndDominatesBothTerms) {
  const GaugeParams params(2.0, 1.0);
  const auto disc = circle();
  const auto candidates = fixtures::seeded_candidates(9, 6);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    for (std::size_t j = i + 1; j < candidates.size(); ++j) {
      const double ab = rho_sigma(candidates[i], candidates[j], params, disc);
      const double ba = rho_sigma(candidates[j], candidates[i], params, disc);
      EXPECT_NEAR(ab, ba, 1e-12);
      const double dt = candidates[i].t() - candidates[j].t();
      const double sw = sw2_sigma_squared(candidates[i].mu(), candidates[j].mu(), params.smoothing(), disc.rule).value;
      EXPECT_GE(ab, dt * dt);
      EXPECT_GE(ab + 1e-15, sw);
      EXPECT_GT(ab, 0.0);
    }
  }
}

TEST(Rho, ContinuousAlongAPath) {
  const GaugeParams params(1.0, 1.0);
  const auto disc = circle();
  const TimedMeasure anchor = fixtures::seeded_candidates(4, 1).front();
  const Eigen::Vector2d direction(0.6, -0.8);
  double previous = 0.0;
  for (int step = 0; step <= 20; ++step) {
    const double h = 1e-3 * step;
    const TimedMeasure moved(anchor.t() * (1.0 - h), anchor.mu().with_atom_shifted(1, h * direction), 1.0);
    const double value = rho_sigma(anchor, moved, params, disc);
    if (step == 0) EXPECT_EQ(value, 0.0);
    EXPECT_LT(std::abs(value - previous), 1e-4);
    previous = value;
  }
}

TEST(Rho, RejectsIncompatiblePairs) {
  const GaugeParams params(1.0, 1.0);
  const auto disc = circle();
  const TimedMeasure flat(0.0, DiscreteMeasure::dirac(Eigen::VectorXd::Zero(1)), 1.0);
  EXPECT_THROW(rho_sigma(flat, dirac_at(0, 0, 0), params, disc), InvalidInput);
  EXPECT_THROW(rho_sigma(dirac_at(0, 0, 0, 2.0), dirac_at(0, 0, 0), params, disc), InvalidInput);
}

TEST(Phi, HandValues) {
  const GaugeParams params(1.0, 2.0);
  const auto disc = circle();
  const TimedMeasure x = dirac_at(0.0, 1, 1, 2.0);
  const TimedMeasure at_one = dirac_at(1.0, 1, 1, 2.0);
  const TimedMeasure at_two = dirac_at(2.0, 1, 1, 2.0);

  const std::vector<TimedMeasure> self{x};
  EXPECT_EQ(phi_delta(x, self, params, disc).value, 0.0);

  const std::vector<TimedMeasure> two{at_one, at_two};
  const PhiEvaluation eval = phi_delta(x, two, params, disc);
  EXPECT_NEAR(eval.value, 1.0 + 0.5 * 4.0, 1e-14);
  EXPECT_FALSE(eval.closed_form_tail);
  EXPECT_NEAR(eval.tail_bound, 2.0, 1e-14);

  // A repeated anchor is the constant tail: sum 2^-n = 2.
  const std::vector<TimedMeasure> constant{at_two, at_two, at_two};
  const PhiEvaluation closed = phi_delta(x, constant, params, disc);
  EXPECT_TRUE(closed.closed_form_tail);
  EXPECT_NEAR(closed.value, 2.0 * 4.0, 1e-13);
  EXPECT_EQ(closed.tail_bound, 0.0);
  const PhiEvaluation truncated = phi_delta(x, constant, params, disc, false);
  EXPECT_NEAR(truncated.value, 1.75 * 4.0, 1e-13);
  EXPECT_NEAR(truncated.tail_bound, 1.0, 1e-14);

  EXPECT_THROW(phi_delta(x, std::vector<TimedMeasure>{}, params, disc), InvalidInput);
}

TEST(Phi, TermsMergeRepeats) {
  const auto a = dirac_at(0, 0, 0);
  const auto b = dirac_at(1, 0, 0);
  const std::vector<TimedMeasure> seq{a, b, b, a, a};
  const auto terms = phi_terms(seq);
  ASSERT_EQ(terms.size(), 3u);
  EXPECT_EQ(terms[0].anchor, 0u);
  EXPECT_DOUBLE_EQ(terms[0].coefficient, 1.0);
  EXPECT_EQ(terms[1].anchor, 1u);
  EXPECT_DOUBLE_EQ(terms[1].coefficient, 0.75);
  EXPECT_EQ(terms[2].anchor, 3u);
  EXPECT_DOUBLE_EQ(terms[2].coefficient, 0.125 + 0.0625 + 0.0625);
  double total = 0.0;
  for (const auto& t : terms) total += t.coefficient;
  EXPECT_DOUBLE_EQ(total, 2.0);
}

TEST(Phi, TailBoundDominatesFiveMoreTerms) {
  const GaugeParams params(1.0, 1.0);
  const auto disc = circle(16);
  const auto pool = fixtures::seeded_candidates(21, 6);
  const TimedMeasure x = fixtures::seeded_candidates(22, 1).front();
  testing::Rng rng(5);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  for (int trial = 0; trial < 4; ++trial) {
    std::vector<TimedMeasure> anchors;
    for (int n = 0; n < 3 + trial; ++n) anchors.push_back(pool[pick(rng)]);
    const std::size_t recorded = anchors.size();
    const PhiEvaluation head = phi_delta(x, anchors, params, disc, false);
    // Extensions only revisit recorded anchors, as a settled sequence does.
    for (int n = 0; n < 5; ++n) anchors.push_back(anchors[pick(rng) % recorded]);
    const PhiEvaluation longer = phi_delta(x, anchors, params, disc, false);
    EXPECT_GE(longer.value, head.value);
    EXPECT_LE(longer.value - head.value, head.tail_bound + 1e-12);
  }
}

TEST(BPSolve, SingletonSpace) {
  const GaugeParams params(1.0, 1.0);
  const auto disc = circle();
  const SearchSpace space({dirac_at(0.5, 1, 2)});
  const auto objective = objectives::negative_second_moment();
  const BPResult result = bp_solve(objective, space, 0, 1.0, params, disc);
  EXPECT_EQ(result.selected, 0u);
  for (std::size_t idx : result.sequence_indices) EXPECT_EQ(idx, 0u);
  EXPECT_EQ(result.phi_values[0], 0.0);
  EXPECT_TRUE(result.conclusions.all_hold());
  EXPECT_FALSE(result.conclusions.iii_margin.has_value());

  const ConclusionReport verified = verify_conclusions(result, objective, space, 1.0, params, disc);
  EXPECT_TRUE(verified.all_hold());
  EXPECT_EQ(verified.ii_margin, 0.0);
  for (double rho : verified.rho_to_sequence) EXPECT_EQ(rho, 0.0);
  EXPECT_FALSE(verified.iii_margin.has_value());
}

// G is 0 at the origin and eps at (3, 0); rho between them is 9/4 at any sigma.
struct TwoPoint {
  SearchSpace space{{dirac_at(0.2, 0, 0), dirac_at(0.2, 3, 0)}};
  double eps = 0.5;
  Objective objective = objectives::moment_linear(Eigen::Vector2d(eps / 3.0, 0.0), 0.0);
};

TEST(BPSolve, TwoPointPerturbationDominates) {
  TwoPoint tp;
  const GaugeParams params(1.0, 1.0);
  const auto disc = circle();
  const BPResult result = bp_solve(tp.objective, tp.space, 0, 1.0, params, disc);
  EXPECT_EQ(result.selected, 0u);
  // Sequence constant at s0: phi(s1) = 2 rho = 4.5, so the perturbed value is eps - 4.5.
  EXPECT_NEAR(result.phi_values[1], 4.5, 1e-10);
  EXPECT_NEAR(result.perturbed_values[1], tp.eps - 4.5, 1e-10);
  EXPECT_EQ(result.perturbed_values[0], 0.0);
  EXPECT_TRUE(result.conclusions.all_hold());
  EXPECT_NEAR(*result.conclusions.iii_margin, 4.5 - tp.eps, 1e-10);
}

TEST(BPSolve, TwoPointObjectiveDominates) {
  TwoPoint tp;
  const GaugeParams params(0.2, 1.0);  // delta^2 rho = 0.09 < eps
  const auto disc = circle();
  const BPResult result = bp_solve(tp.objective, tp.space, 0, 1.0, params, disc);
  EXPECT_EQ(result.selected, 1u);
  ASSERT_GE(result.sequence_indices.size(), 2u);
  EXPECT_EQ(result.sequence_indices[0], 0u);
  EXPECT_EQ(result.sequence_indices[1], 1u);
  EXPECT_TRUE(result.conclusions.all_hold());
}

TEST(BPSolve, PreconditionsAreChecked) {
  TwoPoint tp;
  const GaugeParams params(1.0, 1.0);
  const auto disc = circle();
  EXPECT_THROW(bp_solve(tp.objective, tp.space, 0, 0.4, params, disc), InvalidInput);
  EXPECT_THROW(bp_solve(tp.objective, tp.space, 2, 1.0, params, disc), InvalidInput);
  EXPECT_THROW(bp_solve(tp.objective, tp.space, 0, 0.0, params, disc), InvalidInput);
  EXPECT_THROW(bp_solve(tp.objective, tp.space, 0, 1.0, GaugeParams(1.0, 2.0), disc), InvalidInput);
  EXPECT_THROW(bp_solve(tp.objective, tp.space, 0, 1.0, params, Discretization{build_rule(3, 8), {}, 64}),
               InvalidInput);
  EXPECT_THROW(SearchSpace({dirac_at(0, 0, 0), dirac_at(0, 0, 0, 2.0)}), InvalidInput);
  EXPECT_THROW(SearchSpace(std::vector<TimedMeasure>{}), InvalidInput);
  BPOptions options;
  options.max_iter = 1;
  EXPECT_THROW(bp_solve(tp.objective, tp.space, 0, 1.0, params, disc, options), NumericFailure);
}

// One seeded 20-candidate run shared by the tests below.
class SeededRun : public ::testing::Test {
 protected:
  static constexpr double kLambda = 1.0;

  static void SetUpTestSuite() {
    const auto candidates = fixtures::seeded_candidates(1);
    space_ = std::make_unique<SearchSpace>(candidates);
    params_ = std::make_unique<GaugeParams>(1.0, 1.0);
    disc_ = std::make_unique<Discretization>(Discretization{build_rule(2, 64), {}, 128});
    std::vector<double> values;
    for (const auto& c : candidates) values.push_back(objective()(c));
    start_ = fixtures::near_optimal_start(values, kLambda);
    result_ = std::make_unique<BPResult>(bp_solve(objective(), *space_, start_, kLambda, *params_, *disc_));
  }
  static void TearDownTestSuite() {
    result_.reset();
    disc_.reset();
    params_.reset();
    space_.reset();
  }
  static Objective objective() { return objectives::negative_second_moment(1.0); }

  static inline std::unique_ptr<SearchSpace> space_;
  static inline std::unique_ptr<GaugeParams> params_;
  static inline std::unique_ptr<Discretization> disc_;
  static inline std::unique_ptr<BPResult> result_;
  static inline std::size_t start_ = 0;
};

TEST_F(SeededRun, ConclusionsHoldUnderExhaustiveCheck) {
  const BPResult& r = *result_;
  EXPECT_TRUE(r.conclusions.all_hold());
  const ConclusionReport v = verify_conclusions(r, objective(), *space_, kLambda, *params_, *disc_);
  EXPECT_TRUE(v.i_holds);
  EXPECT_TRUE(v.ii_holds);
  EXPECT_TRUE(v.iii_holds);
  EXPECT_NEAR(v.ii_margin, r.conclusions.ii_margin, 1e-12);
  EXPECT_NEAR(*v.iii_margin, *r.conclusions.iii_margin, 1e-12);
  EXPECT_EQ(v.runner_up, r.conclusions.runner_up);

  // Independent scan of (iii) from the stored values.
  for (std::size_t i = 0; i < space_->size(); ++i) {
    if (i != r.selected) EXPECT_LT(r.perturbed_values[i], r.perturbed_values[r.selected]);
  }
}

TEST_F(SeededRun, StartIsLambdaOptimalAndSequenceDecays) {
  const BPResult& r = *result_;
  EXPECT_EQ(r.start, start_);
  const double best = *std::max_element(r.objective_values.begin(), r.objective_values.end());
  EXPECT_GE(r.objective_values[start_], best - kLambda);
  const auto& c = r.conclusions;
  ASSERT_EQ(c.rho_to_sequence.size(), r.sequence.size());
  for (std::size_t n = 0; n < c.rho_to_sequence.size(); ++n) {
    EXPECT_NEAR(c.rho_bounds[n], kLambda / std::ldexp(1.0, static_cast<int>(n)), 1e-15);
    EXPECT_LE(c.rho_to_sequence[n], c.rho_bounds[n] + 1e-9);
  }
}

TEST_F(SeededRun, PerturbedValuesImproveMonotonically) {
  const auto& log = result_->log;
  ASSERT_FALSE(log.empty());
  for (std::size_t n = 1; n < log.size(); ++n) EXPECT_GE(log[n].perturbed_value, log[n - 1].perturbed_value - 1e-12);
}

TEST_F(SeededRun, TamperingWithTheSelectionFailsStrictMaximum) {
  BPResult tampered = *result_;
  ASSERT_TRUE(tampered.conclusions.runner_up.has_value());
  tampered.selected = *tampered.conclusions.runner_up;
  const ConclusionReport v = verify_conclusions(tampered, objective(), *space_, kLambda, *params_, *disc_);
  EXPECT_FALSE(v.iii_holds);
  EXPECT_LT(*v.iii_margin, 0.0);
  EXPECT_EQ(v.runner_up, result_->selected);
}

TEST_F(SeededRun, PhiBoundsOnTenProbes) {
  for (std::size_t p = 0; p < 10; ++p) {
    const PhiDerivativeReport r = phi_derivative_bounds((*space_)[p], *result_, *params_, *disc_);
    EXPECT_TRUE(r.time_holds);
    EXPECT_TRUE(r.measure_gradient.holds()) << p << ": " << r.measure_gradient.lhs << " > " << r.measure_gradient.rhs;
    EXPECT_TRUE(r.mixed_hessian.holds()) << p << ": " << r.mixed_hessian.lhs << " > " << r.mixed_hessian.rhs;
    EXPECT_EQ(r.measure_gradient.constant, kPhiBoundConstant);
  }
}

TEST_F(SeededRun, PhiGradientMatchesFiniteDifferences) {
  const TimedMeasure& probe = (*space_)[3];
  const PhiDerivativeReport r = phi_derivative_bounds(probe, *result_, *params_, *disc_);
  const double h = 1e-5;
  auto phi_at = [&](const DiscreteMeasure& mu, double t) {
    return phi_delta(TimedMeasure(t, mu, probe.horizon()), result_->sequence, *params_, *disc_).value;
  };
  const double dt = (phi_at(probe.mu(), probe.t() + h) - phi_at(probe.mu(), probe.t() - h)) / (2 * h);
  EXPECT_NEAR(r.time_derivative, dt, 1e-6);
  for (std::size_t j = 0; j < probe.mu().size(); ++j) {
    for (int d = 0; d < 2; ++d) {
      Eigen::Vector2d step = Eigen::Vector2d::Zero();
      step[d] = h;
      const double fd = (phi_at(probe.mu().with_atom_shifted(j, step), probe.t()) -
                         phi_at(probe.mu().with_atom_shifted(j, -step), probe.t())) /
                        (2 * h * probe.mu().weight(j));
      const double g = r.gradient_at_atoms[j][d];
      EXPECT_LE(std::abs(fd - g), 1e-4 * std::max(1.0, std::abs(g))) << j << "," << d;
    }
  }
}

TEST(PhiDerivatives, VanishAtTheAnchorOfASingletonRun) {
  const GaugeParams params(1.0, 1.0);
  const auto disc = circle();
  const SearchSpace space(fixtures::seeded_candidates(3, 1));
  const auto objective = objectives::negative_second_moment();
  const BPResult result = bp_solve(objective, space, 0, 1.0, params, disc);
  const PhiDerivativeReport r = phi_derivative_bounds(space[0], result, params, disc);
  EXPECT_EQ(r.time_derivative, 0.0);
  for (const auto& g : r.gradient_at_atoms) EXPECT_LT(g.norm(), 1e-10);
  EXPECT_TRUE(r.all_hold());
}

TEST(PhiDerivatives, TimeBoundIsSaturatedAtTheWorstCase) {
  const double horizon = 1.5;
  const GaugeParams params(1.0, horizon);
  const auto disc = circle();
  const DiscreteMeasure mu = DiscreteMeasure::dirac(Eigen::Vector2d(0.5, 0.0));
  const SearchSpace space({TimedMeasure(0.0, mu, horizon)});
  const BPResult result = bp_solve(objectives::negative_second_moment(), space, 0, 1.0, params, disc);
  const PhiDerivativeReport r = phi_derivative_bounds(TimedMeasure(horizon, mu, horizon), result, params, disc);
  EXPECT_EQ(r.time_bound, 4.0 * horizon);
  EXPECT_EQ(r.time_derivative, 4.0 * horizon);
  EXPECT_TRUE(r.time_holds);
}

}  // namespace
}  // namespace swgauge
