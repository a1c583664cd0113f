#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "swgauge/measure.hpp"
#include "swgauge/sphere_rule.hpp"
#include "swgauge/univariate_ot.hpp"
#include "swgauge/wasserstein_calculus.hpp"

namespace swgauge {

/// Perturbation scale delta, the matching smoothing level sigma = 1/delta and
/// the time horizon T.
class GaugeParams {
 public:
  GaugeParams(double delta, double horizon);

  double delta() const { return delta_; }
  double sigma() const { return sigma_; }
  double horizon() const { return horizon_; }
  SmoothingLevel smoothing() const { return SmoothingLevel(sigma_); }

 private:
  double delta_;
  double sigma_;
  double horizon_;
};

/// Numerical resolution shared by every distance and derivative evaluation.
struct Discretization {
  SphereRule rule;
  ExpectationRule expectation;
  int legendre_order = 128;
};

/// rho((s, mu), (t, nu)) = |t - s|^2 + SW2^sigma(mu, nu)^2 with sigma = params.sigma().
double rho_sigma(const TimedMeasure& a, const TimedMeasure& b, const GaugeParams& params, const Discretization& disc);

/// One term c * rho(., anchors[anchor]) of the perturbation series.
struct PhiTerm {
  double coefficient;
  std::size_t anchor;
};

/// Coefficients 2^-n for the recorded anchors, with consecutive repeats merged.
/// If the last two anchors coincide the sequence is treated as constant from
/// there on and the geometric tail 2^-(N-1) is folded into the last term.
std::vector<PhiTerm> phi_terms(std::span<const TimedMeasure> anchors, bool allow_closed_tail = true);

struct PhiEvaluation {
  double value = 0.0;
  /// Upper bound on the omitted terms; zero when the tail was summed exactly.
  double tail_bound = 0.0;
  bool closed_form_tail = false;
};

/// phi(x) = sum_n 2^-n rho(x, anchors[n]). With allow_closed_tail = false the
/// series is truncated after the recorded anchors and tail_bound is
/// 2^-(N-1) max_n rho(x, anchors[n]).
PhiEvaluation phi_delta(const TimedMeasure& x, std::span<const TimedMeasure> anchors, const GaugeParams& params,
                        const Discretization& disc, bool allow_closed_tail = true);

using Objective = std::function<double(const TimedMeasure&)>;

namespace objectives {

/// G(t, mu) = -m2(mu) + time_weight * t
Objective negative_second_moment(double time_weight = 0.0);
/// G(t, mu) = -SW2^sigma(mu, target)^2 + time_weight * t
Objective negative_sw2_to_target(DiscreteMeasure target, SmoothingLevel s, Discretization disc,
                                 double time_weight = 0.0);
/// G(t, mu) = mean_coeffs . mean(mu) + second_moment_coeff * m2(mu) + time_weight * t
Objective moment_linear(Eigen::VectorXd mean_coeffs, double second_moment_coeff, double time_weight = 0.0);

}  // namespace objectives

/// Finite set of candidates standing in for [0, T] x P2(R^k).
class SearchSpace {
 public:
  explicit SearchSpace(std::vector<TimedMeasure> candidates);

  std::size_t size() const { return candidates_.size(); }
  const TimedMeasure& operator[](std::size_t i) const { return candidates_[i]; }
  const std::vector<TimedMeasure>& candidates() const { return candidates_; }
  int dim() const { return candidates_.front().mu().dim(); }
  double horizon() const { return candidates_.front().horizon(); }

 private:
  std::vector<TimedMeasure> candidates_;
};

struct BPOptions {
  int max_iter = 200;
  /// Absolute tolerance on every objective comparison in the conclusion checks.
  double tolerance = 1e-9;
};

struct BPIteration {
  int step = 0;
  std::size_t selected = 0;
  /// max over the space of G - delta^2 * (penalty accumulated so far)
  double perturbed_value = 0.0;
};

/// The three conclusions of the smooth variational principle, with margins
/// (positive = satisfied with room to spare).
struct ConclusionReport {
  // (i) rho(selected, s_n) <= lambda / (2^n delta^2)
  std::vector<double> rho_to_sequence;
  std::vector<double> rho_bounds;
  double i_margin = 0.0;
  bool i_holds = false;
  // (ii) G(s_0) <= G(selected) - delta^2 phi(selected)
  double ii_margin = 0.0;
  bool ii_holds = false;
  // (iii) G - delta^2 phi has a strict maximum at the selected point. The
  // margin is empty when no other point exists.
  std::optional<double> iii_margin;
  std::optional<std::size_t> runner_up;
  bool iii_holds = false;

  bool all_hold() const { return i_holds && ii_holds && iii_holds; }
};

struct BPResult {
  std::size_t start = 0;
  std::size_t selected = 0;
  std::vector<std::size_t> sequence_indices;
  std::vector<TimedMeasure> sequence;
  std::vector<double> objective_values;
  std::vector<double> phi_values;
  std::vector<double> perturbed_values;
  std::vector<BPIteration> log;
  ConclusionReport conclusions;
};

/// Constructive Borwein-Preiss iteration over a finite space. Starting from
/// s_0 = space[start], step n picks the exact maximizer of
/// s -> G(s) - delta^2 sum_{j<=n} 2^-j rho(s, s_j), lowest index on ties, and
/// stops once the same candidate has been picked twice in a row.
///
/// Throws InvalidInput when G(start) < max G - lambda, and NumericFailure if
/// the sequence has not settled after max_iter steps.
BPResult bp_solve(const Objective& objective, const SearchSpace& space, std::size_t start, double lambda,
                  const GaugeParams& params, const Discretization& disc, const BPOptions& options = {});

/// Re-checks (i)-(iii) from scratch: fresh rho and phi evaluations, and an
/// exhaustive scan of the space for (iii). Uses result.selected as the
/// claimed maximizer.
ConclusionReport verify_conclusions(const BPResult& result, const Objective& objective, const SearchSpace& space,
                                    double lambda, const GaugeParams& params, const Discretization& disc,
                                    double tolerance = 1e-9);

/// Constant for the integral bounds on D_mu phi and D^2_{x mu} phi, fixed from
/// the sweep recorded in docs/constants.md.
inline constexpr double kPhiBoundConstant = 8.0;

struct PhiDerivativeReport {
  double time_derivative = 0.0;
  double time_bound = 0.0;  // 4T
  bool time_holds = false;
  BoundCheck measure_gradient;  // int |D_mu phi|^2 dmu  vs  C (m2(mu) + m2(mu~) + 1/delta^2)
  BoundCheck mixed_hessian;     // int |D^2_{x mu} phi| dmu  vs  C (1 + delta sqrt(m2(mu~)))
  std::vector<Eigen::VectorXd> gradient_at_atoms;
  std::vector<Eigen::MatrixXd> hessian_at_atoms;
  TransportDiagnostics diagnostics;

  bool all_hold() const { return time_holds && measure_gradient.holds() && mixed_hessian.holds(); }
};

/// Derivatives of phi at the probe x for the sequence recorded in result:
///   d/dt phi = sum_n c_n 2 (t - t_n),
///   D_mu phi = sum_n c_n D_mu SW2^sigma(mu, mu_n)^2,
///   D^2_{x mu} phi = sum_n c_n D^2_{x mu} SW2^sigma(mu, mu_n)^2.
PhiDerivativeReport phi_derivative_bounds(const TimedMeasure& x, const BPResult& result, const GaugeParams& params,
                                          const Discretization& disc);

}  // namespace swgauge
