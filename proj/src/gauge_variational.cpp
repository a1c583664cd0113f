#include "swgauge/gauge_variational.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "swgauge/errors.hpp"
#include "swgauge/sliced_distance.hpp"

namespace swgauge {

namespace {

void check_compatible(const TimedMeasure& a, const TimedMeasure& b) {
  if (a.mu().dim() != b.mu().dim()) throw InvalidInput("timed measures live in different dimensions");
  if (a.horizon() != b.horizon()) throw InvalidInput("timed measures have different horizons");
}

// Shared scoring of (i)-(iii) once every rho / phi value is known.
struct ConclusionInputs {
  std::vector<double> rho_to_sequence;  // rho(selected, s_n)
  double lambda = 0.0;
  double delta = 0.0;
  double start_objective = 0.0;
  double selected_perturbed = 0.0;
  // (candidate index, perturbed value) for every point distinct from the selected one
  std::vector<std::pair<std::size_t, double>> others;
  double tolerance = 0.0;
};

ConclusionReport assess(const ConclusionInputs& in) {
  ConclusionReport report;
  report.rho_to_sequence = in.rho_to_sequence;
  report.i_holds = true;
  report.i_margin = std::numeric_limits<double>::infinity();
  double scale = in.lambda / (in.delta * in.delta);
  for (double rho : in.rho_to_sequence) {
    report.rho_bounds.push_back(scale);
    report.i_margin = std::min(report.i_margin, scale - rho);
    if (rho > scale + in.tolerance) report.i_holds = false;
    scale *= 0.5;
  }

  report.ii_margin = in.selected_perturbed - in.start_objective;
  report.ii_holds = report.ii_margin >= -in.tolerance;

  if (in.others.empty()) {
    report.iii_holds = true;
  } else {
    auto best = std::max_element(in.others.begin(), in.others.end(),
                                 [](const auto& a, const auto& b) { return a.second < b.second; });
    report.runner_up = best->first;
    report.iii_margin = in.selected_perturbed - best->second;
    report.iii_holds = *report.iii_margin > in.tolerance;
  }
  return report;
}

}  // namespace

GaugeParams::GaugeParams(double delta, double horizon) : delta_(delta), sigma_(1.0 / delta), horizon_(horizon) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidInput("delta must be positive and finite");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidInput("horizon must be positive and finite");
}

double rho_sigma(const TimedMeasure& a, const TimedMeasure& b, const GaugeParams& params, const Discretization& disc) {
  check_compatible(a, b);
  const double dt = a.t() - b.t();
  const double sw =
      sw2_sigma_squared(a.mu(), b.mu(), params.smoothing(), disc.rule, disc.legendre_order).value;
  return dt * dt + sw;
}

std::vector<PhiTerm> phi_terms(std::span<const TimedMeasure> anchors, bool allow_closed_tail) {
  std::vector<PhiTerm> terms;
  double coefficient = 1.0;
  for (std::size_t n = 0; n < anchors.size(); ++n) {
    if (!terms.empty() && anchors[terms.back().anchor] == anchors[n]) {
      terms.back().coefficient += coefficient;
    } else {
      terms.push_back({coefficient, n});
    }
    coefficient *= 0.5;
  }
  const std::size_t count = anchors.size();
  if (allow_closed_tail && count >= 2 && anchors[count - 1] == anchors[count - 2]) {
    // sum_{n >= N} 2^-n = 2^-(N-1), which is the coefficient of the last recorded anchor.
    terms.back().coefficient += 2.0 * coefficient;
  }
  return terms;
}

PhiEvaluation phi_delta(const TimedMeasure& x, std::span<const TimedMeasure> anchors, const GaugeParams& params,
                        const Discretization& disc, bool allow_closed_tail) {
  if (anchors.empty()) throw InvalidInput("phi needs at least one anchor");
  const std::size_t count = anchors.size();
  PhiEvaluation eval;
  eval.closed_form_tail = allow_closed_tail && count >= 2 && anchors[count - 1] == anchors[count - 2];
  double sup_rho = 0.0;
  for (const PhiTerm& term : phi_terms(anchors, allow_closed_tail)) {
    const double rho = rho_sigma(x, anchors[term.anchor], params, disc);
    sup_rho = std::max(sup_rho, rho);
    eval.value += term.coefficient * rho;
  }
  eval.tail_bound = eval.closed_form_tail ? 0.0 : std::ldexp(sup_rho, -static_cast<int>(count - 1));
  return eval;
}

namespace objectives {

Objective negative_second_moment(double time_weight) {
  return [time_weight](const TimedMeasure& x) { return -second_moment(x.mu()) + time_weight * x.t(); };
}

Objective negative_sw2_to_target(DiscreteMeasure target, SmoothingLevel s, Discretization disc, double time_weight) {
  return [target = std::move(target), s, disc = std::move(disc), time_weight](const TimedMeasure& x) {
    return -sw2_sigma_squared(x.mu(), target, s, disc.rule, disc.legendre_order).value + time_weight * x.t();
  };
}

Objective moment_linear(Eigen::VectorXd mean_coeffs, double second_moment_coeff, double time_weight) {
  return [mean_coeffs = std::move(mean_coeffs), second_moment_coeff, time_weight](const TimedMeasure& x) {
    if (mean_coeffs.size() != x.mu().dim()) throw InvalidInput("mean coefficient vector has the wrong dimension");
    return mean_coeffs.dot(mean(x.mu())) + second_moment_coeff * second_moment(x.mu()) + time_weight * x.t();
  };
}

}  // namespace objectives

SearchSpace::SearchSpace(std::vector<TimedMeasure> candidates) : candidates_(std::move(candidates)) {
  if (candidates_.empty()) throw InvalidInput("search space must contain at least one candidate");
  for (const TimedMeasure& c : candidates_) check_compatible(candidates_.front(), c);
}

BPResult bp_solve(const Objective& objective, const SearchSpace& space, std::size_t start, double lambda,
                  const GaugeParams& params, const Discretization& disc, const BPOptions& options) {
  const std::size_t n = space.size();
  if (start >= n) throw InvalidInput("start index is outside the search space");
  if (!(lambda > 0.0)) throw InvalidInput("lambda must be positive");
  if (space.horizon() != params.horizon()) throw InvalidInput("search space horizon differs from the gauge horizon");
  if (space.dim() != disc.rule.dim()) throw InvalidInput("sphere rule dimension differs from the search space");

  BPResult result;
  result.start = start;
  result.objective_values.resize(n);
  for (std::size_t i = 0; i < n; ++i) result.objective_values[i] = objective(space[i]);
  const double max_objective = *std::max_element(result.objective_values.begin(), result.objective_values.end());
  if (result.objective_values[start] < max_objective - lambda) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "start point is not lambda-optimal: G(start) = " << result.objective_values[start]
        << ", max G = " << max_objective << ", lambda = " << lambda;
    throw InvalidInput(msg.str());
  }

  // rho between candidates, filled on demand.
  std::vector<std::optional<double>> cache(n * n);
  auto rho = [&](std::size_t a, std::size_t b) {
    if (a == b) return 0.0;
    auto& slot = cache[a * n + b];
    if (!slot) {
      slot = rho_sigma(space[a], space[b], params, disc);
      cache[b * n + a] = slot;
    }
    return *slot;
  };

  const double delta_sq = params.delta() * params.delta();
  std::vector<double> penalty(n, 0.0);
  result.sequence_indices.push_back(start);
  double coefficient = 1.0;
  bool settled = false;
  for (int step = 0; step < options.max_iter; ++step) {
    const std::size_t anchor = result.sequence_indices.back();
    for (std::size_t i = 0; i < n; ++i) penalty[i] += coefficient * rho(i, anchor);
    coefficient *= 0.5;

    std::size_t best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double value = result.objective_values[i] - delta_sq * penalty[i];
      if (value > best_value) {
        best_value = value;
        best = i;
      }
    }
    result.log.push_back({step, best, best_value});
    result.sequence_indices.push_back(best);
    const std::size_t len = result.sequence_indices.size();
    if (len >= 3 && result.sequence_indices[len - 1] == result.sequence_indices[len - 2] &&
        result.sequence_indices[len - 2] == result.sequence_indices[len - 3]) {
      settled = true;
      break;
    }
  }
  if (!settled) {
    std::ostringstream msg;
    msg << "Borwein-Preiss iteration did not settle within " << options.max_iter << " steps; selections:";
    for (const BPIteration& it : result.log) msg << ' ' << it.selected;
    throw NumericFailure(msg.str());
  }

  result.selected = result.sequence_indices.back();
  for (std::size_t idx : result.sequence_indices) result.sequence.push_back(space[idx]);

  const std::vector<PhiTerm> terms = phi_terms(result.sequence);
  result.phi_values.resize(n);
  result.perturbed_values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double phi = 0.0;
    for (const PhiTerm& term : terms) phi += term.coefficient * rho(i, result.sequence_indices[term.anchor]);
    result.phi_values[i] = phi;
    result.perturbed_values[i] = result.objective_values[i] - delta_sq * phi;
  }

  ConclusionInputs in;
  in.lambda = lambda;
  in.delta = params.delta();
  in.start_objective = result.objective_values[start];
  in.selected_perturbed = result.perturbed_values[result.selected];
  in.tolerance = options.tolerance;
  for (std::size_t idx : result.sequence_indices) in.rho_to_sequence.push_back(rho(result.selected, idx));
  for (std::size_t i = 0; i < n; ++i) {
    if (!(space[i] == space[result.selected])) in.others.emplace_back(i, result.perturbed_values[i]);
  }
  result.conclusions = assess(in);
  return result;
}

ConclusionReport verify_conclusions(const BPResult& result, const Objective& objective, const SearchSpace& space,
                                    double lambda, const GaugeParams& params, const Discretization& disc,
                                    double tolerance) {
  if (result.selected >= space.size() || result.start >= space.size()) {
    throw InvalidInput("result indices do not belong to this search space");
  }
  if (result.sequence.empty()) throw InvalidInput("result has an empty sequence");
  const TimedMeasure& selected = space[result.selected];
  const double delta_sq = params.delta() * params.delta();
  auto perturbed = [&](const TimedMeasure& x) {
    return objective(x) - delta_sq * phi_delta(x, result.sequence, params, disc).value;
  };

  ConclusionInputs in;
  in.lambda = lambda;
  in.delta = params.delta();
  in.start_objective = objective(space[result.start]);
  in.selected_perturbed = perturbed(selected);
  in.tolerance = tolerance;
  for (const TimedMeasure& anchor : result.sequence) in.rho_to_sequence.push_back(rho_sigma(selected, anchor, params, disc));
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (!(space[i] == selected)) in.others.emplace_back(i, perturbed(space[i]));
  }
  return assess(in);
}

PhiDerivativeReport phi_derivative_bounds(const TimedMeasure& x, const BPResult& result, const GaugeParams& params,
                                          const Discretization& disc) {
  if (result.sequence.empty()) throw InvalidInput("result has an empty sequence");
  check_compatible(x, result.sequence.front());
  const DiscreteMeasure& mu = x.mu();
  const std::vector<PhiTerm> terms = phi_terms(result.sequence);
  const SmoothingLevel s = params.smoothing();

  PhiDerivativeReport report;
  report.time_bound = 4.0 * params.horizon();
  report.gradient_at_atoms.assign(mu.size(), Eigen::VectorXd::Zero(mu.dim()));
  report.hessian_at_atoms.assign(mu.size(), Eigen::MatrixXd::Zero(mu.dim(), mu.dim()));
  for (const PhiTerm& term : terms) {
    const TimedMeasure& anchor = result.sequence[term.anchor];
    report.time_derivative += term.coefficient * 2.0 * (x.t() - anchor.t());
    const SlicedTransport transport(mu, anchor.mu(), s, disc.rule, disc.expectation);
    for (std::size_t j = 0; j < mu.size(); ++j) {
      const auto [gradient, hessian] = transport.derivatives(mu.atom(j), &report.diagnostics);
      report.gradient_at_atoms[j] += term.coefficient * gradient;
      report.hessian_at_atoms[j] += term.coefficient * hessian;
    }
  }
  report.time_holds = std::abs(report.time_derivative) <= report.time_bound;

  const double m2_selected = second_moment(result.sequence.back().mu());
  const double delta = params.delta();
  report.measure_gradient.constant = kPhiBoundConstant;
  report.mixed_hessian.constant = kPhiBoundConstant;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    report.measure_gradient.lhs += mu.weight(j) * report.gradient_at_atoms[j].squaredNorm();
    report.mixed_hessian.lhs += mu.weight(j) * spectral_norm(report.hessian_at_atoms[j]);
  }
  report.measure_gradient.rhs = kPhiBoundConstant * (second_moment(mu) + m2_selected + 1.0 / (delta * delta));
  report.mixed_hessian.rhs = kPhiBoundConstant * (1.0 + delta * std::sqrt(m2_selected));
  return report;
}

}  // namespace swgauge
