#include "swgauge/wasserstein_calculus.hpp"

#include <cmath>
#include <sstream>

#include "swgauge/errors.hpp"
#include "swgauge/sliced_distance.hpp"

namespace swgauge {

namespace {

void require_smoothing(const SmoothingLevel& s) {
  if (!s.is_positive()) {
    throw InvalidInput(
        "derivatives need sigma > 0: for sigma = 0 the slices of a discrete measure have no continuous, strictly "
        "increasing CDF and the transport map is undefined");
  }
}

NoiseExpectation hermite_expectations(const TransportMap1D& map, double a, double sigma, int order,
                                      TransportDiagnostics* diag) {
  const QuadratureRule& hermite = cached_gauss_hermite_normal(order);
  NoiseExpectation out;
  for (std::size_t q = 0; q < hermite.size(); ++q) {
    const double z = hermite.nodes[q];
    const TransportJet jet = transport_jet(map, a + sigma * z, diag);
    out.transport += hermite.weights[q] * jet.value;
    out.derivative += hermite.weights[q] * jet.derivative;
    out.score += hermite.weights[q] * z * jet.value;
  }
  return out;
}

NoiseExpectation slice_expectations(const TransportMap1D& map, double a, double sigma, const ExpectationRule& rule,
                                    TransportDiagnostics* diag) {
  if (rule.method == ExpectationMethod::gauss_hermite) return hermite_expectations(map, a, sigma, rule.order, diag);
  return noise_expectation(map, a, sigma, rule.order, diag);
}

}  // namespace

void validate(const ExpectationRule& rule) {
  if (rule.order < kMinHermiteOrder) {
    std::ostringstream msg;
    msg << "expectation order must be >= " << kMinHermiteOrder << " (got " << rule.order << ")";
    throw InvalidInput(msg.str());
  }
}

const char* to_string(ExpectationMethod method) {
  return method == ExpectationMethod::gauss_hermite ? "hermite" : "panels";
}

ExpectationMethod parse_expectation_method(const std::string& name) {
  if (name == "panels") return ExpectationMethod::quantile_panels;
  if (name == "hermite") return ExpectationMethod::gauss_hermite;
  throw InvalidInput("unknown expectation method '" + name + "' (expected panels or hermite)");
}

SlicedTransport::SlicedTransport(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SmoothingLevel& s,
                                 const SphereRule& rule, const ExpectationRule& expectation)
    : dim_(mu.dim()), sigma_(s.sigma()), directions_(rule.nodes()), weights_(rule.weights()), expectation_(expectation) {
  require_smoothing(s);
  validate(expectation);
  if (mu.dim() != nu.dim() || mu.dim() != rule.dim()) throw InvalidInput("dimension mismatch between mu, nu and rule");
  maps_.reserve(directions_.size());
  for (const Direction& theta : directions_) {
    maps_.emplace_back(smoothed_slice(mu, theta, sigma_), smoothed_slice(nu, theta, sigma_));
  }
  // An antipodal pair contributes twice the same term to every derivative.
  folded_weights_.assign(directions_.size(), 0.0);
  const std::vector<std::size_t> partner = antipodal_partners(rule);
  for (std::size_t i = 0; i < partner.size(); ++i) folded_weights_[partner[i]] += weights_[i];
}

NoiseExpectation SlicedTransport::expectations(std::size_t i, double a, TransportDiagnostics* diag) const {
  return slice_expectations(maps_[i], a, sigma_, expectation_, diag);
}

double SlicedTransport::expected_transport(std::size_t i, double a, TransportDiagnostics* diag) const {
  return expectations(i, a, diag).transport;
}

double SlicedTransport::expected_transport_derivative(std::size_t i, double a, TransportDiagnostics* diag) const {
  return expectations(i, a, diag).derivative;
}

Eigen::VectorXd SlicedTransport::gradient(const Point& x, TransportDiagnostics* diag) const {
  if (x.size() != dim_) throw InvalidInput("evaluation point has the wrong dimension");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim_);
  for (std::size_t i = 0; i < directions_.size(); ++i) {
    if (folded_weights_[i] == 0.0) continue;
    const auto& theta = directions_[i].components();
    const double a = theta.dot(x);
    g.noalias() += folded_weights_[i] * (a - expected_transport(i, a, diag)) * theta;
  }
  return g;
}

Eigen::MatrixXd SlicedTransport::hessian(const Point& x, TransportDiagnostics* diag) const {
  if (x.size() != dim_) throw InvalidInput("evaluation point has the wrong dimension");
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim_, dim_);
  for (std::size_t i = 0; i < directions_.size(); ++i) {
    if (folded_weights_[i] == 0.0) continue;
    const auto& theta = directions_[i].components();
    const double a = theta.dot(x);
    h.noalias() += folded_weights_[i] * (1.0 - expected_transport_derivative(i, a, diag)) * (theta * theta.transpose());
  }
  return h;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> SlicedTransport::derivatives(const Point& x,
                                                                         TransportDiagnostics* diag) const {
  if (x.size() != dim_) throw InvalidInput("evaluation point has the wrong dimension");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim_);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim_, dim_);
  for (std::size_t i = 0; i < directions_.size(); ++i) {
    if (folded_weights_[i] == 0.0) continue;
    const auto& theta = directions_[i].components();
    const double a = theta.dot(x);
    const NoiseExpectation e = expectations(i, a, diag);
    g.noalias() += folded_weights_[i] * (a - e.transport) * theta;
    h.noalias() += folded_weights_[i] * (1.0 - e.derivative) * (theta * theta.transpose());
  }
  return {g, h};
}

GradientField::GradientField(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SmoothingLevel& s,
                             const SphereRule& rule, const ExpectationRule& expectation)
    : transport_(std::make_shared<const SlicedTransport>(mu, nu, s, rule, expectation)) {
  at_atoms_.reserve(mu.size());
  for (std::size_t j = 0; j < mu.size(); ++j) at_atoms_.push_back(transport_->gradient(mu.atom(j), &diagnostics_));
}

HessianField::HessianField(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SmoothingLevel& s,
                           const SphereRule& rule, const ExpectationRule& expectation)
    : transport_(std::make_shared<const SlicedTransport>(mu, nu, s, rule, expectation)) {
  at_atoms_.reserve(mu.size());
  for (std::size_t j = 0; j < mu.size(); ++j) at_atoms_.push_back(transport_->hessian(mu.atom(j), &diagnostics_));
}

GradientField grad_measure(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SmoothingLevel& s,
                           const SphereRule& rule, const ExpectationRule& expectation) {
  return GradientField(mu, nu, s, rule, expectation);
}

HessianField hess_x_measure(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SmoothingLevel& s,
                            const SphereRule& rule, const ExpectationRule& expectation) {
  return HessianField(mu, nu, s, rule, expectation);
}

double spectral_norm(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

BoundCheck first_bound(const GradientField& grad, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                       const SmoothingLevel& s) {
  BoundCheck check;
  check.constant = kMomentBoundConstant;
  for (std::size_t j = 0; j < mu.size(); ++j) check.lhs += mu.weight(j) * grad.at_atoms()[j].squaredNorm();
  check.rhs = kMomentBoundConstant * (second_moment(mu) + smoothed_second_moment(nu, s));
  return check;
}

BoundCheck check_first_bound(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SmoothingLevel& s,
                             const SphereRule& rule, const ExpectationRule& expectation) {
  return first_bound(grad_measure(mu, nu, s, rule, expectation), mu, nu, s);
}

BoundCheck second_bound(const HessianField& hess, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                        const SmoothingLevel& s) {
  require_smoothing(s);
  BoundCheck check;
  check.constant = kMomentBoundConstant;
  for (std::size_t j = 0; j < mu.size(); ++j) check.lhs += mu.weight(j) * spectral_norm(hess.at_atoms()[j]);
  check.rhs = kMomentBoundConstant * (1.0 + std::sqrt(smoothed_second_moment(nu, s)) / s.sigma());
  return check;
}

BoundCheck check_second_bound(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SmoothingLevel& s,
                              const SphereRule& rule, const ExpectationRule& expectation) {
  return second_bound(hess_x_measure(mu, nu, s, rule, expectation), mu, nu, s);
}

double IbpSides::residual() const { return std::abs(lhs - rhs); }

IbpSides ibp_identity(const TransportMap1D& map, const ExpectationRule& expectation) {
  validate(expectation);
  const GaussianMixture1D& source = map.source();
  const double sigma = source.sigma();
  IbpSides sides;
  for (std::size_t j = 0; j < source.size(); ++j) {
    const NoiseExpectation e = slice_expectations(map, source.means()[j], sigma, expectation, nullptr);
    sides.lhs += source.weights()[j] * e.derivative;
    sides.rhs += source.weights()[j] * e.score / sigma;
  }
  return sides;
}

double ibp_identity_residual(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SmoothingLevel& s,
                             const Direction& theta, const ExpectationRule& expectation) {
  require_smoothing(s);
  const TransportMap1D map(smoothed_slice(mu, theta, s.sigma()), smoothed_slice(nu, theta, s.sigma()));
  return ibp_identity(map, expectation).residual();
}

}  // namespace swgauge
