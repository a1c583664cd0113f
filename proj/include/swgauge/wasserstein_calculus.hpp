#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "swgauge/measure.hpp"
#include "swgauge/quadrature.hpp"
#include "swgauge/sphere_rule.hpp"
#include "swgauge/univariate_ot.hpp"

namespace swgauge {

inline constexpr int kDefaultHermiteOrder = 64;
inline constexpr int kMinHermiteOrder = 8;

/// How E[g(a + sigma Z)] is computed on a slice.
///
/// quantile_panels (default): the integral is taken in quantile space, split
/// at the weight levels of both slices and at F(a), with `order`
/// Gauss-Legendre nodes per panel (see noise_expectation). Saturation cannot
/// occur.
///
/// gauss_hermite: plain `order`-point Gauss-Hermite in Z through transport()
/// and transport_derivative(). Cheap, but T has features on the scale of the
/// gaps between components, so it converges slowly once sigma is below the
/// spacing of the projected atoms.
enum class ExpectationMethod { quantile_panels, gauss_hermite };

struct ExpectationRule {
  ExpectationMethod method = ExpectationMethod::quantile_panels;
  int order = kDefaultHermiteOrder;
};

/// Throws InvalidInput unless order >= kMinHermiteOrder.
void validate(const ExpectationRule& rule);
const char* to_string(ExpectationMethod method);
/// "panels" or "hermite".
ExpectationMethod parse_expectation_method(const std::string& name);

/// Per-direction transport maps between the smoothed slices of mu and nu,
/// together with the rule used for expectations over N_sigma.
/// Building one of these is the expensive part; evaluation is pure.
class SlicedTransport {
 public:
  SlicedTransport(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SmoothingLevel& s,
                  const SphereRule& rule, const ExpectationRule& expectation = {});

  int dim() const { return dim_; }
  double sigma() const { return sigma_; }
  const ExpectationRule& expectation() const { return expectation_; }
  std::size_t directions() const { return directions_.size(); }
  const Direction& direction(std::size_t i) const { return directions_[i]; }
  double direction_weight(std::size_t i) const { return weights_[i]; }
  const TransportMap1D& slice(std::size_t i) const { return maps_[i]; }

  /// E[T_i(a + sigma Z)] for direction i.
  double expected_transport(std::size_t i, double a, TransportDiagnostics* diag = nullptr) const;
  /// E[T_i'(a + sigma Z)] for direction i.
  double expected_transport_derivative(std::size_t i, double a, TransportDiagnostics* diag = nullptr) const;
  /// All three expectations E[T_i], E[T_i'], E[Z T_i] at once.
  NoiseExpectation expectations(std::size_t i, double a, TransportDiagnostics* diag = nullptr) const;

  /// sum_i w_i theta_i (theta_i^T x - E[T_i(theta_i^T x + sigma Z)])
  Eigen::VectorXd gradient(const Point& x, TransportDiagnostics* diag = nullptr) const;
  /// sum_i w_i theta_i theta_i^T (1 - E[T_i'(theta_i^T x + sigma Z)])
  Eigen::MatrixXd hessian(const Point& x, TransportDiagnostics* diag = nullptr) const;
  /// Both of the above from one pass over the directions.
  std::pair<Eigen::VectorXd, Eigen::MatrixXd> derivatives(const Point& x, TransportDiagnostics* diag = nullptr) const;

 private:
  int dim_;
  double sigma_;
  std::vector<Direction> directions_;
  std::vector<double> weights_;
  std::vector<double> folded_weights_;
  std::vector<TransportMap1D> maps_;
  ExpectationRule expectation_;
};

/// The L-derivative x -> D_mu SW2^sigma(mu, nu)^2 (x). Values at mu's atoms are
/// computed on construction; any other point is evaluated on request.
class GradientField {
 public:
  GradientField(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SmoothingLevel& s, const SphereRule& rule,
                const ExpectationRule& expectation = {});

  Eigen::VectorXd operator()(const Point& x, TransportDiagnostics* diag = nullptr) const {
    return transport_->gradient(x, diag);
  }
  const std::vector<Eigen::VectorXd>& at_atoms() const { return at_atoms_; }
  const TransportDiagnostics& diagnostics() const { return diagnostics_; }
  const SlicedTransport& transport() const { return *transport_; }

 private:
  std::shared_ptr<const SlicedTransport> transport_;
  std::vector<Eigen::VectorXd> at_atoms_;
  TransportDiagnostics diagnostics_;
};

/// The mixed derivative x -> D^2_{x mu} SW2^sigma(mu, nu)^2 (x). Every value is
/// symmetric: it is a weighted sum of theta theta^T.
class HessianField {
 public:
  HessianField(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SmoothingLevel& s, const SphereRule& rule,
               const ExpectationRule& expectation = {});

  Eigen::MatrixXd operator()(const Point& x, TransportDiagnostics* diag = nullptr) const {
    return transport_->hessian(x, diag);
  }
  const std::vector<Eigen::MatrixXd>& at_atoms() const { return at_atoms_; }
  const TransportDiagnostics& diagnostics() const { return diagnostics_; }
  const SlicedTransport& transport() const { return *transport_; }

 private:
  std::shared_ptr<const SlicedTransport> transport_;
  std::vector<Eigen::MatrixXd> at_atoms_;
  TransportDiagnostics diagnostics_;
};

GradientField grad_measure(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SmoothingLevel& s,
                           const SphereRule& rule, const ExpectationRule& expectation = {});

HessianField hess_x_measure(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SmoothingLevel& s,
                            const SphereRule& rule, const ExpectationRule& expectation = {});

/// Constant used in both moment bounds under the normalized-sphere convention.
inline constexpr double kMomentBoundConstant = 2.0;

struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double constant = 0.0;
  bool holds() const { return lhs <= rhs; }
};

/// lhs = sum_j w_j |grad(x_j)|^2,
/// rhs = C (m2(mu) + m2(nu * N_sigma)).
BoundCheck check_first_bound(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SmoothingLevel& s,
                             const SphereRule& rule, const ExpectationRule& expectation = {});
BoundCheck first_bound(const GradientField& grad, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                       const SmoothingLevel& s);

/// lhs = sum_j w_j ||hess(x_j)||_2,
/// rhs = C (1 + sqrt(m2(nu * N_sigma)) / sigma).
BoundCheck check_second_bound(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SmoothingLevel& s,
                              const SphereRule& rule, const ExpectationRule& expectation = {});
BoundCheck second_bound(const HessianField& hess, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                        const SmoothingLevel& s);

/// Spectral norm of a symmetric matrix.
double spectral_norm(const Eigen::MatrixXd& m);

/// Both sides of the integration-by-parts identity on one slice:
///   lhs = sum_j w_j E[T'(m_j + sigma Z)]
///   rhs = (1 / sigma) sum_j w_j E[Z T(m_j + sigma Z)]
/// where m_j, w_j, sigma are the source mixture's components. The two sides
/// are computed from separate integrands.
struct IbpSides {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual() const;
};

IbpSides ibp_identity(const TransportMap1D& map, const ExpectationRule& expectation = {});

double ibp_identity_residual(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SmoothingLevel& s,
                             const Direction& theta, const ExpectationRule& expectation = {});

}  // namespace swgauge
