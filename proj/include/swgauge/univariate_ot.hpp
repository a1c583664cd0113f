#pragma once

#include <cstddef>
#include <vector>

#include "swgauge/measure.hpp"
#include "swgauge/quadrature.hpp"

namespace swgauge {

/// Standard normal CDF, computed through erfc so both tails keep full
/// relative precision.
double normal_cdf(double z);
/// 1 - normal_cdf(z), without cancellation.
double normal_survival(double z);
double normal_pdf(double z);

/// A discrete measure on R convolved with N(0, sigma^2): the slice mu_theta * N_sigma.
/// sigma = 0 is allowed and means the plain step-function measure.
class GaussianMixture1D {
 public:
  /// means must be sorted ascending; weights non-negative and summing to 1
  /// within 1e-9 (renormalized exactly).
  GaussianMixture1D(std::vector<double> means, std::vector<double> weights, double sigma);

  static GaussianMixture1D from_measure(const DiscreteMeasure1D& mu, double sigma);
  static GaussianMixture1D gaussian(double mean, double sd);

  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& weights() const { return weights_; }
  double sigma() const { return sigma_; }
  std::size_t size() const { return means_.size(); }
  bool is_discrete() const { return sigma_ == 0.0; }

 private:
  std::vector<double> means_;
  std::vector<double> weights_;
  double sigma_;
};

/// Right-continuous CDF.
double cdf(const GaussianMixture1D& m, double x);
/// 1 - cdf, evaluated directly from the upper tails.
double survival(const GaussianMixture1D& m, double x);
/// Lebesgue density; requires sigma > 0.
double density(const GaussianMixture1D& m, double x);
/// log density, accurate far into the tails.
double log_density(const GaussianMixture1D& m, double x);

/// Quantile for p in (0, 1). For sigma > 0 the result satisfies
/// |cdf(m, x) - p| <= 1e-12; for sigma = 0 it is the generalized inverse
/// inf{x : F(x) >= p}. Throws InvalidInput for p outside (0, 1).
double quantile(const GaussianMixture1D& m, double p);

/// Solves survival(m, x) = q for q in (0, 1). Same guarantees as quantile();
/// preferable when the target level lies in the upper tail.
double upper_quantile(const GaussianMixture1D& m, double q);

/// Counts evaluations where the source CDF had to be clamped into
/// [1e-15, 1 - 1e-15] before composing with the target quantile.
struct TransportDiagnostics {
  std::size_t evaluations = 0;
  std::size_t saturations = 0;

  TransportDiagnostics& operator+=(const TransportDiagnostics& other) {
    evaluations += other.evaluations;
    saturations += other.saturations;
    return *this;
  }
};

/// Monotone rearrangement x -> F_target^{-1}(F_source(x)). Both mixtures must
/// have sigma > 0 so that the CDFs are continuous and strictly increasing.
class TransportMap1D {
 public:
  TransportMap1D(GaussianMixture1D source, GaussianMixture1D target);

  const GaussianMixture1D& source() const { return source_; }
  const GaussianMixture1D& target() const { return target_; }

 private:
  GaussianMixture1D source_;
  GaussianMixture1D target_;
};

/// CDF level below which (or above 1 minus which) the source CDF is clamped.
inline constexpr double kCdfSaturation = 1e-15;

double transport(const TransportMap1D& map, double x, TransportDiagnostics* diag = nullptr);

/// density_source(x) / density_target(T(x)). Throws NumericFailure when the
/// target density underflows at the transported point.
double transport_derivative(const TransportMap1D& map, double x, TransportDiagnostics* diag = nullptr);

/// Transport value together with its derivative, sharing one quantile solve.
struct TransportJet {
  double value;
  double derivative;
};
TransportJet transport_jet(const TransportMap1D& map, double x, TransportDiagnostics* diag = nullptr);

/// Squared 1D Wasserstein distance with cost |x - y|^2 / 2.
///
/// When both inputs are discrete (sigma = 0) the exact monotone coupling of the
/// sorted atoms is used. Otherwise the quantile representation
/// int_0^1 (Q_mu(p) - Q_nu(p))^2 / 2 dp is integrated panel by panel between
/// the cumulative weight levels of both inputs, each panel with a
/// Gauss-Legendre rule of the given order after the substitution
/// p = lo + (hi - lo) Phi(v), |v| <= 8.3. Cost grows with the number of panels.
double w2_squared_1d(const GaussianMixture1D& mu, const GaussianMixture1D& nu, int legendre_order = 128);

/// Exact value for two discrete 1D measures (sorted atoms).
double w2_squared_discrete(const DiscreteMeasure1D& mu, const DiscreteMeasure1D& nu);

/// Expectations over Y = a + s Z, Z ~ N(0, 1), of the transport map.
struct NoiseExpectation {
  double transport = 0.0;   // E[T(Y)]
  double derivative = 0.0;  // E[T'(Y)]
  double score = 0.0;       // E[Z T(Y)]
};

/// Computes the three expectations in quantile coordinates y = Q_source(p),
/// panel by panel between the weight levels of both slices, the levels at
/// which a quantile crosses a gap between components, and
/// F_source(a + k s) for k = 0, +-2, +-4,
/// with a Gauss-Legendre rule of `panel_order` nodes per panel after
/// p = lo + (hi - lo) Phi(v), |v| <= 8.3. Quantiles are solved relative to the
/// nearest weight level of their own mixture, so gaps between components
/// many s wide stay resolved; the slivers |v| > 8.3 around each interior
/// panel end are added in closed form with a linear coupling. Identity and
/// shift maps are reproduced exactly. No CDF clamping is involved, except when
/// F_source(a) or 1 - F_source(a) is below kCdfSaturation: then Gauss-Hermite
/// of the given order through transport_jet() is used and saturations are
/// counted.
NoiseExpectation noise_expectation(const TransportMap1D& map, double a, double noise_sigma, int panel_order,
                                   TransportDiagnostics* diag = nullptr);

}  // namespace swgauge
