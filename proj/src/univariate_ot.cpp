#include "swgauge/univariate_ot.hpp"

#include <algorithm>
#include <array>
#include <cfloat>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/erf.hpp>

#include "swgauge/errors.hpp"
#include "swgauge/quadrature.hpp"

namespace swgauge {

namespace {

constexpr double kBracketHalfWidth = 12.0;  // in units of sigma
constexpr double kBracketWidthTolerance = 1e-13;
constexpr int kMaxRootIterations = 200;
const double kInvSqrt2 = 1.0 / std::numbers::sqrt2;
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

// Index of the first cumulative weight reaching p; the generalized inverse.
double discrete_quantile(const GaussianMixture1D& m, double p) {
  double cumulative = 0.0;
  const auto& w = m.weights();
  for (std::size_t i = 0; i < w.size(); ++i) {
    cumulative += w[i];
    if (cumulative >= p - 4.0 * DBL_EPSILON) return m.means()[i];
  }
  return m.means().back();
}

void check_level(double p, const char* what) {
  if (!(p > 0.0 && p < 1.0)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << what << " level " << p << " is outside (0, 1)";
    throw InvalidInput(msg.str());
  }
}

// R_j(x) = F(x) - (w_0 + ... + w_{j-1}), summed as the lower tails of the
// components from j on minus the upper tails of the ones before j, so that it
// keeps full relative accuracy wherever it is small, including inside gaps
// between separated components. j = 0 gives the CDF, j = n minus the survival
// function.
double split_residual(const GaussianMixture1D& m, std::size_t j, double x) {
  const auto& mu = m.means();
  const auto& w = m.weights();
  const double inv_sigma = 1.0 / m.sigma();
  double above = 0.0;
  double below = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double z = (x - mu[i]) * inv_sigma;
    if (i < j) {
      below += w[i] * normal_survival(z);
    } else {
      above += w[i] * normal_cdf(z);
    }
  }
  return above - below;
}

// Finds x with R_j(x) = d, where prefix and suffix are the weights before and
// from component j. Newton steps are taken whenever they stay inside the
// current bracket; otherwise the bracket is bisected. Stops once the bracket
// is narrower than 1e-13 or Newton has converged, then applies one Newton
// polish step. A known lower bound on the root, when supplied, tightens the
// bracket and is used as the starting point unless a guess inside the bracket
// is given.
double solve_split(const GaussianMixture1D& m, std::size_t j, double d, long double prefix, long double suffix,
                   double lower_hint = -INFINITY, double guess = NAN) {
  const double sigma = m.sigma();
  const double lo_mean = m.means().front();
  const double hi_mean = m.means().back();

  // Every component sits between the extreme means, so the quantile of
  // p = prefix + d is bracketed by the single-Gaussian quantiles centred there.
  const long double p = prefix + d;
  const double z = p <= 0.5L ? -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * std::max<double>(p, DBL_MIN))
                             : std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * std::max<double>(suffix - d, DBL_MIN));
  const double outer_lo = lo_mean - kBracketHalfWidth * sigma;
  const double outer_hi = hi_mean + kBracketHalfWidth * sigma;
  double lo = std::clamp(lo_mean + sigma * (z - 1e-6), outer_lo, outer_hi);
  double hi = std::clamp(hi_mean + sigma * (z + 1e-6), outer_lo, outer_hi);

  auto residual = [&](double x) { return split_residual(m, j, x) - d; };

  double x = 0.5 * (lo + hi);
  if (lower_hint > lo && lower_hint < hi) {
    lo = lower_hint;
    x = lower_hint;
  }
  if (guess > lo && guess < hi) x = guess;
  for (int it = 0; it < kMaxRootIterations; ++it) {
    const double r = residual(x);
    if (r == 0.0) return x;
    if (r < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    const double dens = density(m, x);
    double next = x - r / dens;
    if (!(dens > 0.0) || !(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const bool converged = std::abs(next - x) <= 4.0 * DBL_EPSILON * std::max(1.0, std::abs(x));
    x = next;
    if (converged || hi - lo <= kBracketWidthTolerance) break;
  }
  const double dens = density(m, x);
  if (dens > 0.0) {
    const double polished = x - residual(x) / dens;
    if (std::isfinite(polished)) x = polished;
  }
  return x;
}

// Finds x with cdf(m, x) = level (upper == false) or survival(m, x) = level
// (upper == true).
double solve_level(const GaussianMixture1D& m, double level, bool upper, double lower_hint = -INFINITY) {
  if (upper) return solve_split(m, m.means().size(), -level, 1.0L, 0.0L, lower_hint);
  return solve_split(m, 0, level, 0.0L, 1.0L, lower_hint);
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

double normal_survival(double z) { return 0.5 * std::erfc(z * kInvSqrt2); }

double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

GaussianMixture1D::GaussianMixture1D(std::vector<double> means, std::vector<double> weights, double sigma)
    : means_(std::move(means)), weights_(std::move(weights)), sigma_(sigma) {
  if (means_.empty()) throw InvalidInput("mixture needs at least one component");
  if (means_.size() != weights_.size()) throw InvalidInput("mixture means and weights differ in length");
  if (!(sigma_ >= 0.0) || !std::isfinite(sigma_)) throw InvalidInput("mixture sigma must be finite and >= 0");
  double total = 0.0;
  for (std::size_t i = 0; i < means_.size(); ++i) {
    if (!std::isfinite(means_[i])) throw InvalidInput("mixture mean is not finite");
    if (!(weights_[i] >= 0.0) || !std::isfinite(weights_[i])) throw InvalidInput("mixture weight is negative");
    if (i > 0 && means_[i] < means_[i - 1]) throw InvalidInput("mixture means must be sorted ascending");
    total += weights_[i];
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidInput("mixture weights do not sum to 1");
  for (double& w : weights_) w /= total;
}

GaussianMixture1D GaussianMixture1D::from_measure(const DiscreteMeasure1D& mu, double sigma) {
  return GaussianMixture1D(mu.points, mu.weights, sigma);
}

GaussianMixture1D GaussianMixture1D::gaussian(double mean, double sd) {
  return GaussianMixture1D({mean}, {1.0}, sd);
}

double cdf(const GaussianMixture1D& m, double x) {
  const auto& mu = m.means();
  const auto& w = m.weights();
  double total = 0.0;
  if (m.is_discrete()) {
    for (std::size_t i = 0; i < mu.size() && mu[i] <= x; ++i) total += w[i];
    return std::min(total, 1.0);
  }
  const double inv_sigma = 1.0 / m.sigma();
  for (std::size_t i = 0; i < mu.size(); ++i) total += w[i] * normal_cdf((x - mu[i]) * inv_sigma);
  return std::min(total, 1.0);
}

double survival(const GaussianMixture1D& m, double x) {
  const auto& mu = m.means();
  const auto& w = m.weights();
  double total = 0.0;
  if (m.is_discrete()) {
    for (std::size_t i = 0; i < mu.size(); ++i) {
      if (mu[i] > x) total += w[i];
    }
    return std::min(total, 1.0);
  }
  const double inv_sigma = 1.0 / m.sigma();
  for (std::size_t i = 0; i < mu.size(); ++i) total += w[i] * normal_survival((x - mu[i]) * inv_sigma);
  return std::min(total, 1.0);
}

double density(const GaussianMixture1D& m, double x) {
  if (m.is_discrete()) throw InvalidInput("density requested for a discrete (sigma = 0) mixture");
  const auto& mu = m.means();
  const auto& w = m.weights();
  const double inv_sigma = 1.0 / m.sigma();
  double total = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) total += w[i] * normal_pdf((x - mu[i]) * inv_sigma);
  return total * inv_sigma;
}

double log_density(const GaussianMixture1D& m, double x) {
  if (m.is_discrete()) throw InvalidInput("density requested for a discrete (sigma = 0) mixture");
  const auto& mu = m.means();
  const auto& w = m.weights();
  const double inv_sigma = 1.0 / m.sigma();
  double peak = -INFINITY;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (w[i] > 0.0) {
      const double z = (x - mu[i]) * inv_sigma;
      peak = std::max(peak, std::log(w[i]) - 0.5 * z * z);
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (w[i] > 0.0) {
      const double z = (x - mu[i]) * inv_sigma;
      total += std::exp(std::log(w[i]) - 0.5 * z * z - peak);
    }
  }
  return peak + std::log(total) + std::log(kInvSqrt2Pi * inv_sigma);
}

double quantile(const GaussianMixture1D& m, double p) {
  check_level(p, "quantile");
  if (m.is_discrete()) return discrete_quantile(m, p);
  return solve_level(m, p, false);
}

double upper_quantile(const GaussianMixture1D& m, double q) {
  check_level(q, "upper quantile");
  if (m.is_discrete()) return discrete_quantile(m, 1.0 - q);
  return solve_level(m, q, true);
}

TransportMap1D::TransportMap1D(GaussianMixture1D source, GaussianMixture1D target)
    : source_(std::move(source)), target_(std::move(target)) {
  if (source_.is_discrete() || target_.is_discrete()) {
    throw InvalidInput(
        "transport map requires continuous, strictly increasing CDFs; discrete (sigma = 0) slices are not supported");
  }
}

namespace {

double transported_point(const TransportMap1D& map, double x, TransportDiagnostics* diag) {
  double lower = cdf(map.source(), x);
  double upper = survival(map.source(), x);
  bool saturated = false;
  if (lower < kCdfSaturation) {
    lower = kCdfSaturation;
    saturated = true;
  }
  if (upper < kCdfSaturation) {
    upper = kCdfSaturation;
    saturated = true;
  }
  if (diag != nullptr) {
    ++diag->evaluations;
    if (saturated) ++diag->saturations;
  }
  return lower <= 0.5 ? solve_level(map.target(), lower, false) : solve_level(map.target(), upper, true);
}

}  // namespace

double transport(const TransportMap1D& map, double x, TransportDiagnostics* diag) {
  return transported_point(map, x, diag);
}

TransportJet transport_jet(const TransportMap1D& map, double x, TransportDiagnostics* diag) {
  const double y = transported_point(map, x, diag);
  const double target_density = density(map.target(), y);
  if (!(target_density > DBL_MIN) || !std::isfinite(target_density)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "target density underflow (zero, subnormal or non-finite) at transported point T(" << x << ") = " << y;
    throw NumericFailure(msg.str());
  }
  return {y, density(map.source(), x) / target_density};
}

double transport_derivative(const TransportMap1D& map, double x, TransportDiagnostics* diag) {
  return transport_jet(map, x, diag).derivative;
}

double w2_squared_discrete(const DiscreteMeasure1D& mu, const DiscreteMeasure1D& nu) {
  if (mu.points.empty() || nu.points.empty()) throw InvalidInput("empty 1D measure");
  // Walk the common refinement of the two cumulative weight partitions.
  std::size_t i = 0;
  std::size_t j = 0;
  double left_mu = mu.weights[0];
  double left_nu = nu.weights[0];
  double total = 0.0;
  while (i < mu.points.size() && j < nu.points.size()) {
    const double mass = std::min(left_mu, left_nu);
    const double gap = mu.points[i] - nu.points[j];
    total += 0.5 * mass * gap * gap;
    left_mu -= mass;
    left_nu -= mass;
    if (left_mu <= left_nu) {
      if (++i < mu.points.size()) left_mu += mu.weights[i];
    } else {
      if (++j < nu.points.size()) left_nu += nu.weights[j];
    }
  }
  return total;
}

namespace {

// Phi(-8.3) is about 5e-17; the truncated tails are below double resolution.
constexpr double kTailCutoff = 8.3;

// Cumulative weights of one mixture, summed from both ends.
struct Cumulative {
  std::vector<long double> prefix;  // w_0 + ... + w_{j-1}
  std::vector<long double> suffix;  // w_j + ... + w_{n-1}

  explicit Cumulative(const GaussianMixture1D& m) {
    const auto& w = m.weights();
    prefix.assign(w.size() + 1, 0.0L);
    suffix.assign(w.size() + 1, 0.0L);
    for (std::size_t j = 0; j < w.size(); ++j) prefix[j + 1] = prefix[j] + w[j];
    for (std::size_t j = w.size(); j-- > 0;) suffix[j] = suffix[j + 1] + w[j];
  }
  std::size_t splits() const { return prefix.size() - 1; }
};

// A panel end: the cumulative level c together with 1 - c, and for each of the
// two mixtures the number of components whose weights make up c (-1 if c is
// not one of its weight levels).
struct Level {
  long double lower;
  long double upper;
  std::array<int, 2> split{-1, -1};
};

void add_weight_levels(const Cumulative& c, int which, std::vector<Level>& levels) {
  for (std::size_t j = 1; j < c.splits(); ++j) {
    Level level{c.prefix[j], c.suffix[j]};
    level.split[which] = static_cast<int>(j);
    levels.push_back(level);
  }
}

// Where two neighbouring components are several sigma apart, the quantile
// crosses the gap between them for levels within about d = sigma f(x*) of the
// weight level, x* being the quantile at the level itself. Around there Q bends
// sharply in the panel variable, so breaks are added at the level +- d, which
// moves each bend to the middle of its own panel. Gaps too wide for d to be
// resolved fall inside the slivers.
void add_gap_levels(const GaussianMixture1D& m, const Cumulative& c, std::vector<Level>& levels) {
  if (m.is_discrete()) return;
  const auto& w = m.weights();
  for (std::size_t j = 1; j < c.splits(); ++j) {
    const double crossing = solve_split(m, j, 0.0, c.prefix[j], c.suffix[j]);
    const double d = m.sigma() * density(m, crossing);
    if (!(d > 1e-16 && d < 0.05 * std::min(w[j - 1], w[j]))) continue;
    levels.push_back({c.prefix[j] - d, c.suffix[j] + d});
    levels.push_back({c.prefix[j] + d, c.suffix[j] - d});
  }
}

// Sorted panel ends, always including 0 and 1. Equal levels, compared on the
// side nearer to them, are merged.
std::vector<Level> panel_breaks(std::vector<Level> levels, const Cumulative& first, const Cumulative& second) {
  levels.push_back({0.0L, 1.0L, {0, 0}});
  levels.push_back({1.0L, 0.0L, {static_cast<int>(first.splits()), static_cast<int>(second.splits())}});
  std::sort(levels.begin(), levels.end(), [](const Level& a, const Level& b) {
    return a.lower < b.lower || (a.lower == b.lower && a.upper > b.upper);
  });
  std::vector<Level> merged{levels.front()};
  for (std::size_t i = 1; i < levels.size(); ++i) {
    const Level& next = levels[i];
    Level& last = merged.back();
    const bool distinct = next.lower < 0.5L ? next.lower > last.lower : last.upper > next.upper;
    if (distinct) {
      merged.push_back(next);
    } else if (next.upper == 0.0L) {
      last = next;
    } else {
      for (int w = 0; w < 2; ++w) {
        if (last.split[w] < 0) last.split[w] = next.split[w];
      }
    }
  }
  return merged;
}

// Differences are taken on the side further from 1 to avoid cancellation.
double panel_mass(const Level& lo, const Level& hi) {
  return static_cast<double>(lo.lower < 0.5L ? hi.lower - lo.lower : lo.upper - hi.upper);
}

// A point of (0, 1) written as the nearer panel end plus a signed offset.
struct PanelPoint {
  const Level* anchor;
  long double offset;
};

PanelPoint panel_point(const Level& lo, const Level& hi, double mass, double v) {
  if (v < 0.0) return {&lo, static_cast<long double>(mass * normal_cdf(v))};
  return {&hi, -static_cast<long double>(mass * normal_survival(v))};
}

// Quantile of the mixture at anchor + offset. The level is measured from the
// mixture's own weight split nearest to the anchor, so that points just beside
// a weight level keep their full offset even where the CDF is flat.
double anchored_quantile(const GaussianMixture1D& m, const Cumulative& c, int which, const PanelPoint& at,
                         double lower_hint, double guess = NAN) {
  const Level& anchor = *at.anchor;
  std::size_t j;
  if (anchor.split[which] >= 0) {
    j = static_cast<std::size_t>(anchor.split[which]);
  } else {
    j = static_cast<std::size_t>(std::lower_bound(c.prefix.begin(), c.prefix.end(), anchor.lower) - c.prefix.begin());
    j = std::min(j, c.splits());
    if (j > 0 && anchor.lower - c.prefix[j - 1] < c.prefix[j] - anchor.lower) --j;
  }
  const long double shift = anchor.lower < 0.5L ? anchor.lower - c.prefix[j] : c.suffix[j] - anchor.upper;
  const long double d = shift + at.offset;

  if (m.is_discrete()) {
    // inf{x : F(x) >= prefix_j + d}
    const auto& w = m.weights();
    std::size_t idx;
    if (d > 0.0L) {
      idx = std::min(j, w.size() - 1);
      long double rest = d;
      while (idx + 1 < w.size() && rest > w[idx]) rest -= w[idx++];
    } else {
      idx = j > 0 ? j - 1 : 0;
      long double rest = -d;
      while (idx > 0 && rest >= w[idx]) rest -= w[idx--];
    }
    return m.means()[idx];
  }
  return solve_split(m, j, static_cast<double>(d), c.prefix[j], c.suffix[j], lower_hint, guess);
}

// Quantiles along the nodes of one panel, in increasing v. Each quantile bounds
// the next from below, and Q is close to linear in v, so the last two values
// give the starting guess.
class PanelTrack {
 public:
  double hint() const { return x1_; }
  double guess(double v) const {
    if (!std::isfinite(x0_)) return NAN;
    return x1_ + (x1_ - x0_) * (v - v1_) / (v1_ - v0_);
  }
  void push(double v, double x) {
    v0_ = v1_;
    x0_ = x1_;
    v1_ = v;
    x1_ = x;
  }

 private:
  double v0_ = NAN;
  double x0_ = -INFINITY;
  double v1_ = NAN;
  double x1_ = -INFINITY;
};

// int_{z0}^{z1} phi, int z phi and int z^2 phi.
struct GaussianMoments {
  double m0;
  double m1;
  double m2;
};

GaussianMoments gaussian_moments(double z0, double z1) {
  const double dz = z1 - z0;
  if (dz <= 1e-6) {
    const double zm = 0.5 * (z0 + z1);
    const double f = dz * normal_pdf(zm);
    return {f, zm * f, zm * zm * f};
  }
  double m0;
  if (z0 >= 0.0) {
    m0 = normal_survival(z0) - normal_survival(z1);
  } else if (z1 <= 0.0) {
    m0 = normal_cdf(z1) - normal_cdf(z0);
  } else {
    m0 = 1.0 - normal_cdf(z0) - normal_survival(z1);
  }
  const double p0 = normal_pdf(z0);
  const double p1 = normal_pdf(z1);
  return {m0, p0 - p1, m0 + z0 * p0 - z1 * p1};
}

}  // namespace

double w2_squared_1d(const GaussianMixture1D& mu, const GaussianMixture1D& nu, int legendre_order) {
  if (mu.is_discrete() && nu.is_discrete()) {
    return w2_squared_discrete({mu.means(), mu.weights()}, {nu.means(), nu.weights()});
  }
  // (0,1) is split into panels at the cumulative weight levels of both
  // mixtures. Near each panel end the quantile functions behave like a
  // Gaussian quantile, so a panel [lo, hi] is integrated in v with
  // p = lo + (hi - lo) Phi(v), which is smooth in v.
  const Cumulative cum_mu(mu);
  const Cumulative cum_nu(nu);
  std::vector<Level> levels;
  add_weight_levels(cum_mu, 0, levels);
  add_weight_levels(cum_nu, 1, levels);
  const std::vector<Level> breaks = panel_breaks(std::move(levels), cum_mu, cum_nu);
  const QuadratureRule& rule = cached_gauss_legendre_unit(legendre_order);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double mass = panel_mass(breaks[k], breaks[k + 1]);
    double panel = 0.0;
    PanelTrack track_a;
    PanelTrack track_b;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double v = kTailCutoff * (2.0 * rule.nodes[i] - 1.0);
      const PanelPoint at = panel_point(breaks[k], breaks[k + 1], mass, v);
      const double a = anchored_quantile(mu, cum_mu, 0, at, track_a.hint(), track_a.guess(v));
      const double b = anchored_quantile(nu, cum_nu, 1, at, track_b.hint(), track_b.guess(v));
      track_a.push(v, a);
      track_b.push(v, b);
      const double gap = a - b;
      panel += rule.weights[i] * normal_pdf(v) * 0.5 * gap * gap;
    }
    total += 2.0 * kTailCutoff * mass * panel;
  }
  return total;
}

NoiseExpectation noise_expectation(const TransportMap1D& map, double a, double noise_sigma, int panel_order,
                                   TransportDiagnostics* diag) {
  if (!(noise_sigma > 0.0)) throw InvalidInput("noise standard deviation must be positive");
  if (panel_order < 1) throw InvalidInput("panel order must be >= 1");
  const GaussianMixture1D& src = map.source();
  const GaussianMixture1D& tgt = map.target();
  if (cdf(src, a) < kCdfSaturation || survival(src, a) < kCdfSaturation) {
    // The noise sits beyond the representable tail of F_src; only the clamped
    // map is available there.
    const QuadratureRule& hermite = cached_gauss_hermite_normal(panel_order);
    NoiseExpectation out;
    for (std::size_t q = 0; q < hermite.size(); ++q) {
      const double z = hermite.nodes[q];
      const TransportJet jet = transport_jet(map, a + noise_sigma * z, diag);
      out.transport += hermite.weights[q] * jet.value;
      out.derivative += hermite.weights[q] * jet.derivative;
      out.score += hermite.weights[q] * z * jet.value;
    }
    return out;
  }
  // With y = Q_src(p) the expectations become integrals over p in (0,1):
  //   E[g(Y)] = int g(y) K(p) dp,  K = phi((y - a) / s) / (s f_src(y)),
  //   E[T'(Y)] = int phi((y - a) / s) / (s f_tgt(T(y))) dp.
  // Only T(Y) - Y is integrated numerically, E[Y] = a and E[Z Y] = s are
  // exact, and every sum is divided by the quadrature of int K dp = 1.
  // Identity and shift maps are therefore reproduced exactly.
  // Panels start at every weight level of both slices and at F_src(a + k s),
  // k = 0, +-2, +-4, so that no panel holds a sharply peaked share of K.
  const Cumulative cum_src(src);
  const Cumulative cum_tgt(tgt);
  std::vector<Level> levels;
  add_weight_levels(cum_src, 0, levels);
  add_weight_levels(cum_tgt, 1, levels);
  add_gap_levels(src, cum_src, levels);
  add_gap_levels(tgt, cum_tgt, levels);
  for (double k : {-4.0, -2.0, 0.0, 2.0, 4.0}) {
    const double below = cdf(src, a + k * noise_sigma);
    const double above = survival(src, a + k * noise_sigma);
    if (below > 0.0 && above > 0.0) levels.push_back({below, above});
  }
  const std::vector<Level> breaks = panel_breaks(std::move(levels), cum_src, cum_tgt);
  const QuadratureRule& rule = cached_gauss_legendre_unit(panel_order);
  const double log_norm = std::log(kInvSqrt2Pi / noise_sigma);

  double total = 0.0;
  double displacement = 0.0;
  double score = 0.0;
  double derivative = 0.0;
  std::vector<double> masses(breaks.size() - 1);
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double mass = panel_mass(breaks[k], breaks[k + 1]);
    masses[k] = mass;
    PanelTrack track_y;
    PanelTrack track_t;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double v = kTailCutoff * (2.0 * rule.nodes[i] - 1.0);
      const PanelPoint at = panel_point(breaks[k], breaks[k + 1], mass, v);
      const double y = anchored_quantile(src, cum_src, 0, at, track_y.hint(), track_y.guess(v));
      const double t = anchored_quantile(tgt, cum_tgt, 1, at, track_t.hint(), track_t.guess(v));
      track_y.push(v, y);
      track_t.push(v, t);
      const double dp = 2.0 * kTailCutoff * mass * rule.weights[i] * normal_pdf(v);
      const double z = (y - a) / noise_sigma;
      const double log_phi = log_norm - 0.5 * z * z;
      const double kernel = dp * std::exp(log_phi - log_density(src, y));
      total += kernel;
      displacement += kernel * (t - y);
      score += kernel * z * (t - y);
      derivative += dp * std::exp(log_phi - log_density(tgt, t));
    }
  }
  // The slivers |v| > 8.3 around each interior break carry almost no mass, but
  // either quantile may cross a gap between separated components inside one.
  // There the coupling is taken as linear between the sliver's end points.
  const double tail = normal_cdf(-kTailCutoff);
  for (std::size_t k = 1; k + 1 < breaks.size(); ++k) {
    const PanelPoint left{&breaks[k], -static_cast<long double>(masses[k - 1] * tail)};
    const PanelPoint right{&breaks[k], static_cast<long double>(masses[k] * tail)};
    const double y0 = anchored_quantile(src, cum_src, 0, left, -INFINITY);
    const double y1 = anchored_quantile(src, cum_src, 0, right, y0);
    const double t0 = anchored_quantile(tgt, cum_tgt, 1, left, -INFINITY);
    const double t1 = anchored_quantile(tgt, cum_tgt, 1, right, t0);
    const double z0 = (y0 - a) / noise_sigma;
    const double z1 = std::max(z0, (y1 - a) / noise_sigma);
    const double dt = std::max(0.0, t1 - t0);
    const GaussianMoments g = gaussian_moments(z0, z1);
    if (z1 - z0 <= 1e-6) {
      derivative += dt * normal_pdf(0.5 * (z0 + z1)) / noise_sigma;
      const double gap = 0.5 * (t0 + t1) - 0.5 * (y0 + y1);
      total += g.m0;
      displacement += gap * g.m0;
      score += gap * g.m1;
    } else {
      // t = t0 + r (y - y0) and y = a + s z, so t - y = c0 + c1 z.
      const double r = dt / (y1 - y0);
      const double c0 = t0 - a - r * noise_sigma * z0;
      const double c1 = noise_sigma * (r - 1.0);
      derivative += r * g.m0;
      total += g.m0;
      displacement += c0 * g.m0 + c1 * g.m1;
      score += c0 * g.m1 + c1 * g.m2;
    }
  }
  if (diag != nullptr) ++diag->evaluations;
  NoiseExpectation out;
  out.transport = a + displacement / total;
  out.score = noise_sigma + score / total;
  out.derivative = derivative / total;
  return out;
}

}  // namespace swgauge
