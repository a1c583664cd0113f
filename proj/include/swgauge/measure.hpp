#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace swgauge {

using Point = Eigen::VectorXd;

/// Unit vector in R^k; the projection direction x -> theta^T x.
class Direction {
 public:
  /// Throws InvalidInput unless |components| = 1 within 1e-12.
  explicit Direction(Eigen::VectorXd components);

  /// Rescales a nonzero finite vector to unit length.
  static Direction normalized(const Eigen::VectorXd& v);

  const Eigen::VectorXd& components() const { return components_; }
  int dim() const { return static_cast<int>(components_.size()); }
  double project(const Point& x) const { return components_.dot(x); }

 private:
  Eigen::VectorXd components_;
};

/// Standard deviation of the isotropic Gaussian used for smoothing.
class SmoothingLevel {
 public:
  explicit SmoothingLevel(double sigma);
  double sigma() const { return sigma_; }
  bool is_positive() const { return sigma_ > 0.0; }

 private:
  double sigma_;
};

/// Sorted atoms on the real line with their weights.
struct DiscreteMeasure1D {
  std::vector<double> points;
  std::vector<double> weights;
};

/// Finitely supported probability measure on R^k. Immutable.
///
/// Weights within 1e-9 of summing to one are renormalized on construction;
/// anything further off is rejected rather than silently rescaled.
class DiscreteMeasure {
 public:
  /// atoms: one row per atom.
  DiscreteMeasure(Eigen::MatrixXd atoms, Eigen::VectorXd weights);

  /// Equal weights 1/n.
  static DiscreteMeasure uniform(Eigen::MatrixXd atoms);
  static DiscreteMeasure dirac(const Point& x);

  std::size_t size() const { return static_cast<std::size_t>(atoms_.rows()); }
  int dim() const { return static_cast<int>(atoms_.cols()); }
  const Eigen::MatrixXd& atoms() const { return atoms_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  Point atom(std::size_t i) const { return atoms_.row(static_cast<Eigen::Index>(i)).transpose(); }
  double weight(std::size_t i) const { return weights_[static_cast<Eigen::Index>(i)]; }

  /// Copy with atom i displaced by `shift`.
  DiscreteMeasure with_atom_shifted(std::size_t i, const Point& shift) const;

  friend bool operator==(const DiscreteMeasure& a, const DiscreteMeasure& b);

 private:
  Eigen::MatrixXd atoms_;
  Eigen::VectorXd weights_;
};

/// A point (t, mu) of [0, horizon] x P2(R^k).
class TimedMeasure {
 public:
  TimedMeasure(double t, DiscreteMeasure mu, double horizon);

  double t() const { return t_; }
  const DiscreteMeasure& mu() const { return mu_; }
  double horizon() const { return horizon_; }

  friend bool operator==(const TimedMeasure& a, const TimedMeasure& b);

 private:
  double t_;
  DiscreteMeasure mu_;
  double horizon_;
};

/// Pushforward of mu under x -> theta^T x. Atoms come back sorted; atoms whose
/// projections fall within 1e-12 of a group's first value are merged into it.
DiscreteMeasure1D project(const DiscreteMeasure& mu, const Direction& theta);

/// sum_i w_i |x_i|^2
double second_moment(const DiscreteMeasure& mu);
double second_moment(const DiscreteMeasure1D& mu);

/// Second moment of mu * N(0, sigma^2 I_k), in closed form m2(mu) + k sigma^2.
double smoothed_second_moment(const DiscreteMeasure& mu, const SmoothingLevel& s);

/// Weighted mean of the atoms.
Point mean(const DiscreteMeasure& mu);

}  // namespace swgauge
