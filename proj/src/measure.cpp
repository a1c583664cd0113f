#include "swgauge/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "swgauge/errors.hpp"

namespace swgauge {

namespace {

constexpr double kUnitNormTolerance = 1e-12;
constexpr double kRenormalizeTolerance = 1e-9;
constexpr double kMergeTolerance = 1e-12;

}  // namespace

Direction::Direction(Eigen::VectorXd components) : components_(std::move(components)) {
  if (components_.size() == 0) throw InvalidInput("direction must have dimension >= 1");
  if (!components_.allFinite()) throw InvalidInput("direction has non-finite components");
  const double norm = components_.norm();
  if (std::abs(norm - 1.0) > kUnitNormTolerance) {
    std::ostringstream msg;
    msg << "direction is not a unit vector (norm " << norm << ")";
    throw InvalidInput(msg.str());
  }
}

Direction Direction::normalized(const Eigen::VectorXd& v) {
  const double norm = v.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw InvalidInput("cannot normalize a zero or non-finite vector");
  return Direction(v / norm);
}

SmoothingLevel::SmoothingLevel(double sigma) : sigma_(sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidInput("smoothing level sigma must be finite and >= 0");
}

DiscreteMeasure::DiscreteMeasure(Eigen::MatrixXd atoms, Eigen::VectorXd weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights)) {
  if (atoms_.rows() == 0) throw InvalidInput("measure must have at least one atom");
  if (atoms_.cols() == 0) throw InvalidInput("atoms must have dimension >= 1");
  if (weights_.size() != atoms_.rows()) {
    std::ostringstream msg;
    msg << "measure has " << atoms_.rows() << " atoms but " << weights_.size() << " weights";
    throw InvalidInput(msg.str());
  }
  if (!atoms_.allFinite()) throw InvalidInput("measure has non-finite coordinates");
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    if (!(weights_[i] >= 0.0) || !std::isfinite(weights_[i])) {
      std::ostringstream msg;
      msg << "weight " << i << " is negative or non-finite";
      throw InvalidInput(msg.str());
    }
  }
  const double total = weights_.sum();
  if (std::abs(total - 1.0) > kRenormalizeTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "weights sum to " << total << ", not 1";
    throw InvalidInput(msg.str());
  }
  weights_ /= total;
}

DiscreteMeasure DiscreteMeasure::uniform(Eigen::MatrixXd atoms) {
  const auto n = atoms.rows();
  if (n == 0) throw InvalidInput("measure must have at least one atom");
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  return DiscreteMeasure(std::move(atoms), std::move(w));
}

DiscreteMeasure DiscreteMeasure::dirac(const Point& x) {
  Eigen::MatrixXd atoms(1, x.size());
  atoms.row(0) = x.transpose();
  return DiscreteMeasure(std::move(atoms), Eigen::VectorXd::Ones(1));
}

DiscreteMeasure DiscreteMeasure::with_atom_shifted(std::size_t i, const Point& shift) const {
  if (i >= size()) throw InvalidInput("atom index out of range");
  if (shift.size() != dim()) throw InvalidInput("shift dimension does not match measure dimension");
  Eigen::MatrixXd atoms = atoms_;
  atoms.row(static_cast<Eigen::Index>(i)) += shift.transpose();
  return DiscreteMeasure(std::move(atoms), weights_);
}

bool operator==(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  return a.atoms_.rows() == b.atoms_.rows() && a.atoms_.cols() == b.atoms_.cols() && a.atoms_ == b.atoms_ &&
         a.weights_ == b.weights_;
}

TimedMeasure::TimedMeasure(double t, DiscreteMeasure mu, double horizon)
    : t_(t), mu_(std::move(mu)), horizon_(horizon) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidInput("horizon must be positive and finite");
  if (!(t >= 0.0 && t <= horizon)) {
    std::ostringstream msg;
    msg << "time " << t << " outside [0, " << horizon << "]";
    throw InvalidInput(msg.str());
  }
}

bool operator==(const TimedMeasure& a, const TimedMeasure& b) {
  return a.t_ == b.t_ && a.horizon_ == b.horizon_ && a.mu_ == b.mu_;
}

DiscreteMeasure1D project(const DiscreteMeasure& mu, const Direction& theta) {
  if (theta.dim() != mu.dim()) {
    std::ostringstream msg;
    msg << "direction dimension " << theta.dim() << " does not match measure dimension " << mu.dim();
    throw InvalidInput(msg.str());
  }
  const Eigen::VectorXd values = mu.atoms() * theta.components();
  std::vector<std::size_t> order(mu.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[static_cast<Eigen::Index>(a)] < values[static_cast<Eigen::Index>(b)];
  });

  DiscreteMeasure1D out;
  out.points.reserve(order.size());
  out.weights.reserve(order.size());
  for (std::size_t idx : order) {
    const double v = values[static_cast<Eigen::Index>(idx)];
    const double w = mu.weight(idx);
    if (!out.points.empty() && v - out.points.back() <= kMergeTolerance) {
      out.weights.back() += w;
    } else {
      out.points.push_back(v);
      out.weights.push_back(w);
    }
  }
  return out;
}

double second_moment(const DiscreteMeasure& mu) {
  return mu.weights().dot(mu.atoms().rowwise().squaredNorm());
}

double second_moment(const DiscreteMeasure1D& mu) {
  double total = 0.0;
  for (std::size_t i = 0; i < mu.points.size(); ++i) total += mu.weights[i] * mu.points[i] * mu.points[i];
  return total;
}

double smoothed_second_moment(const DiscreteMeasure& mu, const SmoothingLevel& s) {
  return second_moment(mu) + static_cast<double>(mu.dim()) * s.sigma() * s.sigma();
}

Point mean(const DiscreteMeasure& mu) {
  return mu.atoms().transpose() * mu.weights();
}

}  // namespace swgauge
