#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mfc {

using Point = Eigen::VectorXd;

inline constexpr double kSupportMergeTolerance = 1e-9;
inline constexpr double kWeightFloor = 1e-15;
inline constexpr double kMassTolerance = 1e-12;
inline constexpr double kSymmetryTolerance = 1e-10;
inline constexpr double kKeyWeightScale = 1e12;

std::string format_point(const Point& x);

// Max-norm distance.
double point_distance(const Point& a, const Point& b);

/// Probability measure with finite support in R^d.
///
/// Construction canonicalizes the representation: support points closer than
/// kSupportMergeTolerance in max-norm are merged (weights added), weights
/// below kWeightFloor are dropped and the remainder renormalized, and the
/// support is sorted lexicographically. Two measures built from the same
/// atoms in different order are therefore identical objects.
///
/// Instances are immutable; every operation returns a fresh measure.
class DiscreteMeasure {
 public:
  /// Throws std::invalid_argument on empty support, mismatched lengths,
  /// inconsistent dimensions, negative or non-finite weights, or total
  /// mass off 1 by more than kMassTolerance.
  DiscreteMeasure(std::vector<Point> support, std::vector<double> weights);

  static DiscreteMeasure dirac(Point x);
  static DiscreteMeasure dirac(double x);
  /// Empirical measure: weight 1/N on every point (duplicates merge).
  static DiscreteMeasure empirical(std::vector<Point> points);
  /// Scalar convenience: atoms on the real line.
  static DiscreteMeasure on_line(const std::vector<double>& atoms, std::vector<double> weights);

  int dimension() const { return static_cast<int>(support_.front().size()); }
  std::size_t size() const { return support_.size(); }
  const std::vector<Point>& support() const { return support_; }
  const std::vector<double>& weights() const { return weights_; }
  const Point& point(std::size_t i) const { return support_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }

  /// Mass at x (0 when x is not an atom).
  double mass_at(const Point& x) const;

 private:
  struct Canonical {};
  DiscreteMeasure(Canonical, std::vector<Point> support, std::vector<double> weights);

  std::vector<Point> support_;
  std::vector<double> weights_;
};

/// Same atoms (within kSupportMergeTolerance) and weights within `tol`.
bool approx_equal(const DiscreteMeasure& a, const DiscreteMeasure& b, double tol);

Eigen::VectorXd mean(const DiscreteMeasure& mu);

/// Σ_i w_i x_iᵀ Λ x_i. Λ must be symmetric within kSymmetryTolerance.
double quadratic_moment(const DiscreteMeasure& mu, const Eigen::MatrixXd& lambda);

/// quadratic_moment(μ, Λ) − μ̄ᵀΛμ̄.
double variance_form(const DiscreteMeasure& mu, const Eigen::MatrixXd& lambda);

Eigen::MatrixXd covariance(const DiscreteMeasure& mu);

/// α·μ + (1 − α)·ν, α ∈ [0, 1].
DiscreteMeasure mixture(double alpha, const DiscreteMeasure& mu, const DiscreteMeasure& nu);

/// Weights rounded to 12 decimals and points rounded to the merge tolerance;
/// equal keys identify measures for memoization.
std::vector<std::int64_t> quantized_key(const DiscreteMeasure& mu);

/// A total map from a finite ordered domain of points to action points.
class TabularMap {
 public:
  /// Throws std::invalid_argument on length mismatch, empty domain, or
  /// duplicate domain points.
  TabularMap(std::vector<Point> domain, std::vector<Point> values);

  static TabularMap constant(std::vector<Point> domain, const Point& value);
  static TabularMap identity(std::vector<Point> domain);

  std::size_t size() const { return domain_.size(); }
  const std::vector<Point>& domain() const { return domain_; }
  const std::vector<Point>& values() const { return values_; }

  std::optional<std::size_t> find(const Point& x) const;

  /// Throws ModelError naming x when it is not in the domain.
  const Point& operator()(const Point& x) const;

 private:
  std::vector<Point> domain_;
  std::vector<Point> values_;
};

/// (ᾶ⋆μ)(B) = μ(ᾶ⁻¹(B)); atoms with equal images merge.
DiscreteMeasure image_measure(const DiscreteMeasure& mu, const TabularMap& policy);

}  // namespace mfc
