#include "mfc/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mfc/errors.hpp"

namespace mfc {

namespace {

bool lex_less(const Point& a, const Point& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

void check_symmetric(const Eigen::MatrixXd& lambda, int d) {
  if (lambda.rows() != d || lambda.cols() != d) {
    std::ostringstream os;
    os << "quadratic form is " << lambda.rows() << "x" << lambda.cols() << ", expected " << d
       << "x" << d;
    throw std::invalid_argument(os.str());
  }
  if ((lambda - lambda.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance) {
    throw std::invalid_argument("quadratic form matrix is not symmetric");
  }
}

}  // namespace

std::string format_point(const Point& x) {
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i) os << ", ";
    os << x[i];
  }
  os << ")";
  return os.str();
}

double point_distance(const Point& a, const Point& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  return (a - b).cwiseAbs().maxCoeff();
}

DiscreteMeasure::DiscreteMeasure(std::vector<Point> support, std::vector<double> weights) {
  if (support.empty()) throw std::invalid_argument("measure support is empty");
  if (support.size() != weights.size()) {
    throw std::invalid_argument("measure support and weights differ in length");
  }
  const auto d = support.front().size();
  if (d < 1) throw std::invalid_argument("measure support points must have dimension >= 1");
  double total = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (support[i].size() != d) {
      throw std::invalid_argument("measure support points have inconsistent dimensions");
    }
    if (!support[i].allFinite()) {
      throw std::invalid_argument("measure support point " + std::to_string(i) + " is not finite");
    }
    if (!std::isfinite(weights[i]) || weights[i] < 0.0) {
      throw std::invalid_argument("measure weight " + std::to_string(i) +
                                  " is negative or not finite");
    }
    total += weights[i];
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << "measure weights sum to " << total << ", expected 1";
    throw std::invalid_argument(os.str());
  }
  *this = DiscreteMeasure(Canonical{}, std::move(support), std::move(weights));
}

DiscreteMeasure::DiscreteMeasure(Canonical, std::vector<Point> support,
                                 std::vector<double> weights) {
  std::vector<std::size_t> order(support.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return lex_less(support[a], support[b]);
  });

  std::vector<Point> merged;
  std::vector<double> merged_w;
  merged.reserve(support.size());
  merged_w.reserve(support.size());
  for (std::size_t idx : order) {
    const Point& x = support[idx];
    bool absorbed = false;
    // Sorted by first coordinate, so only a trailing window can be within tolerance.
    for (std::size_t j = merged.size(); j-- > 0;) {
      if (merged[j][0] < x[0] - kSupportMergeTolerance) break;
      if (point_distance(merged[j], x) <= kSupportMergeTolerance) {
        merged_w[j] += weights[idx];
        absorbed = true;
        break;
      }
    }
    if (!absorbed) {
      merged.push_back(x);
      merged_w.push_back(weights[idx]);
    }
  }

  double kept = 0.0;
  bool pruned = false;
  for (std::size_t j = 0; j < merged.size(); ++j) {
    if (merged_w[j] >= kWeightFloor) {
      support_.push_back(std::move(merged[j]));
      weights_.push_back(merged_w[j]);
      kept += merged_w[j];
    } else {
      pruned = true;
    }
  }
  if (support_.empty()) throw std::invalid_argument("measure has no mass above the weight floor");
  // Only after pruning, so that canonicalizing a canonical measure is the identity.
  if (pruned) {
    for (double& w : weights_) w /= kept;
  }
}

DiscreteMeasure DiscreteMeasure::dirac(Point x) {
  return DiscreteMeasure({std::move(x)}, {1.0});
}

DiscreteMeasure DiscreteMeasure::dirac(double x) {
  return dirac(Point::Constant(1, x));
}

DiscreteMeasure DiscreteMeasure::empirical(std::vector<Point> points) {
  if (points.empty()) throw std::invalid_argument("empirical measure needs at least one point");
  std::vector<double> w(points.size(), 1.0 / static_cast<double>(points.size()));
  for (const auto& p : points) {
    if (p.size() != points.front().size() || !p.allFinite()) {
      throw std::invalid_argument("empirical measure points are inconsistent or not finite");
    }
  }
  return DiscreteMeasure(Canonical{}, std::move(points), std::move(w));
}

DiscreteMeasure DiscreteMeasure::on_line(const std::vector<double>& atoms,
                                         std::vector<double> weights) {
  std::vector<Point> pts;
  pts.reserve(atoms.size());
  for (double a : atoms) pts.push_back(Point::Constant(1, a));
  return DiscreteMeasure(std::move(pts), std::move(weights));
}

double DiscreteMeasure::mass_at(const Point& x) const {
  for (std::size_t i = 0; i < support_.size(); ++i) {
    if (point_distance(support_[i], x) <= kSupportMergeTolerance) return weights_[i];
  }
  return 0.0;
}

bool approx_equal(const DiscreteMeasure& a, const DiscreteMeasure& b, double tol) {
  // Atoms with mass below tol on one side may be missing on the other.
  auto covered = [tol](const DiscreteMeasure& x, const DiscreteMeasure& y) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (std::abs(x.weight(i) - y.mass_at(x.point(i))) > tol) return false;
    }
    return true;
  };
  return a.dimension() == b.dimension() && covered(a, b) && covered(b, a);
}

Eigen::VectorXd mean(const DiscreteMeasure& mu) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(mu.dimension());
  for (std::size_t i = 0; i < mu.size(); ++i) m += mu.weight(i) * mu.point(i);
  return m;
}

double quadratic_moment(const DiscreteMeasure& mu, const Eigen::MatrixXd& lambda) {
  check_symmetric(lambda, mu.dimension());
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    s += mu.weight(i) * mu.point(i).dot(lambda * mu.point(i));
  }
  return s;
}

double variance_form(const DiscreteMeasure& mu, const Eigen::MatrixXd& lambda) {
  check_symmetric(lambda, mu.dimension());
  // Centered form avoids cancellation between the two moments.
  const Eigen::VectorXd m = mean(mu);
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const Eigen::VectorXd c = mu.point(i) - m;
    s += mu.weight(i) * c.dot(lambda * c);
  }
  return s;
}

Eigen::MatrixXd covariance(const DiscreteMeasure& mu) {
  const Eigen::VectorXd m = mean(mu);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(mu.dimension(), mu.dimension());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const Eigen::VectorXd c = mu.point(i) - m;
    cov += mu.weight(i) * c * c.transpose();
  }
  return 0.5 * (cov + cov.transpose());
}

DiscreteMeasure mixture(double alpha, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("mixture weight outside [0, 1]");
  if (mu.dimension() != nu.dimension()) throw std::invalid_argument("mixture of measures in different dimensions");
  std::vector<Point> pts = mu.support();
  pts.insert(pts.end(), nu.support().begin(), nu.support().end());
  std::vector<double> w;
  w.reserve(pts.size());
  for (double x : mu.weights()) w.push_back(alpha * x);
  for (double x : nu.weights()) w.push_back((1.0 - alpha) * x);
  return DiscreteMeasure(std::move(pts), std::move(w));
}

std::vector<std::int64_t> quantized_key(const DiscreteMeasure& mu) {
  std::vector<std::int64_t> key;
  key.reserve(mu.size() * (mu.dimension() + 1) + 1);
  key.push_back(mu.dimension());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (Eigen::Index j = 0; j < mu.point(i).size(); ++j) {
      key.push_back(std::llround(mu.point(i)[j] / kSupportMergeTolerance));
    }
    key.push_back(std::llround(mu.weight(i) * kKeyWeightScale));
  }
  return key;
}

TabularMap::TabularMap(std::vector<Point> domain, std::vector<Point> values)
    : domain_(std::move(domain)), values_(std::move(values)) {
  if (domain_.empty()) throw std::invalid_argument("tabular map has an empty domain");
  if (domain_.size() != values_.size()) {
    throw std::invalid_argument("tabular map domain and values differ in length");
  }
  for (std::size_t i = 0; i < domain_.size(); ++i) {
    if (values_[i].size() != values_.front().size()) {
      throw std::invalid_argument("tabular map values have inconsistent dimensions");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (point_distance(domain_[i], domain_[j]) <= kSupportMergeTolerance) {
        throw std::invalid_argument("tabular map domain repeats point " + format_point(domain_[i]));
      }
    }
  }
}

TabularMap TabularMap::constant(std::vector<Point> domain, const Point& value) {
  std::vector<Point> values(domain.size(), value);
  return TabularMap(std::move(domain), std::move(values));
}

TabularMap TabularMap::identity(std::vector<Point> domain) {
  std::vector<Point> values = domain;
  return TabularMap(std::move(domain), std::move(values));
}

std::optional<std::size_t> TabularMap::find(const Point& x) const {
  for (std::size_t i = 0; i < domain_.size(); ++i) {
    if (point_distance(domain_[i], x) <= kSupportMergeTolerance) return i;
  }
  return std::nullopt;
}

const Point& TabularMap::operator()(const Point& x) const {
  const auto i = find(x);
  if (!i) throw ModelError("policy is not defined at point " + format_point(x));
  return values_[*i];
}

DiscreteMeasure image_measure(const DiscreteMeasure& mu, const TabularMap& policy) {
  std::vector<Point> images;
  images.reserve(mu.size());
  for (const auto& x : mu.support()) images.push_back(policy(x));
  return DiscreteMeasure(std::move(images), mu.weights());
}

}  // namespace mfc
