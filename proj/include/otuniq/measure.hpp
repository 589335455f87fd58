#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "tolerances.hpp"

namespace otuniq {

using Point = std::vector<double>;

/// Finite weighted point cloud, optionally carrying component labels.
///
/// Construction checks shape, nonnegativity, point distinctness and label
/// coverage. The unit-total requirement is checked separately by
/// `require_normalized` because an unbalanced pair of measures is reported as
/// a solver error rather than an input error.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;

  DiscreteMeasure(std::vector<Point> points, std::vector<double> weights,
                  std::optional<std::vector<int>> labels = std::nullopt,
                  double geom_tol = Tolerances{}.geom)
      : points_(std::move(points)), weights_(std::move(weights)), labels_(std::move(labels)) {
    validate(geom_tol);
  }

  static DiscreteMeasure uniform(std::vector<Point> points,
                                 std::optional<std::vector<int>> labels = std::nullopt) {
    std::vector<double> w(points.size(), points.empty() ? 0.0 : 1.0 / points.size());
    return DiscreteMeasure(std::move(points), std::move(w), std::move(labels));
  }

  /// Rescales nonnegative raw weights to unit total.
  static DiscreteMeasure normalized(std::vector<Point> points, std::vector<double> raw,
                                    std::optional<std::vector<int>> labels = std::nullopt) {
    const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
    if (!(total > 0)) fail(ErrorCode::InvalidMeasure, "weights must have positive total");
    for (double& w : raw) w /= total;
    return DiscreteMeasure(std::move(points), std::move(raw), std::move(labels));
  }

  std::size_t size() const { return points_.size(); }
  std::size_t dim() const { return points_.empty() ? 0 : points_.front().size(); }
  const std::vector<Point>& points() const { return points_; }
  const Point& point(std::size_t i) const { return points_[i]; }
  const std::vector<double>& weights() const { return weights_; }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::optional<std::vector<int>>& labels() const { return labels_; }

  double total_mass() const { return std::accumulate(weights_.begin(), weights_.end(), 0.0); }

  void require_normalized(double mass_tol) const {
    if (std::abs(total_mass() - 1.0) > mass_tol)
      fail(ErrorCode::InvalidMeasure,
           "weights sum to " + std::to_string(total_mass()) + ", expected 1");
  }

  /// Index of the lexicographically smallest point.
  std::size_t lexicographic_min() const {
    return static_cast<std::size_t>(
        std::min_element(points_.begin(), points_.end()) - points_.begin());
  }

  /// Index of the lexicographically smallest point with positive weight; this
  /// is the normalisation anchor f(x0) = 0 used throughout.
  std::size_t anchor() const {
    std::size_t best = size();
    for (std::size_t i = 0; i < size(); ++i)
      if (weights_[i] > 0 && (best == size() || points_[i] < points_[best])) best = i;
    if (best == size()) fail(ErrorCode::InvalidMeasure, "measure has no positive weight");
    return best;
  }

 private:
  void validate(double geom_tol) const {
    if (points_.empty()) fail(ErrorCode::InvalidMeasure, "measure has no points");
    if (weights_.size() != points_.size())
      fail(ErrorCode::InvalidMeasure, "points and weights differ in length");
    const std::size_t d = points_.front().size();
    if (d == 0) fail(ErrorCode::InvalidMeasure, "points must have at least one coordinate");
    for (const Point& p : points_) {
      if (p.size() != d) fail(ErrorCode::InvalidMeasure, "points differ in dimension");
      for (double v : p)
        if (!std::isfinite(v)) fail(ErrorCode::InvalidMeasure, "non-finite coordinate");
    }
    for (double w : weights_)
      if (!std::isfinite(w) || w < 0) fail(ErrorCode::InvalidMeasure, "weights must be finite and >= 0");
    // Sorting first keeps the distinctness scan near-linear; near-duplicates
    // that differ only beyond the first coordinate still end up adjacent
    // within each run of equal leading coordinates, so compare the whole run.
    std::vector<std::size_t> order(points_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return points_[a] < points_[b]; });
    for (std::size_t a = 0; a < order.size(); ++a) {
      for (std::size_t b = a + 1; b < order.size(); ++b) {
        const Point& p = points_[order[a]];
        const Point& q = points_[order[b]];
        if (q[0] - p[0] > geom_tol) break;
        bool same = true;
        for (std::size_t k = 0; k < d && same; ++k) same = std::abs(p[k] - q[k]) <= geom_tol;
        if (same)
          fail(ErrorCode::InvalidMeasure, "points " + std::to_string(order[a]) + " and " +
                                              std::to_string(order[b]) + " coincide");
      }
    }
    if (labels_) {
      if (labels_->size() != points_.size())
        fail(ErrorCode::InvalidMeasure, "labels and points differ in length");
      const int top = *std::max_element(labels_->begin(), labels_->end());
      std::vector<char> used(static_cast<std::size_t>(std::max(top, 0)) + 1, 0);
      for (int l : *labels_) {
        if (l < 0) fail(ErrorCode::InvalidMeasure, "labels must be nonnegative");
        used[static_cast<std::size_t>(l)] = 1;
      }
      for (std::size_t l = 0; l < used.size(); ++l)
        if (!used[l]) fail(ErrorCode::InvalidMeasure, "label " + std::to_string(l) + " has no points");
    }
  }

  std::vector<Point> points_;
  std::vector<double> weights_;
  std::optional<std::vector<int>> labels_;
};

}  // namespace otuniq
