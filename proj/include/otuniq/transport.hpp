#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cost.hpp"
#include "error.hpp"
#include "measure.hpp"
#include "scalar.hpp"
#include "tolerances.hpp"

namespace otuniq {

struct PlanEntry {
  std::size_t source = 0;
  std::size_t target = 0;
  double mass = 0;

  friend bool operator==(const PlanEntry&, const PlanEntry&) = default;
};

/// Sparse coupling between an n-point source and an m-point target measure.
/// Entries are kept sorted by (source, target) and carry strictly positive
/// mass.
class TransportPlan {
 public:
  TransportPlan() = default;
  TransportPlan(std::size_t n, std::size_t m, std::vector<PlanEntry> entries)
      : n_(n), m_(m), entries_(std::move(entries)) {
    std::erase_if(entries_, [](const PlanEntry& e) { return !(e.mass > 0); });
    std::sort(entries_.begin(), entries_.end(), [](const PlanEntry& a, const PlanEntry& b) {
      return std::pair(a.source, a.target) < std::pair(b.source, b.target);
    });
    for (const auto& e : entries_)
      if (e.source >= n_ || e.target >= m_)
        fail(ErrorCode::DimensionMismatch, "plan entry outside the measure supports");
  }

  /// Diagonal plan of a measure coupled with itself.
  static TransportPlan identity(const DiscreteMeasure& mu) {
    std::vector<PlanEntry> e;
    for (std::size_t i = 0; i < mu.size(); ++i) e.push_back({i, i, mu.weight(i)});
    return TransportPlan(mu.size(), mu.size(), std::move(e));
  }

  std::size_t sources() const { return n_; }
  std::size_t targets() const { return m_; }
  const std::vector<PlanEntry>& entries() const { return entries_; }
  std::size_t support_size() const { return entries_.size(); }

  std::vector<double> row_sums() const {
    std::vector<double> r(n_, 0.0);
    for (const auto& e : entries_) r[e.source] += e.mass;
    return r;
  }
  std::vector<double> col_sums() const {
    std::vector<double> c(m_, 0.0);
    for (const auto& e : entries_) c[e.target] += e.mass;
    return c;
  }

  double cost(const BoundCost& c) const {
    double total = 0;
    for (const auto& e : entries_) total += e.mass * c(e.source, e.target);
    return total;
  }

  /// Largest marginal violation against the two measures.
  double marginal_error(const DiscreteMeasure& mu, const DiscreteMeasure& nu) const {
    if (mu.size() != n_ || nu.size() != m_)
      fail(ErrorCode::DimensionMismatch, "plan and measures differ in size");
    double err = 0;
    const auto r = row_sums();
    const auto c = col_sums();
    for (std::size_t i = 0; i < n_; ++i) err = std::max(err, std::abs(r[i] - mu.weight(i)));
    for (std::size_t j = 0; j < m_; ++j) err = std::max(err, std::abs(c[j] - nu.weight(j)));
    return err;
  }

 private:
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::vector<PlanEntry> entries_;
};

/// Dual values on the two supports. f may contain kNegInf.
struct PotentialPair {
  std::vector<double> f;
  std::vector<double> g;

  /// sum mu_i f_i + sum nu_j g_j over positive-weight points; -inf if any of
  /// those values is -inf.
  double dual_value(const DiscreteMeasure& mu, const DiscreteMeasure& nu) const {
    double total = 0;
    for (std::size_t i = 0; i < f.size(); ++i)
      if (mu.weight(i) > 0) total += mu.weight(i) * f[i];
    for (std::size_t j = 0; j < g.size(); ++j)
      if (nu.weight(j) > 0) total += nu.weight(j) * g[j];
    return total;
  }

  PotentialPair shifted(double s) const {
    PotentialPair out = *this;
    for (double& v : out.f) v += s;
    for (double& v : out.g) v -= s;
    return out;
  }
};

enum class Direction {
  ToSource,  // g on targets  -> g^c(x) = min_y c(x, y) - g(y)
  ToTarget,  // f on sources  -> f^c(y) = min_x c(x, y) - f(x)
};

/// c-transform over the finite supports. Points carrying -inf are skipped;
/// the result is finite everywhere.
inline std::vector<double> c_transform(std::span<const double> values, const BoundCost& cost,
                                       Direction direction) {
  const bool to_source = direction == Direction::ToSource;
  const std::size_t in_size = to_source ? cost.cols() : cost.rows();
  const std::size_t out_size = to_source ? cost.rows() : cost.cols();
  if (values.size() != in_size)
    fail(ErrorCode::DimensionMismatch, "c-transform input has " + std::to_string(values.size()) +
                                           " values, expected " + std::to_string(in_size));
  bool any_finite = false;
  for (double v : values) {
    if (std::isnan(v) || (std::isinf(v) && v > 0))
      fail(ErrorCode::InvalidMeasure, "c-transform input must be finite or -inf");
    any_finite = any_finite || std::isfinite(v);
  }
  if (!any_finite) fail(ErrorCode::AllInfinite, "c-transform of a function that is -inf everywhere");
  std::vector<double> out(out_size, std::numeric_limits<double>::infinity());
  for (std::size_t a = 0; a < out_size; ++a) {
    for (std::size_t b = 0; b < in_size; ++b) {
      if (is_neg_inf(values[b])) continue;
      const double c = to_source ? cost(a, b) : cost(b, a);
      out[a] = std::min(out[a], c - values[b]);
    }
  }
  return out;
}

struct ResidualReport {
  double max_residual = 0;
  std::size_t argmax = 0;
  std::vector<double> per_point;  // f^{cc} - f, +inf where f is -inf but f^{cc} is not
};

/// max_x |f^{cc}(x) - f(x)| on the source support.
inline ResidualReport double_transform_residual(std::span<const double> f, const BoundCost& cost) {
  const auto fc = c_transform(f, cost, Direction::ToTarget);
  const auto fcc = c_transform(fc, cost, Direction::ToSource);
  ResidualReport r;
  r.per_point.resize(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double diff = is_neg_inf(f[i]) ? std::numeric_limits<double>::infinity() : fcc[i] - f[i];
    r.per_point[i] = diff;
    if (std::abs(diff) > r.max_residual) {
      r.max_residual = std::abs(diff);
      r.argmax = i;
    }
  }
  return r;
}

struct Subdifferential {
  std::vector<std::pair<std::size_t, std::size_t>> tight_pairs;  // sorted

  bool contains(std::size_t i, std::size_t j) const {
    return std::binary_search(tight_pairs.begin(), tight_pairs.end(), std::pair(i, j));
  }
};

/// Largest value of f(x) + g(y) - c(x, y) over all pairs with finite f and g.
inline double max_violation(const PotentialPair& pair, const BoundCost& cost) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cost.rows(); ++i) {
    if (!std::isfinite(pair.f[i])) continue;
    for (std::size_t j = 0; j < cost.cols(); ++j) {
      if (!std::isfinite(pair.g[j])) continue;
      worst = std::max(worst, pair.f[i] + pair.g[j] - cost(i, j));
    }
  }
  return worst;
}

/// All pairs where f(x) + g(y) = c(x, y) within `tight_tol`.
inline Subdifferential subdifferential_of(const PotentialPair& pair, const BoundCost& cost,
                                          double tight_tol) {
  if (pair.f.size() != cost.rows() || pair.g.size() != cost.cols())
    fail(ErrorCode::DimensionMismatch, "potential pair does not match the cost dimensions");
  Subdifferential sd;
  for (std::size_t i = 0; i < cost.rows(); ++i) {
    if (!std::isfinite(pair.f[i])) continue;
    for (std::size_t j = 0; j < cost.cols(); ++j) {
      if (!std::isfinite(pair.g[j])) continue;
      const double excess = pair.f[i] + pair.g[j] - cost(i, j);
      if (excess > tight_tol)
        fail(ErrorCode::InfeasiblePair, "f(" + std::to_string(i) + ") + g(" + std::to_string(j) +
                                            ") exceeds the cost by " + std::to_string(excess));
      if (excess >= -tight_tol) sd.tight_pairs.emplace_back(i, j);
    }
  }
  return sd;
}

struct DualityReport {
  double primal_cost = 0;
  double dual_value = 0;
  double gap = 0;
  double max_violation = 0;
  double marginal_error = 0;
  bool feasible = false;
  bool support_tight = false;
  bool optimal = false;
};

/// Checks a (plan, pair) certificate: feasibility of the pair, tightness on
/// the plan support, marginals, and the relative duality gap.
inline DualityReport verify_duality(const Problem& problem, const TransportPlan& plan,
                                    const PotentialPair& pair, const Tolerances& tol = {}) {
  const auto cost = problem.bound();
  if (plan.sources() != problem.source.size() || plan.targets() != problem.target.size() ||
      pair.f.size() != problem.source.size() || pair.g.size() != problem.target.size())
    fail(ErrorCode::DimensionMismatch, "plan, pair and problem sizes disagree");
  const double tight = tol.tight(cost.max_abs());
  DualityReport r;
  r.primal_cost = plan.cost(cost);
  r.dual_value = pair.dual_value(problem.source, problem.target);
  r.gap = r.primal_cost - r.dual_value;
  r.marginal_error = plan.marginal_error(problem.source, problem.target);
  r.max_violation = max_violation(pair, cost);
  r.feasible = r.max_violation <= tight;
  r.support_tight = true;
  for (const auto& e : plan.entries()) {
    const double f = pair.f[e.source], g = pair.g[e.target];
    if (!std::isfinite(f) || !std::isfinite(g) ||
        std::abs(f + g - cost(e.source, e.target)) > tight) {
      r.support_tight = false;
      break;
    }
  }
  r.optimal = r.feasible && r.support_tight && r.marginal_error <= tol.mass &&
              std::abs(r.gap) <= tol.gap_bound(r.primal_cost);
  return r;
}

}  // namespace otuniq
