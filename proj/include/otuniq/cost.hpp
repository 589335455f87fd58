#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "error.hpp"
#include "measure.hpp"

namespace otuniq {

/// Scalar profile h applied to Euclidean distance, either a polynomial
/// sum_k a_k d^k or a piecewise-linear table (linear extrapolation past the
/// last knot).
class Profile {
 public:
  static Profile polynomial(std::vector<double> coefficients) {
    if (coefficients.empty()) fail(ErrorCode::InvalidCost, "polynomial profile needs coefficients");
    Profile h;
    h.coefficients_ = std::move(coefficients);
    return h;
  }

  static Profile tabulated(std::vector<double> knots, std::vector<double> values) {
    if (knots.size() < 2 || knots.size() != values.size())
      fail(ErrorCode::InvalidCost, "tabulated profile needs >= 2 matching knots and values");
    if (knots.front() != 0.0) fail(ErrorCode::InvalidCost, "tabulated profile must start at 0");
    for (std::size_t k = 1; k < knots.size(); ++k)
      if (!(knots[k] > knots[k - 1])) fail(ErrorCode::InvalidCost, "profile knots must increase");
    Profile h;
    h.knots_ = std::move(knots);
    h.values_ = std::move(values);
    return h;
  }

  bool is_polynomial() const { return !coefficients_.empty(); }
  const std::vector<double>& coefficients() const { return coefficients_; }
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }

  double operator()(double d) const {
    if (is_polynomial()) {
      double acc = 0;
      for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it) acc = acc * d + *it;
      return acc;
    }
    const std::size_t k = segment(d);
    return values_[k] + slope(k) * (d - knots_[k]);
  }

  double derivative(double d) const {
    if (is_polynomial()) {
      double acc = 0;
      for (std::size_t k = coefficients_.size(); k-- > 1;) acc = acc * d + k * coefficients_[k];
      return acc;
    }
    return slope(segment(d));
  }

  /// inf_{b >= a} h'(b). For tables this is exact; for polynomials the infimum
  /// is taken over the critical points of h' beyond a and the tail behaviour.
  double slope_lower_bound(double a) const {
    if (!is_polynomial()) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t k = segment(a); k + 1 < knots_.size(); ++k) best = std::min(best, slope(k));
      return best;
    }
    const std::size_t deg = coefficients_.size() - 1;
    if (deg <= 1) return derivative(a);
    // Leading coefficient of h' decides the tail; a negative lead means -inf.
    if (coefficients_.back() < 0) return -std::numeric_limits<double>::infinity();
    // h' is a polynomial; sample densely up to a bound past its last
    // critical point, using a Cauchy root bound for h''.
    double bound = 0;
    const double lead = deg * (deg - 1) * coefficients_.back();
    for (std::size_t k = 2; k < deg; ++k)
      bound = std::max(bound, std::abs(k * (k - 1) * coefficients_[k] / lead));
    const double hi = std::max(a, 0.0) + 1.0 + bound;
    double best = derivative(a);
    constexpr int kSamples = 4096;
    for (int s = 1; s <= kSamples; ++s) best = std::min(best, derivative(a + (hi - a) * s / kSamples));
    return best;
  }

  /// Checks h is nondecreasing on [0, upto].
  bool nondecreasing(double upto) const {
    if (!is_polynomial()) {
      for (std::size_t k = 0; k + 1 < knots_.size(); ++k)
        if (slope(k) < 0) return false;
      return true;
    }
    constexpr int kSamples = 4096;
    for (int s = 0; s <= kSamples; ++s)
      if (derivative(upto * s / kSamples) < -1e-12) return false;
    return slope_lower_bound(upto) >= -1e-12;
  }

 private:
  std::size_t segment(double d) const {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), d);
    std::size_t k = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
    return std::min(k, knots_.size() - 2);
  }
  double slope(std::size_t k) const {
    return (values_[k + 1] - values_[k]) / (knots_[k + 1] - knots_[k]);
  }

  std::vector<double> coefficients_;
  std::vector<double> knots_;
  std::vector<double> values_;
};

struct LpNormPower {
  double q = 2;  // norm exponent, >= 1
  double p = 2;  // outer power, > 0
};

struct ProfileOfDistance {
  Profile h;
};

struct ExplicitMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major
  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

/// Cost family: c(x, y) = ||x - y||_q^p, h(||x - y||_2), or an explicit matrix.
class CostSpec {
 public:
  using Kind = std::variant<LpNormPower, ProfileOfDistance, ExplicitMatrix>;

  static CostSpec lp_norm_power(double q, double p) {
    if (!(q >= 1) || !std::isfinite(q)) fail(ErrorCode::InvalidCost, "lp norm needs q >= 1");
    if (!(p > 0) || !std::isfinite(p)) fail(ErrorCode::InvalidCost, "lp power needs p > 0");
    return CostSpec(LpNormPower{q, p});
  }
  static CostSpec squared_euclidean() { return lp_norm_power(2, 2); }

  static CostSpec profile_of_distance(Profile h) { return CostSpec(ProfileOfDistance{std::move(h)}); }

  static CostSpec explicit_matrix(const std::vector<std::vector<double>>& rows) {
    ExplicitMatrix m;
    m.rows = rows.size();
    m.cols = rows.empty() ? 0 : rows.front().size();
    if (m.rows == 0 || m.cols == 0) fail(ErrorCode::InvalidCost, "cost matrix is empty");
    for (const auto& r : rows) {
      if (r.size() != m.cols) fail(ErrorCode::InvalidCost, "cost matrix rows differ in length");
      for (double v : r)
        if (!std::isfinite(v) || v < 0) fail(ErrorCode::InvalidCost, "costs must be finite and >= 0");
      m.values.insert(m.values.end(), r.begin(), r.end());
    }
    return CostSpec(std::move(m));
  }

  const Kind& kind() const { return kind_; }
  bool closed_form() const { return !std::holds_alternative<ExplicitMatrix>(kind_); }
  const ExplicitMatrix* matrix() const { return std::get_if<ExplicitMatrix>(&kind_); }
  const LpNormPower* lp() const { return std::get_if<LpNormPower>(&kind_); }
  const ProfileOfDistance* profile() const { return std::get_if<ProfileOfDistance>(&kind_); }

  /// Closed-form evaluation on coordinates.
  double evaluate(std::span<const double> x, std::span<const double> y) const {
    if (const auto* lp = this->lp()) {
      double norm;
      if (lp->q == 2) {
        double s = 0;
        for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
        if (lp->p == 2) return s;
        norm = std::sqrt(s);
      } else if (lp->q == 1) {
        norm = 0;
        for (std::size_t k = 0; k < x.size(); ++k) norm += std::abs(x[k] - y[k]);
      } else {
        double s = 0;
        for (std::size_t k = 0; k < x.size(); ++k) s += std::pow(std::abs(x[k] - y[k]), lp->q);
        norm = std::pow(s, 1.0 / lp->q);
      }
      return lp->p == 1 ? norm : std::pow(norm, lp->p);
    }
    if (const auto* prof = profile()) return prof->h(euclidean(x, y));
    fail(ErrorCode::InvalidCost, "explicit matrix costs have no coordinate form");
  }

  /// Gradient of c(., y) at x. At x == y the zero vector is returned, which is
  /// the gradient for p > 1 and a subgradient otherwise.
  std::vector<double> grad_x(std::span<const double> x, std::span<const double> y) const {
    const std::size_t d = x.size();
    std::vector<double> g(d, 0.0);
    if (const auto* lp = this->lp()) {
      double norm_q = 0;
      for (std::size_t k = 0; k < d; ++k) norm_q += std::pow(std::abs(x[k] - y[k]), lp->q);
      norm_q = std::pow(norm_q, 1.0 / lp->q);
      if (norm_q == 0) return g;
      // d/dx ||z||_q^p = p ||z||_q^{p-q} sign(z) |z|^{q-1}
      const double outer = lp->p * std::pow(norm_q, lp->p - lp->q);
      for (std::size_t k = 0; k < d; ++k) {
        const double z = x[k] - y[k];
        const double s = (z > 0) - (z < 0);
        g[k] = outer * s * std::pow(std::abs(z), lp->q - 1);
      }
      return g;
    }
    if (const auto* prof = profile()) {
      const double r = euclidean(x, y);
      if (r == 0) return g;
      const double dh = prof->h.derivative(r);
      for (std::size_t k = 0; k < d; ++k) g[k] = dh * (x[k] - y[k]) / r;
      return g;
    }
    fail(ErrorCode::InvalidCost, "explicit matrix costs have no gradient");
  }

  /// Restriction of an explicit matrix to index subsets; closed forms are
  /// unchanged because they act on coordinates.
  CostSpec restricted(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const {
    const auto* m = matrix();
    if (!m) return *this;
    ExplicitMatrix r;
    r.rows = rows.size();
    r.cols = cols.size();
    r.values.reserve(r.rows * r.cols);
    for (std::size_t i : rows)
      for (std::size_t j : cols) r.values.push_back(m->at(i, j));
    return CostSpec(std::move(r));
  }

  static double euclidean(std::span<const double> x, std::span<const double> y) {
    double s = 0;
    for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
    return std::sqrt(s);
  }

 private:
  explicit CostSpec(Kind kind) : kind_(std::move(kind)) {}
  Kind kind_;
};

/// A cost bound to a concrete pair of point sets. Closed-form entries are
/// evaluated on first access and memoised; the cache is shared between
/// copies and safe under concurrent reads because every writer stores the
/// same deterministic value.
class BoundCost {
 public:
  BoundCost(const CostSpec& spec, const DiscreteMeasure& source, const DiscreteMeasure& target)
      : spec_(std::make_shared<CostSpec>(spec)),
        source_(std::make_shared<std::vector<Point>>(source.points())),
        target_(std::make_shared<std::vector<Point>>(target.points())),
        n_(source.size()),
        m_(target.size()) {
    if (const auto* mat = spec.matrix()) {
      if (mat->rows != n_ || mat->cols != m_)
        fail(ErrorCode::DimensionMismatch,
             "cost matrix is " + std::to_string(mat->rows) + "x" + std::to_string(mat->cols) +
                 ", measures are " + std::to_string(n_) + "x" + std::to_string(m_));
    } else {
      if (source.dim() != target.dim())
        fail(ErrorCode::DimensionMismatch, "source and target dimensions differ");
      cache_ = std::make_shared<std::vector<double>>(n_ * m_, std::numeric_limits<double>::quiet_NaN());
    }
  }

  std::size_t rows() const { return n_; }
  std::size_t cols() const { return m_; }
  const CostSpec& spec() const { return *spec_; }

  double operator()(std::size_t i, std::size_t j) const {
    if (!cache_) return spec_->matrix()->at(i, j);
    std::atomic_ref<double> slot((*cache_)[i * m_ + j]);
    double v = slot.load(std::memory_order_relaxed);
    if (std::isnan(v)) {
      v = spec_->evaluate((*source_)[i], (*target_)[j]);
      if (!std::isfinite(v) || v < 0)
        fail(ErrorCode::InvalidCost, "cost evaluated to a negative or non-finite value");
      slot.store(v, std::memory_order_relaxed);
    }
    return v;
  }

  double max_abs() const {
    double best = 0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < m_; ++j) best = std::max(best, std::abs((*this)(i, j)));
    return best;
  }

  std::vector<double> dense() const {
    std::vector<double> out(n_ * m_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < m_; ++j) out[i * m_ + j] = (*this)(i, j);
    return out;
  }

 private:
  std::shared_ptr<const CostSpec> spec_;
  std::shared_ptr<const std::vector<Point>> source_;
  std::shared_ptr<const std::vector<Point>> target_;
  std::shared_ptr<std::vector<double>> cache_;
  std::size_t n_ = 0;
  std::size_t m_ = 0;
};

/// A transport problem: two measures and the cost that couples them.
struct Problem {
  DiscreteMeasure source;
  DiscreteMeasure target;
  CostSpec cost;

  BoundCost bound() const { return BoundCost(cost, source, target); }
};

}  // namespace otuniq
