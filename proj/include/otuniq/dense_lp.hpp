#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace otuniq {

/// Sparse inequality a . z <= rhs.
struct LpRow {
  std::vector<std::pair<std::size_t, double>> coef;
  double rhs = 0;

  double dot(std::span<const double> z) const {
    double s = 0;
    for (const auto& [k, a] : coef) s += a * z[k];
    return s;
  }
};

/// Primal active-set simplex for max c . z subject to rows a_i . z <= b_i.
///
/// The iterate is always a vertex: `dim` linearly independent rows are held
/// active and their inverse is kept in product form, refactorised every
/// `kRefactor` pivots. Pivoting follows Bland's rule on row indices, so the
/// method terminates on degenerate faces. Successive objectives start from the
/// previous optimum.
class ActiveSetLp {
 public:
  enum class Status { Optimal, Unbounded };

  explicit ActiveSetLp(std::size_t dim) : dim_(dim), z_(dim, 0.0) {}

  std::size_t add_row(LpRow row) {
    for (const auto& [k, a] : row.coef)
      if (k >= dim_) fail(ErrorCode::Internal, "lp row refers to a missing variable");
    rows_.push_back(std::move(row));
    position_.push_back(kNone);
    fixed_.push_back(0);
    return rows_.size() - 1;
  }

  /// Marks a row as an equality: it enters the initial basis and never leaves.
  void fix(std::size_t row) { fixed_.at(row) = 1; }

  /// Sets the starting vertex from `dim` active rows.
  void start(const std::vector<std::size_t>& active) {
    if (active.size() != dim_) fail(ErrorCode::Internal, "starting basis has the wrong size");
    std::fill(position_.begin(), position_.end(), kNone);
    basis_ = active;
    for (std::size_t r = 0; r < dim_; ++r) position_.at(basis_[r]) = r;
    refactor();
  }

  Status maximize(std::span<const double> c, std::size_t max_pivots = 1'000'000) {
    if (c.size() != dim_) fail(ErrorCode::Internal, "objective has the wrong size");
    double cscale = 0;
    for (double v : c) cscale = std::max(cscale, std::abs(v));
    const double opt_tol = 1e-10 * std::max(cscale, 1e-300);
    std::vector<double> dir(dim_);
    for (std::size_t iter = 0;; ++iter) {
      if (iter > max_pivots) fail(ErrorCode::Internal, "lp pivot limit reached");
      // Leaving: lowest row index with a negative multiplier.
      std::size_t leave = kNone;
      for (std::size_t r = 0; r < dim_; ++r) {
        if (fixed_[basis_[r]]) continue;
        double lambda = 0;
        for (std::size_t s = 0; s < dim_; ++s) lambda += c[s] * binv_[r][s];
        if (lambda < -opt_tol && (leave == kNone || basis_[r] < basis_[leave])) leave = r;
      }
      if (leave == kNone) return Status::Optimal;

      double dnorm = 0;
      for (std::size_t s = 0; s < dim_; ++s) {
        dir[s] = -binv_[leave][s];
        dnorm = std::max(dnorm, std::abs(dir[s]));
      }
      // Entering: minimum ratio, lowest row index among ties.
      std::size_t enter = kNone;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < rows_.size(); ++i) {
        if (position_[i] != kNone) continue;
        double ad = 0, amax = 0;
        for (const auto& [k, a] : rows_[i].coef) {
          ad += a * dir[k];
          amax = std::max(amax, std::abs(a));
        }
        if (ad <= 1e-9 * dnorm * amax) continue;
        const double step = std::max(0.0, rows_[i].rhs - rows_[i].dot(z_)) / ad;
        const double tie = 1e-12 * (1 + std::abs(best));
        if (step < best - tie || (step <= best + tie && i < enter)) {
          best = std::min(best, step);
          enter = i;
        }
      }
      if (enter == kNone) return Status::Unbounded;

      for (std::size_t s = 0; s < dim_; ++s) z_[s] += best * dir[s];
      pivot(leave, enter);
    }
  }

  const std::vector<double>& point() const { return z_; }
  double value(std::span<const double> c) const {
    double s = 0;
    for (std::size_t k = 0; k < dim_; ++k) s += c[k] * z_[k];
    return s;
  }
  bool active(std::size_t row) const { return position_.at(row) != kNone; }
  std::size_t pivots() const { return pivots_; }
  std::size_t dim() const { return dim_; }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  static constexpr std::size_t kRefactor = 64;

  // binv_[r] is column r of the inverse basis matrix: a_{basis[k]} . binv_[r] = [k == r].
  void pivot(std::size_t r, std::size_t enter) {
    const auto& a = rows_[enter].coef;
    std::vector<double> alpha(dim_, 0.0);
    for (std::size_t s = 0; s < dim_; ++s)
      for (const auto& [k, v] : a) alpha[s] += v * binv_[s][k];
    const double ar = alpha[r];
    for (double& v : binv_[r]) v /= ar;
    for (std::size_t s = 0; s < dim_; ++s) {
      if (s == r || alpha[s] == 0) continue;
      for (std::size_t k = 0; k < dim_; ++k) binv_[s][k] -= alpha[s] * binv_[r][k];
    }
    position_[basis_[r]] = kNone;
    basis_[r] = enter;
    position_[enter] = r;
    if (++pivots_ % kRefactor == 0) refactor();
  }

  // Gauss-Jordan inversion of the active rows, then the vertex is recomputed
  // from them to shed accumulated drift.
  void refactor() {
    std::vector<std::vector<double>> m(dim_, std::vector<double>(2 * dim_, 0.0));
    for (std::size_t r = 0; r < dim_; ++r) {
      for (const auto& [k, v] : rows_[basis_[r]].coef) m[r][k] += v;
      m[r][dim_ + r] = 1;
    }
    for (std::size_t col = 0; col < dim_; ++col) {
      std::size_t p = col;
      for (std::size_t r = col + 1; r < dim_; ++r)
        if (std::abs(m[r][col]) > std::abs(m[p][col])) p = r;
      if (std::abs(m[p][col]) < 1e-13) fail(ErrorCode::Internal, "lp basis is singular");
      std::swap(m[p], m[col]);
      const double inv = 1 / m[col][col];
      for (double& v : m[col]) v *= inv;
      for (std::size_t r = 0; r < dim_; ++r) {
        if (r == col || m[r][col] == 0) continue;
        const double f = m[r][col];
        for (std::size_t k = col; k < 2 * dim_; ++k) m[r][k] -= f * m[col][k];
      }
    }
    // m now holds [I | B^{-1}] with B^{-1}[k][r] at m[k][dim_ + r].
    binv_.assign(dim_, std::vector<double>(dim_));
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t k = 0; k < dim_; ++k) binv_[r][k] = m[k][dim_ + r];
    std::fill(z_.begin(), z_.end(), 0.0);
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t k = 0; k < dim_; ++k) z_[k] += binv_[r][k] * rows_[basis_[r]].rhs;
  }

  std::size_t dim_;
  std::vector<LpRow> rows_;
  std::vector<std::size_t> position_;  // row -> basis slot or kNone
  std::vector<char> fixed_;
  std::vector<std::size_t> basis_;
  std::vector<std::vector<double>> binv_;
  std::vector<double> z_;
  std::size_t pivots_ = 0;
};

}  // namespace otuniq
