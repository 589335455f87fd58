#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "cost.hpp"
#include "error.hpp"
#include "measure.hpp"
#include "solver.hpp"

// Grid-scale diagnostics. Nothing here feeds a uniqueness verdict.

namespace otuniq {

/// Writes `x1,...,xd,value` rows.
inline void write_csv(std::ostream& out, const std::vector<Point>& points, const std::vector<double>& values) {
  if (points.size() != values.size()) fail(ErrorCode::DimensionMismatch, "csv columns differ in length");
  const std::size_t d = points.empty() ? 0 : points.front().size();
  for (std::size_t k = 0; k < d; ++k) out << 'x' << (k + 1) << ',';
  out << "value\n";
  const auto old = out.precision(17);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (double v : points[i]) out << v << ',';
    out << values[i] << '\n';
  }
  out.precision(old);
}

/// Regular grid on a box: `counts[k]` points per axis from lo[k] to hi[k].
inline std::vector<Point> box_grid(const Point& lo, const Point& hi, const std::vector<std::size_t>& counts) {
  if (lo.size() != hi.size() || lo.size() != counts.size())
    fail(ErrorCode::DimensionMismatch, "grid bounds and counts differ in dimension");
  std::vector<Point> out{Point{}};
  for (std::size_t k = 0; k < lo.size(); ++k) {
    std::vector<Point> next;
    for (const auto& p : out)
      for (std::size_t s = 0; s < counts[k]; ++s) {
        Point q = p;
        q.push_back(counts[k] == 1 ? lo[k] : lo[k] + (hi[k] - lo[k]) * double(s) / double(counts[k] - 1));
        next.push_back(std::move(q));
      }
    out = std::move(next);
  }
  return out;
}

struct DominatedCostRegion {
  Point x;
  Point y;
  std::vector<char> member;  // c(x', y) <= c(x, y) per grid point
};

inline DominatedCostRegion dominated_region(const Point& x, const Point& y, const CostSpec& cost,
                                            const std::vector<Point>& grid) {
  if (!cost.closed_form()) fail(ErrorCode::InvalidCost, "dominated regions need a closed-form cost");
  DominatedCostRegion r{x, y, {}};
  const double level = cost.evaluate(x, y);
  for (const auto& q : grid) {
    if (q.size() != x.size()) fail(ErrorCode::DimensionMismatch, "grid point has the wrong dimension");
    r.member.push_back(cost.evaluate(q, y) <= level);
  }
  return r;
}

struct AsymptoticRegion {
  Point x;
  Point direction;
  std::vector<double> radii;
  std::vector<std::vector<char>> membership;  // [n][grid point]
  std::vector<double> frequency;              // over the whole schedule
  std::vector<double> tail_frequency;         // over the second half of the schedule
  std::vector<char> tail_member;              // tail_frequency == 1
};

/// Membership of grid points in C(x_n, y_n) along escaping targets
/// y_n = x + r_n u, with the perturbed anchor x_n = x + (y_n - x) / |y_n - x|^{3/2}.
/// The direction is normalised. Points that stay in the region over the
/// tail of the schedule approximate the limsup set.
inline AsymptoticRegion asymptotic_region(const Point& x, Point u, const CostSpec& cost,
                                          const std::vector<double>& radii, const std::vector<Point>& grid) {
  if (!cost.closed_form()) fail(ErrorCode::InvalidCost, "asymptotic regions need a closed-form cost");
  if (u.size() != x.size()) fail(ErrorCode::DimensionMismatch, "direction and anchor differ in dimension");
  if (radii.empty()) fail(ErrorCode::ScheduleTooShort, "radius schedule is empty");
  double norm = 0;
  for (double v : u) norm += v * v;
  norm = std::sqrt(norm);
  if (!(norm > 0)) fail(ErrorCode::InvalidCost, "direction must be nonzero");
  for (double& v : u) v /= norm;
  if (const auto* prof = cost.profile()) {
    double reach = radii.back();
    for (const auto& q : grid) reach = std::max(reach, radii.back() + CostSpec::euclidean(q, x));
    if (!prof->h.nondecreasing(reach)) fail(ErrorCode::ProfileNotMonotone, "profile decreases on the schedule");
  }

  AsymptoticRegion r{x, u, radii, {}, {}, {}, {}};
  const std::size_t n = radii.size(), tail_start = n / 2;
  r.frequency.assign(grid.size(), 0.0);
  r.tail_frequency.assign(grid.size(), 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    Point y = x, xs = x;
    const double scale = std::pow(radii[s], -1.5);
    for (std::size_t k = 0; k < x.size(); ++k) {
      y[k] += radii[s] * u[k];
      xs[k] += radii[s] * u[k] * scale;
    }
    const double level = cost.evaluate(xs, y);
    std::vector<char> in(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
      in[g] = cost.evaluate(grid[g], y) <= level;
      r.frequency[g] += in[g];
      if (s >= tail_start) r.tail_frequency[g] += in[g];
    }
    r.membership.push_back(std::move(in));
  }
  for (std::size_t g = 0; g < grid.size(); ++g) {
    r.frequency[g] /= double(n);
    r.tail_frequency[g] /= double(n - tail_start);
    r.tail_member.push_back(r.tail_frequency[g] == 1.0);
  }
  return r;
}

struct TruncatedTarget {
  double radius = 0;
  DiscreteMeasure measure;
};

struct EscapeDiagnostic {
  std::vector<double> radii;
  std::vector<std::vector<double>> partner_distance;  // [radius][source]
  std::vector<std::vector<double>> score;             // running max over radii
  std::vector<char> flagged;
  std::vector<std::size_t> flagged_at;                // first schedule index that flags, or size()
};

/// Solves mu against each truncation nu_R and follows the distance from
/// every source to its farthest plan partner. A source is flagged once, for
/// some prefix of the schedule, its partner distance at the last radius of
/// the prefix is at least twice the distance at the prefix's midpoint.
/// Flags never disappear as radii are appended.
inline EscapeDiagnostic escape_diagnostic(const DiscreteMeasure& mu, const std::vector<TruncatedTarget>& family,
                                          const CostSpec& cost, const Tolerances& tol = {}) {
  if (family.size() < 3) fail(ErrorCode::ScheduleTooShort, "escape diagnostic needs at least 3 radii");
  for (std::size_t s = 1; s < family.size(); ++s)
    if (!(family[s].radius > family[s - 1].radius))
      fail(ErrorCode::ScheduleTooShort, "radii must increase along the schedule");
  EscapeDiagnostic r;
  const std::size_t n = mu.size();
  for (const auto& t : family) {
    r.radii.push_back(t.radius);
    const Problem p{mu, t.measure, cost};
    const auto s = solve(p, tol);
    std::vector<double> dist(n, 0.0);
    for (const auto& e : s.plan.entries())
      dist[e.source] = std::max(dist[e.source], CostSpec::euclidean(mu.point(e.source), t.measure.point(e.target)));
    std::vector<double> running = dist;
    if (!r.score.empty())
      for (std::size_t i = 0; i < n; ++i) running[i] = std::max(running[i], r.score.back()[i]);
    r.partner_distance.push_back(std::move(dist));
    r.score.push_back(std::move(running));
  }
  r.flagged.assign(n, 0);
  r.flagged_at.assign(n, family.size());
  for (std::size_t last = 2; last < family.size(); ++last) {
    const std::size_t mid = last / 2;
    for (std::size_t i = 0; i < n; ++i) {
      if (r.flagged[i]) continue;
      const double early = r.partner_distance[mid][i], late = r.partner_distance[last][i];
      if (late > 0 && late >= 2 * early) {
        r.flagged[i] = 1;
        r.flagged_at[i] = last;
      }
    }
  }
  return r;
}

struct GradientEntry {
  std::size_t source = 0;
  std::vector<double> finite_difference;
  std::vector<double> partner_gradient;      // mean of grad_x c over plan partners
  double deviation = 0;                      // |finite_difference - partner_gradient|
  std::vector<double> pair_deviation;        // per partner
};

struct GradientCheckReport {
  std::vector<double> spacing;
  std::vector<GradientEntry> entries;
  double max_deviation = 0;
  double median_deviation = 0;
  double max_pair_deviation = 0;
};

struct GridGeometry {
  std::vector<double> spacing;
  std::map<std::vector<long long>, std::size_t> index;  // lattice coordinates -> point
  std::vector<std::vector<long long>> coords;
};

/// Lattice structure of a point set: per axis the distinct coordinates must
/// be evenly spaced. Axes with a single value get spacing 0.
inline GridGeometry grid_geometry(const DiscreteMeasure& mu, double rel_tol = 1e-9) {
  GridGeometry g;
  const std::size_t d = mu.dim();
  std::vector<double> origin(d);
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<double> vals;
    for (const auto& p : mu.points()) vals.push_back(p[k]);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    origin[k] = vals.front();
    double h = 0;
    if (vals.size() > 1) {
      h = vals[1] - vals[0];
      for (std::size_t s = 1; s < vals.size(); ++s) h = std::min(h, vals[s] - vals[s - 1]);
    }
    g.spacing.push_back(h);
  }
  for (const auto& p : mu.points()) {
    std::vector<long long> c(d, 0);
    for (std::size_t k = 0; k < d; ++k) {
      if (g.spacing[k] == 0) continue;
      const double t = (p[k] - origin[k]) / g.spacing[k];
      c[k] = std::llround(t);
      if (std::abs(t - double(c[k])) > rel_tol * (1 + std::abs(t)))
        fail(ErrorCode::NotAGrid, "source points are not on a regular lattice along axis " + std::to_string(k + 1));
    }
    g.index[c] = g.coords.size();
    g.coords.push_back(std::move(c));
  }
  return g;
}

/// Compares central differences of f with the cost gradient at the plan
/// partners, at positive-mass grid points whose full stencil has positive
/// mass. `interior`, when given, further restricts the points checked.
inline GradientCheckReport gradient_identity_check(const Problem& p, const SolveResult& s,
                                                   const std::vector<char>* interior = nullptr) {
  if (!p.cost.closed_form()) fail(ErrorCode::InvalidCost, "gradient check needs a closed-form cost");
  const auto geo = grid_geometry(p.source);
  const std::size_t d = p.source.dim();
  std::vector<std::vector<std::size_t>> partners(p.source.size());
  for (const auto& e : s.plan.entries()) partners[e.source].push_back(e.target);

  GradientCheckReport r;
  r.spacing = geo.spacing;
  for (std::size_t i = 0; i < p.source.size(); ++i) {
    if (!(p.source.weight(i) > 0) || partners[i].empty()) continue;
    if (interior && !(*interior)[i]) continue;
    GradientEntry e;
    e.source = i;
    bool full = true;
    for (std::size_t k = 0; k < d && full; ++k) {
      if (geo.spacing[k] == 0) { e.finite_difference.push_back(0); continue; }
      auto up = geo.coords[i], down = geo.coords[i];
      ++up[k];
      --down[k];
      const auto a = geo.index.find(up), b = geo.index.find(down);
      if (a == geo.index.end() || b == geo.index.end() || !(p.source.weight(a->second) > 0) ||
          !(p.source.weight(b->second) > 0)) {
        full = false;
        break;
      }
      e.finite_difference.push_back((s.pair.f[a->second] - s.pair.f[b->second]) / (2 * geo.spacing[k]));
    }
    if (!full) continue;
    e.partner_gradient.assign(d, 0.0);
    for (std::size_t j : partners[i]) {
      const auto gr = p.cost.grad_x(p.source.point(i), p.target.point(j));
      double dev = 0;
      for (std::size_t k = 0; k < d; ++k) {
        e.partner_gradient[k] += gr[k] / double(partners[i].size());
        dev += (gr[k] - e.finite_difference[k]) * (gr[k] - e.finite_difference[k]);
      }
      e.pair_deviation.push_back(std::sqrt(dev));
      r.max_pair_deviation = std::max(r.max_pair_deviation, std::sqrt(dev));
    }
    double dev = 0;
    for (std::size_t k = 0; k < d; ++k)
      dev += (e.partner_gradient[k] - e.finite_difference[k]) * (e.partner_gradient[k] - e.finite_difference[k]);
    e.deviation = std::sqrt(dev);
    r.max_deviation = std::max(r.max_deviation, e.deviation);
    r.entries.push_back(std::move(e));
  }
  if (!r.entries.empty()) {
    std::vector<double> devs;
    for (const auto& e : r.entries) devs.push_back(e.deviation);
    std::sort(devs.begin(), devs.end());
    const std::size_t h = devs.size() / 2;
    r.median_deviation = devs.size() % 2 ? devs[h] : 0.5 * (devs[h - 1] + devs[h]);
  }
  return r;
}

}  // namespace otuniq
