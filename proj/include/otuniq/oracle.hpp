#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "dense_lp.hpp"
#include "solver.hpp"
#include "union_find.hpp"

namespace otuniq {

/// Range of each normalised source potential over the optimal dual face.
/// Only positive-mass points are constrained; zero-mass entries are NaN.
struct DualFaceReport {
  std::vector<double> f_min;
  std::vector<double> f_max;
  double max_spread = 0;
  std::size_t argmax = 0;
  double face_tolerance = 0;
  double lp_value = 0;
  std::size_t pivots = 0;
  bool unique = false;

  double spread(std::size_t i) const { return f_max[i] - f_min[i]; }
};

inline constexpr std::size_t kDualFaceLimit = 400;

/// Solves the Kantorovich dual as an LP over the positive-mass points with
/// f(anchor) = 0, fixes the objective at its optimum and maximises and
/// minimises every f(x) in turn. Independent of the structural certifier.
inline DualFaceReport dual_face_oracle(const Problem& problem, const SolveResult& solved,
                                       const Tolerances& tol = {}) {
  const auto cost = problem.bound();
  const auto& mu = problem.source;
  const auto& nu = problem.target;
  std::vector<std::size_t> xs, ys;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu.weight(i) > 0) xs.push_back(i);
  for (std::size_t j = 0; j < nu.size(); ++j)
    if (nu.weight(j) > 0) ys.push_back(j);
  const std::size_t n = xs.size(), m = ys.size(), dim = n + m;
  if (dim > kDualFaceLimit)
    fail(ErrorCode::OracleLimit, "dual face oracle supports at most " + std::to_string(kDualFaceLimit) +
                                     " positive-mass points, got " + std::to_string(dim));

  const std::size_t anchor = static_cast<std::size_t>(
      std::find(xs.begin(), xs.end(), solved.anchor) - xs.begin());
  if (anchor == n) fail(ErrorCode::Internal, "anchor has zero mass");

  double max_c = 0, min_w = 1;
  for (std::size_t a = 0; a < n; ++a) {
    min_w = std::min(min_w, mu.weight(xs[a]));
    for (std::size_t b = 0; b < m; ++b) max_c = std::max(max_c, std::abs(cost(xs[a], ys[b])));
  }
  for (std::size_t b = 0; b < m; ++b) min_w = std::min(min_w, nu.weight(ys[b]));
  // Every point of the normalised optimal face lies well inside this box.
  const double box = 4 * (1 + max_c) * (1 + 1 / min_w);

  ActiveSetLp lp(dim);
  const std::size_t eq = lp.add_row({{{anchor, 1.0}}, 0.0});
  lp.fix(eq);
  std::vector<std::size_t> start{eq};
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < m; ++b) {
      const std::size_t row = lp.add_row({{{a, 1.0}, {n + b, 1.0}}, cost(xs[a], ys[b])});
      if (a == anchor) start.push_back(row);
    }
  for (std::size_t k = 0; k < dim; ++k) {
    lp.add_row({{{k, 1.0}}, box});
    const std::size_t lower = lp.add_row({{{k, -1.0}}, box});
    if (k < n && k != anchor) start.push_back(lower);
  }
  lp.start(start);

  std::vector<double> w(dim);
  for (std::size_t a = 0; a < n; ++a) w[a] = mu.weight(xs[a]);
  for (std::size_t b = 0; b < m; ++b) w[n + b] = nu.weight(ys[b]);
  if (lp.maximize(w) != ActiveSetLp::Status::Optimal)
    fail(ErrorCode::Internal, "dual lp is unbounded");

  DualFaceReport rep;
  rep.lp_value = lp.value(w);
  const double target = solved.dual_value;
  if (std::abs(rep.lp_value - target) > tol.gap_bound(target))
    fail(ErrorCode::InfeasibleOptimum, "dual optimum " + std::to_string(rep.lp_value) +
                                           " differs from the solver value " + std::to_string(target));
  std::vector<std::pair<std::size_t, double>> value_row;
  for (std::size_t k = 0; k < dim; ++k) value_row.emplace_back(k, -w[k]);
  lp.add_row({std::move(value_row), -rep.lp_value});

  const double nan = std::numeric_limits<double>::quiet_NaN();
  rep.f_min.assign(mu.size(), nan);
  rep.f_max.assign(mu.size(), nan);
  rep.face_tolerance = tol.face(max_c);
  std::vector<double> c(dim, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    c[a] = 1;
    lp.maximize(c);
    rep.f_max[xs[a]] = lp.point()[a];
    c[a] = -1;
    lp.maximize(c);
    rep.f_min[xs[a]] = lp.point()[a];
    c[a] = 0;
    const double s = rep.f_max[xs[a]] - rep.f_min[xs[a]];
    if (s > rep.max_spread) {
      rep.max_spread = s;
      rep.argmax = xs[a];
    }
  }
  rep.pivots = lp.pivots();
  rep.unique = rep.max_spread <= rep.face_tolerance;
  return rep;
}

struct ConnectivityReport {
  std::vector<std::pair<std::size_t, std::size_t>> tight_edges;   // positive-mass endpoints
  std::vector<std::pair<std::size_t, std::size_t>> usable_edges;  // carry mass in some optimal plan
  std::size_t components = 0;
  bool unique = false;
};

/// Uniqueness via the graph of edges that carry mass in some optimal plan.
/// Such an edge either has flow in the given plan or closes a cycle in the
/// residual graph of tight edges (forward on any tight edge, backward on
/// edges with flow). The normalised potential is unique iff this graph
/// connects every positive-mass point.
inline ConnectivityReport tight_graph_connectivity_oracle(const Problem& problem,
                                                          const SolveResult& solved,
                                                          const Tolerances& tol = {}) {
  const auto cost = problem.bound();
  const auto& mu = problem.source;
  const auto& nu = problem.target;
  const std::size_t n = mu.size(), m = nu.size();
  const double tight = tol.tight(cost.max_abs());
  const double massless = prune_threshold(tol);

  std::vector<char> flow(n * m, 0);
  for (const auto& e : solved.plan.entries())
    if (e.mass > massless) flow[e.source * m + e.target] = 1;

  ConnectivityReport rep;
  // Residual graph on nodes 0..n-1 (sources) and n..n+m-1 (targets).
  std::vector<std::vector<std::size_t>> out(n + m);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(mu.weight(i) > 0)) continue;
    for (std::size_t j = 0; j < m; ++j) {
      if (!(nu.weight(j) > 0)) continue;
      if (std::abs(solved.pair.f[i] + solved.pair.g[j] - cost(i, j)) > tight) continue;
      rep.tight_edges.emplace_back(i, j);
      out[i].push_back(n + j);
      if (flow[i * m + j]) out[n + j].push_back(i);
    }
  }

  std::vector<std::vector<char>> reach_from_target(m);
  auto reach = [&](std::size_t j) -> const std::vector<char>& {
    auto& seen = reach_from_target[j];
    if (!seen.empty()) return seen;
    seen.assign(n + m, 0);
    std::vector<std::size_t> queue{n + j};
    seen[n + j] = 1;
    for (std::size_t h = 0; h < queue.size(); ++h)
      for (std::size_t v : out[queue[h]])
        if (!seen[v]) {
          seen[v] = 1;
          queue.push_back(v);
        }
    return seen;
  };

  UnionFind uf(n + m);
  for (const auto& [i, j] : rep.tight_edges) {
    if (flow[i * m + j] || reach(j)[i]) {
      rep.usable_edges.emplace_back(i, j);
      uf.unite(i, n + j);
    }
  }
  std::vector<char> root_seen(n + m, 0);
  for (std::size_t v = 0; v < n + m; ++v) {
    const bool positive = v < n ? mu.weight(v) > 0 : nu.weight(v - n) > 0;
    if (!positive) continue;
    const std::size_t r = uf.find(v);
    if (!root_seen[r]) {
      root_seen[r] = 1;
      ++rep.components;
    }
  }
  rep.unique = rep.components == 1;
  return rep;
}

}  // namespace otuniq
