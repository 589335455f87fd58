#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "scalar.hpp"

namespace otuniq {

/// Dense balanced transportation instance over scalar type S.
template <typename S>
struct TransportInstance {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<S> supply;  // n
  std::vector<S> demand;  // m
  std::vector<S> cost;    // n * m, row-major

  const S& c(std::size_t i, std::size_t j) const { return cost[i * m + j]; }
};

template <typename S>
struct BasisEdge {
  std::size_t source = 0;
  std::size_t target = 0;
  S flow{};
};

template <typename S>
struct SimplexResult {
  std::vector<BasisEdge<S>> basis;  // spanning tree, n + m - 1 edges (zero flows allowed)
  std::vector<S> u;                 // source potentials, u[0] = 0
  std::vector<S> v;                 // target potentials
  std::size_t iterations = 0;
};

namespace detail {

/// Spanning tree over n sources (nodes 0..n-1) and m targets (nodes n..n+m-1),
/// rooted at source 0. Rebuilt from the edge list after every pivot.
template <typename S>
struct BasisTree {
  std::vector<std::vector<std::size_t>> adjacent;  // node -> basis edge indices
  std::vector<std::size_t> parent_edge;
  std::vector<std::size_t> parent;
  std::vector<std::size_t> depth;

  void build(const std::vector<BasisEdge<S>>& basis, std::size_t n, std::size_t m,
             const TransportInstance<S>& inst, std::vector<S>& u, std::vector<S>& v) {
    const std::size_t nodes = n + m;
    adjacent.assign(nodes, {});
    for (std::size_t e = 0; e < basis.size(); ++e) {
      adjacent[basis[e].source].push_back(e);
      adjacent[n + basis[e].target].push_back(e);
    }
    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    parent_edge.assign(nodes, kNone);
    parent.assign(nodes, kNone);
    depth.assign(nodes, 0);
    std::vector<char> seen(nodes, 0);
    std::vector<std::size_t> queue{0};
    seen[0] = 1;
    u[0] = S(0);
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::size_t node = queue[head];
      for (std::size_t e : adjacent[node]) {
        const auto& edge = basis[e];
        const std::size_t other = node < n ? n + edge.target : edge.source;
        if (seen[other]) continue;
        seen[other] = 1;
        parent[other] = node;
        parent_edge[other] = e;
        depth[other] = depth[node] + 1;
        if (node < n)
          v[edge.target] = inst.c(edge.source, edge.target) - u[edge.source];
        else
          u[edge.source] = inst.c(edge.source, edge.target) - v[edge.target];
        queue.push_back(other);
      }
    }
    if (queue.size() != nodes) fail(ErrorCode::Internal, "simplex basis is not a spanning tree");
  }
};

}  // namespace detail

/// Primal network simplex for the transportation problem.
///
/// Starts from the northwest-corner basis and pivots with Bland's rule: the
/// entering edge is the lowest-index (i * m + j) edge with negative reduced
/// cost, and the leaving edge is the lowest-index blocking edge. Zero-flow
/// edges stay in the basis so the tree always spans all n + m nodes.
template <typename S>
SimplexResult<S> network_simplex(const TransportInstance<S>& inst, const S& pricing_tol,
                                 std::size_t max_iterations = 10'000'000) {
  using T = ScalarTraits<S>;
  const std::size_t n = inst.n, m = inst.m;
  if (n == 0 || m == 0) fail(ErrorCode::InvalidMeasure, "empty transport instance");

  SimplexResult<S> res;
  {
    std::vector<S> s = inst.supply, d = inst.demand;
    std::size_t i = 0, j = 0;
    while (true) {
      S amount = s[i] < d[j] ? s[i] : d[j];
      s[i] -= amount;
      d[j] -= amount;
      res.basis.push_back({i, j, amount});
      if (i + 1 == n && j + 1 == m) break;
      if (j + 1 == m || (i + 1 < n && s[i] == S(0)))
        ++i;
      else
        ++j;
    }
    // Floating-point residue from the balance check lands on the last cell.
    if constexpr (!T::exact) {
      if (res.basis.back().flow < S(0)) res.basis.back().flow = S(0);
    }
  }

  res.u.assign(n, S(0));
  res.v.assign(m, S(0));
  detail::BasisTree<S> tree;
  std::vector<std::size_t> path_a, path_b, cycle;
  while (true) {
    tree.build(res.basis, n, m, inst, res.u, res.v);

    std::size_t enter_i = n, enter_j = m;
    for (std::size_t i = 0; i < n && enter_i == n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        const S rc = inst.c(i, j) - res.u[i] - res.v[j];
        if (T::negative(rc, pricing_tol)) {
          enter_i = i;
          enter_j = j;
          break;
        }
      }
    }
    if (enter_i == n) break;
    if (++res.iterations > max_iterations)
      fail(ErrorCode::Internal, "network simplex exceeded " + std::to_string(max_iterations) + " pivots");

    // Tree path between target node n + enter_j and source node enter_i.
    path_a.clear();
    path_b.clear();
    std::size_t a = n + enter_j, b = enter_i;
    while (tree.depth[a] > tree.depth[b]) { path_a.push_back(tree.parent_edge[a]); a = tree.parent[a]; }
    while (tree.depth[b] > tree.depth[a]) { path_b.push_back(tree.parent_edge[b]); b = tree.parent[b]; }
    while (a != b) {
      path_a.push_back(tree.parent_edge[a]); a = tree.parent[a];
      path_b.push_back(tree.parent_edge[b]); b = tree.parent[b];
    }
    // Cycle order: entering (+), then j -> lca, then lca -> i; signs alternate
    // starting with '-' right after the entering edge.
    cycle.assign(path_a.begin(), path_a.end());
    cycle.insert(cycle.end(), path_b.rbegin(), path_b.rend());

    std::size_t leave = cycle.size();
    for (std::size_t k = 0; k < cycle.size(); k += 2) {
      const auto& e = res.basis[cycle[k]];
      if (leave == cycle.size()) { leave = k; continue; }
      const auto& best = res.basis[cycle[leave]];
      if (e.flow < best.flow ||
          (e.flow == best.flow && e.source * m + e.target < best.source * m + best.target))
        leave = k;
    }
    const S theta = res.basis[cycle[leave]].flow;
    for (std::size_t k = 0; k < cycle.size(); ++k) {
      auto& e = res.basis[cycle[k]];
      if (k % 2 == 0) e.flow -= theta; else e.flow += theta;
    }
    res.basis[cycle[leave]] = {enter_i, enter_j, theta};
  }
  return res;
}

}  // namespace otuniq
