#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "scalar.hpp"
#include "union_find.hpp"

namespace otuniq {

inline constexpr std::size_t kNoBlock = static_cast<std::size_t>(-1);

/// Dense view of a solved finite problem over scalar S: costs, an optimal
/// pair and the flows of an optimal plan. Points with zero mass take no part
/// in the structure.
template <typename S>
struct FlowNetwork {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<char> source_positive;
  std::vector<char> target_positive;
  std::vector<S> cost;  // n * m
  std::vector<S> f;
  std::vector<S> g;
  std::vector<S> flow;  // n * m
  S tight_tol{};        // zero in exact arithmetic

  const S& c(std::size_t i, std::size_t j) const { return cost[i * m + j]; }
  S slack(std::size_t i, std::size_t j) const { return cost[i * m + j] - f[i] - g[j]; }
  bool tight(std::size_t i, std::size_t j) const {
    return source_positive[i] && target_positive[j] && !ScalarTraits<S>::positive(slack(i, j), tight_tol);
  }
  bool carries(std::size_t i, std::size_t j) const { return flow[i * m + j] > S(0); }
};

/// Spreads mass onto every tight edge that lies on an alternating cycle:
/// forward along tight edges, backward along edges with flow. Each push moves
/// half the smallest backward flow, so existing support is kept. The result
/// is an optimal plan whose support is maximal among optimal plans.
/// Returns the number of edges added to the support.
template <typename S>
std::size_t connect_plan(FlowNetwork<S>& net) {
  const std::size_t n = net.n, m = net.m;
  std::size_t added = 0;
  std::vector<std::size_t> from(n + m);
  std::vector<std::size_t> queue;
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        if (!net.tight(i, j) || net.carries(i, j)) continue;
        // Search from target j back to source i.
        std::fill(from.begin(), from.end(), kNoBlock);
        queue.assign(1, n + j);
        from[n + j] = n + j;
        for (std::size_t h = 0; h < queue.size() && from[i] == kNoBlock; ++h) {
          const std::size_t v = queue[h];
          if (v >= n) {
            for (std::size_t a = 0; a < n; ++a)
              if (from[a] == kNoBlock && net.carries(a, v - n)) { from[a] = v; queue.push_back(a); }
          } else {
            for (std::size_t b = 0; b < m; ++b)
              if (from[n + b] == kNoBlock && net.tight(v, b)) { from[n + b] = v; queue.push_back(n + b); }
          }
        }
        if (from[i] == kNoBlock) continue;
        std::vector<std::pair<std::size_t, std::size_t>> down, up;  // (source, target)
        for (std::size_t v = i; v != n + j; v = from[v]) {
          const std::size_t u = from[v];
          if (u >= n) down.emplace_back(v, u - n);  // target u -> source v: flow decreases
          else up.emplace_back(u, v - n);           // source u -> target v: flow increases
        }
        S eps = net.flow[down.front().first * m + down.front().second];
        for (const auto& [a, b] : down) eps = std::min<S>(eps, net.flow[a * m + b]);
        eps /= S(2);
        for (const auto& [a, b] : down) net.flow[a * m + b] -= eps;
        for (const auto& [a, b] : up) net.flow[a * m + b] += eps;
        net.flow[i * m + j] += eps;
        ++added;
        changed = true;
      }
  }
  return added;
}

struct BlockAssignment {
  std::vector<std::size_t> source;  // block per source, kNoBlock for zero mass
  std::vector<std::size_t> target;
  std::size_t count = 0;
};

/// Connected components of the plan support over positive-mass points,
/// numbered by smallest member (sources first, then targets).
template <typename S>
BlockAssignment point_blocks(const FlowNetwork<S>& net) {
  UnionFind uf(net.n + net.m);
  for (std::size_t i = 0; i < net.n; ++i)
    for (std::size_t j = 0; j < net.m; ++j)
      if (net.carries(i, j)) uf.unite(i, net.n + j);
  BlockAssignment b;
  b.source.assign(net.n, kNoBlock);
  b.target.assign(net.m, kNoBlock);
  std::vector<std::size_t> id(net.n + net.m, kNoBlock);
  auto assign = [&](std::size_t v) {
    const std::size_t r = uf.find(v);
    if (id[r] == kNoBlock) id[r] = b.count++;
    return id[r];
  };
  for (std::size_t i = 0; i < net.n; ++i)
    if (net.source_positive[i]) b.source[i] = assign(i);
  for (std::size_t j = 0; j < net.m; ++j)
    if (net.target_positive[j]) b.target[j] = assign(net.n + j);
  return b;
}

template <typename S>
struct BlockShift {
  std::vector<S> f;
  std::vector<S> g;
  std::size_t block = 0;
  S shift{};
};

/// Second optimal pair obtained by moving f and g in opposite directions on
/// one block.
///
/// Tight edges between blocks are ordered from the block of the source to the
/// block of the target. A block with no outgoing tight edge can be raised by
/// half its smallest outgoing slack, one with no incoming tight edge lowered
/// by half its smallest incoming slack; both stay feasible and balanced blocks
/// keep the dual value. The largest such move is taken, other blocks being
/// preferred to `avoid_block` on ties. Zero-mass entries are then refreshed by
/// c-transforms. Returns nothing when no block can move.
template <typename S>
std::optional<BlockShift<S>> block_shift_witness(const FlowNetwork<S>& net, const BlockAssignment& blocks,
                                                 std::size_t avoid_block) {
  const std::size_t n = net.n, m = net.m;
  if (blocks.count < 2) return std::nullopt;
  std::vector<char> has_out(blocks.count, 0), has_in(blocks.count, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (net.tight(i, j) && blocks.source[i] != blocks.target[j]) {
        has_out[blocks.source[i]] = 1;
        if (blocks.target[j] != kNoBlock) has_in[blocks.target[j]] = 1;
      }

  S max_c = S(0);
  for (const S& v : net.cost) max_c = std::max<S>(max_c, v);
  std::optional<std::pair<std::size_t, S>> best;
  auto consider = [&](std::size_t b, S shift) {
    const S size = shift < S(0) ? S(-shift) : shift;
    if (!best) { best.emplace(b, shift); return; }
    const S cur = best->second < S(0) ? S(-best->second) : best->second;
    if (size > cur || (size == cur && best->first == avoid_block && b != avoid_block)) best.emplace(b, shift);
  };
  for (std::size_t b = 0; b < blocks.count; ++b) {
    if (!has_out[b]) {
      std::optional<S> least;
      for (std::size_t i = 0; i < n; ++i) {
        if (blocks.source[i] != b) continue;
        for (std::size_t j = 0; j < m; ++j) {
          if (!net.target_positive[j] || blocks.target[j] == b) continue;
          const S s = net.slack(i, j);
          if (!least || s < *least) least = s;
        }
      }
      consider(b, least ? *least / S(2) : S(1) + max_c);
    }
    if (!has_in[b]) {
      std::optional<S> least;
      for (std::size_t j = 0; j < m; ++j) {
        if (blocks.target[j] != b) continue;
        for (std::size_t i = 0; i < n; ++i) {
          if (!net.source_positive[i] || blocks.source[i] == b) continue;
          const S s = net.slack(i, j);
          if (!least || s < *least) least = s;
        }
      }
      consider(b, least ? S(-*least / S(2)) : S(-(S(1) + max_c)));
    }
  }
  if (!best) return std::nullopt;
  const std::size_t sink = best->first;

  BlockShift<S> w;
  w.block = sink;
  w.shift = best->second;
  w.f = net.f;
  w.g = net.g;
  for (std::size_t i = 0; i < n; ++i)
    if (blocks.source[i] == sink) w.f[i] += w.shift;
  for (std::size_t j = 0; j < m; ++j)
    if (blocks.target[j] == sink) w.g[j] -= w.shift;
  for (std::size_t j = 0; j < m; ++j) {
    if (net.target_positive[j]) continue;
    std::optional<S> v;
    for (std::size_t i = 0; i < n; ++i)
      if (net.source_positive[i] && (!v || net.c(i, j) - w.f[i] < *v)) v = net.c(i, j) - w.f[i];
    w.g[j] = *v;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (net.source_positive[i]) continue;
    std::optional<S> v;
    for (std::size_t j = 0; j < m; ++j)
      if (!v || net.c(i, j) - w.g[j] < *v) v = net.c(i, j) - w.g[j];
    w.f[i] = *v;
  }
  return w;
}

}  // namespace otuniq
