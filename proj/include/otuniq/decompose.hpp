#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "measure.hpp"
#include "solver.hpp"
#include "transport.hpp"
#include "union_find.hpp"

namespace otuniq {

using Partition = std::vector<std::vector<std::size_t>>;

struct ExplicitLabels {};
struct EpsilonGraph {
  double epsilon = 0;
};
using DecompositionMethod = std::variant<ExplicitLabels, EpsilonGraph>;

inline std::string describe(const DecompositionMethod& m) {
  if (const auto* e = std::get_if<EpsilonGraph>(&m)) return "epsilon_graph(" + std::to_string(e->epsilon) + ")";
  return "explicit_labels";
}

struct ComponentDecomposition {
  Partition source_components;
  Partition target_components;
  DecompositionMethod method;

  /// component index of each point
  static std::vector<std::size_t> owner(const Partition& p, std::size_t n) {
    std::vector<std::size_t> out(n, 0);
    for (std::size_t c = 0; c < p.size(); ++c)
      for (std::size_t i : p[c]) out[i] = c;
    return out;
  }
};

/// Splits a support into components. With labels, each label is one
/// component; with an epsilon graph, points joined by chains of Euclidean
/// hops of length <= epsilon share a component. Components are ordered by
/// their smallest member.
inline Partition decompose(const DiscreteMeasure& mu, const DecompositionMethod& method) {
  if (const auto* eps = std::get_if<EpsilonGraph>(&method)) {
    if (!(eps->epsilon > 0) || !std::isfinite(eps->epsilon))
      fail(ErrorCode::BadEpsilon, "epsilon must be positive, got " + std::to_string(eps->epsilon));
    UnionFind uf(mu.size());
    for (std::size_t a = 0; a < mu.size(); ++a)
      for (std::size_t b = a + 1; b < mu.size(); ++b)
        if (CostSpec::euclidean(mu.point(a), mu.point(b)) <= eps->epsilon) uf.unite(a, b);
    return uf.groups();
  }
  if (!mu.labels()) fail(ErrorCode::MissingEpsilon, "measure has no component labels and no epsilon was given");
  const auto& labels = *mu.labels();
  std::map<int, std::size_t> slot;
  Partition out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, fresh] = slot.try_emplace(labels[i], out.size());
    if (fresh) out.emplace_back();
    out[it->second].push_back(i);
  }
  return out;
}

inline ComponentDecomposition decompose(const Problem& p, const DecompositionMethod& method) {
  return {decompose(p.source, method), decompose(p.target, method), method};
}

/// Measure on a subset of points with the given raw weights, rescaled to unit
/// mass. Labels are renumbered densely in order of first appearance.
inline DiscreteMeasure sub_measure(const DiscreteMeasure& mu, const std::vector<std::size_t>& idx,
                                   std::vector<double> raw) {
  std::vector<Point> pts;
  for (std::size_t i : idx) pts.push_back(mu.point(i));
  std::optional<std::vector<int>> labels;
  if (mu.labels()) {
    std::map<int, int> renumber;
    labels.emplace();
    for (std::size_t i : idx) {
      auto [it, fresh] = renumber.try_emplace((*mu.labels())[i], static_cast<int>(renumber.size()));
      labels->push_back(it->second);
    }
  }
  return DiscreteMeasure::normalized(std::move(pts), std::move(raw), std::move(labels));
}

struct RestrictedProblem {
  Problem problem;
  std::vector<std::size_t> source_index;  // restricted -> original
  std::vector<std::size_t> target_index;
  double mass = 0;                         // mu(component) before renormalisation
  TransportPlan plan;                      // the original plan's rows, renormalised
};

/// The problem seen by a source component under a fixed plan: the component's
/// share of mu and the part of nu it is transported to, both renormalised.
/// Only targets that receive mass from the component are kept.
inline RestrictedProblem restrict_partial(const Problem& p, const TransportPlan& plan,
                                          const std::vector<std::size_t>& component) {
  std::vector<char> in(p.source.size(), 0);
  for (std::size_t i : component) in.at(i) = 1;
  double mass = 0;
  for (std::size_t i : component) mass += p.source.weight(i);
  if (!(mass > 0)) fail(ErrorCode::ZeroMassComponent, "component carries no source mass");

  std::vector<double> received(p.target.size(), 0.0);
  for (const auto& e : plan.entries())
    if (in[e.source]) received[e.target] += e.mass;
  std::vector<std::size_t> tpos(p.target.size(), static_cast<std::size_t>(-1));
  std::vector<std::size_t> tidx, sidx;
  std::vector<double> tw;
  for (std::size_t j = 0; j < p.target.size(); ++j)
    if (received[j] > 0) {
      tpos[j] = tidx.size();
      tidx.push_back(j);
      tw.push_back(received[j]);
    }
  std::vector<std::size_t> spos(p.source.size(), static_cast<std::size_t>(-1));
  std::vector<double> sw;
  for (std::size_t i : component) {
    spos[i] = sidx.size();
    sidx.push_back(i);
    sw.push_back(p.source.weight(i));
  }
  std::vector<PlanEntry> entries;
  for (const auto& e : plan.entries())
    if (in[e.source]) entries.push_back({spos[e.source], tpos[e.target], e.mass / mass});
  TransportPlan sub_plan(sidx.size(), tidx.size(), std::move(entries));
  Problem sub{sub_measure(p.source, sidx, sw), sub_measure(p.target, tidx, tw), p.cost.restricted(sidx, tidx)};
  return RestrictedProblem{std::move(sub), std::move(sidx), std::move(tidx), mass, std::move(sub_plan)};
}

/// Pair restricted to the indices of a sub-problem.
inline PotentialPair restrict_pair(const PotentialPair& pair, const std::vector<std::size_t>& source_index,
                                   const std::vector<std::size_t>& target_index) {
  PotentialPair out;
  for (std::size_t i : source_index) out.f.push_back(pair.f[i]);
  for (std::size_t j : target_index) out.g.push_back(pair.g[j]);
  return out;
}

/// Drops the points outside the kept index sets; they must carry no mass.
inline RestrictedProblem restrict_full_mass(const Problem& p, std::vector<std::size_t> keep_source,
                                            std::vector<std::size_t> keep_target, const Tolerances& tol = {}) {
  std::sort(keep_source.begin(), keep_source.end());
  std::sort(keep_target.begin(), keep_target.end());
  auto lost = [&](const DiscreteMeasure& mu, const std::vector<std::size_t>& keep) {
    double kept = 0;
    for (std::size_t i : keep) kept += mu.weight(i);
    return mu.total_mass() - kept;
  };
  const double ls = lost(p.source, keep_source), lt = lost(p.target, keep_target);
  if (ls > tol.mass || lt > tol.mass)
    fail(ErrorCode::MassLoss, "discarded points carry mass " + std::to_string(std::max(ls, lt)));
  auto weights = [](const DiscreteMeasure& mu, const std::vector<std::size_t>& keep) {
    std::vector<double> w;
    for (std::size_t i : keep) w.push_back(mu.weight(i));
    return w;
  };
  Problem sub{sub_measure(p.source, keep_source, weights(p.source, keep_source)),
              sub_measure(p.target, keep_target, weights(p.target, keep_target)),
              p.cost.restricted(keep_source, keep_target)};
  return RestrictedProblem{std::move(sub), std::move(keep_source), std::move(keep_target), 1.0, {}};
}

/// Extends a pair of a full-mass restriction to the original problem: f is
/// -inf off the kept sources, g = f^c everywhere, then f = g^c everywhere.
/// On kept points the result agrees with a c-concave input.
inline PotentialPair extend_pair(const Problem& original, const RestrictedProblem& r,
                                 const PotentialPair& restricted) {
  const auto cost = original.bound();
  std::vector<double> f(original.source.size(), kNegInf);
  for (std::size_t k = 0; k < r.source_index.size(); ++k) f[r.source_index[k]] = restricted.f[k];
  PotentialPair out;
  out.g = c_transform(f, cost, Direction::ToTarget);
  out.f = c_transform(out.g, cost, Direction::ToSource);
  return out;
}

struct ComponentPotential {
  std::size_t component = 0;
  bool skipped = false;  // zero-mass component; kept in reports only
  std::string note;
  std::optional<RestrictedProblem> restricted;
  PotentialPair pair;
};

/// Splits an optimal pair into per-component pieces, each paired with the
/// restricted problem of its component.
inline std::vector<ComponentPotential> decompose_potential(const Problem& p, const PotentialPair& pair,
                                                           const Partition& source_components,
                                                           const TransportPlan& plan) {
  std::vector<ComponentPotential> out;
  for (std::size_t c = 0; c < source_components.size(); ++c) {
    ComponentPotential cp;
    cp.component = c;
    try {
      cp.restricted = restrict_partial(p, plan, source_components[c]);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ZeroMassComponent) throw;
      cp.skipped = true;
      cp.note = "zero-mass component excluded from restriction";
      out.push_back(std::move(cp));
      continue;
    }
    cp.pair = restrict_pair(pair, cp.restricted->source_index, cp.restricted->target_index);
    out.push_back(std::move(cp));
  }
  return out;
}

}  // namespace otuniq
