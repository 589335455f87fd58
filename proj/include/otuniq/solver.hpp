#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "cost.hpp"
#include "network_simplex.hpp"
#include "tolerances.hpp"
#include "transport.hpp"

namespace otuniq {

struct SolveResult {
  TransportPlan plan;
  PotentialPair pair;
  std::vector<BasisEdge<double>> basis;
  std::size_t iterations = 0;
  double primal_cost = 0;
  double dual_value = 0;
  std::size_t anchor = 0;  // source index with f(anchor) = 0
};

/// Masses at or below this are treated as rounding residue when building the
/// plan support from simplex flows.
inline double prune_threshold(const Tolerances& tol) { return tol.mass * 1e-3; }

/// Replaces (f, g) by (g'^c, g') with g' = f^c and shifts so that f(anchor) = 0.
/// For a dual-optimal pair this keeps optimality and tightness on the support
/// and makes f c-concave on the finite support.
inline PotentialPair c_concave_normalized(const PotentialPair& pair, const BoundCost& cost,
                                          std::size_t anchor) {
  PotentialPair out;
  out.g = c_transform(pair.f, cost, Direction::ToTarget);
  out.f = c_transform(out.g, cost, Direction::ToSource);
  return out.shifted(-out.f[anchor]);
}

inline void require_balanced(const Problem& problem, const Tolerances& tol) {
  const double a = problem.source.total_mass();
  const double b = problem.target.total_mass();
  if (std::abs(a - b) > tol.mass * std::max(1.0, std::max(a, b)))
    fail(ErrorCode::Unbalanced,
         "source mass " + std::to_string(a) + " differs from target mass " + std::to_string(b));
  problem.source.require_normalized(tol.mass);
  problem.target.require_normalized(tol.mass);
}

inline TransportInstance<double> dense_instance(const Problem& problem) {
  const auto cost = problem.bound();
  TransportInstance<double> inst;
  inst.n = problem.source.size();
  inst.m = problem.target.size();
  inst.supply = problem.source.weights();
  inst.demand = problem.target.weights();
  inst.cost = cost.dense();
  return inst;
}

/// Exact optimal plan and c-concave dual pair for a finite problem.
/// Deterministic for a fixed input ordering.
inline SolveResult solve(const Problem& problem, const Tolerances& tol = {}) {
  require_balanced(problem, tol);
  const auto cost = problem.bound();
  const auto inst = dense_instance(problem);
  double max_c = 0;
  for (double c : inst.cost) max_c = std::max(max_c, std::abs(c));
  const double pricing_tol = tol.tight(max_c) * 1e-4;

  auto simplex = network_simplex(inst, pricing_tol);

  SolveResult res;
  res.iterations = simplex.iterations;
  res.basis = simplex.basis;
  std::vector<PlanEntry> entries;
  const double prune = prune_threshold(tol);
  for (const auto& e : simplex.basis)
    if (e.flow > prune) entries.push_back({e.source, e.target, e.flow});
  res.plan = TransportPlan(inst.n, inst.m, std::move(entries));
  res.anchor = problem.source.anchor();
  res.pair = c_concave_normalized(PotentialPair{simplex.u, simplex.v}, cost, res.anchor);
  res.primal_cost = res.plan.cost(cost);
  res.dual_value = res.pair.dual_value(problem.source, problem.target);
  return res;
}

}  // namespace otuniq
