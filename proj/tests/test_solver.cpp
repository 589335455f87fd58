#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "otuniq/solver.hpp"
#include "otuniq/union_find.hpp"

using namespace otuniq;

namespace {

DiscreteMeasure line(std::vector<double> xs) {
  std::vector<Point> pts;
  for (double x : xs) pts.push_back({x});
  return DiscreteMeasure::uniform(std::move(pts));
}

DiscreteMeasure random_cloud(std::mt19937& rng, std::size_t n, std::size_t d) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point> pts(n, Point(d));
  std::vector<double> w(n);
  for (auto& p : pts)
    for (double& v : p) v = u(rng);
  for (double& v : w) v = 0.1 + u(rng);
  return DiscreteMeasure::normalized(std::move(pts), std::move(w));
}

// Minimum cost over all vertices of the transportation polytope. Every vertex
// is supported on a spanning tree of the bipartite graph; flows on a tree are
// determined by peeling leaves.
double brute_force_optimum(const TransportInstance<double>& inst) {
  const std::size_t n = inst.n, m = inst.m, cells = n * m, k = n + m - 1;
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << cells); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
    UnionFind uf(n + m);
    bool tree = true;
    for (std::size_t c = 0; c < cells && tree; ++c)
      if (mask >> c & 1u) tree = uf.unite(c / m, n + c % m);
    if (!tree) continue;

    std::vector<double> rest(n + m);
    for (std::size_t i = 0; i < n; ++i) rest[i] = inst.supply[i];
    for (std::size_t j = 0; j < m; ++j) rest[n + j] = inst.demand[j];
    std::vector<char> open(cells, 0);
    std::vector<std::size_t> degree(n + m, 0);
    for (std::size_t c = 0; c < cells; ++c)
      if (mask >> c & 1u) { open[c] = 1; ++degree[c / m]; ++degree[n + c % m]; }
    std::vector<double> flow(cells, 0.0);
    for (std::size_t step = 0; step < k; ++step) {
      std::size_t leaf = n + m;
      for (std::size_t v = 0; v < n + m && leaf == n + m; ++v)
        if (degree[v] == 1) leaf = v;
      std::size_t cell = cells;
      for (std::size_t c = 0; c < cells && cell == cells; ++c)
        if (open[c] && (c / m == leaf || n + c % m == leaf)) cell = c;
      const std::size_t other = leaf < n ? n + cell % m : cell / m;
      flow[cell] = rest[leaf];
      rest[other] -= rest[leaf];
      rest[leaf] = 0;
      open[cell] = 0;
      --degree[leaf];
      --degree[other];
    }
    bool feasible = true;
    double total = 0;
    for (std::size_t c = 0; c < cells; ++c) {
      if (flow[c] < -1e-12) feasible = false;
      total += flow[c] * inst.cost[c];
    }
    if (feasible) best = std::min(best, total);
  }
  return best;
}

}  // namespace

TEST(Solver, TwoByTwoExplicitMatrix) {
  Problem p{line({0.0, 1.0}), line({0.0, 1.0}), CostSpec::explicit_matrix({{0, 2}, {3, 1}})};
  const auto r = solve(p);
  ASSERT_EQ(r.plan.support_size(), 2u);
  EXPECT_EQ(r.plan.entries()[0].source, 0u);
  EXPECT_EQ(r.plan.entries()[0].target, 0u);
  EXPECT_EQ(r.plan.entries()[1].source, 1u);
  EXPECT_EQ(r.plan.entries()[1].target, 1u);
  EXPECT_NEAR(r.primal_cost, 0.5, 1e-12);
  EXPECT_NEAR(r.dual_value, 0.5, 1e-12);
  EXPECT_TRUE(verify_duality(p, r.plan, r.pair).optimal);
}

TEST(Solver, SinglePointTarget) {
  Problem p{line({0.0, 0.5, 1.0}), line({0.25}), CostSpec::squared_euclidean()};
  const auto r = solve(p);
  EXPECT_EQ(r.plan.support_size(), 3u);
  EXPECT_NEAR(r.primal_cost, (0.0625 + 0.0625 + 0.5625) / 3, 1e-12);
  EXPECT_TRUE(verify_duality(p, r.plan, r.pair).optimal);
}

TEST(Solver, IdentityOnTwoIntervals) {
  std::vector<double> xs;
  for (int k = 0; k < 20; ++k) xs.push_back(k / 19.0);
  for (int k = 0; k < 20; ++k) xs.push_back(2 + k / 19.0);
  const auto mu = line(xs);
  Problem p{mu, mu, CostSpec::squared_euclidean()};
  const auto r = solve(p);
  EXPECT_NEAR(r.primal_cost, 0.0, 1e-12);
  for (const auto& e : r.plan.entries()) EXPECT_EQ(e.source, e.target);
  EXPECT_TRUE(verify_duality(p, r.plan, r.pair).optimal);
}

TEST(Solver, RejectsUnbalancedMasses) {
  Problem p{DiscreteMeasure({{0.0}, {1.0}}, {0.5, 0.5}), DiscreteMeasure({{0.0}}, {0.7}),
            CostSpec::squared_euclidean()};
  try {
    solve(p);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Unbalanced);
  }
}

TEST(Solver, MatchesVertexEnumerationOnSmallInstances) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 4;
    const std::size_t m = 1 + rng() % (12 / n);
    std::vector<std::vector<double>> c(n, std::vector<double>(m));
    for (auto& row : c)
      for (double& v : row) v = trial % 3 == 0 ? std::floor(4 * u(rng)) : u(rng);
    auto mu = random_cloud(rng, n, 1);
    auto nu = random_cloud(rng, m, 1);
    if (trial % 5 == 0) {
      std::vector<double> xs(n);
      for (std::size_t i = 0; i < n; ++i) xs[i] = static_cast<double>(i);
      mu = line(xs);  // uniform masses invite degenerate pivots
    }
    Problem p{mu, nu, CostSpec::explicit_matrix(c)};
    const auto r = solve(p);
    const double oracle = brute_force_optimum(dense_instance(p));
    EXPECT_NEAR(r.primal_cost, oracle, 1e-10) << "trial " << trial;
    EXPECT_EQ(r.basis.size(), n + m - 1);
    const auto rep = verify_duality(p, r.plan, r.pair);
    EXPECT_TRUE(rep.optimal) << "trial " << trial;
  }
}

TEST(Solver, PotentialsAreCConcaveAndNormalized) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Problem p{random_cloud(rng, 12, 2), random_cloud(rng, 9, 2), CostSpec::lp_norm_power(2, 1 + trial % 3)};
    const auto r = solve(p);
    const auto cost = p.bound();
    const Tolerances tol;
    EXPECT_LE(double_transform_residual(r.pair.f, cost).max_residual, tol.tight(cost.max_abs()));
    EXPECT_EQ(r.anchor, p.source.anchor());
    EXPECT_DOUBLE_EQ(r.pair.f[r.anchor], 0.0);
    EXPECT_TRUE(verify_duality(p, r.plan, r.pair).optimal);
  }
}

TEST(Solver, DeterministicAcrossRuns) {
  std::mt19937 rng(3);
  Problem p{random_cloud(rng, 15, 2), random_cloud(rng, 15, 2), CostSpec::squared_euclidean()};
  const auto a = solve(p);
  const auto b = solve(p);
  EXPECT_EQ(a.plan.entries(), b.plan.entries());
  EXPECT_EQ(a.pair.f, b.pair.f);
  EXPECT_EQ(a.pair.g, b.pair.g);
}
