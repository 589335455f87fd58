#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "otuniq/decompose.hpp"

using namespace otuniq;

namespace {

DiscreteMeasure line(std::vector<double> xs) {
  std::vector<Point> pts;
  for (double x : xs) pts.push_back({x});
  return DiscreteMeasure::uniform(std::move(pts));
}

std::vector<double> two_intervals(int per_side) {
  std::vector<double> xs;
  for (int k = 0; k < per_side; ++k) xs.push_back(double(k) / (per_side - 1));
  for (int k = 0; k < per_side; ++k) xs.push_back(2 + double(k) / (per_side - 1));
  return xs;
}

// Three well separated clusters per side with random weights.
Problem clustered(std::mt19937& rng, std::size_t per_cluster) {
  std::uniform_real_distribution<double> u(0, 1);
  auto cloud = [&] {
    std::vector<Point> pts;
    std::vector<double> w;
    for (int c = 0; c < 3; ++c)
      for (std::size_t k = 0; k < per_cluster; ++k) {
        pts.push_back({5.0 * c + u(rng), u(rng)});
        w.push_back(0.2 + u(rng));
      }
    return DiscreteMeasure::normalized(std::move(pts), std::move(w));
  };
  return Problem{cloud(), cloud(), CostSpec::squared_euclidean()};
}

}  // namespace

TEST(Decompose, EpsilonChains) {
  const auto parts = decompose(line({0.1, 0.5, 2.2, 2.9}), EpsilonGraph{0.8});
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(parts[0], (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(parts[1], (std::vector<std::size_t>{2, 3}));
}

TEST(Decompose, LabelsPassThrough) {
  DiscreteMeasure mu({{0.0}, {5.0}, {9.0}}, {0.2, 0.3, 0.5}, std::vector<int>{0, 0, 0});
  EXPECT_EQ(decompose(mu, ExplicitLabels{}).size(), 1u);
  DiscreteMeasure nu({{0.0}, {5.0}, {9.0}}, {0.2, 0.3, 0.5}, std::vector<int>{1, 0, 1});
  const auto parts = decompose(nu, ExplicitLabels{});
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(parts[0], (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(parts[1], (std::vector<std::size_t>{1}));
}

TEST(Decompose, TwoIntervalDiscretization) {
  EXPECT_EQ(decompose(line(two_intervals(20)), EpsilonGraph{0.2}).size(), 2u);
}

TEST(Decompose, Errors) {
  const auto mu = line({0.0, 1.0});
  for (double eps : {0.0, -1.0}) {
    try {
      decompose(mu, EpsilonGraph{eps});
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::BadEpsilon);
    }
  }
  try {
    decompose(mu, ExplicitLabels{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingEpsilon);
  }
}

TEST(Decompose, MonotoneInEpsilon) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0, 3);
  std::vector<Point> pts;
  for (int k = 0; k < 40; ++k) pts.push_back({u(rng), u(rng)});
  const auto mu = DiscreteMeasure::uniform(pts);
  Partition prev = decompose(mu, EpsilonGraph{0.01});
  for (double eps = 0.05; eps < 3; eps += 0.05) {
    const auto next = decompose(mu, EpsilonGraph{eps});
    EXPECT_LE(next.size(), prev.size());
    // Every old component sits inside a single new one.
    const auto owner = ComponentDecomposition::owner(next, mu.size());
    for (const auto& comp : prev)
      for (std::size_t i : comp) EXPECT_EQ(owner[i], owner[comp.front()]);
    prev = next;
  }
}

TEST(RestrictPartial, FullComponentIsTheOriginalProblem) {
  std::mt19937 rng(1);
  const auto p = clustered(rng, 3);
  const auto s = solve(p);
  std::vector<std::size_t> all(p.source.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto r = restrict_partial(p, s.plan, all);
  EXPECT_NEAR(r.mass, 1.0, 1e-12);
  EXPECT_EQ(r.problem.source.size(), p.source.size());
  EXPECT_NEAR(solve(r.problem).primal_cost, s.primal_cost, 1e-10);
}

TEST(RestrictPartial, ComponentMassAndDuality) {
  std::mt19937 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = clustered(rng, 4);
    const auto s = solve(p);
    const auto parts = decompose(p.source, EpsilonGraph{2.0});
    ASSERT_EQ(parts.size(), 3u);
    const auto pieces = decompose_potential(p, s.pair, parts, s.plan);
    for (const auto& piece : pieces) {
      ASSERT_FALSE(piece.skipped);
      const auto& r = *piece.restricted;
      double mu_mass = 0, received = 0;
      for (std::size_t i : parts[piece.component]) mu_mass += p.source.weight(i);
      for (const auto& e : s.plan.entries())
        if (std::find(parts[piece.component].begin(), parts[piece.component].end(), e.source) !=
            parts[piece.component].end())
          received += e.mass;
      EXPECT_NEAR(r.mass, mu_mass, 1e-12);
      EXPECT_NEAR(received, mu_mass, 1e-9);
      EXPECT_TRUE(verify_duality(r.problem, r.plan, piece.pair).optimal);
      // The restricted plan is optimal for the restricted problem solved afresh.
      EXPECT_NEAR(solve(r.problem).primal_cost, r.plan.cost(r.problem.bound()), 1e-9);
    }
  }
}

TEST(RestrictPartial, ZeroMassComponent) {
  Problem p{DiscreteMeasure({{0.0}, {5.0}}, {1.0, 0.0}), line({0.0}), CostSpec::squared_euclidean()};
  const auto s = solve(p);
  try {
    restrict_partial(p, s.plan, {1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroMassComponent);
  }
  const auto pieces = decompose_potential(p, s.pair, {{0}, {1}}, s.plan);
  EXPECT_FALSE(pieces[0].skipped);
  EXPECT_TRUE(pieces[1].skipped);
}

TEST(DecomposePotential, SingleComponentIsIdentity) {
  std::mt19937 rng(3);
  const auto p = clustered(rng, 2);
  const auto s = solve(p);
  std::vector<std::size_t> all(p.source.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto pieces = decompose_potential(p, s.pair, {all}, s.plan);
  ASSERT_EQ(pieces.size(), 1u);
  EXPECT_EQ(pieces[0].pair.f, s.pair.f);
}

TEST(RestrictFullMass, DropsZeroMassPointsAndExtends) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Point> xs, ys;
    std::vector<double> wx, wy;
    for (int k = 0; k < 8; ++k) {
      xs.push_back({u(rng), u(rng)});
      wx.push_back(k % 3 == 0 ? 0.0 : 0.1 + u(rng));
      ys.push_back({u(rng), u(rng)});
      wy.push_back(k % 4 == 1 ? 0.0 : 0.1 + u(rng));
    }
    Problem p{DiscreteMeasure::normalized(xs, wx), DiscreteMeasure::normalized(ys, wy),
              CostSpec::lp_norm_power(2, 1 + trial % 2)};
    std::vector<std::size_t> ks, kt;
    for (std::size_t i = 0; i < 8; ++i) {
      if (p.source.weight(i) > 0) ks.push_back(i);
      if (p.target.weight(i) > 0) kt.push_back(i);
    }
    const auto r = restrict_full_mass(p, ks, kt);
    const auto sr = solve(r.problem);
    const auto full = solve(p);
    EXPECT_NEAR(sr.primal_cost, full.primal_cost, 1e-10);
    const auto ext = extend_pair(p, r, sr.pair);
    for (std::size_t k = 0; k < ks.size(); ++k) EXPECT_NEAR(ext.f[ks[k]], sr.pair.f[k], 1e-12);
    EXPECT_TRUE(verify_duality(p, full.plan, ext).optimal);
  }
}

TEST(RestrictFullMass, MassLoss) {
  Problem p{line({0.0, 1.0}), line({0.0, 1.0}), CostSpec::squared_euclidean()};
  try {
    restrict_full_mass(p, {0}, {0, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MassLoss);
  }
  const auto same = restrict_full_mass(p, {0, 1}, {0, 1});
  EXPECT_EQ(same.problem.source.points(), p.source.points());
}
