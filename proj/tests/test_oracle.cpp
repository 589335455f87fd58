#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "otuniq/oracle.hpp"

using namespace otuniq;

namespace {

DiscreteMeasure line(std::vector<double> xs) {
  std::vector<Point> pts;
  for (double x : xs) pts.push_back({x});
  return DiscreteMeasure::uniform(std::move(pts));
}

}  // namespace

TEST(ActiveSetLp, SmallPolytope) {
  // max x + y  s.t.  x + 2y <= 4, 3x + y <= 6, x >= 0, y >= 0
  ActiveSetLp lp(2);
  const auto a = lp.add_row({{{0, 1.0}, {1, 2.0}}, 4});
  lp.add_row({{{0, 3.0}, {1, 1.0}}, 6});
  const auto lx = lp.add_row({{{0, -1.0}}, 0});
  const auto ly = lp.add_row({{{1, -1.0}}, 0});
  (void)a;
  lp.start({lx, ly});
  const std::vector<double> c{1, 1};
  ASSERT_EQ(lp.maximize(c), ActiveSetLp::Status::Optimal);
  EXPECT_NEAR(lp.point()[0], 1.6, 1e-12);
  EXPECT_NEAR(lp.point()[1], 1.2, 1e-12);
  const std::vector<double> c2{-1, 0};
  lp.maximize(c2);
  EXPECT_NEAR(lp.point()[0], 0.0, 1e-12);
}

TEST(ActiveSetLp, ReportsUnbounded) {
  ActiveSetLp lp(1);
  const auto r = lp.add_row({{{0, -1.0}}, 0});
  lp.start({r});
  const std::vector<double> c{1};
  EXPECT_EQ(lp.maximize(c), ActiveSetLp::Status::Unbounded);
}

TEST(DualFaceOracle, SinglePointTargetPinsEverything) {
  Problem p{line({0.0, 0.3, 0.7, 1.0}), line({0.5}), CostSpec::squared_euclidean()};
  const auto s = solve(p);
  const auto face = dual_face_oracle(p, s);
  EXPECT_TRUE(face.unique);
  EXPECT_NEAR(face.max_spread, 0.0, 1e-12);
  EXPECT_TRUE(tight_graph_connectivity_oracle(p, s).unique);
}

TEST(DualFaceOracle, SelfTransportOfDistinctPointsIsNotUnique) {
  std::vector<double> xs;
  for (int k = 0; k < 5; ++k) xs.push_back(k / 4.0);
  for (int k = 0; k < 5; ++k) xs.push_back(2 + k / 4.0);
  const auto mu = line(xs);
  Problem p{mu, mu, CostSpec::squared_euclidean()};
  const auto s = solve(p);
  const auto face = dual_face_oracle(p, s);
  EXPECT_FALSE(face.unique);
  EXPECT_NEAR(face.spread(0), 0.0, 1e-12);
  EXPECT_GT(face.spread(9), 0.5);
  // A finite identity coupling leaves every point free on its own.
  const auto conn = tight_graph_connectivity_oracle(p, s);
  EXPECT_FALSE(conn.unique);
  EXPECT_EQ(conn.components, 10u);
}

TEST(DualFaceOracle, TwoByTwoIntervalMatchesHandComputation) {
  // Identity self-coupling of two points with cost |x - y|: f0 = 0, f1 in [-1, 1].
  Problem p{line({0.0, 1.0}), line({0.0, 1.0}), CostSpec::lp_norm_power(2, 1)};
  const auto s = solve(p);
  const auto face = dual_face_oracle(p, s);
  EXPECT_NEAR(face.f_min[1], -1.0, 1e-10);
  EXPECT_NEAR(face.f_max[1], 1.0, 1e-10);
  EXPECT_NEAR(face.max_spread, 2.0, 1e-10);
}

TEST(DualFaceOracle, ZeroMassPointsAreUnconstrained) {
  Problem p{DiscreteMeasure({{0.0}, {0.5}, {1.0}}, {0.5, 0.0, 0.5}), line({0.1, 0.9}),
            CostSpec::squared_euclidean()};
  const auto s = solve(p);
  const auto face = dual_face_oracle(p, s);
  EXPECT_TRUE(std::isnan(face.f_min[1]));
  EXPECT_FALSE(std::isnan(face.f_min[2]));
}

TEST(DualFaceOracle, RejectsWrongOptimum) {
  Problem p{line({0.0, 1.0}), line({0.0, 1.0}), CostSpec::explicit_matrix({{0, 2}, {3, 1}})};
  auto s = solve(p);
  s.dual_value += 0.1;
  try {
    dual_face_oracle(p, s);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InfeasibleOptimum);
  }
}

TEST(Oracles, AgreeOnRandomAndDegenerateInstances) {
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> grid(0, 4);
  int unique = 0, ambiguous = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t n = 2 + rng() % 6, m = 2 + rng() % 6;
    // Small integer grids and integer weights make ties in cost and mass common.
    auto cloud = [&](std::size_t k) {
      std::vector<Point> pts;
      while (pts.size() < k) {
        Point q{double(grid(rng)), double(grid(rng))};
        if (std::find(pts.begin(), pts.end(), q) == pts.end()) pts.push_back(q);
      }
      std::vector<double> w(k);
      for (double& v : w) v = 1 + rng() % 3;
      return DiscreteMeasure::normalized(std::move(pts), std::move(w));
    };
    Problem p{cloud(n), cloud(m), CostSpec::lp_norm_power(trial % 2 ? 1 : 2, 1 + trial % 3)};
    const auto s = solve(p);
    const auto face = dual_face_oracle(p, s);
    const auto conn = tight_graph_connectivity_oracle(p, s);
    EXPECT_EQ(face.unique, conn.unique) << "trial " << trial << " spread " << face.max_spread;
    (face.unique ? unique : ambiguous)++;
  }
  EXPECT_GT(unique, 10);
  EXPECT_GT(ambiguous, 10);
}
