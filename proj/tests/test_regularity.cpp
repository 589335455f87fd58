#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "otuniq/regularity.hpp"

using namespace otuniq;

namespace {

std::vector<double> doubling_radii(std::size_t count) {
  std::vector<double> r;
  for (std::size_t k = 0; k < count; ++k) r.push_back(10.0 * std::pow(2.0, double(k)));
  return r;
}

double dot_offset(const Point& q, const Point& x, const Point& u) {
  double s = 0;
  for (std::size_t k = 0; k < q.size(); ++k) s += (q[k] - x[k]) * u[k];
  return s;
}

Problem shifted_grids(int n, double power) {
  std::vector<Point> xs, ys;
  for (int k = 0; k < n; ++k) xs.push_back({double(k) / (n - 1)});
  for (int k = 0; k <= n; ++k) ys.push_back({0.25 + double(k) / n});
  return Problem{DiscreteMeasure::uniform(xs), DiscreteMeasure::uniform(ys), CostSpec::lp_norm_power(2, power)};
}

}  // namespace

TEST(DominatedRegion, SquaredEuclideanBall) {
  const auto grid = box_grid({-1.0}, {5.0}, {61});
  const auto r = dominated_region({0.0}, {2.0}, CostSpec::squared_euclidean(), grid);
  for (std::size_t g = 0; g < grid.size(); ++g)
    EXPECT_EQ(bool(r.member[g]), std::abs(grid[g][0] - 2) <= 2) << grid[g][0];
}

TEST(DominatedRegion, L1DiamondAndDiagonalAnchor) {
  const auto grid = box_grid({-2.0, -2.0}, {2.0, 2.0}, {17, 17});  // dyadic steps keep the boundary exact
  const auto cost = CostSpec::lp_norm_power(1, 1);
  const auto r = dominated_region({1.0, 0.0}, {0.0, 0.0}, cost, grid);
  for (std::size_t g = 0; g < grid.size(); ++g)
    EXPECT_EQ(bool(r.member[g]), std::abs(grid[g][0]) + std::abs(grid[g][1]) <= 1);
  const auto same = dominated_region({0.5, 0.5}, {0.5, 0.5}, cost, grid);
  for (std::size_t g = 0; g < grid.size(); ++g)
    EXPECT_EQ(bool(same.member[g]), cost.evaluate(grid[g], Point{0.5, 0.5}) <= 0);
}

TEST(DominatedRegion, ReflectionSymmetry) {
  const auto grid = box_grid({-2.0, -2.0}, {2.0, 2.0}, {21, 21});
  std::vector<Point> mirrored;
  for (const auto& q : grid) mirrored.push_back({-q[0], q[1]});
  for (double q : {1.0, 2.0}) {
    const auto cost = CostSpec::lp_norm_power(q, 3);
    const auto a = dominated_region({0.3, 0.2}, {1.0, -0.5}, cost, grid);
    const auto b = dominated_region({-0.3, 0.2}, {-1.0, -0.5}, cost, mirrored);
    EXPECT_EQ(a.member, b.member);
  }
}

TEST(AsymptoticRegion, HalfSpaceForSquaredEuclidean) {
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> u(-1, 1);
  const auto grid = box_grid({-1.0, -1.0}, {1.0, 1.0}, {21, 21});
  const double delta = 0.05;
  for (int trial = 0; trial < 5; ++trial) {
    const Point x{0.3 * u(rng), 0.3 * u(rng)};
    const double angle = 3.14159 * u(rng);
    const Point dir{std::cos(angle), std::sin(angle)};
    const auto r = asymptotic_region(x, dir, CostSpec::squared_euclidean(), doubling_radii(20), grid);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double s = dot_offset(grid[g], x, dir);
      if (s > delta) EXPECT_TRUE(r.tail_member[g]);
      if (s < -delta) EXPECT_EQ(r.frequency[g], 0.0);
    }
    // Mirror direction gives the mirror image through x.
    const Point back{-dir[0], -dir[1]};
    const auto m = asymptotic_region(x, back, CostSpec::squared_euclidean(), doubling_radii(20), grid);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double s = dot_offset(grid[g], x, dir);
      if (s > delta) EXPECT_FALSE(m.tail_member[g]);
      if (s < -delta) EXPECT_TRUE(m.tail_member[g]);
    }
  }
}

TEST(AsymptoticRegion, L1AxisAlignedIsNotAHalfSpace) {
  const auto grid = box_grid({-1.0, -1.0}, {1.0, 1.0}, {21, 21});
  const auto r = asymptotic_region({0.0, 0.0}, {1.0, 0.0}, CostSpec::lp_norm_power(1, 1), doubling_radii(16), grid);
  // Under l1 with an axis direction the tail set is the cone x'_1 >= |x'_2|,
  // so part of the shifted half-space is missed.
  std::size_t missed = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const bool cone = grid[g][0] > std::abs(grid[g][1]) + 0.05;
    if (cone) EXPECT_TRUE(r.tail_member[g]);
    if (grid[g][0] > 0.05 && std::abs(grid[g][1]) > grid[g][0] + 0.05) {
      EXPECT_FALSE(r.tail_member[g]);
      ++missed;
    }
  }
  EXPECT_GT(missed, 0u);
}

TEST(AsymptoticRegion, RejectsDecreasingProfile) {
  const auto h = Profile::tabulated({0, 1, 2}, {0, 2, 1});
  try {
    asymptotic_region({0.0}, {1.0}, CostSpec::profile_of_distance(h), {1, 2, 4}, {{0.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ProfileNotMonotone);
  }
}

TEST(EscapeDiagnostic, CompactTargetsGiveNoFlags) {
  std::vector<Point> xs;
  for (int k = 0; k < 11; ++k) xs.push_back({k / 10.0});
  const auto mu = DiscreteMeasure::uniform(xs);
  std::vector<TruncatedTarget> fam;
  for (double R : {1.0, 2.0, 4.0, 8.0}) fam.push_back({R, mu});
  const auto d = escape_diagnostic(mu, fam, CostSpec::squared_euclidean());
  for (char f : d.flagged) EXPECT_FALSE(f);
}

TEST(EscapeDiagnostic, FarAtomFlagsOnlyTheEndpoint) {
  std::vector<Point> xs;
  for (int k = 0; k < 11; ++k) xs.push_back({k / 10.0});
  const auto mu = DiscreteMeasure::uniform(xs);
  std::vector<TruncatedTarget> fam;
  for (double R : doubling_radii(6)) {
    auto pts = xs;
    std::vector<double> w(xs.size(), 0.95 / xs.size());
    pts.push_back({R});
    w.push_back(0.05);
    fam.push_back({R, DiscreteMeasure(pts, w)});
  }
  const auto d = escape_diagnostic(mu, fam, CostSpec::squared_euclidean());
  for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_EQ(bool(d.flagged[i]), i == xs.size() - 1) << i;
  // Running scores never decrease and extending the schedule keeps flags.
  for (std::size_t s = 1; s < d.score.size(); ++s)
    for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_GE(d.score[s][i], d.score[s - 1][i]);
  std::vector<TruncatedTarget> shorter(fam.begin(), fam.begin() + 4);
  const auto e = escape_diagnostic(mu, shorter, CostSpec::squared_euclidean());
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (e.flagged[i]) EXPECT_TRUE(d.flagged[i]);
}

TEST(EscapeDiagnostic, ScheduleTooShort) {
  const auto mu = DiscreteMeasure::uniform({{0.0}});
  try {
    escape_diagnostic(mu, {{1, mu}, {2, mu}}, CostSpec::squared_euclidean());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ScheduleTooShort);
  }
}

TEST(GradientIdentity, SquaredCostShiftIsExact) {
  const auto p = shifted_grids(30, 2);
  const auto r = gradient_identity_check(p, solve(p));
  EXPECT_EQ(r.entries.size(), 28u);
  EXPECT_LT(r.max_deviation, 1e-10);
  EXPECT_GT(r.max_pair_deviation, 1e-3);  // individual partners sit half a cell apart
}

TEST(GradientIdentity, ConstantCostGivesZeroGradients) {
  const auto h = Profile::polynomial({1.0});
  std::vector<Point> xs;
  for (int k = 0; k < 10; ++k) xs.push_back({k / 9.0});
  const Problem p{DiscreteMeasure::uniform(xs), DiscreteMeasure::uniform(xs), CostSpec::profile_of_distance(h)};
  const auto r = gradient_identity_check(p, solve(p));
  EXPECT_LT(r.max_deviation, 1e-12);
}

TEST(GradientIdentity, QuadraticRefinement) {
  std::vector<double> dev;
  for (int n : {40, 80, 160}) {
    const auto p = shifted_grids(n, 4);
    dev.push_back(gradient_identity_check(p, solve(p)).max_deviation);
  }
  EXPECT_GT(std::log2(dev[0] / dev[1]), 1.8);
  EXPECT_GT(std::log2(dev[1] / dev[2]), 1.8);
  EXPECT_LT(dev[2], 1e-3);
}

TEST(GradientIdentity, NotAGrid) {
  const Problem p{DiscreteMeasure::uniform({{0.0}, {0.1}, {0.35}}), DiscreteMeasure::uniform({{0.0}}),
                  CostSpec::squared_euclidean()};
  try {
    gradient_identity_check(p, solve(p));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotAGrid);
  }
}

TEST(Superlinearity, SlopeLowerBound) {
  const auto square = Profile::polynomial({0, 0, 1});
  EXPECT_NEAR(square.slope_lower_bound(3.0), 6.0, 1e-9);
  EXPECT_GT(square.slope_lower_bound(1e6), square.slope_lower_bound(1e3));
  const auto linear = Profile::polynomial({0, 2});
  EXPECT_DOUBLE_EQ(linear.slope_lower_bound(1e6), 2.0);  // h' bounded: not superlinear
  const auto table = Profile::tabulated({0, 1, 2, 3}, {0, 3, 4, 8});
  EXPECT_DOUBLE_EQ(table.slope_lower_bound(0.5), 1.0);
  EXPECT_DOUBLE_EQ(table.slope_lower_bound(2.5), 4.0);
}

TEST(Csv, HeaderAndRows) {
  std::ostringstream out;
  write_csv(out, {{0.0, 1.0}, {2.0, 3.5}}, {1.0, 0.25});
  EXPECT_EQ(out.str(), "x1,x2,value\n0,1,1\n2,3.5,0.25\n");
}
