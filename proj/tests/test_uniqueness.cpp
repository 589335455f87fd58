#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "otuniq/uniqueness.hpp"

using namespace otuniq;

namespace {

DiscreteMeasure line(std::vector<double> xs, std::vector<double> w = {}) {
  std::vector<Point> pts;
  for (double x : xs) pts.push_back({x});
  if (w.empty()) return DiscreteMeasure::uniform(std::move(pts));
  return DiscreteMeasure::normalized(std::move(pts), std::move(w));
}

// 20 + 20 points on [0,1] and [2,3] with the given mass on [0,1].
DiscreteMeasure two_intervals(double left_mass) {
  std::vector<double> xs, w;
  for (int k = 0; k < 20; ++k) { xs.push_back(k / 19.0); w.push_back(left_mass / 20); }
  for (int k = 0; k < 20; ++k) { xs.push_back(2 + k / 19.0); w.push_back((1 - left_mass) / 20); }
  return line(xs, w);
}

Problem semi_discrete(double b) {
  DiscreteMeasure nu({{0.25}, {0.75}}, {b, 1 - b});
  return Problem{line({0.0, 1.0 / 3, 2.0 / 3, 1.0}), nu, CostSpec::squared_euclidean()};
}

// Random clustered instance with integer weights; ties in masses are common.
Problem random_clustered(std::mt19937& rng, std::size_t max_points, std::vector<int>* lx = nullptr,
                         std::vector<int>* ly = nullptr) {
  std::uniform_real_distribution<double> u(0, 1);
  auto cloud = [&](std::vector<int>* labels) {
    const int clusters = 1 + rng() % 3;
    const std::size_t n = 2 + rng() % (max_points - 1);
    std::vector<Point> pts;
    std::vector<double> w;
    std::vector<int> lab;
    for (std::size_t k = 0; k < n; ++k) {
      const int c = int(k % clusters);
      pts.push_back({4.0 * c + u(rng), u(rng)});
      w.push_back(1 + rng() % 3);
      lab.push_back(c);
    }
    if (labels) *labels = lab;
    return DiscreteMeasure::normalized(std::move(pts), std::move(w), lab);
  };
  auto mu = cloud(lx);
  auto nu = cloud(ly);
  const double q = rng() % 2 ? 1 : 2;
  const double pw = 1 + rng() % 3;
  return Problem{mu, nu, CostSpec::lp_norm_power(q, pw)};
}

CertifyOptions finite_with_labels() {
  CertifyOptions o;
  o.method = ExplicitLabels{};
  return o;
}

}  // namespace

TEST(MarginalDegeneracy, HandPickedCases) {
  const auto equal = marginal_degeneracy_check({0.5, 0.5}, {0.5, 0.5});
  EXPECT_TRUE(equal.degenerate);
  EXPECT_EQ(equal.sources.size(), 1u);
  EXPECT_EQ(equal.targets.size(), 1u);
  EXPECT_EQ(equal.min_gap, 0.0);
  const auto apart = marginal_degeneracy_check({0.4, 0.6}, {0.5, 0.5});
  EXPECT_FALSE(apart.degenerate);
  EXPECT_NEAR(apart.min_gap, 0.1, 1e-15);
  EXPECT_FALSE(marginal_degeneracy_check({1.0}, {1.0}).degenerate);
}

TEST(MarginalDegeneracy, KnifeEdgeAndCap) {
  const auto near = marginal_degeneracy_check({0.5 + 3e-9, 0.5 - 3e-9}, {0.5, 0.5});
  EXPECT_FALSE(near.degenerate);
  EXPECT_TRUE(near.knife_edge);
  EXPECT_THROW(marginal_degeneracy_check(std::vector<double>(20, 0.05), std::vector<double>(7, 1.0 / 7)), Error);
}

TEST(MarginalDegeneracy, MatchesBruteForce) {
  std::mt19937 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t ni = 1 + rng() % 5, nj = 1 + rng() % 5;
    auto masses = [&](std::size_t k) {
      std::vector<double> w(k);
      double t = 0;
      for (double& v : w) t += v = 1 + rng() % 4;
      for (double& v : w) v /= t;
      return w;
    };
    const auto a = masses(ni), b = masses(nj);
    double best = std::numeric_limits<double>::infinity();
    for (unsigned si = 1; si < (1u << ni); ++si)
      for (unsigned sj = 1; sj < (1u << nj); ++sj) {
        if (si == (1u << ni) - 1 && sj == (1u << nj) - 1) continue;
        double s = 0;
        for (std::size_t k = 0; k < ni; ++k) if (si >> k & 1u) s += a[k];
        for (std::size_t k = 0; k < nj; ++k) if (sj >> k & 1u) s -= b[k];
        best = std::min(best, std::abs(s));
      }
    const double gap = marginal_degeneracy_check(a, b).min_gap;
    if (std::isinf(best))
      EXPECT_TRUE(std::isinf(gap)) << trial;
    else
      EXPECT_NEAR(gap, best, 1e-14) << trial;
  }
}

TEST(PlanDegeneracy, HandPickedCases) {
  ComponentFlowGraph isolated{{0.5, 0.5}, {0.5, 0.5}, {{0, 0, 0.5}, {1, 1, 0.5}}};
  const auto d = plan_degeneracy_check(isolated);
  EXPECT_TRUE(d.degenerate);
  EXPECT_EQ(d.sources, std::vector<std::size_t>{1});
  EXPECT_EQ(d.targets, std::vector<std::size_t>{1});
  ComponentFlowGraph chain{{0.5, 0.5}, {0.3, 0.7}, {{0, 0, 0.3}, {0, 1, 0.2}, {1, 1, 0.5}}};
  EXPECT_FALSE(plan_degeneracy_check(chain).degenerate);
  EXPECT_FALSE(degenerate_by_enumeration(chain));
  ComponentFlowGraph star{{1.0}, {0.2, 0.3, 0.5}, {{0, 0, 0.2}, {0, 1, 0.3}, {0, 2, 0.5}}};
  EXPECT_FALSE(plan_degeneracy_check(star).degenerate);
}

TEST(PlanDegeneracy, MatchesEnumerationOnRandomGraphs) {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t ni = 1 + rng() % 4, nj = 1 + rng() % 4;
    ComponentFlowGraph g{std::vector<double>(ni, 1.0 / ni), std::vector<double>(nj, 1.0 / nj), {}};
    for (std::size_t i = 0; i < ni; ++i)
      for (std::size_t j = 0; j < nj; ++j)
        if (rng() % 3 == 0) g.edges.push_back({i, j, 0.1});
    EXPECT_EQ(plan_degeneracy_check(g).degenerate, degenerate_by_enumeration(g).has_value()) << trial;
  }
}

TEST(ContactLinks, SharedColumnAndDiagonal) {
  Problem p{line({0.0, 1.0}), line({0.5}), CostSpec::squared_euclidean()};
  const auto s = solve(p);
  const auto links = build_contact_links(p, s.plan, {0, 1}, {0});
  ASSERT_EQ(links.size(), 1u);
  EXPECT_EQ(links[0].first_target, 0u);
  EXPECT_EQ(links[0].second_target, 0u);

  Problem diag{line({0.0, 5.0}), line({0.0, 5.0}), CostSpec::squared_euclidean()};
  const auto sd = solve(diag);
  EXPECT_TRUE(build_contact_links(diag, sd.plan, {0, 1}, {0, 1}).empty());
}

TEST(PropagateOffsets, SingleAndSharedContact) {
  Problem p{line({0.0, 1.0}), line({0.25}), CostSpec::squared_euclidean()};
  const auto s = solve(p);
  const auto cost = p.bound();
  std::vector<ContactLink> none;
  const auto one = propagate_offsets(none, {0.0, 0.0}, cost, {1}, 0, 1e-9, true);
  EXPECT_EQ(one.offsets, std::vector<double>{0.0});
  auto links = build_contact_links(p, s.plan, {0, 1}, {0});
  const auto two = propagate_offsets(links, {0.0, 0.0}, cost, {1, 1}, 0, 1e-9, true);
  EXPECT_EQ(two.blocks, 1u);
  EXPECT_NEAR(two.offsets[0] - two.offsets[1], cost(0, 0) - cost(1, 0), 1e-15);
}

TEST(PropagateOffsets, InconsistentCycleIsReported) {
  Problem p{line({0.0, 1.0}), line({0.25, 0.75}), CostSpec::squared_euclidean()};
  const auto cost = p.bound();
  std::vector<ContactLink> links{{0, 1, 0, 0, 0, 1, 0, 0, false}, {0, 1, 1, 0, 1, 1, 1, 0, false}};
  // Piece potentials that are not jointly optimal make the two paths disagree.
  EXPECT_THROW(propagate_offsets(links, {0.0, 0.3}, cost, {1, 1}, 0, 1e-9, true), Error);
  const auto loose = propagate_offsets(links, {0.0, 0.3}, cost, {1, 1}, 0, 1e-9, false);
  EXPECT_GT(loose.max_cycle_residual, 0.1);
}

TEST(Certify, TwoIntervalsSymmetricIsNonUnique) {
  const auto mu = two_intervals(0.5);
  Problem p{mu, mu, CostSpec::squared_euclidean()};
  CertifyOptions o;
  o.method = EpsilonGraph{0.2};
  o.semantics = Semantics::Continuum;
  const auto cert = certify(p, o);
  EXPECT_EQ(cert.verdict, Verdict::NonUnique);
  EXPECT_EQ(cert.freedom_dim, 1u);
  ASSERT_TRUE(cert.witness);
  EXPECT_TRUE(cert.witness->first_report.optimal);
  EXPECT_TRUE(cert.witness->second_report.optimal);
  EXPECT_GT(cert.witness->difference_range, 1e-3);
  EXPECT_TRUE(cert.plan_degeneracy.degenerate);
  ASSERT_TRUE(cert.marginal);
  EXPECT_TRUE(cert.marginal->degenerate);
}

TEST(Certify, TwoIntervalsAsymmetricIsUnique) {
  Problem p{two_intervals(0.4), two_intervals(0.5), CostSpec::squared_euclidean()};
  CertifyOptions o;
  o.method = EpsilonGraph{0.2};
  o.semantics = Semantics::Continuum;
  const auto cert = certify(p, o);
  EXPECT_EQ(cert.verdict, Verdict::Unique);
  EXPECT_EQ(cert.freedom_dim, 0u);
  EXPECT_FALSE(cert.witness);
  EXPECT_FALSE(cert.plan_degeneracy.degenerate);
  ASSERT_FALSE(cert.links.empty());
}

TEST(Certify, SemiDiscreteQuarterPoints) {
  EXPECT_EQ(certify(semi_discrete(0.3)).verdict, Verdict::Unique);
  const auto half = certify(semi_discrete(0.5));
  EXPECT_EQ(half.verdict, Verdict::NonUnique);
  EXPECT_EQ(half.corollary_case, "single_point_targets");
  EXPECT_TRUE(half.oracle.agrees);
}

TEST(Certify, ContinuumNeedsAMethod) {
  CertifyOptions o;
  o.semantics = Semantics::Continuum;
  try {
    certify(semi_discrete(0.3), o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingEpsilon);
  }
}

TEST(Certify, ThreeWayAgreementAndEvidence) {
  std::mt19937 rng(99);
  int unique = 0, ambiguous = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const auto p = random_clustered(rng, 14);
    const auto cert = certify(p, finite_with_labels());
    ASSERT_TRUE(cert.oracle.ran);
    ASSERT_TRUE(cert.oracle.face);
    EXPECT_TRUE(cert.oracle.agrees) << "trial " << trial << " verdict " << to_string(cert.verdict);
    EXPECT_NE(cert.verdict, Verdict::Inconclusive);
    (cert.verdict == Verdict::Unique ? unique : ambiguous)++;
    if (cert.marginal && !cert.marginal->degenerate) { EXPECT_FALSE(cert.plan_degeneracy.degenerate); }
    if (cert.verdict == Verdict::Unique) {
      EXPECT_EQ(cert.freedom_dim, 0u);
      EXPECT_LE(cert.glue_deviation, 1e-7 * (1 + p.bound().max_abs()));
    } else {
      ASSERT_TRUE(cert.witness);
      EXPECT_TRUE(cert.witness->second_report.optimal);
    }
    // Unique restricted components glued through shared target points give
    // a unique potential.
    const auto owner = ComponentDecomposition::owner(cert.decomposition.source_components, p.source.size());
    std::vector<std::size_t> by_point(p.target.size());
    for (std::size_t j = 0; j < by_point.size(); ++j) by_point[j] = j;
    auto links = build_contact_links(p, cert.connected_plan, owner, by_point);
    std::vector<char> active;
    bool components_unique = true;
    for (const auto& c : cert.components) {
      active.push_back(c.mass > 0);
      components_unique = components_unique && (c.status != "non_unique");
    }
    const auto glued = propagate_offsets(links, std::vector<double>(p.source.size(), 0.0), p.bound(), active,
                                         owner[cert.solved.anchor], 1.0, false);
    if (components_unique && glued.blocks == 1) { EXPECT_EQ(cert.verdict, Verdict::Unique) << trial; }
  }
  EXPECT_GT(unique, 10);
  EXPECT_GT(ambiguous, 10);
}

TEST(Certify, ZeroMassPaddingKeepsVerdict) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_clustered(rng, 8);
    auto pts = p.source.points();
    auto w = p.source.weights();
    pts.push_back({100.0 + trial, 100.0});
    w.push_back(0.0);
    Problem padded{DiscreteMeasure(pts, w), p.target, p.cost};
    EXPECT_EQ(certify(p).verdict, certify(padded).verdict);
  }
}

TEST(Certify, GluedPotentialMatchesSolver) {
  // Non-degenerate masses give a connected plan.
  Problem p{line({0.0, 0.4, 1.1, 1.7}, {1, 2, 3, 4}), line({0.2, 0.9, 1.5}, {5, 3, 2}),
            CostSpec::squared_euclidean()};
  const auto cert = certify(p);
  EXPECT_EQ(cert.verdict, Verdict::Unique);
  EXPECT_LE(cert.glue_deviation, 1e-12);
}

TEST(AmbiguityWitness, FamilyOnSeparatedClusters) {
  std::vector<Point> pts;
  for (int k = 0; k < 5; ++k) pts.push_back({0.0, k / 4.0});
  for (int k = 0; k < 5; ++k) pts.push_back({1.0, k / 4.0});
  const auto mu = DiscreteMeasure::uniform(pts);
  Problem p{mu, mu, CostSpec::lp_norm_power(2, 1)};
  const auto parts = decompose(mu, EpsilonGraph{0.5});
  const auto w = ambiguity_witness(p, parts);
  EXPECT_DOUBLE_EQ(w.delta, 1.0);
  EXPECT_EQ(w.samples.size(), 25u);
  EXPECT_TRUE(w.all_optimal);
  EXPECT_DOUBLE_EQ(w.samples.front().b, -1.0);
  EXPECT_DOUBLE_EQ(w.samples[12].b, 0.0);  // the zero potential
  EXPECT_DOUBLE_EQ(w.samples.back().b, 1.0);
  ASSERT_TRUE(w.oracle_spread);
  EXPECT_NEAR(*w.oracle_spread, 2 * w.delta, 1e-6 * (1 + p.bound().max_abs()));
}

TEST(AmbiguityWitness, Preconditions) {
  const auto mu = line({0.0, 1.0, 5.0});
  auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Internal;
  };
  EXPECT_EQ(code([&] { ambiguity_witness(Problem{mu, line({0.0, 1.0, 4.0}), CostSpec::squared_euclidean()}, {{0, 1}, {2}}); }),
            ErrorCode::NotSelfCoupled);
  EXPECT_EQ(code([&] { ambiguity_witness(Problem{mu, mu, CostSpec::squared_euclidean()}, {{0}, {1}, {2}}); }),
            ErrorCode::WrongComponentCount);
  EXPECT_EQ(code([&] {
              ambiguity_witness(Problem{mu, mu, CostSpec::explicit_matrix({{0, 1, 2}, {1, 0, 1}, {3, 1, 0}})},
                                {{0, 1}, {2}});
            }),
            ErrorCode::NotSymmetric);
}

TEST(PairsAgree, EquivalencesOnShiftedPairs) {
  std::mt19937 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = random_clustered(rng, 10);
    const auto cert = certify(p);
    const auto& s = cert.solved;
    const auto same = pairs_agree(p, s.plan, s.pair, s.pair.shifted(3.5), 1e-9);
    EXPECT_TRUE(same.on_plan_projections && same.on_source && same.on_target);
    if (cert.witness) {
      const auto diff = pairs_agree(p, s.plan, cert.witness->first, cert.witness->second, 1e-9);
      EXPECT_FALSE(diff.on_source);
      EXPECT_EQ(diff.on_source, diff.on_target);
      EXPECT_EQ(diff.on_source, diff.on_plan_projections);
    }
  }
}
