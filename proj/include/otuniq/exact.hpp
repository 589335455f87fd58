#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cost.hpp"
#include "error.hpp"
#include "finite_structure.hpp"
#include "measure.hpp"
#include "network_simplex.hpp"
#include "scalar.hpp"
#include "transport.hpp"
#include "uniqueness.hpp"

namespace otuniq {

struct ExactMeasure {
  std::vector<std::vector<Rational>> points;
  std::vector<Rational> weights;
  std::optional<std::vector<int>> labels;

  Rational total() const {
    Rational t = 0;
    for (const auto& w : weights) t += w;
    return t;
  }
};

/// Costs that can be evaluated without rounding: ||x - y||_1^p for integer
/// p, ||x - y||_2^p for even p, or a rational matrix.
struct ExactLpCost {
  int q = 2;
  int p = 2;
};
struct ExactMatrixCost {
  std::vector<std::vector<Rational>> rows;
};
using ExactCostKind = std::variant<ExactLpCost, ExactMatrixCost>;

inline Rational rational_pow(const Rational& base, int e) {
  Rational out = 1;
  for (int k = 0; k < e; ++k) out *= base;
  return out;
}

/// Finite transport problem over the rationals.
class ExactProblem {
 public:
  ExactProblem(ExactMeasure source, ExactMeasure target, ExactCostKind cost)
      : source_(std::move(source)), target_(std::move(target)), kind_(std::move(cost)) {
    check_measure(source_, "source");
    check_measure(target_, "target");
    n_ = source_.weights.size();
    m_ = target_.weights.size();
    if (source_.total() != target_.total())
      fail(ErrorCode::Unbalanced, "source mass " + rational_to_string(source_.total()) +
                                      " differs from target mass " + rational_to_string(target_.total()));
    if (source_.total() != 1) fail(ErrorCode::InvalidMeasure, "weights must sum to exactly 1 in exact mode");
    cost_.reserve(n_ * m_);
    if (const auto* lp = std::get_if<ExactLpCost>(&kind_)) {
      const bool ok = lp->p > 0 && (lp->q == 1 || (lp->q == 2 && lp->p % 2 == 0));
      if (!ok)
        fail(ErrorCode::ExactUnsupported, "exact mode supports q = 1 with integer p, q = 2 with even p, "
                                          "or an explicit matrix");
      if (source_.points.front().size() != target_.points.front().size())
        fail(ErrorCode::DimensionMismatch, "source and target dimensions differ");
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < m_; ++j) cost_.push_back(evaluate(*lp, source_.points[i], target_.points[j]));
    } else {
      const auto& rows = std::get<ExactMatrixCost>(kind_).rows;
      if (rows.size() != n_) fail(ErrorCode::DimensionMismatch, "cost matrix row count differs from source size");
      for (const auto& r : rows) {
        if (r.size() != m_) fail(ErrorCode::DimensionMismatch, "cost matrix column count differs from target size");
        for (const auto& v : r) {
          if (v < 0) fail(ErrorCode::InvalidCost, "costs must be >= 0");
          cost_.push_back(v);
        }
      }
    }
  }

  std::size_t rows() const { return n_; }
  std::size_t cols() const { return m_; }
  const ExactMeasure& source() const { return source_; }
  const ExactMeasure& target() const { return target_; }
  const ExactCostKind& kind() const { return kind_; }
  const Rational& c(std::size_t i, std::size_t j) const { return cost_[i * m_ + j]; }
  const std::vector<Rational>& dense_cost() const { return cost_; }

  /// Lexicographically smallest positive-mass source.
  std::size_t anchor() const {
    std::size_t best = n_;
    for (std::size_t i = 0; i < n_; ++i)
      if (source_.weights[i] > 0 && (best == n_ || source_.points[i] < source_.points[best])) best = i;
    return best;
  }

  /// Nearest floating-point problem, used for oracle cross-checks and output.
  Problem approximate() const {
    auto to_measure = [](const ExactMeasure& mu) {
      std::vector<Point> pts;
      for (const auto& p : mu.points) {
        Point q;
        for (const auto& v : p) q.push_back(v.convert_to<double>());
        pts.push_back(std::move(q));
      }
      std::vector<double> w;
      for (const auto& v : mu.weights) w.push_back(v.convert_to<double>());
      return DiscreteMeasure(std::move(pts), std::move(w), mu.labels);
    };
    auto src = to_measure(source_);
    auto tgt = to_measure(target_);
    if (const auto* lp = std::get_if<ExactLpCost>(&kind_))
      return Problem{std::move(src), std::move(tgt), CostSpec::lp_norm_power(lp->q, lp->p)};
    std::vector<std::vector<double>> rows;
    for (const auto& r : std::get<ExactMatrixCost>(kind_).rows) {
      rows.emplace_back();
      for (const auto& v : r) rows.back().push_back(v.convert_to<double>());
    }
    return Problem{std::move(src), std::move(tgt), CostSpec::explicit_matrix(rows)};
  }

 private:
  static Rational evaluate(const ExactLpCost& lp, const std::vector<Rational>& x, const std::vector<Rational>& y) {
    Rational s = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const Rational d = x[k] - y[k];
      s += lp.q == 1 ? Rational(abs(d)) : Rational(d * d);
    }
    return rational_pow(s, lp.q == 1 ? lp.p : lp.p / 2);
  }

  static void check_measure(const ExactMeasure& mu, const std::string& name) {
    if (mu.weights.empty()) fail(ErrorCode::InvalidMeasure, name + " measure has no points");
    if (mu.points.size() != mu.weights.size())
      fail(ErrorCode::InvalidMeasure, name + " points and weights differ in length");
    const std::size_t d = mu.points.front().size();
    if (d == 0) fail(ErrorCode::InvalidMeasure, "points must have at least one coordinate");
    for (const auto& p : mu.points)
      if (p.size() != d) fail(ErrorCode::InvalidMeasure, name + " points differ in dimension");
    for (const auto& w : mu.weights)
      if (w < 0) fail(ErrorCode::InvalidMeasure, "weights must be >= 0");
    auto sorted = mu.points;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      fail(ErrorCode::InvalidMeasure, name + " points are not distinct");
  }

  ExactMeasure source_;
  ExactMeasure target_;
  ExactCostKind kind_;
  std::vector<Rational> cost_;
  std::size_t n_ = 0;
  std::size_t m_ = 0;
};

struct ExactPlanEntry {
  std::size_t source = 0;
  std::size_t target = 0;
  Rational mass;
};

struct ExactPair {
  std::vector<Rational> f;
  std::vector<Rational> g;
};

struct ExactDualityReport {
  Rational primal_cost;
  Rational dual_value;
  bool feasible = false;
  bool support_tight = false;
  bool marginals = false;
  bool optimal = false;  // all of the above and primal == dual
};

/// Exact counterpart of verify_duality: no tolerance anywhere.
inline ExactDualityReport verify_duality_exact(const ExactProblem& p, const std::vector<ExactPlanEntry>& plan,
                                               const ExactPair& pair) {
  const std::size_t n = p.rows(), m = p.cols();
  if (pair.f.size() != n || pair.g.size() != m)
    fail(ErrorCode::DimensionMismatch, "pair does not match the problem dimensions");
  ExactDualityReport r;
  r.feasible = true;
  for (std::size_t i = 0; i < n && r.feasible; ++i)
    for (std::size_t j = 0; j < m && r.feasible; ++j) r.feasible = pair.f[i] + pair.g[j] <= p.c(i, j);
  r.support_tight = true;
  std::vector<Rational> rows(n), cols(m);
  for (const auto& e : plan) {
    if (e.source >= n || e.target >= m) fail(ErrorCode::DimensionMismatch, "plan entry outside the supports");
    r.primal_cost += e.mass * p.c(e.source, e.target);
    rows[e.source] += e.mass;
    cols[e.target] += e.mass;
    if (e.mass < 0 || pair.f[e.source] + pair.g[e.target] != p.c(e.source, e.target)) r.support_tight = false;
  }
  r.marginals = rows == p.source().weights && cols == p.target().weights;
  for (std::size_t i = 0; i < n; ++i) r.dual_value += p.source().weights[i] * pair.f[i];
  for (std::size_t j = 0; j < m; ++j) r.dual_value += p.target().weights[j] * pair.g[j];
  r.optimal = r.feasible && r.support_tight && r.marginals && r.primal_cost == r.dual_value;
  return r;
}

struct ExactWitness {
  ExactPair second;
  std::size_t shifted_block = 0;
  Rational shift;
  ExactDualityReport report;
};

struct ExactCertificate {
  Verdict verdict = Verdict::Inconclusive;
  std::vector<ExactPlanEntry> plan;            // basic optimal plan
  std::vector<ExactPlanEntry> connected_plan;  // maximal-support optimal plan
  ExactPair pair;                              // c-concave, f(anchor) = 0
  std::size_t anchor = 0;
  std::size_t iterations = 0;
  std::size_t support_pushes = 0;
  BlockAssignment blocks;
  ExactDualityReport report;
  std::optional<ExactWitness> witness;
  std::vector<std::string> notes;
};

namespace detail {

inline std::vector<Rational> exact_transform(const ExactProblem& p, const std::vector<Rational>& in,
                                             Direction direction) {
  const bool to_source = direction == Direction::ToSource;
  const std::size_t out_size = to_source ? p.rows() : p.cols();
  const std::size_t in_size = to_source ? p.cols() : p.rows();
  std::vector<Rational> out(out_size);
  for (std::size_t a = 0; a < out_size; ++a)
    for (std::size_t b = 0; b < in_size; ++b) {
      const Rational v = (to_source ? p.c(a, b) : p.c(b, a)) - in[b];
      if (b == 0 || v < out[a]) out[a] = v;
    }
  return out;
}

inline std::vector<ExactPlanEntry> entries_of(const FlowNetwork<Rational>& net) {
  std::vector<ExactPlanEntry> out;
  for (std::size_t i = 0; i < net.n; ++i)
    for (std::size_t j = 0; j < net.m; ++j)
      if (net.carries(i, j)) out.push_back({i, j, net.flow[i * net.m + j]});
  return out;
}

}  // namespace detail

/// Finite-semantics uniqueness decided in exact rational arithmetic: solve,
/// spread the plan to maximal support, and count support blocks. One block
/// means unique; otherwise a shifted pair is built and verified exactly.
inline ExactCertificate certify_exact(const ExactProblem& p) {
  const std::size_t n = p.rows(), m = p.cols();
  TransportInstance<Rational> inst;
  inst.n = n;
  inst.m = m;
  inst.supply = p.source().weights;
  inst.demand = p.target().weights;
  inst.cost = p.dense_cost();
  const auto simplex = network_simplex(inst, Rational(0));

  ExactCertificate cert;
  cert.iterations = simplex.iterations;
  cert.anchor = p.anchor();
  for (const auto& e : simplex.basis)
    if (e.flow > 0) cert.plan.push_back({e.source, e.target, e.flow});
  std::sort(cert.plan.begin(), cert.plan.end(), [](const auto& a, const auto& b) {
    return std::pair(a.source, a.target) < std::pair(b.source, b.target);
  });

  cert.pair.g = detail::exact_transform(p, simplex.u, Direction::ToTarget);
  cert.pair.f = detail::exact_transform(p, cert.pair.g, Direction::ToSource);
  const Rational base = cert.pair.f[cert.anchor];
  for (auto& v : cert.pair.f) v -= base;
  for (auto& v : cert.pair.g) v += base;
  cert.report = verify_duality_exact(p, cert.plan, cert.pair);
  if (!cert.report.optimal) fail(ErrorCode::Internal, "exact solver produced a non-optimal certificate");

  FlowNetwork<Rational> net;
  net.n = n;
  net.m = m;
  for (const auto& w : p.source().weights) net.source_positive.push_back(w > 0);
  for (const auto& w : p.target().weights) net.target_positive.push_back(w > 0);
  net.cost = p.dense_cost();
  net.f = cert.pair.f;
  net.g = cert.pair.g;
  net.flow.assign(n * m, Rational(0));
  for (const auto& e : cert.plan) net.flow[e.source * m + e.target] = e.mass;
  cert.support_pushes = connect_plan(net);
  cert.connected_plan = detail::entries_of(net);
  cert.blocks = point_blocks(net);

  if (cert.blocks.count <= 1) {
    cert.verdict = Verdict::Unique;
    return cert;
  }
  const auto shift = block_shift_witness(net, cert.blocks, cert.blocks.source[cert.anchor]);
  if (!shift) {
    cert.verdict = Verdict::Inconclusive;
    cert.notes.push_back("no free block admits a feasible shift");
    return cert;
  }
  ExactWitness w;
  w.shifted_block = shift->block;
  w.shift = shift->shift;
  w.second.f = shift->f;
  w.second.g = shift->g;
  const Rational s = w.second.f[cert.anchor];
  for (auto& v : w.second.f) v -= s;
  for (auto& v : w.second.g) v += s;
  w.report = verify_duality_exact(p, cert.plan, w.second);
  bool differs = false;
  std::optional<Rational> delta;
  for (std::size_t i = 0; i < n; ++i) {
    if (p.source().weights[i] == 0) continue;
    const Rational d = w.second.f[i] - cert.pair.f[i];
    if (delta && d != *delta) differs = true;
    delta = d;
  }
  cert.verdict = w.report.optimal && differs ? Verdict::NonUnique : Verdict::Inconclusive;
  if (cert.verdict == Verdict::Inconclusive) cert.notes.push_back("candidate witness failed exact verification");
  cert.witness = std::move(w);
  return cert;
}

}  // namespace otuniq
