#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "decompose.hpp"
#include "finite_structure.hpp"
#include "oracle.hpp"
#include "solver.hpp"
#include "transport.hpp"
#include "union_find.hpp"

namespace otuniq {

enum class Verdict { Unique, NonUnique, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Unique: return "unique";
    case Verdict::NonUnique: return "non_unique";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

/// How components are read. `Finite` treats every point as its own piece and
/// decides uniqueness of the finite dual exactly; the decomposition only feeds
/// the component-level evidence. `Continuum` treats each component as a
/// connected piece whose potential is determined up to a constant, as for a
/// discretised continuum support, and links components through target
/// components.
enum class Semantics { Finite, Continuum };

inline const char* to_string(Semantics s) { return s == Semantics::Finite ? "finite" : "continuum"; }

// ---------------------------------------------------------------- flow graph

struct FlowEdge {
  std::size_t source = 0;  // source component
  std::size_t target = 0;  // target component
  double mass = 0;
};

struct ComponentFlowGraph {
  std::vector<double> source_mass;
  std::vector<double> target_mass;
  std::vector<FlowEdge> edges;  // sorted, positive mass
};

inline ComponentFlowGraph component_flow_graph(const Problem& p, const TransportPlan& plan,
                                               const ComponentDecomposition& d) {
  const auto so = ComponentDecomposition::owner(d.source_components, p.source.size());
  const auto to = ComponentDecomposition::owner(d.target_components, p.target.size());
  ComponentFlowGraph g;
  g.source_mass.assign(d.source_components.size(), 0.0);
  g.target_mass.assign(d.target_components.size(), 0.0);
  for (std::size_t i = 0; i < p.source.size(); ++i) g.source_mass[so[i]] += p.source.weight(i);
  for (std::size_t j = 0; j < p.target.size(); ++j) g.target_mass[to[j]] += p.target.weight(j);
  std::map<std::pair<std::size_t, std::size_t>, double> mass;
  for (const auto& e : plan.entries()) mass[{so[e.source], to[e.target]}] += e.mass;
  for (const auto& [k, v] : mass) g.edges.push_back({k.first, k.second, v});
  return g;
}

struct DegeneracyResult {
  bool degenerate = false;
  std::vector<std::size_t> sources;  // I'
  std::vector<std::size_t> targets;  // J'
};

/// The flow graph is degenerate iff it is disconnected. The returned block is
/// the first connected component that does not contain source component 0.
inline DegeneracyResult plan_degeneracy_check(const ComponentFlowGraph& g) {
  const std::size_t ni = g.source_mass.size(), nj = g.target_mass.size();
  UnionFind uf(ni + nj);
  for (const auto& e : g.edges) uf.unite(e.source, ni + e.target);
  DegeneracyResult r;
  if (uf.sets() <= 1) return r;
  r.degenerate = true;
  const std::size_t home = uf.find(0);
  std::size_t pick = kNoBlock;
  for (std::size_t v = 0; v < ni + nj && pick == kNoBlock; ++v)
    if (uf.find(v) != home) pick = uf.find(v);
  for (std::size_t v = 0; v < ni + nj; ++v)
    if (uf.find(v) == pick) (v < ni ? r.sources : r.targets).push_back(v < ni ? v : v - ni);
  return r;
}

/// Direct search for subsets (I', J'), neither both empty nor both full, such
/// that no mass flows between I' and the complement of J' or between the
/// complement of I' and J'. Exponential; for small graphs only.
inline std::optional<DegeneracyResult> degenerate_by_enumeration(const ComponentFlowGraph& g) {
  const std::size_t ni = g.source_mass.size(), nj = g.target_mass.size();
  if (ni + nj > 24) fail(ErrorCode::TooManyComponents, "subset enumeration is capped at 24 nodes");
  const unsigned full_i = (1u << ni) - 1, full_j = (1u << nj) - 1;
  for (unsigned si = 0; si <= full_i; ++si)
    for (unsigned sj = 0; sj <= full_j; ++sj) {
      if ((si == 0 && sj == 0) || (si == full_i && sj == full_j)) continue;
      bool split = true;
      for (const auto& e : g.edges)
        if (((si >> e.source) & 1u) != ((sj >> e.target) & 1u)) { split = false; break; }
      if (!split) continue;
      DegeneracyResult r{true, {}, {}};
      for (std::size_t a = 0; a < ni; ++a)
        if (si >> a & 1u) r.sources.push_back(a);
      for (std::size_t b = 0; b < nj; ++b)
        if (sj >> b & 1u) r.targets.push_back(b);
      return r;
    }
  return std::nullopt;
}

// -------------------------------------------------------- marginal masses

inline constexpr std::size_t kSubsetCap = 26;

struct MarginalDegeneracy {
  bool degenerate = false;
  std::vector<std::size_t> sources;  // the closest pair (I', J')
  std::vector<std::size_t> targets;
  double min_gap = std::numeric_limits<double>::infinity();
  bool knife_edge = false;           // min_gap below 10 * tol.mass
};

/// Smallest |mu(I') - nu(J')| over nonempty I', J' other than (I, J).
/// Meet in the middle over the signed list (mu, -nu): each half keeps its
/// subset sums bucketed by which sides they touch.
inline MarginalDegeneracy marginal_degeneracy_check(const std::vector<double>& mu_masses,
                                                    const std::vector<double>& nu_masses,
                                                    const Tolerances& tol = {}) {
  const std::size_t ni = mu_masses.size(), nj = nu_masses.size(), total = ni + nj;
  if (total > kSubsetCap)
    fail(ErrorCode::TooManyComponents, std::to_string(total) + " components exceed the subset cap of " +
                                           std::to_string(kSubsetCap));
  std::vector<double> signed_mass(mu_masses);
  for (double v : nu_masses) signed_mass.push_back(-v);
  const std::size_t h1 = total / 2, h2 = total - h1;
  auto side_class = [&](std::uint64_t mask, std::size_t offset, std::size_t len) {
    int cls = 0;
    for (std::size_t k = 0; k < len; ++k)
      if (mask >> k & 1u) cls |= offset + k < ni ? 1 : 2;
    return cls;
  };
  struct Entry {
    double sum;
    std::uint32_t mask;
  };
  auto sums = [&](std::size_t offset, std::size_t len) {
    std::vector<Entry> out(std::size_t{1} << len);
    for (std::uint32_t mask = 0; mask < out.size(); ++mask) {
      double s = 0;
      for (std::size_t k = 0; k < len; ++k)
        if (mask >> k & 1u) s += signed_mass[offset + k];
      out[mask] = {s, mask};
    }
    return out;
  };
  const auto left = sums(0, h1);
  std::vector<std::vector<Entry>> right(4);
  for (const auto& e : sums(h1, h2)) right[side_class(e.mask, h1, h2)].push_back(e);
  for (auto& bucket : right)
    std::sort(bucket.begin(), bucket.end(), [](const Entry& a, const Entry& b) {
      return a.sum < b.sum || (a.sum == b.sum && a.mask < b.mask);
    });
  const std::uint32_t full_left = static_cast<std::uint32_t>((std::uint64_t{1} << h1) - 1);
  const std::uint32_t full_right = static_cast<std::uint32_t>((std::uint64_t{1} << h2) - 1);

  MarginalDegeneracy r;
  std::uint32_t best_l = 0, best_r = 0;
  for (const auto& l : left) {
    const int cl = side_class(l.mask, 0, h1);
    for (int cr = 0; cr < 4; ++cr) {
      if ((cl | cr) != 3) continue;
      const auto& bucket = right[cr];
      if (bucket.empty()) continue;
      const auto pos = std::lower_bound(bucket.begin(), bucket.end(), -l.sum,
                                        [](const Entry& e, double v) { return e.sum < v; }) - bucket.begin();
      for (std::ptrdiff_t k = pos - 2; k <= pos + 1; ++k) {
        if (k < 0 || k >= static_cast<std::ptrdiff_t>(bucket.size())) continue;
        const auto& rr = bucket[static_cast<std::size_t>(k)];
        if (l.mask == full_left && rr.mask == full_right) continue;
        const double gap = std::abs(l.sum + rr.sum);
        if (gap < r.min_gap) {
          r.min_gap = gap;
          best_l = l.mask;
          best_r = rr.mask;
        }
      }
    }
  }
  if (std::isinf(r.min_gap)) return r;  // one side is empty or the only pair is (I, J)
  for (std::size_t k = 0; k < total; ++k) {
    const bool in = k < h1 ? (best_l >> k & 1u) : (best_r >> (k - h1) & 1u);
    if (!in) continue;
    if (k < ni) r.sources.push_back(k);
    else r.targets.push_back(k - ni);
  }
  r.degenerate = r.min_gap <= tol.mass;
  r.knife_edge = r.min_gap < 10 * tol.mass;
  return r;
}

// ---------------------------------------------------------- contact links

struct ContactLink {
  std::size_t first = 0;   // source component i1
  std::size_t second = 0;  // source component i2
  std::size_t group = 0;   // target group through which they touch
  std::size_t first_source = 0, first_target = 0;    // (x, y) in the support from i1
  std::size_t second_source = 0, second_target = 0;  // (x', y') in the support from i2
  double delta = 0;        // a_{i1} - a_{i2}
  bool in_forest = false;
};

/// Links between source components that send mass into the same target
/// group. With single-point groups this is shared-column detection; with
/// larger groups the nearest pair of receiving points stands in for a contact
/// point. `source_owner` maps points to components (kNoBlock to ignore).
inline std::vector<ContactLink> build_contact_links(const Problem& p, const TransportPlan& plan,
                                                    const std::vector<std::size_t>& source_owner,
                                                    const std::vector<std::size_t>& target_group) {
  // For each (group, component): receiving targets with one sending source each.
  std::map<std::pair<std::size_t, std::size_t>, std::map<std::size_t, std::size_t>> recv;
  for (const auto& e : plan.entries()) {
    const std::size_t comp = source_owner[e.source];
    if (comp == kNoBlock) continue;
    recv[{target_group[e.target], comp}].try_emplace(e.target, e.source);
  }
  std::map<std::size_t, std::vector<std::size_t>> senders;
  for (const auto& [key, _] : recv) senders[key.first].push_back(key.second);

  std::vector<ContactLink> links;
  for (const auto& [group, comps] : senders)
    for (std::size_t a = 0; a < comps.size(); ++a)
      for (std::size_t b = a + 1; b < comps.size(); ++b) {
        const auto& ra = recv.at({group, comps[a]});
        const auto& rb = recv.at({group, comps[b]});
        ContactLink best;
        double best_d = std::numeric_limits<double>::infinity();
        for (const auto& [ya, xa] : ra)
          for (const auto& [yb, xb] : rb) {
            const double d = ya == yb ? 0.0 : CostSpec::euclidean(p.target.point(ya), p.target.point(yb));
            if (d < best_d) {
              best_d = d;
              best = {comps[a], comps[b], group, xa, ya, xb, yb, 0.0, false};
            }
          }
        links.push_back(best);
      }
  return links;
}

struct OffsetResult {
  std::vector<double> offsets;       // per component, NaN where inactive
  std::vector<std::size_t> block;    // link-graph block per component, kNoBlock if inactive
  std::size_t blocks = 0;
  double max_cycle_residual = 0;

  std::size_t freedom_dim() const { return blocks == 0 ? 0 : blocks - 1; }
};

/// Offsets a_i that glue per-component potentials into one: along each link,
/// a_{i1} - a_{i2} = (c(x, y) - f_{i1}(x)) - (c(x', y') - f_{i2}(x')).
/// Deltas are propagated over a breadth-first spanning forest rooted first at
/// `anchor_component` (a = 0 there) and then at the lowest unreached
/// component of each remaining block. Other links are checked against the
/// propagated offsets; with `strict` a mismatch above `cycle_tol` throws.
inline OffsetResult propagate_offsets(std::vector<ContactLink>& links, const std::vector<double>& component_f,
                                      const BoundCost& cost, const std::vector<char>& active,
                                      std::size_t anchor_component, double cycle_tol, bool strict) {
  const std::size_t k = active.size();
  for (auto& l : links)
    l.delta = (cost(l.first_source, l.first_target) - component_f[l.first_source]) -
              (cost(l.second_source, l.second_target) - component_f[l.second_source]);
  std::vector<std::vector<std::size_t>> adj(k);
  for (std::size_t e = 0; e < links.size(); ++e) {
    adj[links[e].first].push_back(e);
    adj[links[e].second].push_back(e);
  }
  OffsetResult r;
  r.offsets.assign(k, std::numeric_limits<double>::quiet_NaN());
  r.block.assign(k, kNoBlock);
  std::vector<std::size_t> roots{anchor_component};
  for (std::size_t c = 0; c < k; ++c) roots.push_back(c);
  for (std::size_t root : roots) {
    if (root >= k || !active[root] || r.block[root] != kNoBlock) continue;
    r.block[root] = r.blocks;
    r.offsets[root] = 0;
    std::vector<std::size_t> queue{root};
    for (std::size_t h = 0; h < queue.size(); ++h) {
      const std::size_t c = queue[h];
      for (std::size_t e : adj[c]) {
        auto& l = links[e];
        const std::size_t other = l.first == c ? l.second : l.first;
        if (r.block[other] != kNoBlock) continue;
        r.block[other] = r.blocks;
        r.offsets[other] = l.first == c ? r.offsets[c] - l.delta : r.offsets[c] + l.delta;
        l.in_forest = true;
        queue.push_back(other);
      }
    }
    ++r.blocks;
  }
  for (const auto& l : links) {
    if (l.in_forest) continue;
    const double residual = std::abs(r.offsets[l.first] - r.offsets[l.second] - l.delta);
    r.max_cycle_residual = std::max(r.max_cycle_residual, residual);
    if (strict && residual > cycle_tol)
      fail(ErrorCode::InconsistentCycle, "offsets around a cycle through components " + std::to_string(l.first) +
                                             " and " + std::to_string(l.second) + " disagree by " +
                                             std::to_string(residual));
  }
  return r;
}

// ------------------------------------------------------------ certificate

struct WitnessPair {
  PotentialPair first;
  PotentialPair second;
  std::size_t shifted_block = 0;
  double shift = 0;
  DualityReport first_report;
  DualityReport second_report;
  double difference_range = 0;  // max - min of (second.f - first.f) over positive-mass sources
};

struct ComponentStatus {
  std::size_t index = 0;
  double mass = 0;
  std::string status;  // singleton | asserted | unique | non_unique | zero_mass
};

struct OracleCheck {
  bool ran = false;
  std::optional<DualFaceReport> face;
  std::optional<ConnectivityReport> connectivity;
  bool agrees = true;
  std::string note;
};

struct UniquenessCertificate {
  Verdict verdict = Verdict::Inconclusive;
  Semantics semantics = Semantics::Finite;
  std::string method;
  SolveResult solved;
  TransportPlan connected_plan;
  std::size_t support_pushes = 0;
  ComponentDecomposition decomposition;
  ComponentFlowGraph flow_graph;
  DegeneracyResult plan_degeneracy;
  std::optional<MarginalDegeneracy> marginal;
  std::vector<ComponentStatus> components;
  std::vector<ContactLink> links;
  OffsetResult offsets;
  std::size_t freedom_dim = 0;
  std::vector<std::vector<std::size_t>> free_blocks;  // source components per link block
  double glue_deviation = 0;
  std::optional<WitnessPair> witness;
  OracleCheck oracle;
  std::string corollary_case;
  std::vector<std::string> notes;
};

struct CertifyOptions {
  std::optional<DecompositionMethod> method;
  Semantics semantics = Semantics::Finite;
  bool oracle = true;
  Tolerances tol;
};

namespace detail {

inline Partition singletons(std::size_t n) {
  Partition p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = {i};
  return p;
}

inline FlowNetwork<double> flow_network(const Problem& p, const SolveResult& s, const Tolerances& tol) {
  const auto cost = p.bound();
  FlowNetwork<double> net;
  net.n = p.source.size();
  net.m = p.target.size();
  for (double w : p.source.weights()) net.source_positive.push_back(w > 0);
  for (double w : p.target.weights()) net.target_positive.push_back(w > 0);
  net.cost = cost.dense();
  net.f = s.pair.f;
  net.g = s.pair.g;
  net.flow.assign(net.n * net.m, 0.0);
  for (const auto& e : s.plan.entries()) net.flow[e.source * net.m + e.target] = e.mass;
  net.tight_tol = tol.tight(cost.max_abs());
  return net;
}

inline TransportPlan plan_of(const FlowNetwork<double>& net) {
  std::vector<PlanEntry> e;
  for (std::size_t i = 0; i < net.n; ++i)
    for (std::size_t j = 0; j < net.m; ++j)
      if (net.carries(i, j)) e.push_back({i, j, net.flow[i * net.m + j]});
  return TransportPlan(net.n, net.m, std::move(e));
}

/// Range of a - b over positive-mass sources.
inline double difference_range(const std::vector<double>& a, const std::vector<double>& b,
                               const DiscreteMeasure& mu) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu.weight(i) > 0) {
      lo = std::min(lo, a[i] - b[i]);
      hi = std::max(hi, a[i] - b[i]);
    }
  return hi - lo;
}

}  // namespace detail

/// Decides whether the normalised Kantorovich potential is unique and
/// assembles the evidence: component flow graph, degeneracy checks, contact
/// links with glued offsets, and for non-uniqueness a verified second
/// optimal pair.
inline UniquenessCertificate certify(const Problem& p, const CertifyOptions& opt = {}) {
  const auto& tol = opt.tol;
  UniquenessCertificate cert;
  cert.semantics = opt.semantics;
  if (opt.semantics == Semantics::Continuum && !opt.method)
    fail(ErrorCode::MissingEpsilon, "continuum semantics needs labels or an epsilon");

  cert.solved = solve(p, tol);
  const auto cost = p.bound();
  auto net = detail::flow_network(p, cert.solved, tol);
  cert.support_pushes = connect_plan(net);
  cert.connected_plan = detail::plan_of(net);

  if (opt.method) {
    cert.decomposition = decompose(p, *opt.method);
    cert.method = describe(*opt.method);
  } else {
    cert.decomposition = {detail::singletons(p.source.size()), detail::singletons(p.target.size()), ExplicitLabels{}};
    cert.method = "points";
  }
  const auto& dec = cert.decomposition;
  cert.flow_graph = component_flow_graph(p, cert.connected_plan, dec);
  cert.plan_degeneracy = plan_degeneracy_check(cert.flow_graph);
  try {
    cert.marginal = marginal_degeneracy_check(cert.flow_graph.source_mass, cert.flow_graph.target_mass, tol);
    if (cert.marginal->knife_edge && !cert.marginal->degenerate)
      cert.notes.push_back("degeneracy margin: closest subset-mass collision gap " +
                           std::to_string(cert.marginal->min_gap));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TooManyComponents) throw;
    cert.notes.push_back("marginal degeneracy check skipped: " + std::string(e.what()));
  }

  bool singleton_targets = true;
  for (const auto& t : dec.target_components) singleton_targets = singleton_targets && t.size() == 1;
  cert.corollary_case = singleton_targets ? "single_point_targets" : "connected_targets";

  // Pieces used for linking: points (finite) or components (continuum).
  const bool finite = opt.semantics == Semantics::Finite;
  const Partition pieces = finite ? detail::singletons(p.source.size()) : dec.source_components;
  std::vector<std::size_t> source_owner = ComponentDecomposition::owner(pieces, p.source.size());
  const auto group = finite ? ComponentDecomposition::owner(detail::singletons(p.target.size()), p.target.size())
                            : ComponentDecomposition::owner(dec.target_components, p.target.size());

  std::vector<char> active(pieces.size(), 0);
  std::vector<double> piece_mass(pieces.size(), 0.0);
  for (std::size_t i = 0; i < p.source.size(); ++i) piece_mass[source_owner[i]] += p.source.weight(i);
  for (std::size_t c = 0; c < pieces.size(); ++c) active[c] = piece_mass[c] > 0;
  for (std::size_t i = 0; i < p.source.size(); ++i)
    if (!active[source_owner[i]]) source_owner[i] = kNoBlock;

  // Per-piece potentials, each shifted to vanish at the piece's anchor.
  std::vector<double> piece_f(p.source.size(), 0.0);
  if (!finite) {
    const auto parts = decompose_potential(p, cert.solved.pair, pieces, cert.connected_plan);
    for (const auto& part : parts) {
      ComponentStatus st{part.component, piece_mass[part.component],
                         part.skipped ? "zero_mass" : (pieces[part.component].size() == 1 ? "singleton" : "asserted")};
      cert.components.push_back(st);
      if (part.skipped) continue;
      const auto& r = *part.restricted;
      const std::size_t local_anchor = r.problem.source.anchor();
      for (std::size_t k = 0; k < r.source_index.size(); ++k)
        piece_f[r.source_index[k]] = part.pair.f[k] - part.pair.f[local_anchor];
    }
    cert.notes.push_back("continuum reading: each component is taken as connected with a potential fixed up to a constant; "
                         "continuity of f^c and connectedness of supp nu on target components are not checked at finite scale");
  } else if (opt.method) {
    // Evidence only: exact verdict of each component's restricted problem.
    for (std::size_t c = 0; c < dec.source_components.size(); ++c) {
      ComponentStatus st{c, cert.flow_graph.source_mass[c], "zero_mass"};
      if (st.mass > 0) {
        if (dec.source_components[c].size() == 1) {
          st.status = "singleton";
        } else {
          const auto r = restrict_partial(p, cert.connected_plan, dec.source_components[c]);
          CertifyOptions sub;
          sub.oracle = false;
          sub.tol = tol;
          st.status = to_string(certify(r.problem, sub).verdict);
        }
      }
      cert.components.push_back(st);
    }
  }

  const std::size_t anchor_piece = source_owner[cert.solved.anchor];
  cert.links = build_contact_links(p, cert.connected_plan, source_owner, group);
  cert.offsets = propagate_offsets(cert.links, piece_f, cost, active, anchor_piece,
                                   tol.tight(cost.max_abs()), finite);
  cert.freedom_dim = cert.offsets.freedom_dim();
  cert.free_blocks.assign(cert.offsets.blocks, {});
  for (std::size_t c = 0; c < pieces.size(); ++c)
    if (cert.offsets.block[c] != kNoBlock) cert.free_blocks[cert.offsets.block[c]].push_back(c);

  for (std::size_t i = 0; i < p.source.size(); ++i) {
    const std::size_t c = source_owner[i];
    if (c == kNoBlock || cert.offsets.block[c] != cert.offsets.block[anchor_piece]) continue;
    cert.glue_deviation =
        std::max(cert.glue_deviation, std::abs(piece_f[i] + cert.offsets.offsets[c] - cert.solved.pair.f[i]));
  }

  if (cert.freedom_dim == 0) {
    cert.verdict = Verdict::Unique;
  } else {
    BlockAssignment blocks;
    blocks.count = cert.offsets.blocks;
    blocks.source.assign(p.source.size(), kNoBlock);
    blocks.target.assign(p.target.size(), kNoBlock);
    for (std::size_t i = 0; i < p.source.size(); ++i)
      if (source_owner[i] != kNoBlock) blocks.source[i] = cert.offsets.block[source_owner[i]];
    for (const auto& e : cert.connected_plan.entries())
      if (p.target.weight(e.target) > 0) blocks.target[e.target] = blocks.source[e.source];
    const auto shift = block_shift_witness(net, blocks, cert.offsets.block[anchor_piece]);
    if (!shift) {
      cert.verdict = Verdict::Inconclusive;
      cert.notes.push_back("no free block admits a feasible shift; tight edges between blocks form a cycle");
    } else {
      WitnessPair w;
      w.first = cert.solved.pair;
      w.second = PotentialPair{shift->f, shift->g}.shifted(-shift->f[cert.solved.anchor]);
      w.shifted_block = shift->block;
      w.shift = shift->shift;
      w.first_report = verify_duality(p, cert.solved.plan, w.first, tol);
      w.second_report = verify_duality(p, cert.solved.plan, w.second, tol);
      w.difference_range = detail::difference_range(w.second.f, w.first.f, p.source);
      const bool ok = w.first_report.optimal && w.second_report.optimal &&
                      w.difference_range > tol.face(cost.max_abs());
      cert.verdict = ok ? Verdict::NonUnique : Verdict::Inconclusive;
      if (!ok) cert.notes.push_back("candidate witness failed verification");
      cert.witness = std::move(w);
    }
  }

  if (opt.oracle) {
    cert.oracle.ran = true;
    cert.oracle.connectivity = tight_graph_connectivity_oracle(p, cert.solved, tol);
    try {
      cert.oracle.face = dual_face_oracle(p, cert.solved, tol);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::OracleLimit) throw;
      cert.oracle.note = e.what();
    }
    if (finite) {
      const bool structural = cert.verdict == Verdict::Unique;
      cert.oracle.agrees = cert.verdict != Verdict::Inconclusive &&
                           cert.oracle.connectivity->unique == structural &&
                           (!cert.oracle.face || cert.oracle.face->unique == structural);
    } else {
      cert.oracle.note = "oracles decide the finite problem; under the continuum reading they are reference values";
    }
  }
  return cert;
}

// ----------------------------------------------------- ambiguity witness

struct AmbiguitySample {
  double a = 0;
  double b = 0;
  PotentialPair pair;
  DualityReport report;
};

struct AmbiguityWitness {
  double delta = 0;                 // smallest cost between the two components
  std::size_t first_component = 0;  // component holding the normalisation anchor
  std::vector<AmbiguitySample> samples;
  bool all_optimal = false;
  std::optional<double> oracle_spread;  // smallest dual-face spread over the other component
};

/// The family f = a on one component and b on the other, g = -f, for a
/// self-coupled problem with symmetric cost vanishing on the diagonal. Every
/// member with |a - b| <= delta is optimal for the identity plan. Samples
/// a = 0 and b evenly spaced in [-delta, delta].
inline AmbiguityWitness ambiguity_witness(const Problem& p, const Partition& components, std::size_t samples = 25,
                                          bool with_oracle = true, const Tolerances& tol = {}) {
  if (p.source.points() != p.target.points() || p.source.weights() != p.target.weights())
    fail(ErrorCode::NotSelfCoupled, "the witness family needs nu = mu");
  if (components.size() != 2)
    fail(ErrorCode::WrongComponentCount, "expected 2 components, got " + std::to_string(components.size()));
  if (samples < 2) fail(ErrorCode::Parse, "need at least 2 samples");
  const auto cost = p.bound();
  const double scale = tol.tight(cost.max_abs());
  for (std::size_t i = 0; i < cost.rows(); ++i) {
    if (std::abs(cost(i, i)) > scale) fail(ErrorCode::NotSymmetric, "cost does not vanish on the diagonal");
    for (std::size_t j = i + 1; j < cost.cols(); ++j)
      if (std::abs(cost(i, j) - cost(j, i)) > scale) fail(ErrorCode::NotSymmetric, "cost is not symmetric");
  }
  AmbiguityWitness w;
  const std::size_t anchor = p.source.anchor();
  w.first_component = std::find(components[1].begin(), components[1].end(), anchor) != components[1].end() ? 1 : 0;
  const auto& near = components[w.first_component];
  const auto& far = components[1 - w.first_component];
  w.delta = std::numeric_limits<double>::infinity();
  for (std::size_t i : near)
    for (std::size_t j : far) w.delta = std::min(w.delta, cost(i, j));

  const auto plan = TransportPlan::identity(p.source);
  w.all_optimal = true;
  for (std::size_t k = 0; k < samples; ++k) {
    AmbiguitySample s;
    s.b = -w.delta + 2 * w.delta * double(k) / double(samples - 1);
    s.pair.f.assign(p.source.size(), s.a);
    for (std::size_t i : far) s.pair.f[i] = s.b;
    s.pair.g = s.pair.f;
    for (double& v : s.pair.g) v = -v;
    s.report = verify_duality(p, plan, s.pair, tol);
    w.all_optimal = w.all_optimal && s.report.optimal;
    w.samples.push_back(std::move(s));
  }
  if (with_oracle) {
    const auto solved = solve(p, tol);
    const auto face = dual_face_oracle(p, solved, tol);
    for (std::size_t i : far)
      if (p.source.weight(i) > 0)
        w.oracle_spread = std::min(w.oracle_spread.value_or(std::numeric_limits<double>::infinity()), face.spread(i));
  }
  return w;
}

// ------------------------------------------------------ pair agreement

struct AgreementReport {
  bool on_plan_projections = false;
  bool on_source = false;
  bool on_target = false;
};

/// Compares two pairs after normalising both at the solver anchor: on the
/// points touched by the plan, on all positive-mass sources, and on all
/// positive-mass targets.
inline AgreementReport pairs_agree(const Problem& p, const TransportPlan& plan, const PotentialPair& a,
                                   const PotentialPair& b, double tol) {
  const std::size_t anchor = p.source.anchor();
  const auto na = a.shifted(-a.f[anchor]), nb = b.shifted(-b.f[anchor]);
  auto close = [&](double x, double y) { return std::abs(x - y) <= tol; };
  AgreementReport r{true, true, true};
  for (const auto& e : plan.entries())
    r.on_plan_projections = r.on_plan_projections && close(na.f[e.source], nb.f[e.source]) &&
                            close(na.g[e.target], nb.g[e.target]);
  for (std::size_t i = 0; i < p.source.size(); ++i)
    if (p.source.weight(i) > 0) r.on_source = r.on_source && close(na.f[i], nb.f[i]);
  for (std::size_t j = 0; j < p.target.size(); ++j)
    if (p.target.weight(j) > 0) r.on_target = r.on_target && close(na.g[j], nb.g[j]);
  return r;
}

}  // namespace otuniq
