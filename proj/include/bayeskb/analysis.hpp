#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bayeskb/network.hpp"

namespace bayeskb {

// Probability mass below this is treated as zero support when conditioning.
inline constexpr double kZeroSupport = 1e-12;

// Brute-force enumeration refuses beyond these bounds rather than silently
// approximating.
inline constexpr std::size_t kOracleNodeCap = 20;
inline constexpr double kOracleAssignmentCap = 3e6;

// Ground term -> value name; complete for a network when every node is
// covered.
using Assignment = std::map<Term, std::string>;

namespace detail {

inline void check_oracle_cap(const GroundNetwork& net) {
  if (net.size() > kOracleNodeCap)
    fail(Errc::SizeLimit, "oracle enumeration capped at " + std::to_string(kOracleNodeCap) +
                              " nodes, network has " + std::to_string(net.size()));
  double total = 1.0;
  for (std::size_t i = 0; i < net.size(); ++i) total *= static_cast<double>(net.cardinality(i));
  if (total > kOracleAssignmentCap)
    fail(Errc::SizeLimit, "oracle enumeration capped at ~3e6 assignments");
}

inline std::vector<std::size_t> to_node_ids(const GroundNetwork& net, const std::set<Term>& s) {
  std::vector<std::size_t> out;
  out.reserve(s.size());
  for (const Term& t : s) out.push_back(net.index_of(t));
  return out;
}

inline void require_disjoint(const std::set<Term>& x, const std::set<Term>& z,
                             const std::set<Term>& y) {
  auto overlap = [](const std::set<Term>& a, const std::set<Term>& b) -> const Term* {
    for (const Term& t : a)
      if (b.count(t)) return &t;
    return nullptr;
  };
  if (const Term* t = overlap(x, y))
    fail(Errc::OverlappingSets, "'" + t->str() + "' is in both X and Y");
  if (const Term* t = overlap(x, z))
    fail(Errc::OverlappingSets, "'" + t->str() + "' is in both X and Z");
  if (const Term* t = overlap(y, z))
    fail(Errc::OverlappingSets, "'" + t->str() + "' is in both Y and Z");
}

// Joint probability of one complete assignment, given as value indices per
// node id: the product of each node's cpt entry under its parents' values.
// Factors are multiplied in the chain-rule order for reproducibility.
inline double joint_prob(const GroundNetwork& net, const std::vector<std::size_t>& vals,
                         const std::vector<std::size_t>& order) {
  double p = 1.0;
  std::vector<std::size_t> parent_vals;
  for (std::size_t i : order) {
    const auto& n = net.node(i);
    parent_vals.clear();
    for (std::size_t par : n.parents) parent_vals.push_back(vals[par]);
    p *= n.cpt->at(parent_vals, vals[i]);
  }
  return p;
}

// Enumerate value-index assignments over `free_nodes`, with all other
// entries of `vals` held fixed.
template <class Fn>
inline void for_each_assignment(const GroundNetwork& net, const std::vector<std::size_t>& free_nodes,
                                std::vector<std::size_t>& vals, Fn&& fn) {
  for (std::size_t i : free_nodes) vals[i] = 0;
  for (;;) {
    fn(vals);
    std::size_t k = free_nodes.size();
    while (k > 0) {
      std::size_t i = free_nodes[k - 1];
      if (++vals[i] < net.cardinality(i)) break;
      vals[i] = 0;
      --k;
    }
    if (k == 0) break;
  }
}

}  // namespace detail

// ---- paths ------------------------------------------------------------------

// An undirected-sense simple path. toward_next[k] records whether the edge
// between nodes[k] and nodes[k+1] points forward; an interior node with both
// adjacent edges pointing at it has converging arrows.
struct Path {
  std::vector<std::size_t> nodes;
  std::vector<bool> toward_next;

  bool collider_at(std::size_t k) const {
    return k > 0 && k + 1 < nodes.size() && toward_next[k - 1] && !toward_next[k];
  }
};

// All simple paths between two distinct nodes, found by depth-first search
// with neighbors visited in index order.
inline std::vector<Path> enumerate_paths(const GroundNetwork& net, const Term& f, const Term& g) {
  std::size_t from = net.index_of(f), to = net.index_of(g);
  if (from == to) fail(Errc::InvalidArgument, "path endpoints must be distinct");

  // neighbor list: (node, edge points from current to neighbor?)
  std::vector<std::vector<std::pair<std::size_t, bool>>> adj(net.size());
  for (std::size_t i = 0; i < net.size(); ++i) {
    for (std::size_t p : net.node(i).parents) {
      adj[i].emplace_back(p, false);
      adj[p].emplace_back(i, true);
    }
  }
  for (auto& v : adj) std::sort(v.begin(), v.end());

  std::vector<Path> out;
  std::vector<char> on_path(net.size(), 0);
  Path cur;
  cur.nodes.push_back(from);
  on_path[from] = 1;

  struct Frame {
    std::size_t node;
    std::size_t next = 0;
  };
  std::vector<Frame> stack{{from, 0}};
  while (!stack.empty()) {
    Frame& fr = stack.back();
    if (fr.next < adj[fr.node].size()) {
      auto [n, fwd] = adj[fr.node][fr.next++];
      if (on_path[n]) continue;
      cur.nodes.push_back(n);
      cur.toward_next.push_back(fwd);
      if (n == to) {
        out.push_back(cur);
        cur.nodes.pop_back();
        cur.toward_next.pop_back();
      } else {
        on_path[n] = 1;
        stack.push_back({n, 0});
      }
    } else {
      std::size_t done = fr.node;
      stack.pop_back();
      on_path[done] = 0;
      cur.nodes.pop_back();
      if (!cur.toward_next.empty()) cur.toward_next.pop_back();
    }
  }
  return out;
}

// A path is blocked by Z when some interior node W either (1) has converging
// arrows and neither W nor any of its descendants is in Z, or (2) does not
// have converging arrows and W is in Z.
inline bool path_blocked(const GroundNetwork& net, const Path& p, const std::set<std::size_t>& z) {
  for (std::size_t k = 1; k + 1 < p.nodes.size(); ++k) {
    std::size_t w = p.nodes[k];
    if (p.collider_at(k)) {
      if (z.count(w)) continue;
      bool observed_descendant = false;
      for (std::size_t d : net.descendant_ids(w))
        if (z.count(d)) {
          observed_descendant = true;
          break;
        }
      if (!observed_descendant) return true;
    } else {
      if (z.count(w)) return true;
    }
  }
  return false;
}

// Literal evaluation of d-separation by enumerating every simple path.
// Exponential; kept as the small-graph oracle for the reachability version.
inline bool d_separated_by_paths(const GroundNetwork& net, const std::set<Term>& x,
                                 const std::set<Term>& z, const std::set<Term>& y) {
  detail::require_disjoint(x, z, y);
  std::set<std::size_t> zi;
  for (const Term& t : z) zi.insert(net.index_of(t));
  for (const Term& xt : x)
    for (const Term& yt : y)
      for (const Path& p : enumerate_paths(net, xt, yt))
        if (!path_blocked(net, p, zi)) return false;
  return true;
}

// Reachability-based d-separation. Trails are explored with a direction
// state: "up" (arrived from a child, or a source) may turn anywhere while
// the node is unobserved; "down" (arrived from a parent) continues to
// children while unobserved and may turn back up through a collider exactly
// when the node has an observed descendant or is observed itself.
inline bool d_separated(const GroundNetwork& net, const std::set<Term>& x,
                        const std::set<Term>& z, const std::set<Term>& y) {
  detail::require_disjoint(x, z, y);
  std::vector<std::size_t> xi = detail::to_node_ids(net, x);
  std::vector<std::size_t> yi = detail::to_node_ids(net, y);
  std::vector<char> in_z(net.size(), 0), in_y(net.size(), 0);
  for (const Term& t : z) in_z[net.index_of(t)] = 1;
  for (std::size_t i : yi) in_y[i] = 1;

  // Z together with its ancestors: the nodes whose observation opens a
  // collider.
  std::vector<char> anc_z(net.size(), 0);
  {
    std::vector<std::size_t> queue;
    for (const Term& t : z) {
      std::size_t i = net.index_of(t);
      if (!anc_z[i]) {
        anc_z[i] = 1;
        queue.push_back(i);
      }
    }
    for (std::size_t qi = 0; qi < queue.size(); ++qi)
      for (std::size_t p : net.node(queue[qi]).parents)
        if (!anc_z[p]) {
          anc_z[p] = 1;
          queue.push_back(p);
        }
  }

  enum : int { kUp = 0, kDown = 1 };
  std::vector<char> visited(net.size() * 2, 0);
  std::vector<std::pair<std::size_t, int>> queue;
  auto push = [&](std::size_t i, int dir) {
    if (!visited[i * 2 + dir]) {
      visited[i * 2 + dir] = 1;
      queue.emplace_back(i, dir);
    }
  };
  for (std::size_t i : xi) push(i, kUp);

  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    auto [i, dir] = queue[qi];
    if (!in_z[i] && in_y[i]) return false;  // active trail reached Y
    if (dir == kUp) {
      if (!in_z[i]) {
        for (std::size_t p : net.node(i).parents) push(p, kUp);
        for (std::size_t c : net.children(i)) push(c, kDown);
      }
    } else {
      if (!in_z[i])
        for (std::size_t c : net.children(i)) push(c, kDown);
      if (anc_z[i])
        for (std::size_t p : net.node(i).parents) push(p, kUp);
    }
  }
  return true;
}

// First active path between X and Y given Z, as a witness for "not
// d-separated" verdicts. Path enumeration keeps witnesses exact; intended
// for reporting on desk-scale networks.
inline std::optional<Path> find_active_path(const GroundNetwork& net, const std::set<Term>& x,
                                            const std::set<Term>& z, const std::set<Term>& y) {
  detail::require_disjoint(x, z, y);
  std::set<std::size_t> zi;
  for (const Term& t : z) zi.insert(net.index_of(t));
  for (const Term& xt : x)
    for (const Term& yt : y)
      for (const Path& p : enumerate_paths(net, xt, yt))
        if (!path_blocked(net, p, zi)) return p;
  return std::nullopt;
}

// ---- brute-force distribution oracle ---------------------------------------

// Joint probability of a complete assignment: the product over all nodes of
// the stored conditional probability of the node's value given its parents'
// values.
inline double joint_oracle(const GroundNetwork& net, const Assignment& a) {
  for (const auto& [t, v] : a) net.index_of(t);
  std::vector<std::size_t> vals(net.size());
  for (std::size_t i = 0; i < net.size(); ++i) {
    auto it = a.find(net.node(i).term);
    if (it == a.end())
      fail(Errc::IncompleteAssignment,
           "assignment misses node '" + net.node(i).term.str() + "'");
    vals[i] = net.node(i).term.range()->require_index(it->second);
  }
  return detail::joint_prob(net, vals, net.chain_rule_order());
}

// Exact conditional distribution over the joint value combinations of
// `targets` (given in order, last target varying fastest), by full
// enumeration. nullopt when the conditioning event has ~zero probability.
inline std::optional<std::vector<double>> marginal_oracle(const GroundNetwork& net,
                                                          const std::vector<Term>& targets,
                                                          const Assignment& given) {
  detail::check_oracle_cap(net);
  std::vector<std::size_t> ti;
  for (const Term& t : targets) ti.push_back(net.index_of(t));
  std::vector<std::size_t> vals(net.size(), 0);
  std::vector<char> fixed(net.size(), 0);
  for (const auto& [t, v] : given) {
    std::size_t i = net.index_of(t);
    for (std::size_t x : ti)
      if (x == i) fail(Errc::OverlappingSets, "'" + t.str() + "' is both target and given");
    vals[i] = net.node(i).term.range()->require_index(v);
    fixed[i] = 1;
  }
  std::vector<std::size_t> free_nodes;
  for (std::size_t i = 0; i < net.size(); ++i)
    if (!fixed[i]) free_nodes.push_back(i);

  std::size_t combos = 1;
  for (std::size_t i : ti) combos *= net.cardinality(i);
  std::vector<double> num(combos, 0.0);
  double den = 0.0;
  const std::vector<std::size_t> order = net.chain_rule_order();
  detail::for_each_assignment(net, free_nodes, vals, [&](const std::vector<std::size_t>& v) {
    double p = detail::joint_prob(net, v, order);
    den += p;
    std::size_t key = 0;
    for (std::size_t i : ti) key = key * net.cardinality(i) + v[i];
    num[key] += p;
  });
  if (den <= kZeroSupport) return std::nullopt;
  for (double& x : num) x /= den;
  return num;
}

// Conditional-independence test against the enumeration oracle: X and Y are
// independent given Z when, for every value combination with supported
// conditioning event, P(X|Y,Z) and P(X|Z) agree within tol.
inline bool ci_oracle(const GroundNetwork& net, const std::set<Term>& x, const std::set<Term>& y,
                      const std::set<Term>& z, double tol = 1e-9) {
  detail::require_disjoint(x, z, y);
  detail::check_oracle_cap(net);
  std::vector<std::size_t> xi = detail::to_node_ids(net, x);
  std::vector<std::size_t> yi = detail::to_node_ids(net, y);
  std::vector<std::size_t> zi = detail::to_node_ids(net, z);

  std::size_t nx = 1, ny = 1, nz = 1;
  for (std::size_t i : xi) nx *= net.cardinality(i);
  for (std::size_t i : yi) ny *= net.cardinality(i);
  for (std::size_t i : zi) nz *= net.cardinality(i);

  // One enumeration pass accumulates P(x,y,z) for all combinations.
  std::vector<double> pxyz(nx * ny * nz, 0.0);
  std::vector<std::size_t> all(net.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::vector<std::size_t> vals(net.size(), 0);
  const std::vector<std::size_t> order = net.chain_rule_order();
  auto key_of = [&](const std::vector<std::size_t>& v, const std::vector<std::size_t>& ids) {
    std::size_t key = 0;
    for (std::size_t i : ids) key = key * net.cardinality(i) + v[i];
    return key;
  };
  detail::for_each_assignment(net, all, vals, [&](const std::vector<std::size_t>& v) {
    double p = detail::joint_prob(net, v, order);
    std::size_t k = (key_of(v, xi) * ny + key_of(v, yi)) * nz + key_of(v, zi);
    pxyz[k] += p;
  });

  std::vector<double> pyz(ny * nz, 0.0), pxz(nx * nz, 0.0), pz(nz, 0.0);
  for (std::size_t ix = 0; ix < nx; ++ix)
    for (std::size_t iy = 0; iy < ny; ++iy)
      for (std::size_t iz = 0; iz < nz; ++iz) {
        double p = pxyz[(ix * ny + iy) * nz + iz];
        pyz[iy * nz + iz] += p;
        pxz[ix * nz + iz] += p;
        pz[iz] += p;
      }

  for (std::size_t ix = 0; ix < nx; ++ix)
    for (std::size_t iy = 0; iy < ny; ++iy)
      for (std::size_t iz = 0; iz < nz; ++iz) {
        double yz = pyz[iy * nz + iz];
        if (yz <= kZeroSupport) continue;
        double lhs = pxyz[(ix * ny + iy) * nz + iz] / yz;
        double rhs = pxz[ix * nz + iz] / pz[iz];
        if (std::abs(lhs - rhs) > tol) return false;
      }
  return true;
}

// Local Markov check: every node must be independent of each non-successor
// (other than its direct predecessors) given its direct predecessors.
// Returns the violating pairs; empty on any network generated from a
// validated knowledge base.
inline std::vector<std::pair<Term, Term>> markov_check(const GroundNetwork& net,
                                                       double tol = 1e-9) {
  std::vector<std::pair<Term, Term>> failures;
  for (std::size_t i = 0; i < net.size(); ++i) {
    const Term& t = net.node(i).term;
    std::set<Term> parents;
    std::set<std::size_t> parent_ids;
    for (std::size_t p : net.node(i).parents) {
      parents.insert(net.node(p).term);
      parent_ids.insert(p);
    }
    std::set<std::size_t> succ = net.descendant_ids(i);
    for (std::size_t u = 0; u < net.size(); ++u) {
      if (u == i || succ.count(u) || parent_ids.count(u)) continue;
      if (!ci_oracle(net, {t}, {net.node(u).term}, parents, tol))
        failures.emplace_back(t, net.node(u).term);
    }
  }
  return failures;
}

}  // namespace bayeskb
