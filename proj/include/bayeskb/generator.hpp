#pragma once

#include <set>
#include <utility>
#include <vector>

#include "bayeskb/core.hpp"
#include "bayeskb/network.hpp"

namespace bayeskb {

// The unique rule whose consequent matches the ground term, with the
// matching binding. Uniqueness is what C3 buys; on an unvalidated knowledge
// base the first match in declaration order wins.
inline std::pair<const Rule*, Binding> find_rule_for(const KnowledgeBase& kb, const Term& g) {
  for (const Rule& r : kb.rules())
    if (auto b = match(r.consequent, g)) return {&r, std::move(*b)};
  fail(Errc::MissingRule, "no rule's consequent matches '" + g.str() + "'");
}

namespace detail {

inline std::size_t chain(const KnowledgeBase& kb, const Term& g, GroundNetwork& net,
                         std::set<Term>& expanding) {
  if (net.contains(g)) return net.index_of(g);
  if (!expanding.insert(g).second)
    fail(Errc::CycleDetected, "ground dependency cycle through '" + g.str() + "'");
  auto [rule, binding] = find_rule_for(kb, g);
  GroundRuleInstance inst = rule_ground_instance(*rule, binding);
  std::vector<std::size_t> parents;
  parents.reserve(inst.antecedents.size());
  for (const Term& a : inst.antecedents) parents.push_back(chain(kb, a, net, expanding));
  expanding.erase(g);
  return net.add_node(g, std::move(parents), inst.matrix, inst.rule_id);
}

}  // namespace detail

// Add the ground term and its full predecessor closure to the network.
// Terms already present are shared, not duplicated; repeated calls with the
// same term are no-ops.
inline std::size_t backward_chain(const KnowledgeBase& kb, const Term& g, GroundNetwork& net) {
  if (!g.is_ground()) fail(Errc::InvalidArgument, "cannot chain on non-ground '" + g.str() + "'");
  std::set<Term> expanding;
  return detail::chain(kb, g, net, expanding);
}

// Backward chain on the query, then on each evidence term in the given
// order, sharing nodes throughout. The result contains exactly the query,
// the evidence, and their predecessors: no barren nodes.
inline GroundNetwork generate_network(const KnowledgeBase& kb, const Term& query,
                                      const Evidence& evidence) {
  if (!query.is_ground()) fail(Errc::InvalidArgument, "query '" + query.str() + "' must be ground");
  for (const auto& [t, v] : evidence) {
    if (!t.is_ground())
      fail(Errc::InvalidArgument, "evidence term '" + t.str() + "' must be ground");
    if (!t.range()->index_of(v))
      fail(Errc::ValueOutOfRange,
           "evidence value '" + v + "' is not in range '" + t.range()->name() + "' of '" +
               t.str() + "'");
  }
  GroundNetwork net;
  backward_chain(kb, query, net);
  for (const auto& [t, v] : evidence)
    if (!net.contains(t)) backward_chain(kb, t, net);
  net.set_query(query);
  for (const auto& [t, v] : evidence) net.add_evidence(t, v);
  return net;
}

}  // namespace bayeskb
