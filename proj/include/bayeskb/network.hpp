#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bayeskb/core.hpp"

namespace bayeskb {

// Query-specific DAG of ground terms, one conditional probability table per
// node. Parents must already exist when a node is added, so insertion order
// is a topological order and the graph is acyclic by construction.
class GroundNetwork {
 public:
  struct Node {
    Term term;
    std::vector<std::size_t> parents;  // ordered like the cpt's antecedent ranges
    LinkMatrixPtr cpt;
    std::string rule_id;  // contributing ground rule instance, if any
  };

  std::size_t add_node(Term term, std::vector<std::size_t> parents, LinkMatrixPtr cpt,
                       std::string rule_id = {}) {
    if (!term.is_ground())
      fail(Errc::InvalidArgument, "network node '" + term.str() + "' must be ground");
    if (index_.count(term))
      fail(Errc::InvalidArgument, "node '" + term.str() + "' already in network");
    if (!cpt) fail(Errc::InvalidArgument, "node '" + term.str() + "' has no cpt");
    if (cpt->rank() != parents.size())
      fail(Errc::InvalidArgument, "node '" + term.str() + "' cpt rank mismatch");
    for (std::size_t i = 0; i < parents.size(); ++i) {
      if (parents[i] >= nodes_.size())
        fail(Errc::InvalidArgument, "node '" + term.str() + "' references a missing parent");
      if (*cpt->antecedent_ranges()[i] != *nodes_[parents[i]].term.range())
        fail(Errc::InvalidArgument,
             "node '" + term.str() + "' cpt range disagrees with parent '" +
                 nodes_[parents[i]].term.str() + "'");
    }
    if (*cpt->consequent_range() != *term.range())
      fail(Errc::InvalidArgument, "node '" + term.str() + "' cpt consequent range mismatch");
    std::size_t id = nodes_.size();
    index_[term] = id;
    for (std::size_t p : parents) children_[p].push_back(id);
    children_.emplace_back();
    nodes_.push_back(Node{std::move(term), std::move(parents), std::move(cpt), std::move(rule_id)});
    return id;
  }

  std::size_t size() const { return nodes_.size(); }
  bool contains(const Term& t) const { return index_.count(t) != 0; }

  std::size_t index_of(const Term& t) const {
    auto it = index_.find(t);
    if (it == index_.end()) fail(Errc::UnknownNode, "'" + t.str() + "' is not in the network");
    return it->second;
  }

  const Node& node(std::size_t i) const { return nodes_.at(i); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<std::size_t>& children(std::size_t i) const { return children_.at(i); }
  std::size_t cardinality(std::size_t i) const { return nodes_.at(i).term.range()->size(); }

  void set_query(Term q) {
    index_of(q);
    query_ = std::move(q);
  }
  bool has_query() const { return query_.has_value(); }
  const Term& query() const {
    if (!query_) fail(Errc::InvalidArgument, "network has no query");
    return *query_;
  }

  void add_evidence(Term t, std::string value) {
    std::size_t i = index_of(t);
    nodes_[i].term.range()->require_index(value);
    for (const auto& [prev, pv] : evidence_) {
      if (prev == t) {
        if (pv != value)
          fail(Errc::InvalidArgument, "conflicting evidence for '" + t.str() + "'");
        return;
      }
    }
    evidence_.emplace_back(std::move(t), std::move(value));
  }
  const Evidence& evidence() const { return evidence_; }

  // ---- graph queries ------------------------------------------------------

  std::vector<Term> parents_of(const Term& t) const {
    std::vector<Term> out;
    for (std::size_t p : nodes_[index_of(t)].parents) out.push_back(nodes_[p].term);
    return out;
  }
  std::vector<Term> children_of(const Term& t) const {
    std::vector<Term> out;
    for (std::size_t c : children_[index_of(t)]) out.push_back(nodes_[c].term);
    return out;
  }

  std::set<std::size_t> ancestor_ids(std::size_t start) const {
    return reach(start, [&](std::size_t i) -> const std::vector<std::size_t>& {
      return nodes_[i].parents;
    });
  }
  std::set<std::size_t> descendant_ids(std::size_t start) const {
    return reach(start, [&](std::size_t i) -> const std::vector<std::size_t>& {
      return children_[i];
    });
  }

  // Transitive closures, excluding the node itself.
  std::set<Term> predecessors(const Term& t) const { return to_terms(ancestor_ids(index_of(t))); }
  std::set<Term> successors(const Term& t) const { return to_terms(descendant_ids(index_of(t))); }

  std::set<Term> roots() const {
    std::set<Term> out;
    for (const Node& n : nodes_)
      if (n.parents.empty()) out.insert(n.term);
    return out;
  }
  std::set<Term> leaves() const {
    std::set<Term> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (children_[i].empty()) out.insert(nodes_[i].term);
    return out;
  }

  // Path existence in the undirected sense (edges traversed either way).
  bool is_path(const Term& f, const Term& g) const {
    std::size_t from = index_of(f), to = index_of(g);
    if (from == to) return true;
    std::vector<char> seen(nodes_.size(), 0);
    std::vector<std::size_t> queue{from};
    seen[from] = 1;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      std::size_t i = queue[qi];
      auto visit = [&](std::size_t j) {
        if (!seen[j]) {
          seen[j] = 1;
          queue.push_back(j);
        }
      };
      for (std::size_t p : nodes_[i].parents) visit(p);
      for (std::size_t c : children_[i]) visit(c);
    }
    return seen[to] != 0;
  }

  // Level assignment: leaves sit at level zero, every other node one above
  // its highest direct successor.
  std::vector<int> levels() const {
    std::vector<int> lvl(nodes_.size(), 0);
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      int best = -1;
      for (std::size_t c : children_[i]) best = std::max(best, lvl[c]);
      lvl[i] = best + 1;  // children always have larger indices
    }
    return lvl;
  }

  int level_of(const Term& t) const { return levels()[index_of(t)]; }

  // Node ids ordered by ascending level, ties broken by node name. Every
  // node appears after all of its successors and before all of its
  // predecessors; the brute-force oracle multiplies factors in this order.
  std::vector<std::size_t> chain_rule_order() const {
    std::vector<int> lvl = levels();
    std::vector<std::size_t> order(nodes_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (lvl[a] != lvl[b]) return lvl[a] < lvl[b];
      return nodes_[a].term.str() < nodes_[b].term.str();
    });
    return order;
  }

 private:
  template <class Next>
  std::set<std::size_t> reach(std::size_t start, Next&& next) const {
    std::set<std::size_t> out;
    std::vector<std::size_t> queue{start};
    for (std::size_t qi = 0; qi < queue.size(); ++qi)
      for (std::size_t j : next(queue[qi]))
        if (j != start && out.insert(j).second) queue.push_back(j);
    return out;
  }

  std::set<Term> to_terms(const std::set<std::size_t>& ids) const {
    std::set<Term> out;
    for (std::size_t i : ids) out.insert(nodes_[i].term);
    return out;
  }

  std::vector<Node> nodes_;
  std::vector<std::vector<std::size_t>> children_;
  std::map<Term, std::size_t> index_;
  std::optional<Term> query_;
  Evidence evidence_;
};

}  // namespace bayeskb
