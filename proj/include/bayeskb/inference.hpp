#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bayeskb/core.hpp"
#include "bayeskb/generator.hpp"
#include "bayeskb/network.hpp"
#include "bayeskb/parser.hpp"
#include "bayeskb/validator.hpp"

namespace bayeskb {

// Intermediate object of elimination: a nonnegative table over the value
// combinations of its scope, the last scope entry varying fastest. Scope
// entries are network node ids.
struct Factor {
  std::vector<std::size_t> scope;
  std::vector<double> table;
};

namespace detail {

inline std::size_t table_size(const GroundNetwork& net, const std::vector<std::size_t>& scope) {
  std::size_t n = 1;
  for (std::size_t i : scope) n *= net.cardinality(i);
  return n;
}

inline std::size_t scope_pos(const Factor& f, std::size_t node) {
  for (std::size_t i = 0; i < f.scope.size(); ++i)
    if (f.scope[i] == node) return i;
  fail(Errc::UnknownNode, "node is not in the factor's scope");
}

}  // namespace detail

// The node's cpt as a factor over (parents..., node); the cpt table layout
// is already in that scope order.
inline Factor factor_from_node(const GroundNetwork& net, std::size_t i) {
  const auto& n = net.node(i);
  Factor f;
  f.scope = n.parents;
  f.scope.push_back(i);
  if (!n.cpt->shape_ok())
    fail(Errc::InvalidArgument, "cpt of '" + n.term.str() + "' has a malformed shape");
  f.table = n.cpt->entries();
  return f;
}

// Drop `node` from the scope, keeping only table entries consistent with the
// given value index.
inline Factor restrict_factor(const GroundNetwork& net, const Factor& f, std::size_t node,
                              std::size_t value_index) {
  std::size_t pos = detail::scope_pos(f, node);
  if (value_index >= net.cardinality(node))
    fail(Errc::ValueOutOfRange, "restricted value index out of range");
  Factor out;
  out.scope = f.scope;
  out.scope.erase(out.scope.begin() + static_cast<std::ptrdiff_t>(pos));
  out.table.assign(detail::table_size(net, out.scope), 0.0);

  std::size_t inner = 1;  // stride of the removed position
  for (std::size_t k = pos + 1; k < f.scope.size(); ++k) inner *= net.cardinality(f.scope[k]);
  std::size_t card = net.cardinality(node);
  std::size_t outer = f.table.size() / (inner * card);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t r = 0; r < inner; ++r)
      out.table[o * inner + r] = f.table[(o * card + value_index) * inner + r];
  return out;
}

inline Factor multiply(const GroundNetwork& net, const Factor& a, const Factor& b) {
  Factor out;
  out.scope = a.scope;
  for (std::size_t i : b.scope)
    if (std::find(out.scope.begin(), out.scope.end(), i) == out.scope.end())
      out.scope.push_back(i);
  std::sort(out.scope.begin(), out.scope.end());
  out.table.assign(detail::table_size(net, out.scope), 0.0);

  // index of each operand as a function of the output odometer
  auto strides_for = [&](const Factor& f) {
    std::vector<std::size_t> stride(out.scope.size(), 0);
    for (std::size_t k = 0; k < f.scope.size(); ++k) {
      std::size_t s = 1;
      for (std::size_t m = k + 1; m < f.scope.size(); ++m) s *= net.cardinality(f.scope[m]);
      for (std::size_t j = 0; j < out.scope.size(); ++j)
        if (out.scope[j] == f.scope[k]) stride[j] = s;
    }
    return stride;
  };
  std::vector<std::size_t> sa = strides_for(a), sb = strides_for(b);
  std::vector<std::size_t> vals(out.scope.size(), 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t idx = 0;; ++idx) {
    out.table[idx] = a.table[ia] * b.table[ib];
    std::size_t k = out.scope.size();
    while (k > 0) {
      std::size_t j = k - 1;
      ia += sa[j];
      ib += sb[j];
      if (++vals[j] < net.cardinality(out.scope[j])) break;
      ia -= sa[j] * vals[j];
      ib -= sb[j] * vals[j];
      vals[j] = 0;
      --k;
    }
    if (k == 0) break;
  }
  return out;
}

// Marginalize `node` out of the factor by summation.
inline Factor sum_out(const GroundNetwork& net, const Factor& f, std::size_t node) {
  std::size_t pos = detail::scope_pos(f, node);
  Factor out;
  out.scope = f.scope;
  out.scope.erase(out.scope.begin() + static_cast<std::ptrdiff_t>(pos));
  out.table.assign(detail::table_size(net, out.scope), 0.0);

  std::size_t inner = 1;
  for (std::size_t k = pos + 1; k < f.scope.size(); ++k) inner *= net.cardinality(f.scope[k]);
  std::size_t card = net.cardinality(node);
  std::size_t outer = f.table.size() / (inner * card);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t v = 0; v < card; ++v)
      for (std::size_t r = 0; r < inner; ++r)
        out.table[o * inner + r] += f.table[(o * card + v) * inner + r];
  return out;
}

// Term-based conveniences mirroring the elimination algebra.
inline Factor restrict_factor(const GroundNetwork& net, const Factor& f, const Term& t,
                              const std::string& value) {
  std::size_t i = net.index_of(t);
  return restrict_factor(net, f, i, net.node(i).term.range()->require_index(value));
}
inline Factor sum_out(const GroundNetwork& net, const Factor& f, const Term& t) {
  return sum_out(net, f, net.index_of(t));
}

struct Posterior {
  Term query;
  std::vector<double> probs;  // over the query's range, declared order
  double evidence_probability = 1.0;

  std::string to_text() const {
    std::string out;
    const auto& values = query.range()->values();
    for (std::size_t i = 0; i < values.size(); ++i)
      out += "P(" + query.str() + " = " + values[i] + ") = " + format_probability(probs[i]) + "\n";
    out += "P(evidence) = " + format_probability(evidence_probability) + "\n";
    return out;
  }
};

enum class EliminationOrder {
  MinDegree,            // fewest moral-graph neighbors first, ties by name
  ReverseLexicographic  // fixed order, largest node name first
};

// Exact posterior P(query | evidence) by variable elimination over the
// network's cpt factors.
inline Posterior variable_elimination(const GroundNetwork& net,
                                      EliminationOrder order = EliminationOrder::MinDegree) {
  std::size_t qi = net.index_of(net.query());

  std::map<std::size_t, std::size_t> ev;  // node id -> value index
  for (const auto& [t, v] : net.evidence())
    ev[net.index_of(t)] = net.node(net.index_of(t)).term.range()->require_index(v);

  std::vector<Factor> factors;
  for (std::size_t i = 0; i < net.size(); ++i) {
    Factor f = factor_from_node(net, i);
    for (const auto& [n, v] : ev)
      if (std::find(f.scope.begin(), f.scope.end(), n) != f.scope.end())
        f = restrict_factor(net, f, n, v);
    factors.push_back(std::move(f));
  }

  std::vector<std::size_t> to_eliminate;
  for (std::size_t i = 0; i < net.size(); ++i)
    if (i != qi && !ev.count(i)) to_eliminate.push_back(i);

  auto eliminate_one = [&](std::size_t victim) {
    Factor product{{}, {1.0}};
    std::vector<Factor> rest;
    for (Factor& f : factors) {
      if (std::find(f.scope.begin(), f.scope.end(), victim) != f.scope.end())
        product = multiply(net, product, f);
      else
        rest.push_back(std::move(f));
    }
    rest.push_back(sum_out(net, product, victim));
    factors = std::move(rest);
  };

  if (order == EliminationOrder::ReverseLexicographic) {
    std::sort(to_eliminate.begin(), to_eliminate.end(), [&](std::size_t a, std::size_t b) {
      return net.node(a).term.str() > net.node(b).term.str();
    });
    for (std::size_t v : to_eliminate) eliminate_one(v);
  } else {
    std::set<std::size_t> remaining(to_eliminate.begin(), to_eliminate.end());
    while (!remaining.empty()) {
      // moral-graph neighbors: co-occurrence in any current factor scope
      std::map<std::size_t, std::set<std::size_t>> nbr;
      for (const Factor& f : factors)
        for (std::size_t ai : f.scope)
          for (std::size_t bi : f.scope)
            if (ai != bi) nbr[ai].insert(bi);
      std::size_t best = 0;
      bool first = true;
      for (std::size_t v : remaining) {
        if (first) {
          best = v;
          first = false;
          continue;
        }
        std::size_t dv = nbr[v].size(), db = nbr[best].size();
        if (dv < db || (dv == db && net.node(v).term.str() < net.node(best).term.str())) best = v;
      }
      eliminate_one(best);
      remaining.erase(best);
    }
  }

  Factor result{{}, {1.0}};
  for (const Factor& f : factors) result = multiply(net, result, f);

  Posterior post{net.query(), {}, 0.0};
  std::size_t qcard = net.cardinality(qi);
  auto qit = ev.find(qi);
  if (qit != ev.end()) {
    // the query is itself evidence: point mass, P(E) is the remaining scalar
    if (result.scope.size() != 0)
      fail(Errc::InvalidArgument, "elimination left an unexpected scope");
    post.evidence_probability = result.table[0];
    post.probs.assign(qcard, 0.0);
    if (post.evidence_probability > 0.0) post.probs[qit->second] = 1.0;
  } else {
    if (result.scope != std::vector<std::size_t>{qi})
      fail(Errc::InvalidArgument, "elimination left an unexpected scope");
    double pe = 0.0;
    for (double v : result.table) pe += v;
    post.evidence_probability = pe;
    if (pe > 0.0) {
      post.probs = result.table;
      for (double& v : post.probs) v /= pe;
    }
  }
  if (!(post.evidence_probability > 0.0))
    fail(Errc::ZeroEvidence, "evidence has probability zero");
  return post;
}

// ---- end-to-end pipeline ----------------------------------------------------

struct QueryResult {
  Posterior posterior;
  GroundNetwork network;
};

// validate -> generate -> eliminate. Throws ValidationError when the
// knowledge base is not well-formed.
inline QueryResult run_query(const KnowledgeBase& kb, const Term& query, const Evidence& evidence) {
  ValidationReport report = validate(kb);
  if (!report.ok()) throw ValidationError(std::move(report));
  GroundNetwork net = generate_network(kb, query, evidence);
  Posterior post = variable_elimination(net);
  return QueryResult{std::move(post), std::move(net)};
}

// Text-in convenience: parse the query and evidence, then run the pipeline.
inline QueryResult posterior(const KnowledgeBase& kb, const std::string& query_text,
                             const std::string& evidence_text) {
  Term q = parse_query(kb, query_text);
  Evidence e = parse_evidence(kb, evidence_text);
  return run_query(kb, q, e);
}

}  // namespace bayeskb
