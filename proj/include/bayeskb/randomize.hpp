#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "bayeskb/core.hpp"
#include "bayeskb/network.hpp"

namespace bayeskb {

namespace detail {

// Random row-stochastic entries, bounded away from zero so conditioning
// events keep positive support.
inline std::vector<double> random_stochastic_rows(std::mt19937_64& rng, std::size_t rows,
                                                  std::size_t width) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> out(rows * width);
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < width; ++c) {
      out[r * width + c] = u(rng);
      sum += out[r * width + c];
    }
    for (std::size_t c = 0; c < width; ++c) out[r * width + c] /= sum;
  }
  return out;
}

}  // namespace detail

// The same knowledge base with every link matrix replaced by a seeded random
// row-stochastic one of identical shape. Matrix sharing between a rule and
// its ground instances is preserved by regenerating networks afterwards.
inline KnowledgeBase randomize_matrices(const KnowledgeBase& kb, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  KnowledgeBase out;
  for (const auto& r : kb.ranges()) out.add_range(r->name(), r->values());
  for (const auto& s : kb.symbols()) out.add_symbol(s->name(), s->arity(), s->range()->name());
  for (const Rule& r : kb.rules()) {
    std::vector<Term> antecedents;
    for (const Term& a : r.antecedents)
      antecedents.emplace_back(out.find_symbol(a.symbol()->name()), a.args());
    Term consequent(out.find_symbol(r.consequent.symbol()->name()), r.consequent.args());
    std::vector<ValueRangePtr> ante_ranges;
    for (const Term& a : antecedents) ante_ranges.push_back(a.range());
    auto matrix = std::make_shared<const LinkMatrix>(
        ante_ranges, consequent.range(),
        detail::random_stochastic_rows(rng, r.matrix->row_count(), r.matrix->width()));
    out.add_rule(Rule{r.id, std::move(antecedents), std::move(consequent), matrix});
  }
  return out;
}

// Network copy with fresh seeded random cpts, one per node (sharing between
// instances of the same rule is not preserved; topology, query and evidence
// are).
inline GroundNetwork randomize_cpts(const GroundNetwork& net, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GroundNetwork out;
  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto& n = net.node(i);
    auto matrix = std::make_shared<const LinkMatrix>(
        n.cpt->antecedent_ranges(), n.cpt->consequent_range(),
        detail::random_stochastic_rows(rng, n.cpt->row_count(), n.cpt->width()));
    out.add_node(n.term, n.parents, matrix, n.rule_id);
  }
  if (net.has_query()) out.set_query(net.query());
  for (const auto& [t, v] : net.evidence()) out.add_evidence(t, v);
  return out;
}

}  // namespace bayeskb
