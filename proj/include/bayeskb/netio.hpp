#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bayeskb/network.hpp"

namespace bayeskb {

// Deterministic DOT rendering: node statements sorted by name, then edge
// statements sorted by (tail, head). The query is drawn as a bold ellipse,
// evidence nodes as boxes.
inline std::string export_dot(const GroundNetwork& net) {
  std::set<std::string> evidence_names;
  for (const auto& [t, v] : net.evidence()) evidence_names.insert(t.str());
  std::string query_name = net.has_query() ? net.query().str() : std::string();

  std::vector<std::string> names;
  std::vector<std::pair<std::string, std::string>> edges;
  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto& n = net.node(i);
    names.push_back(n.term.str());
    for (std::size_t p : n.parents) edges.emplace_back(net.node(p).term.str(), n.term.str());
  }
  std::sort(names.begin(), names.end());
  std::sort(edges.begin(), edges.end());

  std::ostringstream out;
  out << "digraph ground_network {\n";
  for (const std::string& name : names) {
    out << "  \"" << name << "\"";
    if (name == query_name)
      out << " [shape=ellipse, style=bold]";
    else if (evidence_names.count(name))
      out << " [shape=box]";
    out << ";\n";
  }
  for (const auto& [from, to] : edges) out << "  \"" << from << "\" -> \"" << to << "\";\n";
  out << "}\n";
  return out.str();
}

// Structured network dump: nodes in generation order with parent lists and
// cpt rows, plus the query/evidence the network was generated for.
inline nlohmann::json network_to_json(const GroundNetwork& net) {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto& n = net.node(i);
    nlohmann::json parents = nlohmann::json::array();
    for (std::size_t p : n.parents) parents.push_back(net.node(p).term.str());
    nlohmann::json rows = nlohmann::json::array();
    const LinkMatrix& m = *n.cpt;
    for (std::size_t r = 0; r < m.row_count(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t c = 0; c < m.width(); ++c) row.push_back(m.entry(r, c));
      rows.push_back(std::move(row));
    }
    nodes.push_back({{"term", n.term.str()},
                     {"rule", n.rule_id},
                     {"range", n.term.range()->values()},
                     {"parents", std::move(parents)},
                     {"cpt", std::move(rows)}});
  }
  nlohmann::json evidence = nlohmann::json::array();
  for (const auto& [t, v] : net.evidence()) evidence.push_back({{"term", t.str()}, {"value", v}});
  return {{"query", net.has_query() ? net.query().str() : ""},
          {"evidence", std::move(evidence)},
          {"nodes", std::move(nodes)}};
}

inline std::string dump_network_json(const GroundNetwork& net) {
  return network_to_json(net).dump(2) + "\n";
}

}  // namespace bayeskb
