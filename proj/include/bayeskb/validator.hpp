#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bayeskb/core.hpp"

namespace bayeskb {

enum class Constraint { C1, C2, C3, C4, Matrix };

inline const char* constraint_name(Constraint c) {
  switch (c) {
    case Constraint::C1: return "C1";
    case Constraint::C2: return "C2";
    case Constraint::C3: return "C3";
    case Constraint::C4: return "C4";
    case Constraint::Matrix: return "Matrix";
  }
  return "?";
}

struct Violation {
  Constraint constraint;
  std::vector<std::string> rule_ids;  // empty for symbol-level reports (C1)
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }

  std::string to_text() const {
    if (ok()) return "OK\n";
    std::string out;
    for (const Violation& v : violations) {
      out += constraint_name(v.constraint);
      if (!v.rule_ids.empty()) {
        out += " [";
        for (std::size_t i = 0; i < v.rule_ids.size(); ++i) {
          if (i) out += ", ";
          out += v.rule_ids[i];
        }
        out += "]";
      }
      out += ": " + v.detail + "\n";
    }
    out += "INVALID (" + std::to_string(violations.size()) +
           (violations.size() == 1 ? " violation)\n" : " violations)\n");
    return out;
  }
};

namespace detail {

// Two-sided unification of two flat terms with variables renamed apart.
// For this term language (arguments are variables or constants) the
// consequents unify exactly when they have a common ground instance.
inline bool terms_unify(const Term& a, const Term& b) {
  if (a.symbol()->name() != b.symbol()->name()) return false;
  if (a.args().size() != b.args().size()) return false;
  // Union-find over prefixed tokens; constants are terminal classes.
  std::map<std::string, std::string> up;
  auto find = [&](std::string t) {
    while (true) {
      auto it = up.find(t);
      if (it == up.end()) return t;
      t = it->second;
    }
  };
  auto token = [](const Argument& arg, const char* side) {
    return arg.is_variable ? std::string(side) + arg.name : "=" + arg.name;
  };
  for (std::size_t i = 0; i < a.args().size(); ++i) {
    std::string ra = find(token(a.args()[i], "L:"));
    std::string rb = find(token(b.args()[i], "R:"));
    if (ra == rb) continue;
    bool ca = ra[0] == '=', cb = rb[0] == '=';
    if (ca && cb) return false;  // two distinct constants
    if (ca)
      up[rb] = ra;
    else
      up[ra] = rb;
  }
  return true;
}

inline void sort_by_rules(std::vector<Violation>& v) {
  std::stable_sort(v.begin(), v.end(), [](const Violation& a, const Violation& b) {
    if (a.rule_ids != b.rule_ids) return a.rule_ids < b.rule_ids;
    return a.detail < b.detail;
  });
}

}  // namespace detail

// C1, existence of a link matrix: every antecedent function symbol must be
// the consequent symbol of some rule. Checked at the symbol level.
inline std::vector<Violation> check_c1(const KnowledgeBase& kb) {
  std::set<std::string> consequent_symbols;
  for (const Rule& r : kb.rules()) consequent_symbols.insert(r.consequent.symbol()->name());
  std::set<std::string> reported;
  std::vector<Violation> out;
  for (const Rule& r : kb.rules()) {
    for (const Term& a : r.antecedents) {
      const std::string& s = a.symbol()->name();
      if (!consequent_symbols.count(s) && reported.insert(s).second)
        out.push_back({Constraint::C1,
                       {},
                       "antecedent symbol '" + s + "' is not the consequent of any rule"});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const Violation& a, const Violation& b) { return a.detail < b.detail; });
  return out;
}

// C2, completeness of the consequent: every variable occurring in a rule's
// antecedents must also occur in its consequent.
inline std::vector<Violation> check_c2(const KnowledgeBase& kb) {
  std::vector<Violation> out;
  for (const Rule& r : kb.rules()) {
    std::set<std::string> conse_vars;
    for (const std::string& v : r.consequent.variables()) conse_vars.insert(v);
    std::vector<std::string> missing;
    for (const Term& a : r.antecedents)
      for (const std::string& v : a.variables())
        if (!conse_vars.count(v) && std::find(missing.begin(), missing.end(), v) == missing.end())
          missing.push_back(v);
    if (!missing.empty()) {
      std::string detail = "antecedent variable";
      detail += missing.size() > 1 ? "s " : " ";
      for (std::size_t i = 0; i < missing.size(); ++i) {
        if (i) detail += ", ";
        detail += "'" + missing[i] + "'";
      }
      detail += " missing from consequent '" + r.consequent.str() + "'";
      out.push_back({Constraint::C2, {r.id}, detail});
    }
  }
  detail::sort_by_rules(out);
  return out;
}

// C3, uniqueness of consequents: no two distinct rules may have ground
// instances with identical consequents. Decided by consequent unification,
// which is exact for this term language.
inline std::vector<Violation> check_c3(const KnowledgeBase& kb) {
  std::vector<Violation> out;
  const auto& rules = kb.rules();
  for (std::size_t i = 0; i < rules.size(); ++i)
    for (std::size_t j = i + 1; j < rules.size(); ++j)
      if (detail::terms_unify(rules[i].consequent, rules[j].consequent))
        out.push_back({Constraint::C3,
                       {rules[i].id, rules[j].id},
                       "consequents '" + rules[i].consequent.str() + "' and '" +
                           rules[j].consequent.str() + "' share a ground instance"});
  detail::sort_by_rules(out);
  return out;
}

// C4, acyclicity: the function-symbol dependency graph (antecedent symbol ->
// consequent symbol per rule) must be acyclic. A symbol-level cycle check is
// sound for ground-level acyclicity and may conservatively reject knowledge
// bases that are acyclic only through constant patterns.
inline std::vector<Violation> check_c4(const KnowledgeBase& kb) {
  std::map<std::string, std::set<std::string>> edges;
  std::map<std::pair<std::string, std::string>, std::set<std::string>> edge_rules;
  std::vector<std::string> order;
  std::set<std::string> seen;
  for (const Rule& r : kb.rules()) {
    const std::string& g = r.consequent.symbol()->name();
    if (seen.insert(g).second) order.push_back(g);
    for (const Term& a : r.antecedents) {
      const std::string& f = a.symbol()->name();
      if (seen.insert(f).second) order.push_back(f);
      edges[f].insert(g);
      edge_rules[{f, g}].insert(r.id);
    }
  }

  // Tarjan strongly-connected components, iterative for deep chains.
  std::map<std::string, int> index, low;
  std::map<std::string, bool> on_stack;
  std::vector<std::string> stack;
  std::vector<std::vector<std::string>> sccs;
  int counter = 0;
  for (const std::string& root : order) {
    if (index.count(root)) continue;
    struct Frame {
      std::string node;
      std::vector<std::string> next;
      std::size_t i = 0;
    };
    std::vector<Frame> frames;
    auto open = [&](const std::string& v) {
      index[v] = low[v] = counter++;
      stack.push_back(v);
      on_stack[v] = true;
      Frame f{v, {}, 0};
      for (const std::string& w : edges[v]) f.next.push_back(w);
      frames.push_back(std::move(f));
    };
    open(root);
    while (!frames.empty()) {
      Frame& f = frames.back();
      if (f.i < f.next.size()) {
        const std::string w = f.next[f.i++];
        if (!index.count(w))
          open(w);
        else if (on_stack[w])
          low[f.node] = std::min(low[f.node], index[w]);
      } else {
        if (low[f.node] == index[f.node]) {
          std::vector<std::string> scc;
          while (true) {
            std::string w = stack.back();
            stack.pop_back();
            on_stack[w] = false;
            scc.push_back(w);
            if (w == f.node) break;
          }
          sccs.push_back(std::move(scc));
        }
        std::string done = f.node;
        frames.pop_back();
        if (!frames.empty()) low[frames.back().node] = std::min(low[frames.back().node], low[done]);
      }
    }
  }

  std::vector<Violation> out;
  for (auto& scc : sccs) {
    bool self_loop = scc.size() == 1 && edges[scc[0]].count(scc[0]);
    if (scc.size() < 2 && !self_loop) continue;
    std::sort(scc.begin(), scc.end());
    std::set<std::string> members(scc.begin(), scc.end());
    // Reconstruct one concrete cycle from the smallest member by BFS.
    std::string start = scc[0];
    std::vector<std::string> cycle{start};
    if (self_loop) {
      cycle.push_back(start);
    } else {
      std::map<std::string, std::string> from;
      std::vector<std::string> queue{start};
      for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        for (const std::string& w : edges[queue[qi]]) {
          if (!members.count(w)) continue;
          if (w == start) {
            std::vector<std::string> rev{queue[qi]};
            while (rev.back() != start) rev.push_back(from[rev.back()]);
            for (auto it = rev.rbegin() + 1; it != rev.rend(); ++it) cycle.push_back(*it);
            cycle.push_back(start);
            queue.clear();
            break;
          }
          if (!from.count(w)) {
            from[w] = queue[qi];
            queue.push_back(w);
          }
        }
      }
    }
    std::string detail = "dependency cycle ";
    for (std::size_t i = 0; i < cycle.size(); ++i) {
      if (i) detail += " -> ";
      detail += cycle[i];
    }
    std::set<std::string> ids;
    for (const auto& [edge, rules] : edge_rules)
      if (members.count(edge.first) && members.count(edge.second))
        ids.insert(rules.begin(), rules.end());
    out.push_back({Constraint::C4, {ids.begin(), ids.end()}, detail});
  }
  detail::sort_by_rules(out);
  return out;
}

// Matrix shape and normalization: entry count |g|*|f1|*...*|fn|, entries in
// [0,1], each row summing to 1 within 1e-9. The parser rejects these at load
// time; this re-checks programmatically built knowledge bases.
inline std::vector<Violation> check_matrices(const KnowledgeBase& kb) {
  std::vector<Violation> out;
  for (const Rule& r : kb.rules()) {
    const LinkMatrix& m = *r.matrix;
    if (!m.shape_ok()) {
      out.push_back({Constraint::Matrix,
                     {r.id},
                     "matrix has " + std::to_string(m.entries().size()) + " entries, expected " +
                         std::to_string(m.expected_entries())});
      continue;
    }
    bool bad = false;
    for (double e : m.entries())
      if (!(e >= 0.0 && e <= 1.0)) {
        out.push_back({Constraint::Matrix,
                       {r.id},
                       "matrix entry " + format_probability(e) + " outside [0,1]"});
        bad = true;
        break;
      }
    if (bad) continue;
    for (std::size_t row = 0; row < m.row_count(); ++row) {
      double sum = 0.0;
      for (std::size_t col = 0; col < m.width(); ++col) sum += m.entry(row, col);
      if (sum < 1.0 - kRowSumTol || sum > 1.0 + kRowSumTol) {
        out.push_back({Constraint::Matrix,
                       {r.id},
                       "matrix row " + std::to_string(row) + " sums to " +
                           format_probability(sum)});
        break;
      }
    }
  }
  detail::sort_by_rules(out);
  return out;
}

// All checks, concatenated in the order C1, C2, C3, C4, Matrix. Each check
// orders its violations deterministically by the rules involved.
inline ValidationReport validate(const KnowledgeBase& kb) {
  ValidationReport report;
  auto append = [&](std::vector<Violation> v) {
    for (auto& x : v) report.violations.push_back(std::move(x));
  };
  append(check_c1(kb));
  append(check_c2(kb));
  append(check_c3(kb));
  append(check_c4(kb));
  append(check_matrices(kb));
  return report;
}

// Thrown by the query pipeline when generation is requested on a knowledge
// base that fails validation.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(ValidationReport report)
      : std::runtime_error("knowledge base failed validation (" +
                           std::to_string(report.violations.size()) + " violations)"),
        report_(std::move(report)) {}

  const ValidationReport& report() const noexcept { return report_; }

 private:
  ValidationReport report_;
};

}  // namespace bayeskb
