#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "bayeskb/errors.hpp"

namespace bayeskb {

inline constexpr double kRowSumTol = 1e-9;

// Probabilities are printed with 17 significant digits so that serialized
// text re-parses to bit-identical doubles.
inline std::string format_probability(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// A named, ordered list of at least two distinct value labels. Declaration
// order is load-bearing: link matrix rows and columns are addressed by it.
class ValueRange {
 public:
  ValueRange(std::string name, std::vector<std::string> values)
      : name_(std::move(name)), values_(std::move(values)) {
    if (values_.size() < 2)
      fail(Errc::InvalidArgument, "range '" + name_ + "' needs at least two values");
    for (std::size_t i = 0; i < values_.size(); ++i)
      for (std::size_t j = i + 1; j < values_.size(); ++j)
        if (values_[i] == values_[j])
          fail(Errc::InvalidArgument,
               "range '" + name_ + "' repeats value '" + values_[i] + "'");
  }

  const std::string& name() const { return name_; }
  const std::vector<std::string>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  std::optional<std::size_t> index_of(const std::string& value) const {
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (values_[i] == value) return i;
    return std::nullopt;
  }

  // Index of `value`, or ValueOutOfRange.
  std::size_t require_index(const std::string& value) const {
    if (auto i = index_of(value)) return *i;
    fail(Errc::ValueOutOfRange, "'" + value + "' is not a value of range '" + name_ + "'");
  }

  friend bool operator==(const ValueRange& a, const ValueRange& b) {
    return a.name_ == b.name_ && a.values_ == b.values_;
  }
  friend bool operator!=(const ValueRange& a, const ValueRange& b) { return !(a == b); }

 private:
  std::string name_;
  std::vector<std::string> values_;
};

using ValueRangePtr = std::shared_ptr<const ValueRange>;

// Random-variable schema: a name, a fixed arity, and the range of values a
// ground instance can take.
class FunctionSymbol {
 public:
  FunctionSymbol(std::string name, std::size_t arity, ValueRangePtr range)
      : name_(std::move(name)), arity_(arity), range_(std::move(range)) {
    if (!range_) fail(Errc::InvalidArgument, "symbol '" + name_ + "' has no range");
  }

  const std::string& name() const { return name_; }
  std::size_t arity() const { return arity_; }
  const ValueRangePtr& range() const { return range_; }

  friend bool operator==(const FunctionSymbol& a, const FunctionSymbol& b) {
    return a.name_ == b.name_ && a.arity_ == b.arity_ && *a.range_ == *b.range_;
  }

 private:
  std::string name_;
  std::size_t arity_;
  ValueRangePtr range_;
};

using FunctionSymbolPtr = std::shared_ptr<const FunctionSymbol>;

// Lexical convention shared with the surface syntax: an argument token that
// starts with a lowercase letter is a variable, anything else (Holmes, 221B,
// +) is a constant.
inline bool is_variable_token(const std::string& s) {
  return !s.empty() && std::islower(static_cast<unsigned char>(s[0])) != 0;
}

struct Argument {
  bool is_variable = false;
  std::string name;

  static Argument variable(std::string name) {
    if (!is_variable_token(name))
      fail(Errc::InvalidArgument, "variable '" + name + "' must start with a lowercase letter");
    return Argument{true, std::move(name)};
  }
  static Argument constant(std::string name) {
    if (name.empty() || is_variable_token(name))
      fail(Errc::InvalidArgument, "constant '" + name + "' must not start with a lowercase letter");
    return Argument{false, std::move(name)};
  }
  // Classify a raw token by the lexical convention.
  static Argument of(std::string token) {
    bool var = is_variable_token(token);
    return Argument{var, std::move(token)};
  }

  friend bool operator==(const Argument& a, const Argument& b) {
    return a.is_variable == b.is_variable && a.name == b.name;
  }
  friend bool operator<(const Argument& a, const Argument& b) {
    return std::tie(a.is_variable, a.name) < std::tie(b.is_variable, b.name);
  }
};

// A function symbol applied to arguments. Ground iff every argument is a
// constant; ground terms are the nodes of generated networks.
class Term {
 public:
  Term(FunctionSymbolPtr symbol, std::vector<Argument> args = {})
      : symbol_(std::move(symbol)), args_(std::move(args)) {
    if (!symbol_) fail(Errc::InvalidArgument, "term has no symbol");
    if (args_.size() != symbol_->arity())
      fail(Errc::InvalidArgument, "term '" + symbol_->name() + "' takes " +
                                      std::to_string(symbol_->arity()) + " arguments, got " +
                                      std::to_string(args_.size()));
  }

  const FunctionSymbolPtr& symbol() const { return symbol_; }
  const std::vector<Argument>& args() const { return args_; }
  const ValueRangePtr& range() const { return symbol_->range(); }

  bool is_ground() const {
    return std::none_of(args_.begin(), args_.end(),
                        [](const Argument& a) { return a.is_variable; });
  }

  // Variable names in argument order, first occurrence only.
  std::vector<std::string> variables() const {
    std::vector<std::string> out;
    for (const Argument& a : args_)
      if (a.is_variable && std::find(out.begin(), out.end(), a.name) == out.end())
        out.push_back(a.name);
    return out;
  }

  std::string str() const {
    std::string out = symbol_->name();
    if (!args_.empty()) {
      out += '(';
      for (std::size_t i = 0; i < args_.size(); ++i) {
        if (i) out += ',';
        out += args_[i].name;
      }
      out += ')';
    }
    return out;
  }

  friend bool operator==(const Term& a, const Term& b) {
    return a.symbol_->name() == b.symbol_->name() && a.args_ == b.args_;
  }
  friend bool operator!=(const Term& a, const Term& b) { return !(a == b); }
  friend bool operator<(const Term& a, const Term& b) {
    if (a.symbol_->name() != b.symbol_->name()) return a.symbol_->name() < b.symbol_->name();
    return a.args_ < b.args_;
  }

 private:
  FunctionSymbolPtr symbol_;
  std::vector<Argument> args_;
};

// Variable name -> constant name.
using Binding = std::map<std::string, std::string>;

// Ground terms paired with observed values.
using Evidence = std::vector<std::pair<Term, std::string>>;

// Conditional probability table of a rule. Rows enumerate antecedent value
// combinations lexicographically over the declared range orders with the
// LAST antecedent varying fastest; columns follow the consequent range
// order. A prior (no antecedents) has exactly one row.
class LinkMatrix {
 public:
  LinkMatrix(std::vector<ValueRangePtr> antecedent_ranges, ValueRangePtr consequent_range,
             std::vector<double> entries)
      : antecedent_ranges_(std::move(antecedent_ranges)),
        consequent_range_(std::move(consequent_range)),
        entries_(std::move(entries)) {
    if (!consequent_range_) fail(Errc::InvalidArgument, "link matrix has no consequent range");
    for (const auto& r : antecedent_ranges_)
      if (!r) fail(Errc::InvalidArgument, "link matrix has a null antecedent range");
  }

  const std::vector<ValueRangePtr>& antecedent_ranges() const { return antecedent_ranges_; }
  const ValueRangePtr& consequent_range() const { return consequent_range_; }
  const std::vector<double>& entries() const { return entries_; }

  std::size_t rank() const { return antecedent_ranges_.size(); }
  std::size_t width() const { return consequent_range_->size(); }
  std::size_t row_count() const {
    std::size_t n = 1;
    for (const auto& r : antecedent_ranges_) n *= r->size();
    return n;
  }
  std::size_t expected_entries() const { return row_count() * width(); }
  bool shape_ok() const { return entries_.size() == expected_entries(); }

  std::size_t row_index(const std::vector<std::size_t>& parent_value_indices) const {
    if (parent_value_indices.size() != rank())
      fail(Errc::InvalidArgument, "expected " + std::to_string(rank()) + " parent values");
    std::size_t row = 0;
    for (std::size_t i = 0; i < rank(); ++i) {
      if (parent_value_indices[i] >= antecedent_ranges_[i]->size())
        fail(Errc::ValueOutOfRange, "parent value index out of range");
      row = row * antecedent_ranges_[i]->size() + parent_value_indices[i];
    }
    return row;
  }

  double entry(std::size_t row, std::size_t col) const {
    std::size_t idx = row * width() + col;
    if (col >= width() || idx >= entries_.size())
      fail(Errc::InvalidArgument, "matrix entry (" + std::to_string(row) + "," +
                                      std::to_string(col) + ") out of bounds");
    return entries_[idx];
  }

  double at(const std::vector<std::size_t>& parent_value_indices, std::size_t child_value_index) const {
    return entry(row_index(parent_value_indices), child_value_index);
  }

  friend bool operator==(const LinkMatrix& a, const LinkMatrix& b) {
    if (a.entries_ != b.entries_) return false;
    if (*a.consequent_range_ != *b.consequent_range_) return false;
    if (a.antecedent_ranges_.size() != b.antecedent_ranges_.size()) return false;
    for (std::size_t i = 0; i < a.antecedent_ranges_.size(); ++i)
      if (*a.antecedent_ranges_[i] != *b.antecedent_ranges_[i]) return false;
    return true;
  }

 private:
  std::vector<ValueRangePtr> antecedent_ranges_;
  ValueRangePtr consequent_range_;
  std::vector<double> entries_;
};

using LinkMatrixPtr = std::shared_ptr<const LinkMatrix>;

struct Rule {
  std::string id;
  std::vector<Term> antecedents;
  Term consequent;
  LinkMatrixPtr matrix;

  friend bool operator==(const Rule& a, const Rule& b) {
    return a.id == b.id && a.antecedents == b.antecedents && a.consequent == b.consequent &&
           *a.matrix == *b.matrix;
  }
};

// A rule with all terms made ground; the matrix is shared with the source
// rule (one matrix serves every instance of a quantified rule).
struct GroundRuleInstance {
  std::string rule_id;
  std::vector<Term> antecedents;
  Term consequent;
  LinkMatrixPtr matrix;
};

class KnowledgeBase {
 public:
  ValueRangePtr add_range(std::string name, std::vector<std::string> values) {
    if (range_index_.count(name))
      fail(Errc::InvalidArgument, "duplicate range '" + name + "'");
    auto r = std::make_shared<const ValueRange>(name, std::move(values));
    range_index_[r->name()] = ranges_.size();
    ranges_.push_back(r);
    return r;
  }

  FunctionSymbolPtr add_symbol(std::string name, std::size_t arity, const std::string& range_name) {
    if (symbol_index_.count(name))
      fail(Errc::InvalidArgument, "duplicate symbol '" + name + "'");
    ValueRangePtr r = find_range(range_name);
    if (!r) fail(Errc::InvalidArgument, "symbol '" + name + "' uses unknown range '" + range_name + "'");
    auto s = std::make_shared<const FunctionSymbol>(std::move(name), arity, std::move(r));
    symbol_index_[s->name()] = symbols_.size();
    symbols_.push_back(s);
    return s;
  }

  void add_rule(Rule rule) {
    if (rule_index_.count(rule.id))
      fail(Errc::InvalidArgument, "duplicate rule id '" + rule.id + "'");
    if (!rule.matrix) fail(Errc::InvalidArgument, "rule '" + rule.id + "' has no matrix");
    require_known(rule.consequent);
    for (const Term& t : rule.antecedents) require_known(t);
    // Matrix ranges must line up with the terms; entry counts are left to
    // the validator so malformed tables remain representable.
    if (rule.matrix->rank() != rule.antecedents.size())
      fail(Errc::InvalidArgument, "rule '" + rule.id + "' matrix rank mismatch");
    for (std::size_t i = 0; i < rule.antecedents.size(); ++i)
      if (*rule.matrix->antecedent_ranges()[i] != *rule.antecedents[i].range())
        fail(Errc::InvalidArgument, "rule '" + rule.id + "' matrix antecedent range mismatch");
    if (*rule.matrix->consequent_range() != *rule.consequent.range())
      fail(Errc::InvalidArgument, "rule '" + rule.id + "' matrix consequent range mismatch");
    rule_index_[rule.id] = rules_.size();
    rules_.push_back(std::move(rule));
  }

  ValueRangePtr find_range(const std::string& name) const {
    auto it = range_index_.find(name);
    return it == range_index_.end() ? nullptr : ranges_[it->second];
  }
  FunctionSymbolPtr find_symbol(const std::string& name) const {
    auto it = symbol_index_.find(name);
    return it == symbol_index_.end() ? nullptr : symbols_[it->second];
  }
  const Rule* find_rule(const std::string& id) const {
    auto it = rule_index_.find(id);
    return it == rule_index_.end() ? nullptr : &rules_[it->second];
  }

  const std::vector<ValueRangePtr>& ranges() const { return ranges_; }
  const std::vector<FunctionSymbolPtr>& symbols() const { return symbols_; }
  const std::vector<Rule>& rules() const { return rules_; }

  friend bool operator==(const KnowledgeBase& a, const KnowledgeBase& b) {
    if (a.ranges_.size() != b.ranges_.size() || a.symbols_.size() != b.symbols_.size() ||
        a.rules_.size() != b.rules_.size())
      return false;
    for (std::size_t i = 0; i < a.ranges_.size(); ++i)
      if (*a.ranges_[i] != *b.ranges_[i]) return false;
    for (std::size_t i = 0; i < a.symbols_.size(); ++i)
      if (!(*a.symbols_[i] == *b.symbols_[i])) return false;
    return a.rules_ == b.rules_;
  }

 private:
  void require_known(const Term& t) const {
    FunctionSymbolPtr s = find_symbol(t.symbol()->name());
    if (!s || !(*s == *t.symbol()))
      fail(Errc::InvalidArgument, "term '" + t.str() + "' uses a symbol not in this knowledge base");
  }

  std::vector<ValueRangePtr> ranges_;
  std::vector<FunctionSymbolPtr> symbols_;
  std::vector<Rule> rules_;
  std::map<std::string, std::size_t> range_index_;
  std::map<std::string, std::size_t> symbol_index_;
  std::map<std::string, std::size_t> rule_index_;
};

// ---- term operations -------------------------------------------------------

// Replace every variable bound in `b`; unbound variables pass through.
inline Term substitute(const Term& t, const Binding& b) {
  std::vector<Argument> args;
  args.reserve(t.args().size());
  for (const Argument& a : t.args()) {
    if (a.is_variable) {
      auto it = b.find(a.name);
      args.push_back(it != b.end() ? Argument{false, it->second} : a);
    } else {
      args.push_back(a);
    }
  }
  return Term(t.symbol(), std::move(args));
}

// One-sided matching: the unique binding with substitute(pattern, b) ==
// ground, or nullopt. Constants in the pattern are self-matching literals.
inline std::optional<Binding> match(const Term& pattern, const Term& ground) {
  if (pattern.symbol()->name() != ground.symbol()->name()) return std::nullopt;
  if (pattern.args().size() != ground.args().size()) return std::nullopt;
  Binding b;
  for (std::size_t i = 0; i < pattern.args().size(); ++i) {
    const Argument& p = pattern.args()[i];
    const Argument& g = ground.args()[i];
    if (g.is_variable) return std::nullopt;  // only ground terms are matched
    if (p.is_variable) {
      auto it = b.find(p.name);
      if (it == b.end())
        b[p.name] = g.name;
      else if (it->second != g.name)
        return std::nullopt;
    } else if (p.name != g.name) {
      return std::nullopt;
    }
  }
  return b;
}

// Instantiate a rule under a binding that covers all of its variables. The
// matrix is shared unchanged.
inline GroundRuleInstance rule_ground_instance(const Rule& r, const Binding& b) {
  GroundRuleInstance inst{r.id, {}, substitute(r.consequent, b), r.matrix};
  if (!inst.consequent.is_ground())
    fail(Errc::IncompleteBinding,
         "binding leaves variables in consequent of rule '" + r.id + "'");
  inst.antecedents.reserve(r.antecedents.size());
  for (const Term& a : r.antecedents) {
    Term g = substitute(a, b);
    if (!g.is_ground())
      fail(Errc::IncompleteBinding,
           "binding leaves variables in antecedent '" + a.str() + "' of rule '" + r.id + "'");
    inst.antecedents.push_back(std::move(g));
  }
  return inst;
}

// Stored conditional probability for one parent configuration and one child
// value, by value name.
inline double matrix_lookup(const LinkMatrix& m, const std::vector<std::string>& parent_values,
                            const std::string& child_value) {
  if (parent_values.size() != m.rank())
    fail(Errc::InvalidArgument,
         "expected " + std::to_string(m.rank()) + " parent values, got " +
             std::to_string(parent_values.size()));
  std::vector<std::size_t> idx(parent_values.size());
  for (std::size_t i = 0; i < parent_values.size(); ++i)
    idx[i] = m.antecedent_ranges()[i]->require_index(parent_values[i]);
  return m.at(idx, m.consequent_range()->require_index(child_value));
}

}  // namespace bayeskb
