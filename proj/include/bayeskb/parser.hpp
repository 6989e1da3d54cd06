#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>
#include <utility>
#include <vector>

#include "bayeskb/core.hpp"

namespace bayeskb {

struct SourceSpan {
  std::string file;
  int line = 1;
  int column = 1;
};

enum class ParseErrc {
  Syntax,
  UnknownSymbol,
  ArityMismatch,
  MatrixShape,
  DuplicateName,
  ValueOutOfRange,
};

inline const char* parse_errc_name(ParseErrc k) {
  switch (k) {
    case ParseErrc::Syntax: return "Syntax";
    case ParseErrc::UnknownSymbol: return "UnknownSymbol";
    case ParseErrc::ArityMismatch: return "ArityMismatch";
    case ParseErrc::MatrixShape: return "MatrixShape";
    case ParseErrc::DuplicateName: return "DuplicateName";
    case ParseErrc::ValueOutOfRange: return "ValueOutOfRange";
  }
  return "Unknown";
}

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrc kind, SourceSpan span, const std::string& msg)
      : std::runtime_error(span.file + ":" + std::to_string(span.line) + ":" +
                           std::to_string(span.column) + ": " + parse_errc_name(kind) + ": " + msg),
        kind_(kind),
        span_(std::move(span)),
        message_(msg) {}

  ParseErrc kind() const noexcept { return kind_; }
  const SourceSpan& span() const noexcept { return span_; }
  const std::string& message() const noexcept { return message_; }

 private:
  ParseErrc kind_;
  SourceSpan span_;
  std::string message_;
};


struct QueryFile {
  Term query;
  Evidence evidence;
};

namespace detail {

inline bool ident_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c == '_' || c == '+' || c == '-';
}

struct Token {
  enum Kind { Ident, Number, Punct, End } kind = End;
  std::string text;
  double number = 0.0;
  SourceSpan span;
};

class Lexer {
 public:
  Lexer(const std::string& src, std::string file) : src_(src), file_(std::move(file)) {}

  Token next() {
    skip_ws();
    Token t;
    t.span = here();
    if (pos_ >= src_.size()) return t;  // End
    char c = src_[pos_];
    if (c == '{' || c == '}' || c == '(' || c == ')' || c == '[' || c == ']' || c == ':' ||
        c == '|' || c == ',' || c == '=') {
      t.kind = Token::Punct;
      t.text = c;
      take();
      return t;
    }
    if (ident_char(c) || c == '.') {
      std::string run;
      while (pos_ < src_.size() && (ident_char(src_[pos_]) || src_[pos_] == '.')) {
        run += src_[pos_];
        take();
      }
      const char* begin = run.c_str();
      char* end = nullptr;
      double v = std::strtod(begin, &end);
      if (end == begin + run.size()) {
        t.kind = Token::Number;
        t.number = v;
        t.text = run;
        return t;
      }
      if (run.find('.') != std::string::npos)
        throw ParseError(ParseErrc::Syntax, t.span, "malformed number '" + run + "'");
      t.kind = Token::Ident;
      t.text = run;
      return t;
    }
    throw ParseError(ParseErrc::Syntax, t.span, std::string("unexpected character '") + c + "'");
  }

 private:
  SourceSpan here() const { return SourceSpan{file_, line_, col_}; }

  void take() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_ws() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        take();
      } else if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') take();
      } else {
        break;
      }
    }
  }

  const std::string& src_;
  std::string file_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

// Recursive-descent parser over the line-oriented rule language:
//
//   kb         := (range_decl | var_decl | rule_decl)*
//   range_decl := "range" IDENT "{" IDENT ("," IDENT)+ "}"
//   var_decl   := "var" IDENT "(" params? ")" ":" IDENT
//   rule_decl  := "rule" IDENT "{" TERM ("|" TERM ("," TERM)*)? ":" "cpt" "[" NUMBER+ "]" "}"
//   TERM       := IDENT ("(" IDENT ("," IDENT)* ")")?
//
// Arguments starting with a lowercase letter are variables; everything else
// is a constant. "#" comments run to end of line.
class Parser {
 public:
  Parser(const std::string& text, std::string file) : lex_(text, std::move(file)) { advance(); }

  KnowledgeBase parse_kb() {
    KnowledgeBase kb;
    while (!at_end()) {
      if (at_ident("range"))
        parse_range_decl(kb);
      else if (at_ident("var"))
        parse_var_decl(kb);
      else if (at_ident("rule"))
        parse_rule_decl(kb);
      else
        throw ParseError(ParseErrc::Syntax, tok_.span,
                         "expected 'range', 'var' or 'rule', got '" + tok_.text + "'");
    }
    return kb;
  }

  Term parse_query(const KnowledgeBase& kb) {
    Term t = parse_term(kb);
    require_ground(t);
    expect_end();
    return t;
  }

  Evidence parse_evidence(const KnowledgeBase& kb) {
    Evidence out;
    if (at_end()) return out;
    for (;;) {
      parse_evidence_pair(kb, out);
      if (at_punct(',')) {
        advance();
        continue;
      }
      break;
    }
    expect_end();
    return out;
  }

  QueryFile parse_bqe(const KnowledgeBase& kb) {
    SourceSpan at = tok_.span;
    if (!at_ident("query"))
      throw ParseError(ParseErrc::Syntax, at, "a query file starts with 'query: TERM'");
    advance();
    expect_punct(':');
    Term q = parse_term(kb);
    require_ground(q);
    QueryFile out{std::move(q), {}};
    while (!at_end()) {
      if (!at_ident("evidence"))
        throw ParseError(ParseErrc::Syntax, tok_.span,
                         "expected 'evidence: TERM=VALUE', got '" + tok_.text + "'");
      advance();
      expect_punct(':');
      parse_evidence_pair(kb, out.evidence);
    }
    return out;
  }

 private:
  void advance() { tok_ = lex_.next(); }
  bool at_end() const { return tok_.kind == Token::End; }
  bool at_punct(char c) const { return tok_.kind == Token::Punct && tok_.text[0] == c; }
  bool at_ident(const char* s) const { return tok_.kind == Token::Ident && tok_.text == s; }

  void expect_punct(char c) {
    if (!at_punct(c))
      throw ParseError(ParseErrc::Syntax, tok_.span,
                       std::string("expected '") + c + "', got '" +
                           (at_end() ? "end of input" : tok_.text) + "'");
    advance();
  }

  void expect_end() {
    if (!at_end())
      throw ParseError(ParseErrc::Syntax, tok_.span, "unexpected trailing '" + tok_.text + "'");
  }

  // Identifiers may be all-digit tokens ("0" is a valid value label), which
  // the lexer classifies as numbers; accept those here by their raw text.
  std::string ident(const char* what) {
    if (tok_.kind == Token::Ident) {
      std::string s = tok_.text;
      advance();
      return s;
    }
    if (tok_.kind == Token::Number) {
      for (char c : tok_.text)
        if (!ident_char(c))
          throw ParseError(ParseErrc::Syntax, tok_.span,
                           std::string("expected ") + what + ", got number '" + tok_.text + "'");
      std::string s = tok_.text;
      advance();
      return s;
    }
    throw ParseError(ParseErrc::Syntax, tok_.span,
                     std::string("expected ") + what + ", got '" +
                         (at_end() ? "end of input" : tok_.text) + "'");
  }

  void require_ground(const Term& t) {
    if (!t.is_ground())
      throw ParseError(ParseErrc::Syntax, last_term_span_,
                       "term '" + t.str() + "' must be ground (no variables)");
  }

  void parse_range_decl(KnowledgeBase& kb) {
    advance();  // range
    SourceSpan at = tok_.span;
    std::string name = ident("range name");
    if (kb.find_range(name))
      throw ParseError(ParseErrc::DuplicateName, at, "range '" + name + "' already declared");
    expect_punct('{');
    std::vector<std::string> values;
    values.push_back(ident("value label"));
    expect_punct(',');
    values.push_back(ident("value label"));
    while (at_punct(',')) {
      advance();
      values.push_back(ident("value label"));
    }
    for (std::size_t i = 0; i < values.size(); ++i)
      for (std::size_t j = i + 1; j < values.size(); ++j)
        if (values[i] == values[j])
          throw ParseError(ParseErrc::DuplicateName, at,
                           "range '" + name + "' repeats value '" + values[i] + "'");
    expect_punct('}');
    kb.add_range(std::move(name), std::move(values));
  }

  void parse_var_decl(KnowledgeBase& kb) {
    advance();  // var
    SourceSpan at = tok_.span;
    std::string name = ident("symbol name");
    if (kb.find_symbol(name))
      throw ParseError(ParseErrc::DuplicateName, at, "symbol '" + name + "' already declared");
    expect_punct('(');
    std::size_t arity = 0;
    if (!at_punct(')')) {
      ident("parameter name");
      ++arity;
      while (at_punct(',')) {
        advance();
        ident("parameter name");
        ++arity;
      }
    }
    expect_punct(')');
    expect_punct(':');
    SourceSpan rat = tok_.span;
    std::string range_name = ident("range name");
    if (!kb.find_range(range_name))
      throw ParseError(ParseErrc::UnknownSymbol, rat, "unknown range '" + range_name + "'");
    kb.add_symbol(std::move(name), arity, range_name);
  }

  Term parse_term(const KnowledgeBase& kb) {
    last_term_span_ = tok_.span;
    SourceSpan at = tok_.span;
    std::string name = ident("term");
    FunctionSymbolPtr sym = kb.find_symbol(name);
    if (!sym) throw ParseError(ParseErrc::UnknownSymbol, at, "unknown symbol '" + name + "'");
    std::vector<Argument> args;
    if (at_punct('(')) {
      advance();
      if (!at_punct(')')) {
        args.push_back(Argument::of(ident("argument")));
        while (at_punct(',')) {
          advance();
          args.push_back(Argument::of(ident("argument")));
        }
      }
      expect_punct(')');
    }
    if (args.size() != sym->arity())
      throw ParseError(ParseErrc::ArityMismatch, at,
                       "'" + name + "' takes " + std::to_string(sym->arity()) +
                           " arguments, got " + std::to_string(args.size()));
    return Term(sym, std::move(args));
  }

  void parse_rule_decl(KnowledgeBase& kb) {
    advance();  // rule
    SourceSpan idat = tok_.span;
    std::string id = ident("rule id");
    if (kb.find_rule(id))
      throw ParseError(ParseErrc::DuplicateName, idat, "rule '" + id + "' already declared");
    expect_punct('{');
    Term consequent = parse_term(kb);
    std::vector<Term> antecedents;
    if (at_punct('|')) {
      advance();
      antecedents.push_back(parse_term(kb));
      while (at_punct(',')) {
        advance();
        antecedents.push_back(parse_term(kb));
      }
    }
    expect_punct(':');
    if (!at_ident("cpt"))
      throw ParseError(ParseErrc::Syntax, tok_.span, "expected 'cpt', got '" + tok_.text + "'");
    advance();
    SourceSpan mat = tok_.span;
    expect_punct('[');
    std::vector<double> entries;
    std::vector<SourceSpan> spans;
    while (tok_.kind == Token::Number) {
      entries.push_back(tok_.number);
      spans.push_back(tok_.span);
      advance();
    }
    if (entries.empty())
      throw ParseError(ParseErrc::Syntax, tok_.span, "expected at least one matrix entry");
    expect_punct(']');
    expect_punct('}');

    std::vector<ValueRangePtr> ante_ranges;
    for (const Term& t : antecedents) ante_ranges.push_back(t.range());
    auto matrix =
        std::make_shared<const LinkMatrix>(std::move(ante_ranges), consequent.range(), entries);
    if (!matrix->shape_ok())
      throw ParseError(ParseErrc::MatrixShape, mat,
                       "rule '" + id + "' matrix has " + std::to_string(entries.size()) +
                           " entries, expected " + std::to_string(matrix->expected_entries()));
    for (std::size_t i = 0; i < entries.size(); ++i)
      if (!(entries[i] >= 0.0 && entries[i] <= 1.0))
        throw ParseError(ParseErrc::MatrixShape, spans[i],
                         "matrix entry " + format_probability(entries[i]) + " outside [0,1]");
    for (std::size_t r = 0; r < matrix->row_count(); ++r) {
      double sum = 0.0;
      for (std::size_t c = 0; c < matrix->width(); ++c) sum += matrix->entry(r, c);
      if (sum < 1.0 - kRowSumTol || sum > 1.0 + kRowSumTol)
        throw ParseError(ParseErrc::MatrixShape, mat,
                         "rule '" + id + "' matrix row " + std::to_string(r) + " sums to " +
                             format_probability(sum));
    }
    kb.add_rule(Rule{std::move(id), std::move(antecedents), std::move(consequent), matrix});
  }

  void parse_evidence_pair(const KnowledgeBase& kb, Evidence& out) {
    Term t = parse_term(kb);
    require_ground(t);
    SourceSpan tat = last_term_span_;
    expect_punct('=');
    SourceSpan vat = tok_.span;
    std::string value = ident("value");
    if (!t.range()->index_of(value))
      throw ParseError(ParseErrc::ValueOutOfRange, vat,
                       "'" + value + "' is not a value of range '" + t.range()->name() + "'");
    for (const auto& [prev, pv] : out) {
      if (prev == t) {
        if (pv != value)
          throw ParseError(ParseErrc::DuplicateName, tat,
                           "conflicting evidence for '" + t.str() + "': '" + pv + "' vs '" +
                               value + "'");
        return;  // consistent duplicate, keep the first
      }
    }
    out.emplace_back(std::move(t), std::move(value));
  }

  Lexer lex_;
  Token tok_;
  SourceSpan last_term_span_;
};

}  // namespace detail

// Parse the full rule language. Total: every malformed input raises exactly
// one ParseError; no partial knowledge base escapes.
inline KnowledgeBase parse_kb(const std::string& text, const std::string& filename = "<kb>") {
  try {
    return detail::Parser(text, filename).parse_kb();
  } catch (const Error& e) {
    throw ParseError(ParseErrc::Syntax, SourceSpan{filename, 1, 1}, e.what());
  }
}

inline Term parse_query(const KnowledgeBase& kb, const std::string& text,
                        const std::string& filename = "<query>") {
  return detail::Parser(text, filename).parse_query(kb);
}

// "TERM=VALUE, TERM=VALUE, ..."; empty input is an empty evidence list.
// Duplicate terms with conflicting values are rejected.
inline Evidence parse_evidence(const KnowledgeBase& kb, const std::string& text,
                               const std::string& filename = "<evidence>") {
  return detail::Parser(text, filename).parse_evidence(kb);
}

// Query/evidence file: first line "query: TERM", then "evidence: TERM=VALUE"
// lines.
inline QueryFile parse_bqe(const KnowledgeBase& kb, const std::string& text,
                           const std::string& filename = "<bqe>") {
  return detail::Parser(text, filename).parse_bqe(kb);
}

// Canonical text form: ranges, then symbols, then rules, in declaration
// order. parse_kb(serialize_kb(kb)) is structurally identical to kb.
inline std::string serialize_kb(const KnowledgeBase& kb) {
  std::string out;
  for (const auto& r : kb.ranges()) {
    out += "range " + r->name() + " { ";
    for (std::size_t i = 0; i < r->values().size(); ++i) {
      if (i) out += ", ";
      out += r->values()[i];
    }
    out += " }\n";
  }
  if (!kb.ranges().empty() && !kb.symbols().empty()) out += "\n";
  for (const auto& s : kb.symbols()) {
    out += "var " + s->name() + "(";
    for (std::size_t i = 0; i < s->arity(); ++i) {
      if (i) out += ",";
      out += "x" + std::to_string(i + 1);
    }
    out += ") : " + s->range()->name() + "\n";
  }
  if (!kb.rules().empty() && (!kb.ranges().empty() || !kb.symbols().empty())) out += "\n";
  for (const Rule& r : kb.rules()) {
    out += "rule " + r.id + " { " + r.consequent.str();
    for (std::size_t i = 0; i < r.antecedents.size(); ++i) {
      out += i == 0 ? " | " : ", ";
      out += r.antecedents[i].str();
    }
    out += " : cpt [";
    const auto& entries = r.matrix->entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (i) out += " ";
      out += format_probability(entries[i]);
    }
    out += "] }\n";
  }
  return out;
}

}  // namespace bayeskb
