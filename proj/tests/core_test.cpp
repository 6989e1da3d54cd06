#include <catch2/catch.hpp>

#include <random>

#include "bayeskb/core.hpp"
#include "bayeskb/parser.hpp"
#include "bayeskb/validator.hpp"
#include "test_support.hpp"

using namespace bayeskb;
using testsupport::gterm;

namespace {

Term pattern(const KnowledgeBase& kb, const std::string& symbol,
             const std::vector<std::string>& args) {
  std::vector<Argument> as;
  for (const auto& a : args) as.push_back(Argument::of(a));
  return Term(kb.find_symbol(symbol), std::move(as));
}

}  // namespace

TEST_CASE("substitute replaces bound variables and passes the rest through") {
  KnowledgeBase kb = testsupport::burglary_kb();

  Term alarm_x = pattern(kb, "Alarm", {"x"});
  CHECK(substitute(alarm_x, {{"x", "Holmes"}}) == gterm(kb, "Alarm", {"Holmes"}));

  Term quake = pattern(kb, "Quake", {});
  CHECK(substitute(quake, {}) == quake);

  Term neighbor = pattern(kb, "Neighbor", {"n", "x"});
  CHECK(substitute(neighbor, {{"n", "Watson"}, {"x", "Holmes"}}) ==
        gterm(kb, "Neighbor", {"Watson", "Holmes"}));

  SECTION("unbound variables survive") {
    Term half = substitute(neighbor, {{"n", "Watson"}});
    CHECK_FALSE(half.is_ground());
    CHECK(half.args()[0] == Argument::constant("Watson"));
    CHECK(half.args()[1] == Argument::variable("x"));
  }
}

TEST_CASE("match computes the unique binding or reports no match") {
  KnowledgeBase kb = testsupport::burglary_kb();

  auto b1 = match(pattern(kb, "Burglary", {"x"}), gterm(kb, "Burglary", {"Holmes"}));
  REQUIRE(b1.has_value());
  CHECK(*b1 == Binding{{"x", "Holmes"}});

  auto b2 = match(pattern(kb, "Phone-call", {"n", "x"}),
                  gterm(kb, "Phone-call", {"Moriarty", "Holmes"}));
  REQUIRE(b2.has_value());
  CHECK(*b2 == Binding{{"n", "Moriarty"}, {"x", "Holmes"}});

  SECTION("constant clash") {
    CHECK_FALSE(match(pattern(kb, "Burglary", {"Watson"}), gterm(kb, "Burglary", {"Holmes"})));
  }
  SECTION("constants in patterns self-match") {
    auto b = match(pattern(kb, "Phone-call", {"n", "Holmes"}),
                   gterm(kb, "Phone-call", {"Watson", "Holmes"}));
    REQUIRE(b.has_value());
    CHECK(*b == Binding{{"n", "Watson"}});
  }
  SECTION("repeated variables must agree") {
    CHECK_FALSE(match(pattern(kb, "Neighbor", {"x", "x"}),
                      gterm(kb, "Neighbor", {"Watson", "Holmes"})));
    CHECK(match(pattern(kb, "Neighbor", {"x", "x"}), gterm(kb, "Neighbor", {"Holmes", "Holmes"}))
              .has_value());
  }
  SECTION("different symbols never match") {
    CHECK_FALSE(match(pattern(kb, "Burglary", {"x"}), gterm(kb, "Alarm", {"Holmes"})));
  }
}

TEST_CASE("substitute after match restores the ground term") {
  KnowledgeBase kb = testsupport::burglary_kb();
  std::mt19937_64 rng(7);
  const char* consts[] = {"Holmes", "Watson", "Moriarty", "Adler"};
  const char* vars[] = {"x", "n", "y"};
  std::uniform_int_distribution<int> coin(0, 1);

  int matched = 0;
  for (int iter = 0; iter < 200; ++iter) {
    auto sym = kb.symbols()[rng() % kb.symbols().size()];
    std::vector<Argument> gargs, pargs;
    for (std::size_t i = 0; i < sym->arity(); ++i) {
      gargs.push_back(Argument::constant(consts[rng() % 4]));
      // pattern argument: variable or the same constant, so a match exists
      // unless a repeated variable disagrees
      pargs.push_back(coin(rng) ? Argument::variable(vars[rng() % 3]) : gargs.back());
    }
    Term ground(sym, gargs), pat(sym, pargs);
    auto b = match(pat, ground);
    if (b) {
      ++matched;
      CHECK(substitute(pat, *b) == ground);
    }
  }
  CHECK(matched > 100);
}

TEST_CASE("rule_ground_instance instantiates the whole rule, sharing the matrix") {
  KnowledgeBase kb = testsupport::burglary_kb();

  SECTION("two-variable rule") {
    const Rule* r4 = kb.find_rule("R4");
    REQUIRE(r4);
    GroundRuleInstance inst = rule_ground_instance(*r4, {{"n", "Watson"}, {"x", "Holmes"}});
    CHECK(inst.consequent == gterm(kb, "Phone-call", {"Watson", "Holmes"}));
    REQUIRE(inst.antecedents.size() == 2);
    CHECK(inst.antecedents[0] == gterm(kb, "Alarm", {"Holmes"}));
    CHECK(inst.antecedents[1] == gterm(kb, "Neighbor", {"Watson", "Holmes"}));
    CHECK(inst.matrix.get() == r4->matrix.get());
  }
  SECTION("prior rule with the empty binding") {
    const Rule* r7 = kb.find_rule("R7");
    GroundRuleInstance inst = rule_ground_instance(*r7, {});
    CHECK(inst.consequent == gterm(kb, "Quake"));
    CHECK(inst.antecedents.empty());
  }
  SECTION("consequent binding covers the antecedents") {
    const Rule* r2 = kb.find_rule("R2");
    GroundRuleInstance inst = rule_ground_instance(*r2, {{"x", "Holmes"}});
    CHECK(inst.consequent == gterm(kb, "Alarm", {"Holmes"}));
    REQUIRE(inst.antecedents.size() == 2);
    CHECK(inst.antecedents[0] == gterm(kb, "Burglary", {"Holmes"}));
    CHECK(inst.antecedents[1] == gterm(kb, "Quake"));
  }
  SECTION("incomplete bindings are rejected") {
    const Rule* r4 = kb.find_rule("R4");
    CHECK_THROWS_MATCHES(rule_ground_instance(*r4, {{"x", "Holmes"}}), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == Errc::IncompleteBinding;
                         }));
  }
  SECTION("deterministic: same rule and binding give an identical instance") {
    const Rule* r4 = kb.find_rule("R4");
    Binding b{{"n", "Moriarty"}, {"x", "Holmes"}};
    GroundRuleInstance a = rule_ground_instance(*r4, b);
    GroundRuleInstance c = rule_ground_instance(*r4, b);
    CHECK(a.consequent == c.consequent);
    CHECK(a.antecedents == c.antecedents);
    CHECK(a.matrix.get() == c.matrix.get());
  }
}

TEST_CASE("matrix_lookup addresses rows with the last antecedent fastest") {
  auto flag = std::make_shared<const ValueRange>("flag", std::vector<std::string>{"+", "-"});

  SECTION("single-row prior") {
    LinkMatrix prior({}, flag, {0.3, 0.7});
    CHECK(matrix_lookup(prior, {}, "+") == 0.3);
    CHECK(matrix_lookup(prior, {}, "-") == 0.7);
  }
  SECTION("deterministic copy table") {
    LinkMatrix copy({flag}, flag, {1.0, 0.0, 0.0, 1.0});
    CHECK(matrix_lookup(copy, {"+"}, "+") == 1.0);
    CHECK(matrix_lookup(copy, {"+"}, "-") == 0.0);
    CHECK(matrix_lookup(copy, {"-"}, "-") == 1.0);
  }
  SECTION("unknown values are rejected") {
    LinkMatrix prior({}, flag, {0.3, 0.7});
    CHECK_THROWS_MATCHES(matrix_lookup(prior, {}, "maybe"), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == Errc::ValueOutOfRange;
                         }));
  }
}

TEST_CASE("matrix entries round-trip from file text in declared order") {
  // 2x3 parent combinations, binary consequent: the parsed table must hand
  // back exactly the literals written in the source, row by row with the
  // last antecedent varying fastest.
  const std::string text =
      "range flag { +, - }\n"
      "range tri { a1, a2, a3 }\n"
      "var P() : flag\n"
      "var Q() : tri\n"
      "var G() : flag\n"
      "rule Pp { P : cpt [0.5 0.5] }\n"
      "rule Pq { Q : cpt [0.25 0.25 0.5] }\n"
      "rule Rg { G | P, Q : cpt [0.01 0.99  0.02 0.98  0.03 0.97  0.04 0.96  0.05 0.95  0.06 "
      "0.94] }\n";
  KnowledgeBase kb = parse_kb(text);
  const LinkMatrix& m = *kb.find_rule("Rg")->matrix;
  REQUIRE(m.entries().size() == 12);
  const double expected[6][2] = {{0.01, 0.99}, {0.02, 0.98}, {0.03, 0.97},
                                 {0.04, 0.96}, {0.05, 0.95}, {0.06, 0.94}};
  const char* pvals[] = {"+", "-"};
  const char* qvals[] = {"a1", "a2", "a3"};
  for (int pi = 0; pi < 2; ++pi)
    for (int qi = 0; qi < 3; ++qi) {
      int row = pi * 3 + qi;
      CHECK(matrix_lookup(m, {pvals[pi], qvals[qi]}, "+") == expected[row][0]);
      CHECK(matrix_lookup(m, {pvals[pi], qvals[qi]}, "-") == expected[row][1]);
    }
}

TEST_CASE("burglary matrices carry the documented entry counts") {
  KnowledgeBase kb = testsupport::burglary_kb();
  const std::size_t expected[] = {6, 12, 6, 8, 8, 2, 3, 3, 2};
  REQUIRE(kb.rules().size() == 9);
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(kb.rules()[i].matrix->entries().size() == expected[i]);
    CHECK(kb.rules()[i].matrix->shape_ok());
  }
  CHECK(check_matrices(kb).empty());
}

TEST_CASE("domain type invariants") {
  SECTION("ranges need two distinct values") {
    CHECK_THROWS_AS(ValueRange("r", {"only"}), Error);
    CHECK_THROWS_AS(ValueRange("r", {"a", "a"}), Error);
  }
  SECTION("terms enforce their symbol's arity") {
    auto flag = std::make_shared<const ValueRange>("flag", std::vector<std::string>{"+", "-"});
    auto f = std::make_shared<const FunctionSymbol>("F", 2, flag);
    CHECK_THROWS_AS(Term(f, {Argument::constant("A")}), Error);
    CHECK(Term(f, {Argument::constant("A"), Argument::variable("x")}).str() == "F(A,x)");
  }
  SECTION("argument factories enforce the lexical convention") {
    CHECK_THROWS_AS(Argument::variable("Foo"), Error);
    CHECK_THROWS_AS(Argument::constant("foo"), Error);
    CHECK(Argument::of("watson").is_variable);
    CHECK_FALSE(Argument::of("221B").is_variable);
    CHECK_FALSE(Argument::of("+").is_variable);
  }
  SECTION("ground terms have no variables") {
    KnowledgeBase kb = testsupport::burglary_kb();
    CHECK(gterm(kb, "Quake").is_ground());
    CHECK_FALSE(pattern(kb, "Alarm", {"x"}).is_ground());
  }
}
