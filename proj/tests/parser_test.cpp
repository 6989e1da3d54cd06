#include <catch2/catch.hpp>

#include <random>

#include "bayeskb/parser.hpp"
#include "bayeskb/validator.hpp"
#include "test_support.hpp"

using namespace bayeskb;

namespace {

ParseErrc kind_of(const std::string& text) {
  try {
    parse_kb(text);
  } catch (const ParseError& e) {
    return e.kind();
  }
  throw std::runtime_error("expected the text to fail parsing");
}

}  // namespace

TEST_CASE("the burglary file parses into the expected knowledge base") {
  KnowledgeBase kb = testsupport::burglary_kb();
  CHECK(kb.rules().size() == 9);
  CHECK(kb.symbols().size() == 9);
  CHECK(kb.ranges().size() == 3);

  SECTION("value order is preserved verbatim") {
    CHECK(kb.find_range("flag")->values() == std::vector<std::string>{"+", "-"});
    CHECK(kb.find_range("quake_strength")->values() == std::vector<std::string>{"t", "m", "s"});
    CHECK(kb.find_range("neighborhood_class")->values() ==
          std::vector<std::string>{"b", "a", "g"});
  }
  SECTION("rule structure") {
    const Rule* r4 = kb.find_rule("R4");
    REQUIRE(r4);
    CHECK(r4->consequent.str() == "Phone-call(n,x)");
    REQUIRE(r4->antecedents.size() == 2);
    CHECK(r4->antecedents[0].str() == "Alarm(x)");
    CHECK(r4->antecedents[1].str() == "Neighbor(n,x)");
    CHECK(r4->consequent.args()[0].is_variable);
  }
}

TEST_CASE("matrix shape errors carry the MatrixShape kind and a span") {
  std::string text = testsupport::fixture_text("burglary.bkb");
  std::string short_r2 = testsupport::mutate_cpt(text, "R2", /*drop=*/true);
  try {
    parse_kb(short_r2, "burglary.bkb");
    FAIL("11-entry matrix must be rejected");
  } catch (const ParseError& e) {
    CHECK(e.kind() == ParseErrc::MatrixShape);
    CHECK(e.span().file == "burglary.bkb");
    CHECK(e.span().line >= 1);
    CHECK(e.span().column >= 1);
    CHECK(e.message().find("11") != std::string::npos);
    CHECK(e.message().find("12") != std::string::npos);
  }
}

TEST_CASE("empty input is a valid, empty knowledge base") {
  KnowledgeBase kb = parse_kb("");
  CHECK(kb.rules().empty());
  CHECK(kb.symbols().empty());
  CHECK(validate(kb).ok());
}

TEST_CASE("queries must be ground terms over declared symbols") {
  KnowledgeBase kb = testsupport::burglary_kb();

  Term q = parse_query(kb, "Burglary(Holmes)");
  CHECK(q == testsupport::gterm(kb, "Burglary", {"Holmes"}));

  CHECK(parse_query(kb, "Quake") == testsupport::gterm(kb, "Quake"));
  CHECK(parse_query(kb, "Quake()") == testsupport::gterm(kb, "Quake"));

  CHECK_THROWS_MATCHES(parse_query(kb, "Burglary(x)"), ParseError,
                       Catch::Matchers::Predicate<ParseError>(
                           [](const ParseError& e) { return e.kind() == ParseErrc::Syntax; }));
  CHECK_THROWS_MATCHES(parse_query(kb, "Nothing(Holmes)"), ParseError,
                       Catch::Matchers::Predicate<ParseError>([](const ParseError& e) {
                         return e.kind() == ParseErrc::UnknownSymbol;
                       }));
  CHECK_THROWS_MATCHES(parse_query(kb, "Burglary(Holmes,Watson)"), ParseError,
                       Catch::Matchers::Predicate<ParseError>([](const ParseError& e) {
                         return e.kind() == ParseErrc::ArityMismatch;
                       }));
  CHECK_THROWS_AS(parse_query(kb, "Burglary(Holmes) extra"), ParseError);
}

TEST_CASE("evidence lists parse term=value pairs") {
  KnowledgeBase kb = testsupport::burglary_kb();

  Evidence ev = parse_evidence(kb, testsupport::kBurglaryEvidence);
  REQUIRE(ev.size() == 5);
  CHECK(ev[0].first == testsupport::gterm(kb, "Radio"));
  CHECK(ev[0].second == "+");
  CHECK(ev[4].first == testsupport::gterm(kb, "Phone-call", {"Moriarty", "Holmes"}));

  CHECK(parse_evidence(kb, "").empty());
  CHECK(parse_evidence(kb, "   # just a comment\n").empty());

  SECTION("conflicting duplicates are rejected") {
    CHECK_THROWS_MATCHES(parse_evidence(kb, "Quake=s, Quake=t"), ParseError,
                         Catch::Matchers::Predicate<ParseError>([](const ParseError& e) {
                           return e.kind() == ParseErrc::DuplicateName;
                         }));
  }
  SECTION("consistent duplicates collapse") {
    CHECK(parse_evidence(kb, "Quake=s, Quake=s").size() == 1);
  }
  SECTION("values must lie in the term's range") {
    CHECK_THROWS_MATCHES(parse_evidence(kb, "Quake=severe"), ParseError,
                         Catch::Matchers::Predicate<ParseError>([](const ParseError& e) {
                           return e.kind() == ParseErrc::ValueOutOfRange;
                         }));
  }
  SECTION("evidence terms must be ground") {
    CHECK_THROWS_AS(parse_evidence(kb, "Alarm(x)=+"), ParseError);
  }
}

TEST_CASE("query files carry one query and evidence lines") {
  KnowledgeBase kb = testsupport::burglary_kb();
  QueryFile qf = parse_bqe(kb, testsupport::fixture_text("burglary_query.bqe"));
  CHECK(qf.query == testsupport::gterm(kb, "Burglary", {"Holmes"}));
  CHECK(qf.evidence.size() == 5);

  CHECK_THROWS_AS(parse_bqe(kb, "evidence: Radio=+\n"), ParseError);
}

TEST_CASE("serialization round-trips structurally") {
  SECTION("burglary fixture") {
    KnowledgeBase kb = testsupport::burglary_kb();
    KnowledgeBase again = parse_kb(serialize_kb(kb));
    CHECK(kb == again);
  }
  SECTION("minimal prior-only knowledge base prints canonically") {
    KnowledgeBase kb;
    kb.add_range("r", {"a", "b"});
    kb.add_symbol("Q", 0, "r");
    auto m = std::make_shared<const LinkMatrix>(std::vector<ValueRangePtr>{}, kb.find_range("r"),
                                                std::vector<double>{0.25, 0.75});
    kb.add_rule(Rule{"R", {}, Term(kb.find_symbol("Q")), m});
    CHECK(serialize_kb(kb) ==
          "range r { a, b }\n"
          "\n"
          "var Q() : r\n"
          "\n"
          "rule R { Q : cpt [0.25 0.75] }\n");
    CHECK(parse_kb(serialize_kb(kb)) == kb);
  }
  SECTION("random knowledge bases round-trip, probabilities bit-exact") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 25; ++i) {
      KnowledgeBase kb = testsupport::random_mixed_kb(rng, 1 + i % 50);
      KnowledgeBase again = parse_kb(serialize_kb(kb));
      REQUIRE(kb == again);
      // twice through the printer is a fixed point
      CHECK(serialize_kb(again) == serialize_kb(kb));
    }
  }
}

TEST_CASE("malformed input always raises one ParseError, never anything else") {
  const std::string text = testsupport::fixture_text("burglary.bkb");
  // every prefix either parses or raises ParseError with a valid span
  for (std::size_t cut = 0; cut < text.size(); cut += 7) {
    try {
      parse_kb(text.substr(0, cut));
    } catch (const ParseError& e) {
      CHECK(e.span().line >= 1);
      CHECK(e.span().column >= 1);
    }
    // any other exception type escapes and fails the test
  }

  const char* bad[] = {
      "range",
      "range r",
      "range r { a }",
      "range r { a, a }",
      "range r { a, b } range r { c, d }",
      "var X() : nosuch",
      "range r { a, b } var X() : r var X() : r",
      "range r { a, b } var X(p) : r rule R { X : cpt [1.0] }",
      "range r { a, b } var X() : r rule R { X : cpt [] }",
      "range r { a, b } var X() : r rule R { X : cpt [0.5 0.5 0.5] }",
      "range r { a, b } var X() : r rule R { X : cpt [0.6 0.6] }",
      "range r { a, b } var X() : r rule R { X : cpt [1.5 -0.5] }",
      "range r { a, b } var X() : r rule R { X : cpt [0.5 0.5] } rule R { X : cpt [0.5 0.5] }",
      "range r { a, b } var X() : r rule R { Y : cpt [0.5 0.5] }",
      "range r { a, b } var X() : r rule R { X | : cpt [0.5 0.5] }",
      "range r { a, b } var X() : r rule R { X : cpt [0.5 0.5] } trailing",
      "range r { a, 0.5 }",
      "@",
  };
  for (const char* t : bad) CHECK_THROWS_AS(parse_kb(t), ParseError);
}

TEST_CASE("parse error kinds are specific") {
  CHECK(kind_of("range r { a, a }") == ParseErrc::DuplicateName);
  CHECK(kind_of("var X() : nosuch") == ParseErrc::UnknownSymbol);
  CHECK(kind_of("range r { a, b } var X(p) : r rule R { X() : cpt [0.5 0.5] }") ==
        ParseErrc::ArityMismatch);
  CHECK(kind_of("range r { a, b } var X() : r rule R { X : cpt [0.5 0.5 0.5] }") ==
        ParseErrc::MatrixShape);
  CHECK(kind_of("range r { a, b } var X() : r rule R { X : cpt [0.7 0.4] }") ==
        ParseErrc::MatrixShape);
  CHECK(kind_of("rule { }") == ParseErrc::Syntax);
}

TEST_CASE("lexer details: comments, line endings, digit-led labels, scientific notation") {
  KnowledgeBase kb = parse_kb(
      "# leading comment\r\n"
      "range bits { 0, 1 }   # binary labels\r\n"
      "var B() : bits\r\n"
      "rule R { B : cpt [2.5e-1 7.5e-1] }\r\n");
  CHECK(kb.find_range("bits")->values() == std::vector<std::string>{"0", "1"});
  CHECK(kb.find_rule("R")->matrix->entries() == std::vector<double>{0.25, 0.75});
}
