#include <catch2/catch_amalgamated.hpp>

#include "gepop/mapper.hpp"
#include "gepop/problems.hpp"
#include "support/oracles.hpp"

using namespace gepop;

namespace {

BitString zeros(std::size_t n) { return BitString(n); }

BitString ones(std::size_t n) {
  BitString b(n);
  for (std::size_t i = 0; i < n; ++i) b.set(i, true);
  return b;
}

int internal_nodes(const DerivationTree& t) {
  if (t.children.empty()) return 0;
  int n = 1;
  for (const auto& c : t.children) n += internal_nodes(c);
  return n;
}

}  // namespace

TEST_CASE("map_ge picks options codon mod option-count", "[mapper]") {
  const auto g = parse_bnf("<s> ::= a | b");
  // first byte = 5 -> option 5 mod 2 = 1 -> leaf "b"
  BitString geno(16);
  geno.set(5, true);
  geno.set(7, true);  // 00000101 00000000
  const auto out = map_ge(geno, g, GeParams{8, 2});
  REQUIRE(out.complete);
  REQUIRE(linearize(out.tree) == "b");
}

TEST_CASE("map_ge with a single option per nonterminal ignores the genotype",
          "[mapper]") {
  const auto g = parse_bnf("<s> ::= x <t> y\n<t> ::= z");
  Rng rng(3);
  BitString a(64), b(64);
  a.randomize(rng);
  b.randomize(rng);
  const auto ta = map_ge(a, g);
  const auto tb = map_ge(b, g);
  REQUIRE(ta.complete);
  REQUIRE(linearize(ta.tree) == "x z y");
  REQUIRE(linearize(ta.tree) == linearize(tb.tree));
}

TEST_CASE("map_ge exhausts wraps on unbounded recursion", "[mapper]") {
  const auto g = parse_bnf("<s> ::= <s> <s> | a");
  // all-zero codons always pick option 0 = <s> <s>
  const auto out = map_ge(zeros(64), g, GeParams{8, 2});
  REQUIRE_FALSE(out.complete);
  REQUIRE_FALSE(tree_complete(out.tree));
  // 8 codons, 3 passes -> exactly 24 expansions consumed
  REQUIRE(internal_nodes(out.tree) == 24);
  REQUIRE_THROWS_AS(linearize(out.tree), std::invalid_argument);
}

TEST_CASE("map_ge validates codon_bits", "[mapper]") {
  const auto g = parse_bnf("<s> ::= a | b");
  REQUIRE_THROWS_AS(map_ge(zeros(60), g, GeParams{8, 2}),
                    std::invalid_argument);
}

TEST_CASE("map_ge ignores bits beyond the last consumed codon", "[mapper]") {
  const auto g = parity_grammar(3);
  Rng rng(17);
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    BitString geno(256);
    geno.randomize(rng);
    const auto out = map_ge(geno, g, GeParams{8, 2});
    if (!out.complete) continue;
    const int consumed = internal_nodes(out.tree);
    if (consumed >= 32) continue;  // wrapped: every codon was read
    BitString tail = geno;
    for (std::size_t i = consumed * 8; i < tail.size(); ++i) tail.flip(i);
    const auto out2 = map_ge(tail, g, GeParams{8, 2});
    REQUIRE(linearize(out2.tree) == linearize(out.tree));
    ++checked;
  }
  REQUIRE(checked > 10);
}

TEST_CASE("expressiveness weights count derivable strings", "[mapper]") {
  SECTION("terminals weigh exactly 1") {
    const auto g = parse_bnf("<s> ::= a | b");
    const auto w = expressiveness_weights(g, 2);
    REQUIRE(w[*g.find("a")] == 1.0);
    REQUIRE(w[*g.find("b")] == 1.0);
  }
  SECTION("two strings at horizon 1 -> log2(3)") {
    const auto g = parse_bnf("<s> ::= a | b");
    const auto w = expressiveness_weights(g, 1);
    REQUIRE_THAT(w[*g.find("s")],
                 Catch::Matchers::WithinAbs(std::log2(3.0), 1e-12));
  }
  SECTION("structurally identical nonterminals weigh the same") {
    const auto g = parse_bnf(
        "<s> ::= <u> <v>\n"
        "<u> ::= p <u> | q | r\n"
        "<v> ::= p <v> | q | r\n");
    const auto w = expressiveness_weights(g, 3);
    REQUIRE(w[*g.find("u")] == w[*g.find("v")]);
    REQUIRE(w[*g.find("u")] > 1.0);
  }
  SECTION("unexpanded forms count as one string each") {
    // horizon 1: <s> -> { "<s> <s>", "a" } = 2 forms
    const auto g = parse_bnf("<s> ::= <s> <s> | a");
    const auto w = expressiveness_weights(g, 1);
    REQUIRE_THAT(w[*g.find("s")],
                 Catch::Matchers::WithinAbs(std::log2(3.0), 1e-12));
  }
}

TEST_CASE("map_whge picks the densest part", "[mapper]") {
  const auto g = parse_bnf("<s> ::= a | b");
  SECTION("1100 -> parts 11,00 -> option 0") {
    const auto out = map_whge(BitString::from_string("1100"), g);
    REQUIRE(out.complete);
    REQUIRE(linearize(out.tree) == "a");
  }
  SECTION("0011 -> parts 00,11 -> option 1") {
    const auto out = map_whge(BitString::from_string("0011"), g);
    REQUIRE(linearize(out.tree) == "b");
  }
  SECTION("ties go to the smallest option index") {
    REQUIRE(linearize(map_whge(BitString::from_string("1111"), g).tree) == "a");
    REQUIRE(linearize(map_whge(BitString::from_string("0000"), g).tree) == "a");
  }
}

TEST_CASE("map_whge is deterministic and ignores genotype when choiceless",
          "[mapper]") {
  const auto g = parse_bnf("<s> ::= x y z");
  for (const std::size_t len : {1u, 8u, 256u}) {
    REQUIRE(linearize(map_whge(zeros(len), g).tree) == "x y z");
    REQUIRE(linearize(map_whge(ones(len), g).tree) == "x y z");
  }
  const auto pg = parity_grammar(4);
  Rng rng(5);
  BitString geno(256);
  geno.randomize(rng);
  WhgeMapper mapper(pg);
  const auto a = mapper.map(geno);
  const auto b = mapper.map(geno);
  REQUIRE(linearize(a.tree) == linearize(b.tree));
  REQUIRE(tree_depth(a.tree) == tree_depth(b.tree));
}

TEST_CASE("map_whge is total and depth-bounded", "[mapper]") {
  for (const auto& g : {parity_grammar(5), klandscapes_grammar()}) {
    const WhgeParams params{};
    WhgeMapper mapper(g, params);
    const int bound = params.depth_cap + mapper.max_completion_depth();
    Rng rng(23);
    for (int trial = 0; trial < 200; ++trial) {
      BitString geno(256);
      geno.randomize(rng);
      const auto out = mapper.map(geno);
      REQUIRE(out.complete);
      REQUIRE(tree_complete(out.tree));
      REQUIRE(validate_tree(out.tree, g, true));
      REQUIRE(tree_depth(out.tree) <= bound);
    }
    // degenerate lengths
    for (const std::size_t len : {1u, 2u, 3u, 7u}) {
      REQUIRE(mapper.map(zeros(len)).complete);
      REQUIRE(mapper.map(ones(len)).complete);
    }
  }
}

TEST_CASE("WhgeMapper rejects grammars without finite expansions", "[mapper]") {
  REQUIRE_THROWS_AS(WhgeMapper(parse_bnf("<s> ::= <s> <s> | <s>")),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(WhgeMapper(parse_bnf("<s> ::= <t> a\n<t> ::= <s>")),
                    std::invalid_argument);
}

TEST_CASE("WhgeMapper completion terminates even when fewest-nonterminals cycles",
          "[mapper]") {
  // fewest-nonterminals at <s> picks <t> (1 nonterminal beats 2), and at
  // <t> picks <s>: a cycle, although both can finish through <u> <u>
  const auto g = parse_bnf(
      "<s> ::= <t> | <u> <u>\n"
      "<t> ::= <s> | <u> <u>\n"
      "<u> ::= a\n");
  WhgeMapper mapper(g, WhgeParams{4, 2});
  const auto out = mapper.map(zeros(2));  // empty splits force completion
  REQUIRE(out.complete);
  REQUIRE(validate_tree(out.tree, g, true));
}

TEST_CASE("ge and whge both produce grammar-valid parity phenotypes",
          "[mapper]") {
  const auto g = parity_grammar(3);
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    BitString geno(256);
    geno.randomize(rng);
    const auto whge = map_whge(geno, g);
    REQUIRE(validate_tree(whge.tree, g, true));
    const auto ge = map_ge(geno, g);
    REQUIRE(validate_tree(ge.tree, g, false));
  }
}
