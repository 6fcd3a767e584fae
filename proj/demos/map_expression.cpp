// Map one random genotype to a boolean expression with both mappers and
// print the resulting phenotypes.

#include <cstdio>

#include "gepop/gepop.hpp"

int main() {
  using namespace gepop;

  const auto grammar = parity_grammar(3);
  std::printf("grammar:\n%s\n", serialize_bnf(grammar).c_str());

  Rng rng(42);
  BitString genotype(256);
  genotype.randomize(rng);

  const auto whge = map_whge(genotype, grammar);
  std::printf("whge : %s\n", linearize(whge.tree).c_str());
  std::printf("       depth %d, fitness %.4f\n", tree_depth(whge.tree),
              parity_fitness(whge, 3));

  const auto ge = map_ge(genotype, grammar);
  if (ge.complete) {
    std::printf("ge   : %s\n", linearize(ge.tree).c_str());
    std::printf("       depth %d, fitness %.4f\n", tree_depth(ge.tree),
                parity_fitness(ge, 3));
  } else {
    std::printf("ge   : incomplete mapping (codons exhausted), fitness 1\n");
  }
  return 0;
}
