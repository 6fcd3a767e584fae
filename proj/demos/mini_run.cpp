// Evolve a small population on Parity b=4 and print the per-generation
// instrumentation: best fitness, diversity, and TWO-NN intrinsic dimension.

#include <cstdio>

#include "gepop/gepop.hpp"

int main() {
  using namespace gepop;

  EvolutionConfig config;
  config.population_size = 100;
  config.offspring_count = 100;
  config.generations = 25;

  const auto problem = make_parity_problem(4);
  Rng rng(1);
  const auto history = run_evolution(config, problem, rng);

  std::printf("%4s %10s %10s %8s %8s\n", "gen", "best", "diversity", "id",
              "id_fit");
  for (const auto& s : history) {
    std::printf("%4d %10.4f %10.3f %8.2f %8.2f\n", s.generation,
                s.best_fitness, s.diversity, s.id, s.id_fit_quality);
  }
  return 0;
}
