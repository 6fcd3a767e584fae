#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "gepop/evolve.hpp"

using namespace gepop;

namespace {

EvolutionConfig small_config() {
  EvolutionConfig cfg;
  cfg.population_size = 30;
  cfg.offspring_count = 30;
  cfg.generations = 10;
  cfg.genotype_bits = 64;
  return cfg;
}

Population fixed_fitness_population(const std::vector<double>& fitnesses,
                                    std::size_t bits = 16) {
  Population pop;
  Rng rng(77);
  for (const auto f : fitnesses) {
    Individual ind;
    ind.genotype = BitString(bits);
    ind.genotype.randomize(rng);
    ind.fitness = f;
    pop.push_back(std::move(ind));
  }
  return pop;
}

}  // namespace

TEST_CASE("init_population is seed-deterministic and diverse", "[evolve]") {
  auto cfg = small_config();
  cfg.population_size = 500;
  cfg.genotype_bits = 256;
  const auto problem = make_parity_problem(3);
  const auto mapper = make_mapper(problem.grammar, cfg);

  Rng r1(42), r2(42);
  const auto p1 = init_population(cfg, problem, mapper, r1);
  const auto p2 = init_population(cfg, problem, mapper, r2);
  REQUIRE(p1.size() == 500);
  for (std::size_t i = 0; i < p1.size(); ++i) {
    REQUIRE(p1[i].genotype == p2[i].genotype);
    REQUIRE(p1[i].fitness == p2[i].fitness);
    REQUIRE(p1[i].birth_generation == 0);
  }
  REQUIRE(diversity(p1) >= 0.99);
}

TEST_CASE("init_population with one bit draws from {0,1}", "[evolve]") {
  auto cfg = small_config();
  cfg.population_size = 2;
  cfg.genotype_bits = 1;
  cfg.mapper = MapperKind::whge;
  const auto problem = make_klandscapes_problem(1, 1);
  const auto mapper = make_mapper(problem.grammar, cfg);
  std::set<std::string> seen;
  Rng rng(5);
  for (int trial = 0; trial < 40; ++trial)
    for (const auto& ind : init_population(cfg, problem, mapper, rng))
      seen.insert(ind.genotype.to_string());
  REQUIRE(seen == std::set<std::string>{"0", "1"});
}

TEST_CASE("tournament_select picks the smallest fitness among its draws",
          "[evolve]") {
  SECTION("size 1 is a uniform draw") {
    const auto pop = fixed_fitness_population({0.9, 0.1, 0.5, 0.7});
    Rng rng(3);
    std::set<const Individual*> picked;
    for (int i = 0; i < 400; ++i)
      picked.insert(&tournament_select(pop, 1, rng));
    REQUIRE(picked.size() == 4);  // every individual shows up
  }
  SECTION("a dominant individual wins any tournament it enters") {
    auto pop = fixed_fitness_population({1.0, 1.0, 1.0, 1.0, 1.0});
    pop[3].fitness = 0.0;
    Rng rng(9);
    // size = population size makes its inclusion very likely; whenever the
    // winner is not pop[3], the draw must have missed it entirely
    int wins = 0;
    for (int i = 0; i < 200; ++i)
      if (&tournament_select(pop, 5, rng) == &pop[3]) ++wins;
    REQUIRE(wins > 100);
  }
  SECTION("all equal: the first draw wins") {
    const auto pop = fixed_fitness_population({0.5, 0.5, 0.5, 0.5});
    Rng rng(123);
    Rng probe = rng;  // same stream: predict the first index drawn
    for (int i = 0; i < 50; ++i) {
      const auto expected = uniform_index(probe, pop.size());
      uniform_index(probe, pop.size());
      uniform_index(probe, pop.size());
      REQUIRE(&tournament_select(pop, 3, rng) == &pop[expected]);
    }
  }
  SECTION("selection pressure: two equal classes, size 3 -> 7/8") {
    std::vector<double> fs(1000, 1.0);
    for (int i = 0; i < 500; ++i) fs[i] = 0.0;
    const auto pop = fixed_fitness_population(fs);
    Rng rng(2718);
    int class0 = 0;
    constexpr int kDraws = 100000;
    for (int i = 0; i < kDraws; ++i)
      if (tournament_select(pop, 3, rng).fitness == 0.0) ++class0;
    const double p = static_cast<double>(class0) / kDraws;
    REQUIRE_THAT(p, Catch::Matchers::WithinAbs(7.0 / 8.0, 0.01));
  }
}

TEST_CASE("two_point_crossover splices g2 between the cuts", "[evolve]") {
  const auto g1 = BitString::from_string("0000000000");
  const auto g2 = BitString::from_string("1111111111");
  REQUIRE(crossover_with_cuts(g1, g2, 0, 10) == g2);
  REQUIRE(crossover_with_cuts(g1, g2, 4, 4) == g1);
  REQUIRE(crossover_with_cuts(g1, g2, 3, 7) ==
          BitString::from_string("0001111000"));

  Rng rng(1);
  REQUIRE(two_point_crossover(g1, g1, rng) == g1);
  REQUIRE_THROWS_AS(two_point_crossover(g1, BitString(4), rng),
                    std::invalid_argument);

  SECTION("equal parents are a fixed point for any cuts") {
    Rng r(5);
    BitString g(128);
    g.randomize(r);
    for (int i = 0; i < 20; ++i)
      REQUIRE(two_point_crossover(g, g, r) == g);
  }
}

TEST_CASE("bitflip_mutation limits", "[evolve]") {
  Rng rng(6);
  BitString g(256);
  g.randomize(rng);

  REQUIRE(bitflip_mutation(g, 0.0, rng) == g);

  auto complement = g;
  for (std::size_t i = 0; i < g.size(); ++i) complement.flip(i);
  REQUIRE(bitflip_mutation(g, 1.0, rng) == complement);

  SECTION("p=0.01 on 256 bits flips 2.56 on average") {
    double flips = 0;
    constexpr int kTrials = 10000;
    for (int i = 0; i < kTrials; ++i)
      flips += hamming(g, bitflip_mutation(g, 0.01, rng));
    const double mean = flips / kTrials;
    REQUIRE(mean > 2.4);
    REQUIRE(mean < 2.7);
  }
}

TEST_CASE("step_generation keeps the best m with parents winning ties",
          "[evolve]") {
  const auto problem = make_parity_problem(3);
  auto cfg = small_config();
  const auto mapper = make_mapper(problem.grammar, cfg);

  SECTION("output size and elitism") {
    Rng rng(12);
    auto pop = init_population(cfg, problem, mapper, rng);
    for (int gen = 1; gen <= 5; ++gen) {
      const double best_before =
          std::min_element(pop.begin(), pop.end(), [](auto& a, auto& b) {
            return a.fitness < b.fitness;
          })->fitness;
      pop = step_generation(pop, cfg, problem, mapper, rng, gen);
      REQUIRE(pop.size() == 30);
      const double best_after =
          std::min_element(pop.begin(), pop.end(), [](auto& a, auto& b) {
            return a.fitness < b.fitness;
          })->fitness;
      REQUIRE(best_after <= best_before);
      for (const auto& ind : pop) REQUIRE(ind.birth_generation <= gen);
    }
  }
  SECTION("offspring that cannot beat any parent leave the population as-is") {
    Problem flat = problem;
    flat.evaluate = [](const MappingOutcome&) { return 0.5; };
    Rng rng(13);
    auto pop = init_population(cfg, flat, mapper, rng);
    // parents strictly better than anything the flat problem can produce
    for (auto& ind : pop) ind.fitness = 0.25;
    const auto next = step_generation(pop, cfg, flat, mapper, rng, 1);
    REQUIRE(next.size() == pop.size());
    for (std::size_t i = 0; i < pop.size(); ++i)
      REQUIRE(next[i].genotype == pop[i].genotype);
  }
  SECTION("equal-fitness offspring displace survivors") {
    Problem flat = problem;
    flat.evaluate = [](const MappingOutcome&) { return 0.5; };
    Rng rng(14);
    const auto pop = init_population(cfg, flat, mapper, rng);
    const auto next = step_generation(pop, cfg, flat, mapper, rng, 3);
    REQUIRE(next.size() == pop.size());
    for (const auto& ind : next) {
      REQUIRE(ind.fitness == 0.5);
      REQUIRE(ind.birth_generation == 3);
    }
  }
}

TEST_CASE("run_evolution snapshots every generation deterministically",
          "[evolve]") {
  const auto problem = make_parity_problem(3);
  auto cfg = small_config();

  SECTION("generations+1 snapshots, best fitness non-increasing") {
    Rng rng(2);
    const auto history = run_evolution(cfg, problem, rng);
    REQUIRE(history.size() == 11);
    for (std::size_t i = 0; i < history.size(); ++i) {
      REQUIRE(history[i].generation == static_cast<int>(i));
      if (i > 0)
        REQUIRE(history[i].best_fitness <= history[i - 1].best_fitness);
    }
  }
  SECTION("generations=0 gives exactly the initial snapshot") {
    auto cfg0 = cfg;
    cfg0.generations = 0;
    Rng rng(2);
    const auto history = run_evolution(cfg0, problem, rng);
    REQUIRE(history.size() == 1);
    REQUIRE(history[0].generation == 0);
  }
  SECTION("same seed, same history; different seed, different history") {
    Rng r1(42), r2(42), r3(43);
    const auto h1 = run_evolution(cfg, problem, r1);
    const auto h2 = run_evolution(cfg, problem, r2);
    const auto h3 = run_evolution(cfg, problem, r3);
    REQUIRE(h1.size() == h2.size());
    bool any_difference = false;
    for (std::size_t i = 0; i < h1.size(); ++i) {
      REQUIRE(h1[i].best_fitness == h2[i].best_fitness);
      REQUIRE(h1[i].diversity == h2[i].diversity);
      REQUIRE((std::isnan(h1[i].id) ? std::isnan(h2[i].id)
                                    : h1[i].id == h2[i].id));
      REQUIRE(h1[i].unique_count == h2[i].unique_count);
      if (h1[i].best_fitness != h3[i].best_fitness ||
          h1[i].diversity != h3[i].diversity)
        any_difference = true;
    }
    REQUIRE(any_difference);
  }
  SECTION("the ge mapper route runs end to end") {
    auto cfg_ge = cfg;
    cfg_ge.mapper = MapperKind::ge;
    Rng rng(7);
    const auto history = run_evolution(cfg_ge, problem, rng);
    REQUIRE(history.size() == 11);
    for (const auto& s : history) {
      REQUIRE(s.best_fitness >= 0.0);
      REQUIRE(s.best_fitness <= 1.0);
    }
  }
  SECTION("config validation rejects bad settings") {
    auto bad = cfg;
    bad.population_size = 1;
    Rng rng(1);
    REQUIRE_THROWS_AS(run_evolution(bad, problem, rng), std::invalid_argument);
    bad = cfg;
    bad.crossover_rate = 1.5;
    REQUIRE_THROWS_AS(run_evolution(bad, problem, rng), std::invalid_argument);
    bad = cfg;
    bad.mapper = MapperKind::ge;
    bad.genotype_bits = 60;  // not a codon multiple
    REQUIRE_THROWS_AS(run_evolution(bad, problem, rng), std::invalid_argument);
  }
}
