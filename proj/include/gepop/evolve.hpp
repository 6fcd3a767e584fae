#pragma once

#include <algorithm>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gepop/bitstring.hpp"
#include "gepop/mapper.hpp"
#include "gepop/metrics.hpp"
#include "gepop/population.hpp"
#include "gepop/problems.hpp"
#include "gepop/rng.hpp"

namespace gepop {

enum class MapperKind { ge, whge };

/// Run parameters. m parents produce n offspring per generation; the m+n
/// merge keeps the best m with parents winning ties, so the best fitness
/// can never worsen.
struct EvolutionConfig {
  int population_size = 500;        // m
  int offspring_count = 500;        // n
  int generations = 50;
  int tournament_size = 3;
  int genotype_bits = 256;
  double crossover_rate = 0.8;
  double mutation_prob_per_bit = 0.01;
  MapperKind mapper = MapperKind::whge;
  GeParams ge;
  WhgeParams whge;
  IdFit id_fit = IdFit::through_origin;

  void validate() const {
    if (population_size < 2) throw std::invalid_argument("population_size >= 2");
    if (offspring_count < 1) throw std::invalid_argument("offspring_count >= 1");
    if (generations < 0) throw std::invalid_argument("generations >= 0");
    if (tournament_size < 1) throw std::invalid_argument("tournament_size >= 1");
    if (genotype_bits < 1) throw std::invalid_argument("genotype_bits >= 1");
    if (crossover_rate < 0.0 || crossover_rate > 1.0)
      throw std::invalid_argument("crossover_rate in [0,1]");
    if (mutation_prob_per_bit < 0.0 || mutation_prob_per_bit > 1.0)
      throw std::invalid_argument("mutation_prob_per_bit in [0,1]");
    if (mapper == MapperKind::ge && genotype_bits % ge.codon_bits != 0)
      throw std::invalid_argument("codon_bits must divide genotype_bits");
  }
};

using GenotypeMapper = std::function<MappingOutcome(const BitString&)>;

/// Bind the configured mapping to the problem grammar. The WHGE mapper
/// precomputes its weight and completion tables once here.
inline GenotypeMapper make_mapper(const Grammar& grammar,
                                  const EvolutionConfig& config) {
  if (config.mapper == MapperKind::ge) {
    const GeParams params = config.ge;
    return [&grammar, params](const BitString& g) {
      return map_ge(g, grammar, params);
    };
  }
  return [mapper = std::make_shared<WhgeMapper>(grammar, config.whge)](
             const BitString& g) { return mapper->map(g); };
}

/// m uniform-random genotypes, mapped and evaluated, birth generation 0.
inline Population init_population(const EvolutionConfig& config,
                                  const Problem& problem,
                                  const GenotypeMapper& mapper, Rng& rng) {
  Population pop;
  pop.reserve(config.population_size);
  for (int i = 0; i < config.population_size; ++i) {
    Individual ind;
    ind.genotype = BitString(config.genotype_bits);
    ind.genotype.randomize(rng);
    ind.outcome = mapper(ind.genotype);
    ind.fitness = problem.evaluate(ind.outcome);
    ind.birth_generation = 0;
    pop.push_back(std::move(ind));
  }
  return pop;
}

/// Draw `size` individuals uniformly with replacement and return the one
/// with the smallest fitness; ties keep the earliest draw.
inline const Individual& tournament_select(const Population& pop, int size,
                                           Rng& rng) {
  if (pop.empty()) throw std::invalid_argument("tournament_select: empty population");
  if (size < 1) throw std::invalid_argument("tournament_select: size >= 1");
  const Individual* best = &pop[uniform_index(rng, pop.size())];
  for (int d = 1; d < size; ++d) {
    const Individual& contender = pop[uniform_index(rng, pop.size())];
    if (contender.fitness < best->fitness) best = &contender;
  }
  return *best;
}

/// child = g1[0..c1) ++ g2[c1..c2) ++ g1[c2..L)
inline BitString crossover_with_cuts(const BitString& g1, const BitString& g2,
                                     std::size_t c1, std::size_t c2) {
  if (g1.size() != g2.size())
    throw std::invalid_argument("two_point_crossover: length mismatch");
  BitString child = g1;
  for (std::size_t i = c1; i < c2; ++i) child.set(i, g2.bit(i));
  return child;
}

/// Two cut points drawn uniformly over 0..L and ordered.
inline BitString two_point_crossover(const BitString& g1, const BitString& g2,
                                     Rng& rng) {
  if (g1.size() != g2.size())
    throw std::invalid_argument("two_point_crossover: length mismatch");
  auto c1 = uniform_index(rng, g1.size() + 1);
  auto c2 = uniform_index(rng, g1.size() + 1);
  if (c1 > c2) std::swap(c1, c2);
  return crossover_with_cuts(g1, g2, c1, c2);
}

/// Independent per-bit flips with probability p.
inline BitString bitflip_mutation(const BitString& g, double p, Rng& rng) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("bitflip_mutation: p in [0,1]");
  BitString out = g;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (unit_real(rng) < p) out.flip(i);
  return out;
}

/// One m+n generation: breed n offspring (tournament parents, optional
/// two-point crossover, then per-bit mutation), evaluate them, merge with
/// the m parents and keep the m best. The merge sort is stable with the
/// offspring listed first: an equal-fitness newcomer displaces a survivor.
/// On the long neutral plateaus these problems produce, that is what keeps
/// the population moving once fitness stops improving; favoring survivors
/// instead freezes the population the moment every member ties, and no
/// late-run diversity rebound can ever happen. The best fitness value still
/// never worsens, since the displacing newcomer ties the one it replaces.
inline Population step_generation(const Population& pop,
                                  const EvolutionConfig& config,
                                  const Problem& problem,
                                  const GenotypeMapper& mapper, Rng& rng,
                                  int generation_index) {
  Population merged;
  merged.reserve(pop.size() + config.offspring_count);
  for (int i = 0; i < config.offspring_count; ++i) {
    BitString genotype(0);
    if (unit_real(rng) < config.crossover_rate) {
      const auto& p1 = tournament_select(pop, config.tournament_size, rng);
      const auto& p2 = tournament_select(pop, config.tournament_size, rng);
      genotype = two_point_crossover(p1.genotype, p2.genotype, rng);
    } else {
      genotype = tournament_select(pop, config.tournament_size, rng).genotype;
    }
    genotype = bitflip_mutation(genotype, config.mutation_prob_per_bit, rng);
    Individual child;
    child.outcome = mapper(genotype);
    child.fitness = problem.evaluate(child.outcome);
    child.genotype = std::move(genotype);
    child.birth_generation = generation_index;
    merged.push_back(std::move(child));
  }
  merged.insert(merged.end(), pop.begin(), pop.end());
  std::stable_sort(merged.begin(), merged.end(),
                   [](const Individual& a, const Individual& b) {
                     return a.fitness < b.fitness;
                   });
  merged.resize(pop.size());
  return merged;
}

/// Full instrumented run: snapshot of the initial population plus one
/// snapshot after each generation, generations+1 records total.
inline std::vector<SnapshotMetrics> run_evolution(const EvolutionConfig& config,
                                                  const Problem& problem,
                                                  Rng& rng) {
  config.validate();
  const auto mapper = make_mapper(problem.grammar, config);
  auto pop = init_population(config, problem, mapper, rng);

  std::vector<SnapshotMetrics> out;
  out.reserve(config.generations + 1);
  out.push_back(snapshot(pop, 0, config.id_fit));
  for (int gen = 1; gen <= config.generations; ++gen) {
    pop = step_generation(pop, config, problem, mapper, rng, gen);
    if (pop.size() != static_cast<std::size_t>(config.population_size))
      throw std::logic_error("run_evolution: population size drifted");
    auto snap = snapshot(pop, gen, config.id_fit);
    if (snap.best_fitness > out.back().best_fitness)
      throw std::logic_error("run_evolution: elitism violated");
    out.push_back(snap);
  }
  return out;
}

}  // namespace gepop
