#pragma once

#include <vector>

#include "gepop/bitstring.hpp"
#include "gepop/mapper.hpp"
#include "gepop/problems.hpp"

namespace gepop {

/// One candidate solution: the evolved bit string, its mapped phenotype,
/// the fitness of that phenotype, and the generation it was created in.
struct Individual {
  BitString genotype;
  MappingOutcome outcome;
  Fitness fitness = 1.0;
  int birth_generation = 0;
};

using Population = std::vector<Individual>;

}  // namespace gepop
