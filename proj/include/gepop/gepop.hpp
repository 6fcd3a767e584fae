#pragma once

// Grammatical-evolution experimentation toolkit: BNF grammars, two
// genotype-phenotype mappers, tunable Parity and K-Landscapes benchmarks,
// an instrumented m+n evolution engine, population diversity and TWO-NN
// intrinsic-dimension metrics, and a reproducible experiment harness.

#include "gepop/rng.hpp"
#include "gepop/bitstring.hpp"
#include "gepop/grammar.hpp"
#include "gepop/mapper.hpp"
#include "gepop/problems.hpp"
#include "gepop/population.hpp"
#include "gepop/metrics.hpp"
#include "gepop/evolve.hpp"
#include "gepop/harness.hpp"
