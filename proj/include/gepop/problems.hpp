#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "gepop/grammar.hpp"
#include "gepop/mapper.hpp"
#include "gepop/rng.hpp"

namespace gepop {

/// Fitness is a real in [0, 1]; 0 means solved, incomplete phenotypes score
/// exactly 1 (worst).
using Fitness = double;

// ---------------------------------------------------------------------------
// Parity
// ---------------------------------------------------------------------------

/// Boolean expression grammar over b input variables:
///   <expr> ::= ( <expr> <op> <expr> ) | <var>
///   <op>   ::= and | or | nand | nor
///   <var>  ::= b0 | ... | b(b-1)
inline Grammar parity_grammar(int bits) {
  if (bits < 2) throw std::invalid_argument("parity_grammar: bits >= 2");
  std::string text =
      "<expr> ::= ( <expr> <op> <expr> ) | <var>\n"
      "<op> ::= and | or | nand | nor\n"
      "<var> ::=";
  for (int v = 0; v < bits; ++v) {
    if (v > 0) text += " |";
    text += " b" + std::to_string(v);
  }
  text += '\n';
  return parse_bnf(text);
}

namespace detail {

/// Truth columns for all 2^b assignments, packed 64 rows per word. Row r
/// assigns variable v the bit (r >> v) & 1; the target column is even
/// parity: true iff the number of ones among the inputs is even.
struct ParityTables {
  int bits;
  std::size_t words;
  std::vector<std::vector<std::uint64_t>> var_columns;
  std::vector<std::uint64_t> target;
  std::vector<std::uint64_t> row_mask;

  explicit ParityTables(int b) : bits(b) {
    const std::size_t rows = std::size_t{1} << b;
    words = (rows + 63) / 64;
    var_columns.assign(b, std::vector<std::uint64_t>(words, 0));
    target.assign(words, 0);
    row_mask.assign(words, 0);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t w = r >> 6, bit = r & 63;
      row_mask[w] |= std::uint64_t{1} << bit;
      for (int v = 0; v < b; ++v)
        if ((r >> v) & 1) var_columns[v][w] |= std::uint64_t{1} << bit;
      if (std::popcount(r) % 2 == 0) target[w] |= std::uint64_t{1} << bit;
    }
  }
};

inline const ParityTables& parity_tables(int bits) {
  static std::array<std::unique_ptr<ParityTables>, 32> cache;
  static std::mutex mu;
  std::lock_guard lock(mu);
  auto& slot = cache.at(static_cast<std::size_t>(bits));
  if (!slot) slot = std::make_unique<ParityTables>(bits);
  return *slot;
}

/// Evaluate a parity-grammar derivation subtree to a packed truth column.
inline std::vector<std::uint64_t> eval_parity_tree(const DerivationTree& t,
                                                   const ParityTables& tab) {
  const auto bad = [&](const std::string& what) {
    return std::invalid_argument("parity_fitness: " + what);
  };
  if (t.symbol.name == "expr") {
    if (t.children.size() == 1) return eval_parity_tree(t.children[0], tab);
    if (t.children.size() != 5) throw bad("malformed <expr> node");
    auto lhs = eval_parity_tree(t.children[1], tab);
    const auto rhs = eval_parity_tree(t.children[3], tab);
    const auto& op = t.children[2];
    std::string op_name;
    if (op.children.size() == 1 && op.children[0].children.empty())
      op_name = op.children[0].symbol.name;
    if (op_name == "and") {
      for (std::size_t w = 0; w < lhs.size(); ++w) lhs[w] &= rhs[w];
    } else if (op_name == "or") {
      for (std::size_t w = 0; w < lhs.size(); ++w) lhs[w] |= rhs[w];
    } else if (op_name == "nand") {
      for (std::size_t w = 0; w < lhs.size(); ++w) lhs[w] = ~(lhs[w] & rhs[w]);
    } else if (op_name == "nor") {
      for (std::size_t w = 0; w < lhs.size(); ++w) lhs[w] = ~(lhs[w] | rhs[w]);
    } else {
      throw bad("unknown operator token '" + op_name + "'");
    }
    return lhs;
  }
  if (t.symbol.name == "var") {
    if (t.children.size() != 1 || !t.children[0].children.empty())
      throw bad("malformed <var> node");
    const auto& name = t.children[0].symbol.name;
    if (name.size() < 2 || name[0] != 'b')
      throw bad("unknown variable token '" + name + "'");
    const int v = std::stoi(name.substr(1));
    if (v < 0 || v >= tab.bits)
      throw bad("variable '" + name + "' out of range for b=" +
                std::to_string(tab.bits));
    return tab.var_columns[v];
  }
  throw bad("unexpected node <" + t.symbol.name + ">");
}

}  // namespace detail

/// Fraction of the 2^b assignments on which the phenotype disagrees with
/// even parity. Complete phenotypes must come from parity_grammar(bits);
/// incomplete mappings score exactly 1.
inline Fitness parity_fitness(const MappingOutcome& outcome, int bits) {
  if (!outcome.complete) return 1.0;
  const auto& tab = detail::parity_tables(bits);
  const auto col = detail::eval_parity_tree(outcome.tree, tab);
  int mismatches = 0;
  for (std::size_t w = 0; w < tab.words; ++w)
    mismatches += std::popcount((col[w] ^ tab.target[w]) & tab.row_mask[w]);
  return static_cast<double>(mismatches) /
         static_cast<double>(std::size_t{1} << bits);
}

// ---------------------------------------------------------------------------
// K-Landscapes
// ---------------------------------------------------------------------------

/// Random tree landscape over two binary functions and two terminals.
/// node_values and edge_weights are drawn once per (k, seed) and shared by
/// every fitness evaluation against the instance.
struct KLandscapeInstance {
  static constexpr std::array<const char*, 2> function_symbols{"n0", "n1"};
  static constexpr std::array<const char*, 2> terminal_symbols{"t0", "t1"};

  int k = 0;
  std::uint64_t seed = 0;
  // symbol order: n0, n1, t0, t1
  std::array<double, 4> node_values{};
  // edge (parent function, child symbol)
  std::array<std::array<double, 4>, 2> edge_weights{};

  static int symbol_index(const std::string& name) {
    if (name == "n0") return 0;
    if (name == "n1") return 1;
    if (name == "t0") return 2;
    if (name == "t1") return 3;
    throw std::invalid_argument("KLandscapeInstance: unknown symbol " + name);
  }
};

/// Deterministic instance generator: node values uniform in [0,1], edge
/// weights uniform in [-1,1], drawn in fixed symbol order.
inline KLandscapeInstance klandscapes_instance(int k, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("klandscapes_instance: k >= 1");
  KLandscapeInstance inst;
  inst.k = k;
  inst.seed = seed;
  Rng rng(seed);
  for (auto& v : inst.node_values) v = unit_real(rng);
  for (auto& row : inst.edge_weights)
    for (auto& w : row) w = uniform_real(rng, -1.0, 1.0);
  return inst;
}

/// Binary-tree grammar whose complete derivations are exactly the symbol
/// trees scored by klandscapes_fitness:
///   <e> ::= ( n0 <e> <e> ) | ( n1 <e> <e> ) | t0 | t1
inline Grammar klandscapes_grammar() {
  return parse_bnf("<e> ::= ( n0 <e> <e> ) | ( n1 <e> <e> ) | t0 | t1\n");
}

namespace detail {

/// Aggregates of the full symbol subtree under one <e> node.
struct KlandNode {
  int symbol;       // instance symbol index
  int height;       // edges on the longest path, symbol-tree
  int nodes;
  int edges;
  double value_sum;  // node values + edge weights of the whole subtree
};

inline KlandNode scan_kland_tree(const DerivationTree& t,
                                 const KLandscapeInstance& inst,
                                 double& best_score) {
  const auto bad = [](const std::string& what) {
    return std::invalid_argument("klandscapes_fitness: " + what);
  };
  if (t.symbol.name != "e" || t.children.empty())
    throw bad("unexpected node <" + t.symbol.name + ">");
  KlandNode out{};
  if (t.children.size() == 1) {  // terminal option
    out.symbol = KLandscapeInstance::symbol_index(t.children[0].symbol.name);
    out.height = 0;
    out.nodes = 1;
    out.edges = 0;
    out.value_sum = inst.node_values[out.symbol];
  } else if (t.children.size() == 5) {  // ( nX <e> <e> )
    out.symbol = KLandscapeInstance::symbol_index(t.children[1].symbol.name);
    const auto left = scan_kland_tree(t.children[2], inst, best_score);
    const auto right = scan_kland_tree(t.children[3], inst, best_score);
    out.height = 1 + std::max(left.height, right.height);
    out.nodes = 1 + left.nodes + right.nodes;
    out.edges = 2 + left.edges + right.edges;
    out.value_sum = inst.node_values[out.symbol] + left.value_sum +
                    right.value_sum +
                    inst.edge_weights[out.symbol][left.symbol] +
                    inst.edge_weights[out.symbol][right.symbol];
  } else {
    throw bad("malformed <e> node");
  }
  // a window is a full subtree whose symbol-tree height is exactly k, i.e.
  // whose derivation subtree has depth k+1
  if (out.height == inst.k)
    best_score =
        std::max(best_score, out.value_sum / (out.nodes + out.edges));
  return out;
}

}  // namespace detail

/// Best depth-window score, inverted into [0,1]: value = 1 - clamp(score)
/// where score is the maximum over full subtrees S of derivation depth k+1
/// of (sum of node values + edge weights in S) / (nodes + edges in S).
/// Phenotypes with no such subtree, and incomplete mappings, score 1.
inline Fitness klandscapes_fitness(const KLandscapeInstance& inst,
                                   const MappingOutcome& outcome) {
  if (!outcome.complete) return 1.0;
  double best_score = -std::numeric_limits<double>::infinity();
  detail::scan_kland_tree(outcome.tree, inst, best_score);
  if (!std::isfinite(best_score)) best_score = 0.0;
  return 1.0 - std::clamp(best_score, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Problem facade used by the evolution engine and the harness
// ---------------------------------------------------------------------------

struct Problem {
  std::string name;
  int param = 0;
  Grammar grammar;
  std::function<Fitness(const MappingOutcome&)> evaluate;
};

inline Problem make_parity_problem(int b) {
  Problem p;
  p.name = "parity";
  p.param = b;
  p.grammar = parity_grammar(b);
  p.evaluate = [b](const MappingOutcome& o) { return parity_fitness(o, b); };
  return p;
}

inline Problem make_klandscapes_problem(int k, std::uint64_t instance_seed) {
  Problem p;
  p.name = "klandscapes";
  p.param = k;
  p.grammar = klandscapes_grammar();
  p.evaluate = [inst = klandscapes_instance(k, instance_seed)](
                   const MappingOutcome& o) {
    return klandscapes_fitness(inst, o);
  };
  return p;
}

}  // namespace gepop
