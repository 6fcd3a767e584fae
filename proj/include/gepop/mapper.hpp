#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <vector>

#include "gepop/bitstring.hpp"
#include "gepop/grammar.hpp"

namespace gepop {

/// Result of a genotype-phenotype mapping. `complete` is false iff the tree
/// still contains unexpanded nonterminal leaves (classic GE can run out of
/// codons; the hierarchical mapper never does).
struct MappingOutcome {
  DerivationTree tree;
  bool complete = true;
};

struct GeParams {
  int codon_bits = 8;
  int max_wraps = 2;
};

namespace detail {

struct GeCursor {
  const BitString* bits;
  int codon_bits;
  std::size_t codon_count;
  std::size_t reads_left;  // (1 + max_wraps) * codon_count
  std::size_t next = 0;

  bool exhausted() const { return reads_left == 0; }

  std::uint64_t read() {
    const auto value = bits->unsigned_value(next * codon_bits, codon_bits);
    next = (next + 1) % codon_count;
    --reads_left;
    return value;
  }
};

inline DerivationTree expand_ge(const Grammar& g, Grammar::SymbolId id,
                                GeCursor& cur) {
  const auto& sym = g.symbol(id);
  if (!sym.is_nonterminal()) return DerivationTree{sym, {}};
  if (cur.exhausted()) return DerivationTree{sym, {}};  // unexpanded leaf
  const auto opts = g.options(id);
  const auto choice = cur.read() % opts.size();
  DerivationTree node{sym, {}};
  node.children.reserve(opts[choice].size());
  // depth-first, left to right = leftmost derivation order
  for (const auto child : opts[choice])
    node.children.push_back(expand_ge(g, child, cur));
  return node;
}

}  // namespace detail

/// Classic codon-mod GE mapping: read codon_bits-wide unsigned codons left
/// to right, pick option (codon mod option-count) at each leftmost
/// nonterminal expansion, wrap to codon 0 up to max_wraps times. If codons
/// run out with nonterminals pending, the partial tree is returned with
/// complete = false.
inline MappingOutcome map_ge(const BitString& genotype, const Grammar& grammar,
                             const GeParams& params = {}) {
  if (params.codon_bits < 1 || params.codon_bits > 63)
    throw std::invalid_argument("map_ge: codon_bits out of range");
  if (genotype.size() % params.codon_bits != 0)
    throw std::invalid_argument("map_ge: codon_bits must divide genotype length");
  detail::GeCursor cur{&genotype, params.codon_bits,
                       genotype.size() / params.codon_bits, 0};
  cur.reads_left = cur.codon_count * (1 + params.max_wraps);
  auto tree = detail::expand_ge(grammar, grammar.start(), cur);
  const bool complete = tree_complete(tree);
  return MappingOutcome{std::move(tree), complete};
}

/// Expressiveness weight per symbol id: log2(1 + number of distinct
/// sentential forms derivable in at most `horizon` parallel expansion
/// rounds). Forms still containing nonterminals count as one string each;
/// a terminal therefore weighs exactly log2(2) = 1. The count saturates at
/// a fixed cap so adversarial grammars cannot blow up the enumeration.
inline std::vector<double> expressiveness_weights(const Grammar& g,
                                                  int horizon) {
  if (horizon < 1) throw std::invalid_argument("expressiveness_weights: horizon >= 1");
  constexpr std::size_t kFormCap = 1u << 16;
  using Form = std::vector<Grammar::SymbolId>;

  std::vector<double> weights(g.symbol_count(), 1.0);
  for (std::size_t s = 0; s < g.symbol_count(); ++s) {
    const auto id = static_cast<Grammar::SymbolId>(s);
    if (!g.is_nonterminal(id)) continue;  // terminals: one derivable string
    std::set<Form> forms{Form{id}};
    bool saturated = false;
    for (int round = 0; round < horizon && !saturated; ++round) {
      std::set<Form> next;
      for (const auto& form : forms) {
        // expand every nonterminal occurrence simultaneously; enumerate the
        // cartesian product of option choices
        std::vector<std::size_t> nt_pos;
        for (std::size_t i = 0; i < form.size(); ++i)
          if (g.is_nonterminal(form[i])) nt_pos.push_back(i);
        if (nt_pos.empty()) {
          next.insert(form);
          continue;
        }
        std::vector<std::size_t> pick(nt_pos.size(), 0);
        for (;;) {
          Form out;
          std::size_t p = 0;
          for (std::size_t i = 0; i < form.size(); ++i) {
            if (p < nt_pos.size() && nt_pos[p] == i) {
              const auto& opt = g.options(form[i])[pick[p]];
              out.insert(out.end(), opt.begin(), opt.end());
              ++p;
            } else {
              out.push_back(form[i]);
            }
          }
          next.insert(std::move(out));
          if (next.size() > kFormCap) {
            saturated = true;
            break;
          }
          // odometer over option choices
          std::size_t carry = 0;
          while (carry < pick.size()) {
            if (++pick[carry] < g.options(form[nt_pos[carry]]).size()) break;
            pick[carry] = 0;
            ++carry;
          }
          if (carry == pick.size()) break;
        }
        if (saturated) break;
      }
      forms = std::move(next);
    }
    const auto count = saturated ? kFormCap : forms.size();
    weights[s] = std::log2(1.0 + static_cast<double>(count));
  }
  return weights;
}

namespace detail {

/// Largest-remainder apportionment of `total` units across parts sized
/// proportionally to `weights`; remainder ties go to the leftmost part.
inline std::vector<int> apportion(int total, std::span<const double> weights) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<int> lengths(weights.size(), 0);
  std::vector<double> fracs(weights.size(), 0.0);
  int assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double quota = total * (weights[i] / sum);
    lengths[i] = static_cast<int>(quota);
    fracs[i] = quota - lengths[i];
    assigned += lengths[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fracs[a] > fracs[b]; });
  for (int left = total - assigned, i = 0; left > 0; --left, ++i)
    ++lengths[order[i]];
  return lengths;
}

}  // namespace detail

struct WhgeParams {
  int depth_cap = 32;
  int horizon = 2;
};

/// Weighted hierarchical mapping. A genotype substring is recursively split
/// over the derivation tree: at each nonterminal the substring is first cut
/// into equal consecutive parts, one per option, and the option whose part
/// has the highest density of ones wins (ties to the lowest index); the
/// whole substring is then divided among the chosen option's symbols in
/// proportion to their expressiveness weights and the mapping recurses.
///
/// Two situations switch a subtree to a deterministic completion that
/// ignores the genotype and expands each nonterminal by the option with the
/// fewest nonterminals: reaching depth_cap, and running out of bits (an
/// empty substring carries no information and would otherwise keep electing
/// option 0 all the way to the cap). Completion makes the mapping total:
/// every genotype yields a complete tree.
class WhgeMapper {
 public:
  WhgeMapper(const Grammar& grammar, const WhgeParams& params = {})
      : grammar_(grammar),
        params_(params),
        weights_(expressiveness_weights(grammar, params.horizon)) {
    if (params.depth_cap < 1)
      throw std::invalid_argument("WhgeMapper: depth_cap >= 1");
    compute_min_depths();
    compute_completions();
  }

  const std::vector<double>& weights() const { return weights_; }

  /// Depth of the deepest deterministic completion subtree; the mapped
  /// tree depth never exceeds depth_cap + this.
  int max_completion_depth() const {
    int d = 0;
    for (std::size_t s = 0; s < grammar_.symbol_count(); ++s)
      d = std::max(d, completion_depth_[s]);
    return d;
  }

  MappingOutcome map(const BitString& genotype) const {
    auto tree = expand(grammar_.start(), genotype, 0,
                       genotype.size(), 0);
    return MappingOutcome{std::move(tree), true};
  }

 private:
  DerivationTree expand(Grammar::SymbolId id, const BitString& bits,
                        std::size_t begin, std::size_t end, int depth) const {
    const auto& sym = grammar_.symbol(id);
    if (!sym.is_nonterminal()) return DerivationTree{sym, {}};
    if (depth >= params_.depth_cap || begin == end) return complete(id);

    const auto opts = grammar_.options(id);
    const auto len = static_cast<int>(end - begin);

    // choice stage: equal consecutive parts, densest part wins
    const std::vector<double> equal(opts.size(), 1.0);
    const auto parts = detail::apportion(len, equal);
    std::size_t best = 0;
    double best_density = -1.0;
    std::size_t at = begin;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const double density =
          parts[i] == 0
              ? 0.0
              : static_cast<double>(bits.ones_in_range(at, at + parts[i])) /
                    parts[i];
      if (density > best_density) {
        best_density = density;
        best = i;
      }
      at += parts[i];
    }

    // split stage: whole substring, proportional to expressiveness weights
    const auto& option = opts[best];
    std::vector<double> w(option.size());
    for (std::size_t i = 0; i < option.size(); ++i) w[i] = weights_[option[i]];
    const auto slices = detail::apportion(len, w);

    DerivationTree node{sym, {}};
    node.children.reserve(option.size());
    at = begin;
    for (std::size_t i = 0; i < option.size(); ++i) {
      node.children.push_back(
          expand(option[i], bits, at, at + slices[i], depth + 1));
      at += slices[i];
    }
    return node;
  }

  DerivationTree complete(Grammar::SymbolId id) const {
    const auto& sym = grammar_.symbol(id);
    if (!sym.is_nonterminal()) return DerivationTree{sym, {}};
    DerivationTree node{sym, {}};
    const auto& option = grammar_.options(id)[completion_choice_[id]];
    node.children.reserve(option.size());
    for (const auto child : option) node.children.push_back(complete(child));
    return node;
  }

  // minimal full-expansion depth per symbol; infinite means the nonterminal
  // cannot derive any finite string
  void compute_min_depths() {
    constexpr int kInf = 1 << 20;
    min_depth_.assign(grammar_.symbol_count(), kInf);
    for (std::size_t s = 0; s < grammar_.symbol_count(); ++s)
      if (!grammar_.is_nonterminal(static_cast<Grammar::SymbolId>(s)))
        min_depth_[s] = 0;
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t s = 0; s < grammar_.nonterminal_count(); ++s) {
        const auto id = static_cast<Grammar::SymbolId>(s);
        for (const auto& opt : grammar_.options(id)) {
          int deepest = 0;
          for (const auto c : opt) deepest = std::max(deepest, min_depth_[c]);
          if (deepest + 1 < min_depth_[s]) {
            min_depth_[s] = deepest + 1;
            changed = true;
          }
        }
      }
    }
    for (std::size_t s = 0; s < grammar_.nonterminal_count(); ++s)
      if (min_depth_[s] >= kInf)
        throw std::invalid_argument(
            "WhgeMapper: nonterminal <" +
            grammar_.symbol(static_cast<Grammar::SymbolId>(s)).name +
            "> cannot derive any finite string");
  }

  static int count_nonterminals(const Grammar& g,
                                const std::vector<Grammar::SymbolId>& opt) {
    int n = 0;
    for (const auto s : opt)
      if (g.is_nonterminal(s)) ++n;
    return n;
  }

  void compute_completions() {
    const auto n = grammar_.symbol_count();
    completion_choice_.assign(n, 0);
    for (std::size_t s = 0; s < grammar_.nonterminal_count(); ++s) {
      const auto id = static_cast<Grammar::SymbolId>(s);
      const auto opts = grammar_.options(id);
      std::size_t best = 0;
      int best_nts = count_nonterminals(grammar_, opts[0]);
      for (std::size_t o = 1; o < opts.size(); ++o) {
        const int nts = count_nonterminals(grammar_, opts[o]);
        if (nts < best_nts) {
          best = o;
          best_nts = nts;
        }
      }
      completion_choice_[s] = best;
    }
    if (relax_completion_depths()) return;
    // The fewest-nonterminals rule can cycle on grammars whose every lean
    // option feeds back into itself even though a finite expansion exists
    // elsewhere. Completion must terminate, so stuck symbols switch to the
    // option with the smallest full-expansion depth; along that option
    // min_depth strictly decreases, which breaks every cycle.
    for (std::size_t s = 0; s < grammar_.nonterminal_count(); ++s) {
      if (completion_depth_[s] >= 0) continue;
      const auto id = static_cast<Grammar::SymbolId>(s);
      const auto opts = grammar_.options(id);
      std::size_t best = 0;
      int best_depth = option_min_depth(opts[0]);
      for (std::size_t o = 1; o < opts.size(); ++o) {
        const int d = option_min_depth(opts[o]);
        if (d < best_depth) {
          best = o;
          best_depth = d;
        }
      }
      completion_choice_[s] = best;
    }
    if (!relax_completion_depths())
      throw std::logic_error("WhgeMapper: completion did not converge");
  }

  /// Fixpoint over the per-symbol completion choices; returns true when
  /// every symbol got a finite completion depth.
  bool relax_completion_depths() {
    const auto n = grammar_.symbol_count();
    completion_depth_.assign(n, -1);
    for (std::size_t s = 0; s < n; ++s)
      if (!grammar_.is_nonterminal(static_cast<Grammar::SymbolId>(s)))
        completion_depth_[s] = 0;
    for (bool progress = true; progress;) {
      progress = false;
      for (std::size_t s = 0; s < grammar_.nonterminal_count(); ++s) {
        if (completion_depth_[s] >= 0) continue;
        const auto id = static_cast<Grammar::SymbolId>(s);
        int deepest = 0;
        bool ready = true;
        for (const auto c : grammar_.options(id)[completion_choice_[s]]) {
          if (completion_depth_[c] < 0) {
            ready = false;
            break;
          }
          deepest = std::max(deepest, completion_depth_[c]);
        }
        if (ready) {
          completion_depth_[s] = deepest + 1;
          progress = true;
        }
      }
    }
    for (std::size_t s = 0; s < grammar_.nonterminal_count(); ++s)
      if (completion_depth_[s] < 0) return false;
    return true;
  }

  int option_min_depth(const std::vector<Grammar::SymbolId>& opt) const {
    int deepest = 0;
    for (const auto s : opt) deepest = std::max(deepest, min_depth_[s]);
    return deepest;
  }

  const Grammar& grammar_;
  WhgeParams params_;
  std::vector<double> weights_;
  std::vector<int> min_depth_;
  std::vector<std::size_t> completion_choice_;
  std::vector<int> completion_depth_;
};

/// One-shot convenience wrapper over WhgeMapper.
inline MappingOutcome map_whge(const BitString& genotype,
                               const Grammar& grammar,
                               const WhgeParams& params = {}) {
  return WhgeMapper(grammar, params).map(genotype);
}

}  // namespace gepop
