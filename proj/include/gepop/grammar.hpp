#pragma once

#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gepop {

enum class SymbolKind { nonterminal, terminal };

/// One entry of the grammar alphabet. Names are stored without angle
/// brackets; the kind decides how the symbol is rendered and expanded.
struct Symbol {
  std::string name;
  SymbolKind kind;

  bool is_nonterminal() const { return kind == SymbolKind::nonterminal; }
  friend bool operator==(const Symbol& a, const Symbol& b) {
    return a.name == b.name && a.kind == b.kind;
  }
};

/// Error raised by parse_bnf, with 1-based source position.
class BnfError : public std::runtime_error {
 public:
  BnfError(std::string message, int line, int column)
      : std::runtime_error("line " + std::to_string(line) + ", column " +
                           std::to_string(column) + ": " + message),
        line(line),
        column(column) {}
  int line;
  int column;
};

/// Immutable context-free grammar. Nonterminals are numbered 0..n-1 in
/// source rule order (the first rule's left-hand side is the start symbol),
/// terminals follow in first-appearance order. Option order within a rule
/// mirrors the source exactly; the genotype-phenotype mappings depend on it.
class Grammar {
 public:
  using SymbolId = int;

  const Symbol& symbol(SymbolId id) const { return symbols_[id]; }
  std::size_t symbol_count() const { return symbols_.size(); }
  std::size_t nonterminal_count() const { return rules_.size(); }
  SymbolId start() const { return 0; }

  bool is_nonterminal(SymbolId id) const {
    return symbols_[id].is_nonterminal();
  }

  /// Production options of a nonterminal, in source order.
  std::span<const std::vector<SymbolId>> options(SymbolId nonterminal) const {
    return rules_[nonterminal];
  }

  std::optional<SymbolId> find(std::string_view name) const {
    const auto it = by_name_.find(std::string(name));
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
  }

  friend bool operator==(const Grammar& a, const Grammar& b) {
    return a.symbols_ == b.symbols_ && a.rules_ == b.rules_;
  }
  friend bool operator!=(const Grammar& a, const Grammar& b) {
    return !(a == b);
  }

  friend Grammar parse_bnf(std::string_view text);

 private:
  SymbolId intern(const std::string& name, SymbolKind kind, int line,
                  int column) {
    const auto it = by_name_.find(name);
    if (it != by_name_.end()) {
      if (symbols_[it->second].kind != kind)
        throw BnfError("symbol '" + name + "' used as both terminal and nonterminal",
                       line, column);
      return it->second;
    }
    symbols_.push_back(Symbol{name, kind});
    const SymbolId id = static_cast<SymbolId>(symbols_.size() - 1);
    by_name_.emplace(name, id);
    return id;
  }

  std::vector<Symbol> symbols_;
  std::unordered_map<std::string, SymbolId> by_name_;
  std::vector<std::vector<std::vector<SymbolId>>> rules_;  // by nonterminal id
};

namespace detail {

struct BnfToken {
  std::string text;
  int line;
  int column;
};

inline std::vector<std::vector<BnfToken>> tokenize_bnf(std::string_view text) {
  std::vector<std::vector<BnfToken>> lines;
  std::vector<BnfToken> current;
  int line = 1, column = 1;
  std::string tok;
  int tok_col = 0;
  const auto flush_tok = [&] {
    if (!tok.empty()) {
      current.push_back(BnfToken{tok, line, tok_col});
      tok.clear();
    }
  };
  const auto flush_line = [&] {
    flush_tok();
    if (!current.empty()) lines.push_back(std::move(current));
    current.clear();
  };
  for (const char c : text) {
    if (c == '\n') {
      flush_line();
      ++line;
      column = 1;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r') {
      flush_tok();
    } else {
      if (tok.empty()) tok_col = column;
      tok.push_back(c);
    }
    ++column;
  }
  flush_line();
  return lines;
}

}  // namespace detail

/// Parse BNF text into a Grammar.
///
/// Format: one rule per line, `<name> ::= option | option | ...`, tokens
/// separated by whitespace; angle-bracketed tokens are nonterminals, all
/// other tokens terminals. Lines starting with `#` are comments. The first
/// rule defines the start symbol.
inline Grammar parse_bnf(std::string_view text) {
  Grammar g;
  auto lines = detail::tokenize_bnf(text);

  // drop comment lines
  std::erase_if(lines, [](const auto& l) { return l.front().text[0] == '#'; });
  if (lines.empty()) throw BnfError("no rules found", 1, 1);

  const auto is_nonterminal_token = [](const std::string& t) {
    return t.size() >= 3 && t.front() == '<' && t.back() == '>';
  };
  const auto strip = [](const std::string& t) {
    return t.substr(1, t.size() - 2);
  };

  // first pass: register the left-hand sides so rule order fixes the ids
  for (const auto& toks : lines) {
    const auto& lhs = toks[0];
    if (!is_nonterminal_token(lhs.text))
      throw BnfError("expected nonterminal '<name>' on the left-hand side",
                     lhs.line, lhs.column);
    const auto id = g.intern(strip(lhs.text), SymbolKind::nonterminal,
                             lhs.line, lhs.column);
    if (static_cast<std::size_t>(id) != g.rules_.size())
      throw BnfError("duplicate rule for <" + strip(lhs.text) + ">", lhs.line,
                     lhs.column);
    g.rules_.emplace_back();
  }

  // second pass: options
  for (std::size_t r = 0; r < lines.size(); ++r) {
    const auto& toks = lines[r];
    if (toks.size() < 2 || toks[1].text != "::=")
      throw BnfError("expected '::=' after rule name",
                     toks[0].line,
                     toks.size() > 1 ? toks[1].column
                                     : toks[0].column + static_cast<int>(toks[0].text.size()));
    auto& rule = g.rules_[r];
    std::vector<Grammar::SymbolId> option;
    int last_line = toks[1].line;
    int last_col = toks[1].column + 3;
    const auto end_option = [&](int line, int column) {
      if (option.empty())
        throw BnfError("empty production option", line, column);
      rule.push_back(std::move(option));
      option.clear();
    };
    for (std::size_t t = 2; t < toks.size(); ++t) {
      const auto& tok = toks[t];
      if (tok.text == "|") {
        end_option(tok.line, tok.column);
      } else if (tok.text == "::=") {
        throw BnfError("'::=' is not allowed inside a production", tok.line,
                       tok.column);
      } else if (is_nonterminal_token(tok.text)) {
        const auto ref = g.find(strip(tok.text));
        if (!ref || !g.is_nonterminal(*ref))
          throw BnfError("reference to undefined nonterminal <" +
                             strip(tok.text) + ">",
                         tok.line, tok.column);
        option.push_back(*ref);
      } else if (tok.text.front() == '<' || tok.text.back() == '>') {
        throw BnfError("malformed nonterminal token '" + tok.text + "'",
                       tok.line, tok.column);
      } else {
        option.push_back(
            g.intern(tok.text, SymbolKind::terminal, tok.line, tok.column));
      }
      last_line = tok.line;
      last_col = tok.column + static_cast<int>(tok.text.size());
    }
    end_option(last_line, last_col);
  }
  return g;
}

/// Canonical text form: one rule per line, single spaces, options in
/// source order. parse_bnf(serialize_bnf(g)) == g.
inline std::string serialize_bnf(const Grammar& g) {
  std::string out;
  for (std::size_t nt = 0; nt < g.nonterminal_count(); ++nt) {
    const auto id = static_cast<Grammar::SymbolId>(nt);
    out += "<" + g.symbol(id).name + "> ::=";
    const auto opts = g.options(id);
    for (std::size_t o = 0; o < opts.size(); ++o) {
      if (o > 0) out += " |";
      for (const auto s : opts[o]) {
        out += ' ';
        if (g.is_nonterminal(s))
          out += "<" + g.symbol(s).name + ">";
        else
          out += g.symbol(s).name;
      }
    }
    out += '\n';
  }
  return out;
}

/// Phenotype carrier. A node with a nonterminal symbol and no children is
/// an *unexpanded* nonterminal: it marks an incomplete mapping.
struct DerivationTree {
  Symbol symbol;
  std::vector<DerivationTree> children;

  bool is_unexpanded() const {
    return symbol.is_nonterminal() && children.empty();
  }
};

/// True when no unexpanded nonterminal leaf remains.
inline bool tree_complete(const DerivationTree& t) {
  if (t.is_unexpanded()) return false;
  for (const auto& c : t.children)
    if (!tree_complete(c)) return false;
  return true;
}

/// Edges on the longest root-to-leaf path; a single node has depth 0.
inline int tree_depth(const DerivationTree& t) {
  int deepest = -1;
  for (const auto& c : t.children) deepest = std::max(deepest, tree_depth(c));
  return deepest + 1;
}

inline int tree_node_count(const DerivationTree& t) {
  int n = 1;
  for (const auto& c : t.children) n += tree_node_count(c);
  return n;
}

namespace detail {
inline void collect_terminals(const DerivationTree& t,
                              std::vector<const std::string*>& out) {
  if (t.children.empty()) {
    if (t.symbol.is_nonterminal())
      throw std::invalid_argument(
          "linearize: tree has an unexpanded nonterminal <" + t.symbol.name +
          ">");
    out.push_back(&t.symbol.name);
    return;
  }
  for (const auto& c : t.children) collect_terminals(c, out);
}
}  // namespace detail

/// Left-to-right terminal leaves, single-space separated. Throws on
/// incomplete trees.
inline std::string linearize(const DerivationTree& t) {
  std::vector<const std::string*> leaves;
  detail::collect_terminals(t, leaves);
  std::string out;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (i > 0) out += ' ';
    out += *leaves[i];
  }
  return out;
}

/// Structural check: every internal nonterminal node expands to exactly one
/// of its grammar options, terminals are leaves, all symbols belong to the
/// grammar. Unexpanded nonterminals are accepted unless require_complete.
inline bool validate_tree(const DerivationTree& t, const Grammar& g,
                          bool require_complete = false) {
  const auto id = g.find(t.symbol.name);
  if (!id || !(g.symbol(*id) == t.symbol)) return false;
  if (!t.symbol.is_nonterminal()) return t.children.empty();
  if (t.children.empty()) return !require_complete;
  for (const auto& opts = g.options(*id); const auto& opt : opts) {
    if (opt.size() != t.children.size()) continue;
    bool match = true;
    for (std::size_t i = 0; i < opt.size(); ++i) {
      if (!(g.symbol(opt[i]) == t.children[i].symbol)) {
        match = false;
        break;
      }
    }
    if (match) {
      for (const auto& c : t.children)
        if (!validate_tree(c, g, require_complete)) return false;
      return true;
    }
  }
  return false;
}

}  // namespace gepop
