#pragma once

// Surface syntax for `.ptss` specifications, terms, one-hole contexts and the
// `.pts` automaton format.
//
//   ptss running
//   actions a, b, tau
//   op 0 : -> s
//   op pre<A> : d -> s
//   op + : s s -> s
//   prefix: @a.mu --@a-> mu
//   x --@a-> mu |- +(x, y) --@a-> mu
//
// `@a` is an action metavariable; a rule using it expands into one rule per
// declared action. Comments start with `#`.

#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ptss/distribution.hpp"
#include "ptss/pts.hpp"
#include "ptss/rational.hpp"
#include "ptss/rule.hpp"
#include "ptss/term.hpp"

namespace ptss {

struct Diagnostic {
  enum class Severity { error, warning };

  Severity severity = Severity::error;
  std::string message;
  std::size_t line = 1;
  std::size_t column = 1;

  std::string format(std::string_view file) const {
    return std::string(file) + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " +
           (severity == Severity::error ? "error" : "warning") + ": " + message;
  }
};

template <class T>
struct Parsed {
  std::optional<T> value;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return value.has_value(); }
};

namespace detail {

struct Token {
  enum class Kind {
    name,       // identifiers and numerals
    symbol,     // operator names such as +
    lparen, rparen, lbrace, rbrace, comma, colon, slash, dot, caret, at,
    step,       // --
    nstep,      // -/
    arrow,      // ->
    turnstile,  // |-
    hole,       // []
    langle, rangle,
    end,
  };
  Kind kind;
  std::string text;
  std::size_t line;
  std::size_t column;
};

struct Failure {
  Diagnostic diagnostic;
};

[[noreturn]] inline void fail_at(const Token& tok, std::string message) {
  throw Failure{{Diagnostic::Severity::error, std::move(message), tok.line, tok.column}};
}

inline bool name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
}
inline bool symbol_char(char c) { return c == '+' || c == '*' || c == '&' || c == '!' || c == '~' || c == '='; }

/// Tokenizes one line; a `#` starts a comment.
inline std::vector<Token> lex_line(std::string_view text, std::size_t line) {
  using K = Token::Kind;
  std::vector<Token> out;
  std::size_t i = 0;
  auto push = [&](K k, std::size_t start, std::size_t len) {
    out.push_back({k, std::string(text.substr(start, len)), line, start + 1});
    i = start + len;
  };
  while (i < text.size()) {
    const char c = text[i];
    const char n = i + 1 < text.size() ? text[i + 1] : '\0';
    if (c == '#') break;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (name_char(c)) {
      std::size_t j = i;
      while (j < text.size() && name_char(text[j])) ++j;
      push(K::name, i, j - i);
      continue;
    }
    if (symbol_char(c)) {
      std::size_t j = i;
      while (j < text.size() && symbol_char(text[j])) ++j;
      push(K::symbol, i, j - i);
      continue;
    }
    switch (c) {
      case '(': push(K::lparen, i, 1); continue;
      case ')': push(K::rparen, i, 1); continue;
      case '{': push(K::lbrace, i, 1); continue;
      case '}': push(K::rbrace, i, 1); continue;
      case ',': push(K::comma, i, 1); continue;
      case ':': push(K::colon, i, 1); continue;
      case '/': push(K::slash, i, 1); continue;
      case '.': push(K::dot, i, 1); continue;
      case '^': push(K::caret, i, 1); continue;
      case '@': push(K::at, i, 1); continue;
      case '<': push(K::langle, i, 1); continue;
      case '>': push(K::rangle, i, 1); continue;
      case '[':
        if (n == ']') {
          push(K::hole, i, 2);
          continue;
        }
        break;
      case '-':
        if (n == '-') {
          push(K::step, i, 2);
          continue;
        }
        if (n == '/') {
          push(K::nstep, i, 2);
          continue;
        }
        if (n == '>') {
          push(K::arrow, i, 2);
          continue;
        }
        break;
      case '|':
        if (n == '-') {
          push(K::turnstile, i, 2);
          continue;
        }
        break;
      default: break;
    }
    throw Failure{{Diagnostic::Severity::error, std::string("unexpected character '") + c + "'", line, i + 1}};
  }
  out.push_back({K::end, "", line, text.size() + 1});
  return out;
}

inline bool is_reserved(std::string_view w) {
  return w == "delta" || w == "oplus" || w == "ptss" || w == "actions" || w == "op";
}

/// Recursive-descent parser over one line of tokens. With a null signature it
/// parses untyped closed terms (every bare name is a constant), as used by
/// the `.pts` format.
class LineParser {
 public:
  LineParser(std::vector<Token> tokens, const Signature* sig) : toks_(std::move(tokens)), sig_(sig) {}

  bool allow_variables = false;
  bool allow_hole = false;
  std::optional<std::pair<std::string, Action>> metavariable;
  std::map<std::string, Sort> var_sorts;

  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool at(Token::Kind k, std::size_t ahead = 0) const { return peek(ahead).kind == k; }
  bool at_end() const { return at(Token::Kind::end); }
  const Token& next() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  const Token& expect(Token::Kind k, const char* what) {
    if (!at(k)) fail_at(peek(), std::string("expected ") + what + (at_end() ? " at end of line" : " before '" + peek().text + "'"));
    return next();
  }
  void expect_end() {
    if (!at_end()) fail_at(peek(), "unexpected '" + peek().text + "'");
  }

  Action parse_label() {
    if (at(Token::Kind::at)) return resolve_metavariable(next());
    const Token& tok = expect(Token::Kind::name, "action label");
    if (sig_ && !sig_->has_action(tok.text)) fail_at(tok, "unknown action " + tok.text);
    return tok.text;
  }

  Term parse_term(std::optional<Sort> expected) {
    const Token start = peek();
    Term t = parse_primary(expected);
    if (sig_ && expected && t.sort() != *expected)
      fail_at(start, "sort error: expected " + std::string(to_string(*expected)) + " term, got " +
                         std::string(to_string(t.sort())) + " term " + t.text());
    return t;
  }

  std::optional<Rational> parse_weight() {
    const Token& num = expect(Token::Kind::name, "weight");
    std::string text = num.text;
    if (at(Token::Kind::slash)) {
      next();
      text += "/" + expect(Token::Kind::name, "weight denominator").text;
    }
    auto r = parse_rational(text);
    if (!r) fail_at(num, "malformed weight " + text);
    return r;
  }

 private:
  Action resolve_metavariable(const Token& at_tok) {
    const Token& name = expect(Token::Kind::name, "metavariable name");
    if (!metavariable) fail_at(at_tok, "action metavariable @" + name.text + " is not allowed here");
    if (metavariable->first != name.text)
      fail_at(at_tok, "only one action metavariable per rule (found @" + metavariable->first + " and @" +
                          name.text + ")");
    return metavariable->second;
  }

  Term parse_primary(std::optional<Sort> expected) {
    using K = Token::Kind;
    const Token tok = peek();
    if (tok.kind == K::hole) {
      if (!allow_hole) fail_at(tok, "context hole [] is not allowed here");
      next();
      return hole();
    }
    if (tok.kind == K::caret) {
      next();
      return parse_application(true);
    }
    if (tok.kind == K::at) return parse_application(false);
    if (tok.kind == K::name && tok.text == "delta" && at(K::lparen, 1)) {
      next();
      next();
      Term inner = parse_term(Sort::state);
      expect(K::rparen, "')'");
      return Term::dirac(std::move(inner));
    }
    if (tok.kind == K::name && tok.text == "oplus" && at(K::lbrace, 1)) {
      next();
      next();
      std::vector<Rational> weights;
      std::vector<Term> args;
      Rational total = 0;
      do {
        const Token& wtok = peek();
        Rational w = *parse_weight();
        if (w <= 0 || w > 1) fail_at(wtok, "weight " + to_string(w) + " outside (0,1]");
        expect(K::colon, "':'");
        args.push_back(parse_term(Sort::dist));
        weights.push_back(w);
        total += w;
      } while (at(K::comma) && (next(), true));
      expect(K::rbrace, "'}'");
      if (total != 1) fail_at(tok, "weights sum to " + to_string(total) + " ≠ 1");
      return Term::convex(std::move(weights), std::move(args));
    }
    if (tok.kind == K::name || tok.kind == K::symbol) {
      if (at(K::dot, 1) || at(K::lparen, 1)) return parse_application(false);
      if (is_reserved(tok.text)) fail_at(tok, "unexpected keyword " + tok.text);
      next();
      if (!sig_) return Term::apply(tok.text);
      if (const FunctionSymbol* op = sig_->find_state_op(tok.text)) {
        if (op->rank() != 0)
          fail_at(tok, "operator " + tok.text + " expects " + std::to_string(op->rank()) + " arguments");
        return Term::apply(tok.text);
      }
      if (!allow_variables || tok.kind == K::symbol) fail_at(tok, "unknown operator " + tok.text);
      if (!expected) fail_at(tok, "cannot infer the sort of variable " + tok.text);
      auto [it, inserted] = var_sorts.emplace(tok.text, *expected);
      if (!inserted && it->second != *expected)
        fail_at(tok, "variable " + tok.text + " used with sorts " + std::string(to_string(it->second)) +
                         " and " + std::string(to_string(*expected)));
      return *expected == Sort::state ? Term::state_var(tok.text) : Term::dist_var(tok.text);
    }
    fail_at(tok, at_end() ? "expected a term at end of line" : "expected a term before '" + tok.text + "'");
  }

  /// `f(args)`, `f`, `a.arg`, `@a.arg`, optionally after `^`.
  Term parse_application(bool lifted) {
    using K = Token::Kind;
    const Token tok = peek();
    std::string symbol;
    if (tok.kind == K::at) {
      next();
      symbol = resolve_metavariable(tok);
      if (!at(K::dot)) fail_at(tok, "action metavariable must be used as a label or prefix");
    } else if (tok.kind == K::name || tok.kind == K::symbol) {
      next();
      symbol = tok.text;
      if (is_reserved(symbol)) fail_at(tok, "unexpected keyword " + symbol);
    } else {
      fail_at(tok, "expected an operator name");
    }

    if (at(K::dot)) {
      next();
      if (sig_) {
        if (!sig_->has_prefix_family()) fail_at(tok, "prefix " + symbol + ". used but no prefix family declared");
        if (!sig_->has_action(symbol)) fail_at(tok, "unknown action " + symbol + " in prefix");
      }
      Term arg = parse_term(sig_ ? std::optional<Sort>(Sort::dist) : std::nullopt);
      return Term::apply(prefix_symbol(symbol), {std::move(arg)}, lifted);
    }

    const FunctionSymbol* op = nullptr;
    if (sig_) {
      op = sig_->find_state_op(symbol);
      if (!op) fail_at(tok, "unknown operator " + (lifted ? "^" + symbol : symbol));
    }
    std::vector<Term> args;
    if (at(K::lparen)) {
      next();
      if (!at(K::rparen)) {
        do {
          std::optional<Sort> s;
          if (op) {
            if (args.size() >= op->rank())
              fail_at(peek(), "operator " + symbol + " expects " + std::to_string(op->rank()) + " arguments");
            s = lifted ? Sort::dist : op->arg_sorts[args.size()];
          }
          args.push_back(parse_term(s));
        } while (at(K::comma) && (next(), true));
      }
      expect(K::rparen, "')'");
    }
    if (op && args.size() != op->rank())
      fail_at(tok, "operator " + symbol + " expects " + std::to_string(op->rank()) + " arguments, got " +
                       std::to_string(args.size()));
    return Term::apply(symbol, std::move(args), lifted);
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  const Signature* sig_;
};

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

inline PositiveLiteral parse_positive_tail(LineParser& p, Term source) {
  p.expect(Token::Kind::step, "'--'");
  Action label = p.parse_label();
  p.expect(Token::Kind::arrow, "'->'");
  Term target = p.parse_term(Sort::dist);
  return {std::move(source), std::move(label), std::move(target)};
}

/// Parses the rule on one line under an optional metavariable binding.
inline Rule parse_rule_line(const std::vector<Token>& tokens, const Signature& sig,
                            std::optional<std::pair<std::string, Action>> binding, std::string& name) {
  using K = Token::Kind;
  LineParser p(tokens, &sig);
  p.allow_variables = true;
  p.metavariable = std::move(binding);
  if (p.at(K::name) && p.at(K::colon, 1)) {
    name = p.next().text;
    p.next();
  }
  Rule rule;
  std::vector<PositiveLiteral> positive;
  std::vector<NegativeLiteral> negative;
  std::vector<Token> order;  // first token of each literal, for diagnostics
  bool has_turnstile = false;
  while (true) {
    order.push_back(p.peek());
    Term source = p.parse_term(Sort::state);
    if (p.at(K::nstep)) {
      p.next();
      Action label = p.parse_label();
      p.expect(K::arrow, "'->'");
      negative.push_back({std::move(source), std::move(label)});
      if (has_turnstile) fail_at(order.back(), "the conclusion must be a positive literal");
    } else {
      positive.push_back(parse_positive_tail(p, std::move(source)));
    }
    if (has_turnstile) break;
    if (p.at(K::comma)) {
      p.next();
      continue;
    }
    if (p.at(K::turnstile)) {
      p.next();
      has_turnstile = true;
      continue;
    }
    break;
  }
  p.expect_end();
  if (!has_turnstile) {
    if (!negative.empty()) fail_at(order.back(), "the conclusion must be a positive literal");
    if (positive.size() != 1) fail_at(order.back(), "premises must be followed by '|-' and a conclusion");
  }
  rule.conclusion = std::move(positive.back());
  positive.pop_back();
  rule.positive = std::move(positive);
  rule.negative = std::move(negative);
  return rule;
}

inline std::set<std::string> metavariables_of(const std::vector<Token>& tokens) {
  std::set<std::string> out;
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i)
    if (tokens[i].kind == Token::Kind::at && tokens[i + 1].kind == Token::Kind::name) out.insert(tokens[i + 1].text);
  return out;
}

}  // namespace detail

/// Parses a `.ptss` specification. Action metavariables are expanded; unnamed
/// rules are named `r<k>` after their position among the rule lines.
inline Parsed<Ptss> parse_spec(std::string_view text) {
  using detail::Failure;
  using detail::Token;
  using K = Token::Kind;
  Parsed<Ptss> result;
  auto& diags = result.diagnostics;

  struct Line {
    std::size_t number;
    std::vector<Token> tokens;
  };
  std::vector<Line> rule_lines;
  std::optional<std::string> name;
  std::optional<std::size_t> actions_line;
  std::vector<Action> actions;
  std::vector<FunctionSymbol> ops;
  std::map<std::string, std::size_t> op_lines;
  bool prefix_family = false;

  const auto lines = detail::split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    try {
      auto tokens = detail::lex_line(lines[ln], ln + 1);
      if (tokens.front().kind == K::end) continue;
      detail::LineParser p(tokens, nullptr);
      const Token& head = p.peek();
      if (head.kind == K::name && head.text == "ptss" && !p.at(K::colon, 1)) {
        p.next();
        if (name) detail::fail_at(head, "duplicate ptss declaration");
        name = p.expect(K::name, "specification name").text;
        p.expect_end();
      } else if (head.kind == K::name && head.text == "actions" && !p.at(K::colon, 1)) {
        p.next();
        if (actions_line) detail::fail_at(head, "duplicate actions declaration");
        actions_line = ln + 1;
        do {
          const Token& a = p.expect(K::name, "action name");
          if (detail::is_reserved(a.text)) detail::fail_at(a, "reserved word " + a.text + " used as action");
          if (std::find(actions.begin(), actions.end(), a.text) != actions.end())
            detail::fail_at(a, "duplicate action " + a.text);
          actions.push_back(a.text);
        } while (p.at(K::comma) && (p.next(), true));
        p.expect_end();
      } else if (head.kind == K::name && head.text == "op" && !p.at(K::colon, 1)) {
        p.next();
        if (p.at(K::caret)) detail::fail_at(p.peek(), "lifted symbols are declared automatically");
        const Token& opname = p.peek();
        if (!p.at(K::name) && !p.at(K::symbol)) detail::fail_at(opname, "expected an operator name");
        p.next();
        if (detail::is_reserved(opname.text)) detail::fail_at(opname, "reserved word " + opname.text);
        bool family = false;
        if (p.at(K::langle)) {
          p.next();
          const Token& idx = p.expect(K::name, "'A'");
          if (idx.text != "A") detail::fail_at(idx, "only the action index <A> is supported");
          p.expect(K::rangle, "'>'");
          if (opname.text != "pre") detail::fail_at(opname, "the only operator family is pre<A>");
          family = true;
        }
        p.expect(K::colon, "':'");
        std::vector<Sort> sorts;
        while (p.at(K::name)) {
          const Token& s = p.next();
          if (s.text == "s") sorts.push_back(Sort::state);
          else if (s.text == "d") sorts.push_back(Sort::dist);
          else detail::fail_at(s, "unknown sort " + s.text + " (expected s or d)");
        }
        p.expect(K::arrow, "'->'");
        const Token& res = p.expect(K::name, "result sort");
        if (res.text == "d") detail::fail_at(res, "distribution operators cannot be declared; liftings are automatic");
        if (res.text != "s") detail::fail_at(res, "unknown sort " + res.text + " (expected s or d)");
        p.expect_end();
        if (family) {
          if (sorts != std::vector<Sort>{Sort::dist}) detail::fail_at(opname, "the prefix family must have arity d -> s");
          if (prefix_family) detail::fail_at(opname, "duplicate prefix family");
          prefix_family = true;
        } else {
          if (op_lines.count(opname.text)) detail::fail_at(opname, "duplicate name " + opname.text);
          op_lines.emplace(opname.text, ln + 1);
          ops.push_back({opname.text, std::move(sorts), Sort::state, std::nullopt, std::nullopt});
        }
      } else {
        rule_lines.push_back({ln + 1, std::move(tokens)});
      }
    } catch (const Failure& f) {
      diags.push_back(f.diagnostic);
    }
  }

  if (!name) diags.push_back({Diagnostic::Severity::error, "missing 'ptss <name>' declaration", 1, 1});
  if (!actions_line) {
    diags.push_back({Diagnostic::Severity::error, "missing 'actions' declaration", 1, 1});
  } else if (std::find(actions.begin(), actions.end(), kTau) == actions.end()) {
    diags.push_back({Diagnostic::Severity::error, "the internal action tau must be declared", *actions_line, 1});
  }
  for (const auto& op : ops) {
    if (prefix_family && is_prefix_symbol(op.name))
      diags.push_back({Diagnostic::Severity::error, "operator name " + op.name + " clashes with the prefix family",
                       op_lines[op.name], 1});
  }

  Signature sig = Signature::lifted(actions, ops, prefix_family);
  for (const auto& d : validate_signature(sig)) {
    if (d.symbol == kTau) continue;  // reported above
    auto it = op_lines.find(d.symbol);
    diags.push_back({Diagnostic::Severity::error, d.message(), it == op_lines.end() ? 1 : it->second, 1});
  }

  std::vector<Rule> rules;
  std::set<std::string> rule_names;
  std::size_t schema = 0;
  for (const auto& line : rule_lines) {
    ++schema;
    try {
      const auto metas = detail::metavariables_of(line.tokens);
      if (metas.size() > 1)
        detail::fail_at(line.tokens.front(), "only one action metavariable per rule");
      std::vector<std::optional<std::pair<std::string, Action>>> bindings;
      if (metas.empty()) bindings.push_back(std::nullopt);
      for (const auto& a : metas.empty() ? std::vector<Action>{} : actions) bindings.push_back(std::pair{*metas.begin(), a});
      for (const auto& binding : bindings) {
        std::string rname;
        Rule r = detail::parse_rule_line(line.tokens, sig, binding, rname);
        if (rname.empty()) rname = "r" + std::to_string(schema);
        if (binding) rname += "_" + binding->second;
        r.name = rname;
        if (!rule_names.insert(rname).second)
          detail::fail_at(line.tokens.front(), "duplicate rule name " + rname);
        rules.push_back(std::move(r));
      }
    } catch (const Failure& f) {
      diags.push_back(f.diagnostic);
    }
  }

  std::stable_sort(diags.begin(), diags.end(), [](const Diagnostic& a, const Diagnostic& b) {
    return std::pair(a.line, a.column) < std::pair(b.line, b.column);
  });
  if (!diags.empty()) return result;
  result.value = Ptss{*name, std::move(sig), std::move(rules)};
  return result;
}

struct TermOptions {
  bool allow_variables = true;
  bool allow_hole = false;
  std::optional<Sort> expected;
};

/// Parses a term over `sig`. Bare undeclared names are variables whose sort
/// comes from their position.
inline Parsed<Term> parse_term(std::string_view text, const Signature& sig, TermOptions opts = {}) {
  Parsed<Term> result;
  try {
    auto tokens = detail::lex_line(text, 1);
    detail::LineParser p(std::move(tokens), &sig);
    p.allow_variables = opts.allow_variables;
    p.allow_hole = opts.allow_hole;
    Term t = p.parse_term(opts.expected);
    p.expect_end();
    result.value = std::move(t);
  } catch (const detail::Failure& f) {
    result.diagnostics.push_back(f.diagnostic);
  }
  return result;
}

/// Parses a one-hole state context such as `f([])` or `+([], 0)`.
inline Parsed<Term> parse_context(std::string_view text, const Signature& sig) {
  auto r = parse_term(text, sig, {false, true, Sort::state});
  if (r.value && !occurs(kHole, *r.value)) {
    r.diagnostics.push_back({Diagnostic::Severity::error, "context has no hole []", 1, 1});
    r.value.reset();
  }
  return r;
}

/// Plugs `t` into every hole of `context`.
inline Term plug(const Term& context, const Term& t) { return substitute({{kHole, t}}, context); }

inline std::string render(const Term& t) { return t.text(); }

inline std::string render(const Rule& r) {
  std::string s = r.name + ": ";
  bool first = true;
  auto sep = [&] {
    if (!first) s += ", ";
    first = false;
  };
  for (const auto& p : r.positive) {
    sep();
    s += p.source.text() + " --" + p.label + "-> " + p.target.text();
  }
  for (const auto& n : r.negative) {
    sep();
    s += n.source.text() + " -/" + n.label + "->";
  }
  if (!first) s += " |- ";
  return s + r.conclusion.source.text() + " --" + r.conclusion.label + "-> " + r.conclusion.target.text();
}

/// Canonical source text; parse_spec(render(p)) == p.
inline std::string render(const Ptss& p) {
  std::string s = "ptss " + p.name + "\nactions ";
  for (std::size_t i = 0; i < p.signature.actions().size(); ++i) {
    if (i) s += ", ";
    s += p.signature.actions()[i];
  }
  s += "\n";
  if (p.signature.has_prefix_family()) s += "op pre<A> : d -> s\n";
  for (const auto& op : p.signature.state_ops()) {
    if (op.prefix_action) continue;
    s += "op " + op.name + " :";
    for (Sort so : op.arg_sorts) s += " " + std::string(to_string(so));
    s += " -> s\n";
  }
  for (const auto& r : p.rules) s += render(r) + "\n";
  return s;
}

namespace detail {

/// `{ <state>: p/q, ... }` with probabilities summing to 1.
inline Distribution parse_distribution_literal(LineParser& p) {
  using K = Token::Kind;
  const auto brace = p.expect(K::lbrace, "'{'");
  Distribution d;
  do {
    Term t = p.parse_term(Sort::state);
    p.expect(K::colon, "':'");
    const auto wtok = p.peek();
    Rational w = *p.parse_weight();
    if (w <= 0 || w > 1) fail_at(wtok, "probability " + to_string(w) + " outside (0,1]");
    if (d(t) != 0) fail_at(wtok, "state " + t.text() + " listed twice");
    d.add(t, w);
  } while (p.at(K::comma) && (p.next(), true));
  p.expect(K::rbrace, "'}'");
  if (d.total_mass() != 1) fail_at(brace, "probabilities sum to " + to_string(d.total_mass()) + " ≠ 1");
  return d;
}

}  // namespace detail

/// Parses the `.pts` automaton format (`state <term>` / `trans <term> --a->
/// { <term>: p/q, ... }`). Terms are untyped; every state mentioned in a
/// transition must be declared by a `state` line.
inline Parsed<Pts> parse_pts(std::string_view text) {
  using detail::Failure;
  using K = detail::Token::Kind;
  Parsed<Pts> result;
  std::vector<Term> states;
  std::set<Term> declared;
  struct Pending {
    Pts::Edge edge;
    std::size_t line;
  };
  std::vector<Pending> edges;
  const auto lines = detail::split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    try {
      auto tokens = detail::lex_line(lines[ln], ln + 1);
      if (tokens.front().kind == K::end) continue;
      detail::LineParser p(tokens, nullptr);
      const auto head = p.expect(K::name, "'state' or 'trans'");
      if (head.text == "state") {
        Term s = p.parse_term(std::nullopt);
        p.expect_end();
        if (declared.insert(s).second) states.push_back(s);
      } else if (head.text == "trans") {
        Term s = p.parse_term(std::nullopt);
        p.expect(K::step, "'--'");
        const auto label = p.expect(K::name, "action label").text;
        p.expect(K::arrow, "'->'");
        Distribution d = detail::parse_distribution_literal(p);
        p.expect_end();
        edges.push_back({{std::move(s), label, std::move(d)}, ln + 1});
      } else {
        detail::fail_at(head, "expected 'state' or 'trans', got '" + head.text + "'");
      }
    } catch (const Failure& f) {
      result.diagnostics.push_back(f.diagnostic);
    }
  }
  std::vector<Pts::Edge> plain;
  for (auto& e : edges) {
    if (!declared.count(e.edge.source))
      result.diagnostics.push_back({Diagnostic::Severity::error, "undeclared state " + e.edge.source.text(), e.line, 1});
    for (const auto& [t, p] : e.edge.target.support())
      if (!declared.count(t))
        result.diagnostics.push_back({Diagnostic::Severity::error, "undeclared state " + t.text(), e.line, 1});
    plain.push_back(std::move(e.edge));
  }
  if (!result.diagnostics.empty()) return result;
  result.value = Pts(std::move(states), std::move(plain));
  return result;
}

/// Untyped closed term, as used for `.pts` states.
inline Parsed<Term> parse_untyped_term(std::string_view text) {
  Parsed<Term> result;
  try {
    detail::LineParser p(detail::lex_line(text, 1), nullptr);
    Term t = p.parse_term(std::nullopt);
    p.expect_end();
    result.value = std::move(t);
  } catch (const detail::Failure& f) {
    result.diagnostics.push_back(f.diagnostic);
  }
  return result;
}

/// Closed distribution literal `{ t: p/q, ... }`. A null signature parses
/// the states untyped.
inline Parsed<Distribution> parse_distribution(std::string_view text, const Signature* sig = nullptr) {
  Parsed<Distribution> result;
  try {
    detail::LineParser p(detail::lex_line(text, 1), sig);
    p.allow_variables = false;
    Distribution d = detail::parse_distribution_literal(p);
    p.expect_end();
    result.value = std::move(d);
  } catch (const detail::Failure& f) {
    result.diagnostics.push_back(f.diagnostic);
  }
  return result;
}

}  // namespace ptss
