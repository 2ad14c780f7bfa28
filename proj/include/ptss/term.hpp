#pragma once

// Two-sorted signatures, state/distribution terms, substitutions and
// first-order matching.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ptss/rational.hpp"

namespace ptss {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SortError : Error {
  using Error::Error;
};

enum class Sort { state, dist };

inline std::string_view to_string(Sort s) { return s == Sort::state ? "s" : "d"; }

using Action = std::string;

/// The internal action. Every signature must declare it.
inline const Action kTau = "tau";

/// Name of the state operator `a._` of the action-indexed prefix family.
inline std::string prefix_symbol(std::string_view action) { return std::string(action) + "."; }
inline bool is_prefix_symbol(std::string_view name) {
  return name.size() > 1 && name.back() == '.';
}
inline std::string lifted_symbol(std::string_view name) { return "^" + std::string(name); }

struct FunctionSymbol {
  std::string name;
  std::vector<Sort> arg_sorts;
  Sort result = Sort::state;
  /// Set on a probabilistic lifting: the state operator it lifts.
  std::optional<std::string> lifted_of;
  /// Set on members of the prefix family: the action they are indexed by.
  std::optional<Action> prefix_action;

  std::size_t rank() const { return arg_sorts.size(); }
  bool operator==(const FunctionSymbol&) const = default;
};

class Signature {
 public:
  Signature() = default;

  /// Builds a probabilistically lifted signature. When `prefix_family` is
  /// set, one prefix operator `a._ : d -> s` is generated per action. Every
  /// state operator receives its lifting `^f : d..d -> d`.
  static Signature lifted(std::vector<Action> actions, std::vector<FunctionSymbol> state_ops,
                          bool prefix_family) {
    Signature sig;
    sig.actions_ = std::move(actions);
    sig.prefix_family_ = prefix_family;
    if (prefix_family) {
      for (const auto& a : sig.actions_)
        sig.state_ops_.push_back({prefix_symbol(a), {Sort::dist}, Sort::state, std::nullopt, a});
    }
    for (auto& op : state_ops) sig.state_ops_.push_back(std::move(op));
    for (const auto& op : sig.state_ops_) sig.dist_ops_.push_back(lifting_of(op));
    return sig;
  }

  static FunctionSymbol lifting_of(const FunctionSymbol& op) {
    return {lifted_symbol(op.name), std::vector<Sort>(op.rank(), Sort::dist), Sort::dist, op.name,
            std::nullopt};
  }

  // Raw mutators for callers assembling signatures by hand; validate_signature
  // reports whatever invariants they break.
  void add_action(Action a) { actions_.push_back(std::move(a)); }
  void add_state_op(FunctionSymbol op) { state_ops_.push_back(std::move(op)); }
  void add_dist_op(FunctionSymbol op) { dist_ops_.push_back(std::move(op)); }

  const std::vector<Action>& actions() const { return actions_; }
  const std::vector<FunctionSymbol>& state_ops() const { return state_ops_; }
  const std::vector<FunctionSymbol>& dist_ops() const { return dist_ops_; }
  bool has_prefix_family() const { return prefix_family_; }

  bool has_action(std::string_view a) const {
    return std::find(actions_.begin(), actions_.end(), a) != actions_.end();
  }

  const FunctionSymbol* find_state_op(std::string_view name) const {
    for (const auto& op : state_ops_)
      if (op.name == name) return &op;
    return nullptr;
  }

  const FunctionSymbol* find_dist_op(std::string_view name) const {
    for (const auto& op : dist_ops_)
      if (op.name == name) return &op;
    return nullptr;
  }

  bool operator==(const Signature&) const = default;

 private:
  std::vector<Action> actions_;
  std::vector<FunctionSymbol> state_ops_;
  std::vector<FunctionSymbol> dist_ops_;
  bool prefix_family_ = false;
};

struct SignatureDiagnostic {
  std::string symbol;
  std::string problem;

  std::string message() const { return symbol + ": " + problem; }
};

inline std::vector<SignatureDiagnostic> validate_signature(const Signature& sig) {
  std::vector<SignatureDiagnostic> out;
  if (!sig.has_action(kTau)) out.push_back({kTau, "internal action not declared"});

  std::set<std::string> seen;
  auto check_unique = [&](const FunctionSymbol& op) {
    if (!seen.insert(op.name).second) out.push_back({op.name, "duplicate name"});
  };
  for (const auto& op : sig.state_ops()) check_unique(op);
  for (const auto& op : sig.dist_ops()) check_unique(op);

  for (const auto& op : sig.state_ops()) {
    if (op.result != Sort::state) out.push_back({op.name, "state operator with result sort d"});
    std::size_t liftings = 0;
    for (const auto& d : sig.dist_ops()) {
      if (d.lifted_of != op.name) continue;
      ++liftings;
      if (d.rank() != op.rank() ||
          std::any_of(d.arg_sorts.begin(), d.arg_sorts.end(),
                      [](Sort s) { return s != Sort::dist; }))
        out.push_back({d.name, "lifting arity does not match " + op.name});
    }
    if (liftings == 0) out.push_back({op.name, "missing lifting"});
    if (liftings > 1) out.push_back({op.name, "more than one lifting"});
  }
  for (const auto& d : sig.dist_ops()) {
    if (d.result != Sort::dist) out.push_back({d.name, "distribution operator with result sort s"});
    if (!d.lifted_of) {
      out.push_back({d.name, "distribution operator is not a lifting"});
    } else if (!sig.find_state_op(*d.lifted_of)) {
      out.push_back({d.name, "lifting of undeclared operator " + *d.lifted_of});
    }
  }
  return out;
}

/// Immutable two-sorted term with structural equality. Copies share nodes.
class Term {
 public:
  enum class Kind { state_var, dist_var, apply, dirac, convex };

  Term() = default;

  static Term state_var(std::string name) { return make(Kind::state_var, std::move(name), false, {}, {}); }
  static Term dist_var(std::string name) { return make(Kind::dist_var, std::move(name), false, {}, {}); }

  /// `f(args)` for a state operator, or its lifting `^f(args)` when `lifted`.
  static Term apply(std::string symbol, std::vector<Term> args = {}, bool lifted = false) {
    return make(Kind::apply, std::move(symbol), lifted, std::move(args), {});
  }
  static Term dirac(Term inner) { return make(Kind::dirac, "delta", false, {std::move(inner)}, {}); }
  static Term convex(std::vector<Rational> weights, std::vector<Term> args) {
    if (weights.size() != args.size()) throw Error("convex combination: weight/argument count mismatch");
    return make(Kind::convex, "oplus", false, std::move(args), std::move(weights));
  }

  bool valid() const { return node_ != nullptr; }
  Kind kind() const { return node_->kind; }
  bool is_var() const { return kind() == Kind::state_var || kind() == Kind::dist_var; }
  /// Variable name, or symbol name for applications (the origin name for liftings).
  const std::string& name() const { return node_->name; }
  bool lifted() const { return node_->lifted; }
  const std::vector<Term>& args() const { return node_->args; }
  const std::vector<Rational>& weights() const { return node_->weights; }
  const Term& inner() const { return node_->args.front(); }

  /// Sort determined by the node kind alone.
  Sort sort() const {
    switch (kind()) {
      case Kind::state_var: return Sort::state;
      case Kind::apply: return lifted() ? Sort::dist : Sort::state;
      default: return Sort::dist;
    }
  }

  bool closed() const { return node_->closed; }
  std::size_t depth() const { return node_->depth; }
  std::size_t hash() const { return node_->hash; }
  /// Canonical surface syntax; re-parses to an equal term.
  const std::string& text() const { return node_->text; }

  friend int compare(const Term& a, const Term& b) {
    if (a.node_ == b.node_) return 0;
    if (int c = a.text().compare(b.text()); c != 0) return c < 0 ? -1 : 1;
    return structural_compare(a, b);
  }
  friend bool operator==(const Term& a, const Term& b) {
    return a.node_ == b.node_ || (a.hash() == b.hash() && compare(a, b) == 0);
  }
  friend std::strong_ordering operator<=>(const Term& a, const Term& b) {
    return compare(a, b) <=> 0;
  }

 private:
  struct Node {
    Kind kind;
    std::string name;
    bool lifted;
    std::vector<Term> args;
    std::vector<Rational> weights;
    bool closed;
    std::size_t depth;
    std::size_t hash;
    std::string text;
  };

  static Term make(Kind kind, std::string name, bool lifted, std::vector<Term> args,
                   std::vector<Rational> weights) {
    for (const auto& a : args)
      if (!a.valid()) throw Error("term: empty argument");
    auto node = std::make_shared<Node>();
    node->kind = kind;
    node->name = std::move(name);
    node->lifted = lifted;
    node->args = std::move(args);
    node->weights = std::move(weights);
    node->closed = kind != Kind::state_var && kind != Kind::dist_var;
    node->depth = 1;
    std::size_t h = std::hash<std::string>{}(node->name) * 31 + static_cast<std::size_t>(kind) * 7 +
                    (lifted ? 1 : 0);
    for (const auto& a : node->args) {
      node->closed = node->closed && a.closed();
      node->depth = std::max(node->depth, a.depth() + 1);
      h = h * 1000003u ^ a.hash();
    }
    for (const auto& w : node->weights) h = h * 1000003u ^ std::hash<std::string>{}(to_string(w));
    node->hash = h;
    node->text = render(*node);
    Term t;
    t.node_ = std::move(node);
    return t;
  }

  static std::string render(const Node& n) {
    switch (n.kind) {
      case Kind::state_var:
      case Kind::dist_var: return n.name;
      case Kind::dirac: return "delta(" + n.args[0].text() + ")";
      case Kind::convex: {
        std::string s = "oplus{";
        for (std::size_t i = 0; i < n.args.size(); ++i) {
          if (i) s += ", ";
          s += to_string(n.weights[i]) + ": " + n.args[i].text();
        }
        return s + "}";
      }
      case Kind::apply: {
        std::string s = n.lifted ? "^" + n.name : n.name;
        if (is_prefix_symbol(n.name) && n.args.size() == 1) return s + n.args[0].text();
        if (n.args.empty()) return s;
        s += "(";
        for (std::size_t i = 0; i < n.args.size(); ++i) {
          if (i) s += ", ";
          s += n.args[i].text();
        }
        return s + ")";
      }
    }
    return {};
  }

  static int structural_compare(const Term& a, const Term& b) {
    if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
    if (int c = a.name().compare(b.name()); c != 0) return c < 0 ? -1 : 1;
    if (a.lifted() != b.lifted()) return a.lifted() ? 1 : -1;
    if (a.weights().size() != b.weights().size()) return a.weights().size() < b.weights().size() ? -1 : 1;
    for (std::size_t i = 0; i < a.weights().size(); ++i)
      if (a.weights()[i] != b.weights()[i]) return a.weights()[i] < b.weights()[i] ? -1 : 1;
    if (a.args().size() != b.args().size()) return a.args().size() < b.args().size() ? -1 : 1;
    for (std::size_t i = 0; i < a.args().size(); ++i)
      if (int c = compare(a.args()[i], b.args()[i]); c != 0) return c;
    return 0;
  }

  std::shared_ptr<const Node> node_;
};

struct TermHash {
  std::size_t operator()(const Term& t) const { return t.hash(); }
};

/// Closed-term placeholder used for one-hole contexts `C[]`.
inline const std::string kHole = "[]";
inline Term hole() { return Term::state_var(kHole); }

/// Maps variable names to terms. State variables must map to state terms and
/// distribution variables to distribution terms.
using Substitution = std::map<std::string, Term>;

inline void collect_variables(const Term& t, std::set<std::string>& out) {
  if (t.closed()) return;
  if (t.is_var()) {
    out.insert(t.name());
    return;
  }
  for (const auto& a : t.args()) collect_variables(a, out);
}

inline std::set<std::string> variables(const Term& t) {
  std::set<std::string> out;
  collect_variables(t, out);
  return out;
}

inline bool occurs(const std::string& var, const Term& t) {
  if (t.closed()) return false;
  if (t.is_var()) return t.name() == var;
  return std::any_of(t.args().begin(), t.args().end(), [&](const Term& a) { return occurs(var, a); });
}

inline Term substitute(const Substitution& rho, const Term& t) {
  if (t.closed() || rho.empty()) return t;
  if (t.is_var()) {
    auto it = rho.find(t.name());
    if (it == rho.end()) return t;
    if (it->second.sort() != t.sort())
      throw SortError("substitution binds " + std::string(to_string(t.sort())) + "-sorted variable " +
                      t.name() + " to " + std::string(to_string(it->second.sort())) + "-sorted term " +
                      it->second.text());
    return it->second;
  }
  std::vector<Term> args;
  args.reserve(t.args().size());
  bool changed = false;
  for (const auto& a : t.args()) {
    args.push_back(substitute(rho, a));
    changed = changed || !(args.back() == a);
  }
  if (!changed) return t;
  switch (t.kind()) {
    case Term::Kind::apply: return Term::apply(t.name(), std::move(args), t.lifted());
    case Term::Kind::dirac: return Term::dirac(std::move(args.front()));
    case Term::Kind::convex: return Term::convex(t.weights(), std::move(args));
    default: return t;
  }
}

/// Extends `rho` so that rho(pattern) == subject. On failure `rho` may hold
/// partial bindings; callers pass a copy.
inline bool match_into(const Term& pattern, const Term& subject, Substitution& rho) {
  if (pattern.is_var()) {
    if (pattern.sort() != subject.sort()) return false;
    auto [it, inserted] = rho.emplace(pattern.name(), subject);
    return inserted || it->second == subject;
  }
  if (pattern.closed()) return pattern == subject;
  if (pattern.kind() != subject.kind() || pattern.name() != subject.name() ||
      pattern.lifted() != subject.lifted() || pattern.args().size() != subject.args().size() ||
      pattern.weights() != subject.weights())
    return false;
  for (std::size_t i = 0; i < pattern.args().size(); ++i)
    if (!match_into(pattern.args()[i], subject.args()[i], rho)) return false;
  return true;
}

inline std::optional<Substitution> match(const Term& pattern, const Term& subject) {
  Substitution rho;
  if (!match_into(pattern, subject, rho)) return std::nullopt;
  return rho;
}

/// Sort of `t` after checking it against `sig`. Throws SortError naming the
/// innermost offending node.
inline Sort sort_of(const Term& t, const Signature& sig) {
  auto fail = [&](const std::string& why) -> Sort { throw SortError(why + " in " + t.text()); };
  switch (t.kind()) {
    case Term::Kind::state_var: return Sort::state;
    case Term::Kind::dist_var: return Sort::dist;
    case Term::Kind::dirac:
      if (sort_of(t.inner(), sig) != Sort::state) return fail("delta expects a state term");
      return Sort::dist;
    case Term::Kind::convex: {
      Rational total = 0;
      for (std::size_t i = 0; i < t.args().size(); ++i) {
        if (sort_of(t.args()[i], sig) != Sort::dist) return fail("oplus expects distribution terms");
        if (t.weights()[i] <= 0 || t.weights()[i] > 1) return fail("oplus weight outside (0,1]");
        total += t.weights()[i];
      }
      if (t.args().empty()) return fail("empty oplus");
      if (total != 1) return fail("oplus weights sum to " + to_string(total));
      return Sort::dist;
    }
    case Term::Kind::apply: {
      const FunctionSymbol* op = sig.find_state_op(t.name());
      if (!op) return fail("unknown operator " + t.name());
      if (op->rank() != t.args().size())
        return fail("operator " + t.name() + " expects " + std::to_string(op->rank()) + " arguments");
      for (std::size_t i = 0; i < t.args().size(); ++i) {
        const Sort expected = t.lifted() ? Sort::dist : op->arg_sorts[i];
        if (sort_of(t.args()[i], sig) != expected)
          return fail("argument " + std::to_string(i + 1) + " of " + (t.lifted() ? "^" : "") + t.name() +
                      " must have sort " + std::string(to_string(expected)));
      }
      return t.lifted() ? Sort::dist : Sort::state;
    }
  }
  return Sort::state;
}

}  // namespace ptss

template <>
struct std::hash<ptss::Term> {
  std::size_t operator()(const ptss::Term& t) const { return t.hash(); }
};
