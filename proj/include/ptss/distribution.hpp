#pragma once

// Finite-support distributions over closed state terms and the evaluation of
// closed distribution terms into them.

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ptss/rational.hpp"
#include "ptss/term.hpp"

namespace ptss {

/// Finite-support (sub-)distribution over closed state terms. Zero entries are
/// never stored, so equality is structural. The deficit 1 - total_mass() is
/// the mass of the implicit bottom element.
class Distribution {
 public:
  Distribution() = default;

  static Distribution point(const Term& t) {
    Distribution d;
    d.add(t, 1);
    return d;
  }

  void add(const Term& t, const Rational& p) {
    if (p == 0) return;
    auto [it, inserted] = support_.emplace(t, p);
    if (!inserted) {
      it->second += p;
      if (it->second == 0) support_.erase(it);
    }
    total_ += p;
  }

  const std::map<Term, Rational>& support() const { return support_; }
  const Rational& total_mass() const { return total_; }
  bool is_full() const { return total_ == 1; }
  bool empty() const { return support_.empty(); }
  Rational bottom_mass() const { return Rational(1) - total_; }

  Rational operator()(const Term& t) const {
    auto it = support_.find(t);
    return it == support_.end() ? Rational(0) : it->second;
  }

  std::string text() const {
    std::string s = "{";
    bool first = true;
    for (const auto& [t, p] : support_) {
      if (!first) s += ", ";
      first = false;
      s += t.text() + ": " + to_string(p);
    }
    return s + "}";
  }

  friend bool operator==(const Distribution& a, const Distribution& b) {
    return a.support_ == b.support_;
  }
  friend bool operator<(const Distribution& a, const Distribution& b) {
    return a.support_ < b.support_;
  }

 private:
  std::map<Term, Rational> support_;
  Rational total_ = 0;
};

inline Rational mass(const Distribution& d, const std::set<Term>& terms) {
  Rational m = 0;
  for (const auto& t : terms) m += d(t);
  return m;
}

/// Pointwise weighted sum. The weights must be positive and sum to at most 1.
inline Distribution convex_combine(const std::vector<std::pair<Rational, Distribution>>& parts) {
  Distribution out;
  Rational total = 0;
  for (const auto& [p, d] : parts) {
    if (p <= 0) throw Error("convex_combine: nonpositive weight " + to_string(p));
    total += p;
    for (const auto& [t, q] : d.support()) out.add(t, p * q);
  }
  if (total > 1) throw Error("convex_combine: weights sum to " + to_string(total) + " > 1");
  return out;
}

/// Semantics of a closed distribution term.
inline Distribution eval(const Term& theta, const Signature& sig) {
  if (!theta.closed()) throw Error("eval: open term " + theta.text());
  switch (theta.kind()) {
    case Term::Kind::dirac: return Distribution::point(theta.inner());
    case Term::Kind::convex: {
      Rational total = 0;
      std::vector<std::pair<Rational, Distribution>> parts;
      for (std::size_t i = 0; i < theta.args().size(); ++i) {
        total += theta.weights()[i];
        parts.emplace_back(theta.weights()[i], eval(theta.args()[i], sig));
      }
      if (total != 1) throw Error("eval: oplus weights sum to " + to_string(total) + " in " + theta.text());
      return convex_combine(parts);
    }
    case Term::Kind::apply: {
      if (!theta.lifted()) throw SortError("eval: state term " + theta.text() + " is not a distribution term");
      const FunctionSymbol* op = sig.find_state_op(theta.name());
      if (!op || op->rank() != theta.args().size())
        throw SortError("eval: ill-sorted lifting " + theta.text());
      // Cartesian product over the supports of the state-sorted positions;
      // distribution-sorted positions are copied verbatim.
      std::vector<std::pair<std::vector<Term>, Rational>> partial{{{}, Rational(1)}};
      for (std::size_t i = 0; i < theta.args().size(); ++i) {
        const Term& arg = theta.args()[i];
        std::vector<std::pair<std::vector<Term>, Rational>> next;
        if (op->arg_sorts[i] == Sort::dist) {
          for (auto& [args, p] : partial) {
            args.push_back(arg);
            next.emplace_back(std::move(args), p);
          }
        } else {
          const Distribution d = eval(arg, sig);
          for (const auto& [args, p] : partial)
            for (const auto& [t, q] : d.support()) {
              auto extended = args;
              extended.push_back(t);
              next.emplace_back(std::move(extended), p * q);
            }
        }
        partial = std::move(next);
      }
      Distribution out;
      for (auto& [args, p] : partial) out.add(Term::apply(theta.name(), std::move(args)), p);
      return out;
    }
    default: throw SortError("eval: " + theta.text() + " is not a closed distribution term");
  }
}

}  // namespace ptss
