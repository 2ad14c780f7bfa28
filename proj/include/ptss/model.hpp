#pragma once

// Least 3-valued stable model of a PTSS over a finite fragment of the closed
// term universe, completeness, and the associated PTS.
//
// Two phases. First the domain is grown from the roots by instantiating rules
// while ignoring negative premises; this yields every ground rule instance that
// any proof can use. Then CT/PT are computed by alternating Horn fixpoints over
// those instances, each checking negative premises against the other set.

#include <algorithm>
#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ptss/distribution.hpp"
#include "ptss/pts.hpp"
#include "ptss/rule.hpp"
#include "ptss/term.hpp"

namespace ptss {

/// Raised when the reachable domain outgrows DomainBound.
struct BoundError : Error {
  using Error::Error;
};

/// Raised when a caller needs a converged model and did not get one.
struct ConvergenceError : Error {
  using Error::Error;
};

struct DomainBound {
  std::vector<Term> roots;
  std::size_t max_depth = 8;
  std::size_t max_states = 512;
  std::size_t max_iterations = 64;
};

struct SymbolicTransition {
  Term source;
  Action label;
  Term target;

  auto operator<=>(const SymbolicTransition&) const = default;
  bool operator==(const SymbolicTransition&) const = default;

  std::string text() const { return source.text() + " --" + label + "-> " + target.text(); }
};

using TransitionSet = std::set<SymbolicTransition>;

struct ThreeValuedModel {
  TransitionSet ct;
  TransitionSet pt;
  /// λ: the first α with CT_α = CT_α+1 and PT_α = PT_α+1 (or the cap).
  std::size_t iterations = 0;
  bool converged = false;
  /// (CT_α, PT_α) for α = 1, 2, ...; PT_0 is the full relation and is not stored.
  std::vector<std::pair<TransitionSet, TransitionSet>> history;
  /// Closed state terms the model was computed over.
  std::set<Term> domain;
};

namespace detail {

struct GroundInstance {
  std::size_t rule;
  std::size_t conclusion;
  std::vector<std::size_t> positive;
  std::vector<std::pair<Term, Action>> negative;

  auto operator<=>(const GroundInstance&) const = default;
  bool operator==(const GroundInstance&) const = default;
};

/// Phase one: domain, the positive closure U and all ground instances over it.
class Grounding {
 public:
  Grounding(const Ptss& p, const DomainBound& bound) : p_(p), bound_(bound) {
    if (bound.max_depth == 0 || bound.max_states == 0 || bound.max_iterations == 0)
      throw Error("domain bound: limits must be positive");
    for (const auto& r : bound.roots) {
      if (!r.closed()) throw Error("domain bound: root " + r.text() + " is not closed");
      if (sort_of(r, p.signature) != Sort::state) throw SortError("domain bound: root " + r.text() + " is not a state term");
      add_term(r);
    }
    run();
  }

  const std::vector<SymbolicTransition>& transitions() const { return u_; }
  const std::set<GroundInstance>& instances() const { return instances_; }
  const std::set<Term>& domain() const { return domain_; }

 private:
  void add_term(const Term& t) {
    if (t.kind() == Term::Kind::apply && !t.lifted()) {
      if (domain_.count(t)) return;
      if (t.depth() > bound_.max_depth)
        throw BoundError("domain bound exceeded: " + t.text() + " has depth " + std::to_string(t.depth()) +
                         " > " + std::to_string(bound_.max_depth));
      if (domain_.size() >= bound_.max_states)
        throw BoundError("domain bound exceeded: adding " + t.text() + " would exceed " +
                         std::to_string(bound_.max_states) + " states");
      domain_.insert(t);
      by_symbol_[t.name()].push_back(t);
      all_.push_back(t);
      changed_ = true;
    }
    for (const auto& a : t.args()) add_term(a);
  }

  std::size_t add_transition(SymbolicTransition tr) {
    auto it = ids_.find(tr);
    if (it != ids_.end()) return it->second;
    const std::size_t id = u_.size();
    ids_.emplace(tr, id);
    by_source_[{tr.source, tr.label}].push_back(id);
    by_label_[tr.label].push_back(id);
    u_.push_back(std::move(tr));
    changed_ = true;
    return id;
  }

  void run() {
    changed_ = true;
    while (changed_) {
      changed_ = false;
      for (std::size_t r = 0; r < p_.rules.size(); ++r) instantiate(r);
    }
  }

  void instantiate(std::size_t r) {
    const Rule& rule = p_.rules[r];
    const Term& src = rule.conclusion.source;
    std::vector<Term> candidates;
    if (src.is_var()) {
      candidates = all_;
    } else if (src.kind() == Term::Kind::apply && !src.lifted()) {
      auto it = by_symbol_.find(src.name());
      if (it != by_symbol_.end()) candidates = it->second;
    }
    for (const auto& t : candidates) {
      Substitution rho;
      if (!match_into(src, t, rho)) continue;
      std::vector<bool> done(rule.positive.size(), false);
      std::vector<std::size_t> premises(rule.positive.size());
      solve(r, rho, done, premises, 0);
    }
  }

  void solve(std::size_t r, const Substitution& rho, std::vector<bool>& done, std::vector<std::size_t>& premises,
             std::size_t solved) {
    const Rule& rule = p_.rules[r];
    if (solved == rule.positive.size()) {
      finish(r, rho, premises);
      return;
    }
    // Prefer a premise whose source is already ground.
    std::size_t pick = rule.positive.size();
    for (std::size_t i = 0; i < rule.positive.size(); ++i) {
      if (done[i]) continue;
      if (pick == rule.positive.size()) pick = i;
      if (substitute(rho, rule.positive[i].source).closed()) {
        pick = i;
        break;
      }
    }
    const PositiveLiteral& lit = rule.positive[pick];
    const Term source = substitute(rho, lit.source);
    std::vector<std::size_t> options;
    if (source.closed()) {
      add_term(source);
      auto it = by_source_.find({source, lit.label});
      if (it != by_source_.end()) options = it->second;
    } else {
      auto it = by_label_.find(lit.label);
      if (it != by_label_.end()) options = it->second;
    }
    done[pick] = true;
    for (std::size_t id : options) {
      Substitution next = rho;
      if (!match_into(source, u_[id].source, next)) continue;
      if (!match_into(substitute(next, lit.target), u_[id].target, next)) continue;
      premises[pick] = id;
      solve(r, next, done, premises, solved + 1);
    }
    done[pick] = false;
  }

  void finish(std::size_t r, const Substitution& rho, const std::vector<std::size_t>& premises) {
    const Rule& rule = p_.rules[r];
    GroundInstance inst{r, 0, premises, {}};
    for (const auto& n : rule.negative) {
      Term s = substitute(rho, n.source);
      if (!s.closed()) throw Error("rule " + rule.name + ": negative premise source " + s.text() + " has unbound variables");
      add_term(s);
      inst.negative.emplace_back(std::move(s), n.label);
    }
    Term source = substitute(rho, rule.conclusion.source);
    Term target = substitute(rho, rule.conclusion.target);
    if (!target.closed()) throw Error("rule " + rule.name + ": conclusion target " + target.text() + " has unbound variables");
    const Distribution d = eval(target, p_.signature);
    for (const auto& [t, q] : d.support()) add_term(t);
    inst.conclusion = add_transition({std::move(source), rule.conclusion.label, std::move(target)});
    if (instances_.insert(std::move(inst)).second) changed_ = true;
  }

  const Ptss& p_;
  const DomainBound& bound_;
  std::set<Term> domain_;
  std::vector<Term> all_;
  std::map<std::string, std::vector<Term>> by_symbol_;
  std::vector<SymbolicTransition> u_;
  std::map<SymbolicTransition, std::size_t> ids_;
  std::map<std::pair<Term, Action>, std::vector<std::size_t>> by_source_;
  std::map<Action, std::vector<std::size_t>> by_label_;
  std::set<GroundInstance> instances_;
  bool changed_ = false;
};

/// Least set closed under the instances whose negative premises hold in
/// `against`. A null `against` stands for the full relation, in which no
/// negative literal holds.
inline std::vector<bool> horn_fixpoint(const Grounding& g, const std::vector<bool>* against) {
  std::set<std::pair<Term, Action>> enabled;
  if (against)
    for (std::size_t i = 0; i < against->size(); ++i)
      if ((*against)[i]) enabled.emplace(g.transitions()[i].source, g.transitions()[i].label);

  std::vector<const GroundInstance*> usable;
  for (const auto& inst : g.instances()) {
    bool ok = true;
    for (const auto& lit : inst.negative)
      if (!against || enabled.count(lit)) {
        ok = false;
        break;
      }
    if (ok) usable.push_back(&inst);
  }
  std::vector<bool> derived(g.transitions().size(), false);
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto* inst : usable) {
      if (derived[inst->conclusion]) continue;
      if (std::all_of(inst->positive.begin(), inst->positive.end(), [&](std::size_t id) { return derived[id]; })) {
        derived[inst->conclusion] = true;
        changed = true;
      }
    }
  }
  return derived;
}

inline TransitionSet to_set(const Grounding& g, const std::vector<bool>& mask) {
  TransitionSet out;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) out.insert(g.transitions()[i]);
  return out;
}

}  // namespace detail

/// CT_α+1 / PT_α+1 are the Horn closures with negative premises checked
/// against PT_α / CT_α. Iteration stops at the first α where both stabilize.
inline ThreeValuedModel stable_model(const Ptss& p, const DomainBound& bound) {
  detail::Grounding g(p, bound);
  ThreeValuedModel m;
  m.domain = g.domain();

  std::vector<bool> ct(g.transitions().size(), false);
  std::optional<std::vector<bool>> pt;  // nullopt is PT_0
  for (std::size_t alpha = 0;; ++alpha) {
    std::vector<bool> next_ct = detail::horn_fixpoint(g, pt ? &*pt : nullptr);
    std::vector<bool> next_pt = detail::horn_fixpoint(g, &ct);
    if (pt && next_ct == ct && next_pt == *pt) {
      m.iterations = alpha;
      m.converged = true;
      break;
    }
    if (alpha == bound.max_iterations) {
      m.iterations = alpha;
      m.converged = false;
      break;
    }
    ct = std::move(next_ct);
    pt = std::move(next_pt);
    m.history.emplace_back(detail::to_set(g, ct), detail::to_set(g, *pt));
  }
  if (pt) {
    m.ct = detail::to_set(g, ct);
    m.pt = detail::to_set(g, *pt);
  }
  return m;
}

/// Throws ConvergenceError if the model did not converge within the bound.
inline bool is_complete(const ThreeValuedModel& m) {
  if (!m.converged)
    throw ConvergenceError("stable model did not converge within " + std::to_string(m.iterations) + " iterations");
  return m.ct == m.pt;
}

inline std::pair<bool, ThreeValuedModel> is_complete(const Ptss& p, const DomainBound& bound) {
  auto m = stable_model(p, bound);
  const bool complete = is_complete(m);
  return {complete, std::move(m)};
}

/// Associated PTS of a complete model, restricted to what is reachable from
/// the roots.
inline Pts reachable_pts(const Ptss& p, const ThreeValuedModel& m, const std::vector<Term>& roots) {
  if (!is_complete(m)) throw Error("no associated PTS: the specification is not complete on this domain");
  std::map<Term, std::vector<const SymbolicTransition*>> from;
  for (const auto& t : m.ct) from[t.source].push_back(&t);

  std::set<Term> seen(roots.begin(), roots.end());
  std::vector<Term> work(roots.begin(), roots.end());
  std::vector<Pts::Edge> edges;
  while (!work.empty()) {
    Term s = std::move(work.back());
    work.pop_back();
    auto it = from.find(s);
    if (it == from.end()) continue;
    for (const auto* tr : it->second) {
      Distribution d = eval(tr->target, p.signature);
      for (const auto& [u, q] : d.support())
        if (seen.insert(u).second) work.push_back(u);
      edges.push_back({s, tr->label, std::move(d)});
    }
  }
  return Pts(std::vector<Term>(seen.begin(), seen.end()), std::move(edges));
}

inline Pts reachable_pts(const Ptss& p, const DomainBound& bound) {
  return reachable_pts(p, stable_model(p, bound), bound.roots);
}

}  // namespace ptss
