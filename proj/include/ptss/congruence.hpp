#pragma once

// Empirical congruence probe: plug related pairs into one-hole contexts and
// check that the results stay related.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ptss/bisim.hpp"
#include "ptss/model.hpp"
#include "ptss/parser.hpp"

namespace ptss {

enum class BisimKind { branching, pbranching, rooted };

inline std::string to_string(BisimKind k) {
  switch (k) {
    case BisimKind::branching: return "branching";
    case BisimKind::pbranching: return "pbranching";
    case BisimKind::rooted: return "rooted";
  }
  return {};
}

inline std::optional<BisimKind> parse_bisim_kind(std::string_view s) {
  if (s == "branching") return BisimKind::branching;
  if (s == "pbranching") return BisimKind::pbranching;
  if (s == "rooted") return BisimKind::rooted;
  return std::nullopt;
}

struct BisimVerdict {
  bool related = false;
  std::optional<BisimWitness> witness;
};

inline BisimVerdict decide_bisim(const Pts& pts, BisimKind kind, std::size_t s, std::size_t t) {
  switch (kind) {
    case BisimKind::rooted: {
      auto r = rooted_branching_bisim(pts, s, t);
      return {r.related, r.witness};
    }
    case BisimKind::branching:
    case BisimKind::pbranching: {
      const BisimResult r = kind == BisimKind::branching ? branching_bisim(pts) : prob_branching_bisim(pts);
      if (r.related(s, t)) return {true, std::nullopt};
      auto it = r.witnesses.find({s, t});
      return {false, it == r.witnesses.end() ? std::nullopt : std::optional<BisimWitness>(it->second)};
    }
  }
  return {};
}

struct CongruenceViolation {
  Term context;
  Term left;
  Term right;
  Term plugged_left;
  Term plugged_right;
  std::string witness;

  std::string text() const {
    return "context " + context.text() + ": " + plugged_left.text() + " and " + plugged_right.text() +
           " are not related" + (witness.empty() ? "" : " (" + witness + ")");
  }
};

namespace detail {

inline Pts pts_for(const Ptss& p, const DomainBound& bound, std::vector<Term> roots) {
  DomainBound b = bound;
  b.roots = std::move(roots);
  const ThreeValuedModel m = stable_model(p, b);
  if (!is_complete(m)) throw Error("congruence probe: the specification is not complete on the probed domain");
  return reachable_pts(p, m, b.roots);
}

}  // namespace detail

/// Every (context, pair) whose plugged terms are not related under `kind`.
/// Each pair must itself be related; a pair that is not raises Error.
inline std::vector<CongruenceViolation> congruence_probe(const Ptss& p, const std::vector<std::pair<Term, Term>>& pairs,
                                                         const std::vector<Term>& contexts, const DomainBound& bound,
                                                         BisimKind kind = BisimKind::rooted) {
  std::vector<CongruenceViolation> out;
  if (contexts.empty()) return out;
  for (const auto& [u, v] : pairs) {
    const Pts base = detail::pts_for(p, bound, {u, v});
    if (!decide_bisim(base, kind, base.require(u), base.require(v)).related)
      throw Error("congruence probe: " + u.text() + " and " + v.text() + " are not " + to_string(kind) + " bisimilar");
  }
  for (const auto& c : contexts) {
    if (!occurs(kHole, c)) throw Error("congruence probe: context " + c.text() + " has no hole");
    for (const auto& [u, v] : pairs) {
      const Term cu = plug(c, u), cv = plug(c, v);
      const Pts pts = detail::pts_for(p, bound, {cu, cv});
      const BisimVerdict verdict = decide_bisim(pts, kind, pts.require(cu), pts.require(cv));
      if (!verdict.related)
        out.push_back({c, u, v, cu, cv, verdict.witness ? verdict.witness->text(pts) : std::string()});
    }
  }
  return out;
}

/// One-hole state contexts with the hole at most `depth` operator applications
/// deep. Other state arguments range over `fillers`; distribution arguments
/// are δ(·) of the hole or of a filler.
inline std::vector<Term> enumerate_contexts(const Signature& sig, std::size_t depth, const std::vector<Term>& fillers) {
  std::vector<Term> out;
  std::vector<Term> layer{hole()};
  for (std::size_t d = 0; d < depth; ++d) {
    std::vector<Term> next;
    for (const auto& inner : layer)
      for (const auto& op : sig.state_ops())
        for (std::size_t i = 0; i < op.arg_sorts.size(); ++i) {
          std::vector<std::vector<Term>> partial{{}};
          for (std::size_t j = 0; j < op.arg_sorts.size(); ++j) {
            auto wrap = [&](const Term& t) { return op.arg_sorts[j] == Sort::state ? t : Term::dirac(t); };
            std::vector<std::vector<Term>> grown;
            for (const auto& acc : partial) {
              if (j == i) {
                grown.push_back(acc);
                grown.back().push_back(wrap(inner));
              } else {
                for (const auto& f : fillers) {
                  grown.push_back(acc);
                  grown.back().push_back(wrap(f));
                }
              }
            }
            partial = std::move(grown);
          }
          for (auto& args : partial) next.push_back(Term::apply(op.name, std::move(args)));
        }
    out.insert(out.end(), next.begin(), next.end());
    layer = std::move(next);
  }
  return out;
}

}  // namespace ptss
