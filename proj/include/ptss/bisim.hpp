#pragma once

// Branching bisimulation (execution-based and scheduler-based), probabilistic
// branching bisimulation and rooted branching bisimulation on a finite PTS.
// Each relation is a greatest fixpoint: start from all pairs and drop, in
// sweeps, every pair where some transition of one side is not matched by the
// other under the current candidate.

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ptss/lifting.hpp"
#include "ptss/pts.hpp"
#include "ptss/relation.hpp"
#include "ptss/simplex.hpp"

namespace ptss {

/// Transition `transition` of `state` has no match from `other`.
struct BisimWitness {
  std::size_t state;
  std::size_t transition;
  std::size_t other;

  std::string text(const Pts& pts) const {
    const auto& tr = pts.transitions()[transition];
    return pts.states()[state].text() + " --" + tr.label + "-> " + tr.target.text() + " is not matched by " +
           pts.states()[other].text();
  }
};

struct BisimResult {
  IndexRelation relation;
  /// Why each removed ordered pair was dropped.
  std::map<std::pair<std::size_t, std::size_t>, BisimWitness> witnesses;
  std::size_t sweeps = 0;

  bool related(std::size_t s, std::size_t t) const { return relation(s, t); }
  StateRelation states(const Pts& pts) const { return StateRelation::from(pts, relation); }
};

namespace detail {

/// `matched(B, s, e, t)` decides whether transition e of s is matched from t.
/// `prepare(B)` runs once at the start of every sweep.
template <class Prepare, class Matched>
BisimResult greatest_fixpoint(const Pts& pts, Prepare&& prepare, Matched&& matched) {
  const std::size_t n = pts.size();
  BisimResult out{IndexRelation(n, true), {}, 0};
  while (true) {
    ++out.sweeps;
    prepare(out.relation);
    std::vector<std::pair<std::pair<std::size_t, std::size_t>, BisimWitness>> drop;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!out.relation(i, j)) continue;
        std::optional<BisimWitness> why;
        for (std::size_t e : pts.outgoing(i))
          if (!matched(out.relation, i, e, j)) {
            why = BisimWitness{i, e, j};
            break;
          }
        if (!why)
          for (std::size_t e : pts.outgoing(j))
            if (!matched(out.relation, j, e, i)) {
              why = BisimWitness{j, e, i};
              break;
            }
        if (why) drop.emplace_back(std::pair{i, j}, *why);
      }
    if (drop.empty()) return out;
    for (auto& [p, w] : drop) {
      out.relation.set_symmetric(p.first, p.second, false);
      out.witnesses.emplace(p, w);
      out.witnesses.emplace(std::pair{p.second, p.first}, w);
    }
  }
}

inline bool supported_in(const IndexRelation& b, std::size_t s, const IndexedDistribution& d) {
  for (const auto& [v, p] : d)
    if (!b(s, v)) return false;
  return true;
}

/// τ-transitions whose target is lifted-related to the Dirac of the source.
inline std::vector<bool> branching_preserving(const Pts& pts, const IndexRelation& b) {
  std::vector<bool> out(pts.transitions().size(), false);
  for (std::size_t e = 0; e < out.size(); ++e) {
    const auto& tr = pts.transitions()[e];
    out[e] = tr.label == kTau && supported_in(b, tr.source, tr.indexed);
  }
  return out;
}

/// τ-transitions that may be used on the way to matching a step of s: the
/// source and the whole target stay related to s. For an equivalence this is
/// exactly the branching-preserving set restricted to the class of s.
inline std::vector<bool> allowed_for(const Pts& pts, const IndexRelation& b, std::size_t s) {
  std::vector<bool> out(pts.transitions().size(), false);
  for (std::size_t e = 0; e < out.size(); ++e) {
    const auto& tr = pts.transitions()[e];
    out[e] = tr.label == kTau && b(s, tr.source) && supported_in(b, s, tr.indexed);
  }
  return out;
}

/// Inert τ-step of s when compared with t. Checked against t so that the
/// greatest fixpoint stays an equivalence.
inline bool inert_against(const Pts& pts, const IndexRelation& b, std::size_t e, std::size_t t) {
  const auto& tr = pts.transitions()[e];
  return tr.label == kTau && supported_in(b, t, tr.indexed);
}

}  // namespace detail

/// δ_s B π for the τ-transition e of s.
inline bool is_branching_preserving(const Pts& pts, const IndexRelation& b, std::size_t e) {
  const auto& tr = pts.transitions()[e];
  return tr.label == kTau && detail::supported_in(b, tr.source, tr.indexed);
}

/// Execution-based clause: either an inert τ-step, or a concrete execution
/// from t through τ-steps whose states and target distributions stay related
/// to s, ending in an a-step with a related target.
inline bool branching_match(const Pts& pts, const IndexRelation& b, std::size_t s, std::size_t e, std::size_t t) {
  const auto& tr = pts.transitions()[e];
  if (detail::inert_against(pts, b, e, t)) return true;
  std::vector<bool> seen(pts.size(), false);
  std::deque<std::size_t> queue{t};
  seen[t] = true;
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop_front();
    for (std::size_t f : pts.outgoing(v)) {
      const auto& step = pts.transitions()[f];
      if (step.label == tr.label && lift_check(b, tr.indexed, step.indexed)) return true;
      if (step.label == kTau && detail::supported_in(b, s, step.indexed))
        for (const auto& [w, p] : step.indexed)
          if (!seen[w]) {
            seen[w] = true;
            queue.push_back(w);
          }
    }
  }
  return false;
}

/// Greatest branching bisimulation without schedulers.
inline BisimResult branching_bisim(const Pts& pts) {
  return detail::greatest_fixpoint(
      pts, [](const IndexRelation&) {},
      [&](const IndexRelation& b, std::size_t s, std::size_t e, std::size_t t) { return branching_match(pts, b, s, e, t); });
}

struct OracleBudget {
  std::size_t max_len = 6;
  /// Cap on candidate distributions enumerated per refinement sweep.
  std::size_t max_candidates = 200000;
};

namespace detail {

/// End distributions of deterministic schedulers of at most `k` steps that
/// only pick transitions marked in `allowed`.
class DeterministicReach {
 public:
  DeterministicReach(const Pts& pts, const std::vector<bool>& allowed, std::size_t budget)
      : pts_(pts), allowed_(allowed), budget_(budget) {}

  const std::set<IndexedDistribution>& at(std::size_t u, std::size_t k) {
    auto key = std::pair{u, k};
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    std::set<IndexedDistribution> out{{{u, Rational(1)}}};
    if (k > 0) {
      for (std::size_t e : pts_.outgoing(u)) {
        if (!allowed_[e]) continue;
        // Every support state independently picks one of its own end distributions.
        std::vector<std::map<std::size_t, Rational>> partial{{}};
        for (const auto& [v, p] : pts_.transitions()[e].indexed) {
          const auto& options = at(v, k - 1);
          std::vector<std::map<std::size_t, Rational>> next;
          for (const auto& acc : partial)
            for (const auto& d : options) {
              auto combined = acc;
              for (const auto& [w, q] : d) combined[w] += p * q;
              next.push_back(std::move(combined));
              charge();
            }
          partial = std::move(next);
        }
        for (auto& m : partial) out.insert(IndexedDistribution(m.begin(), m.end()));
      }
    }
    return memo_.emplace(key, std::move(out)).first->second;
  }

 private:
  void charge() {
    if (++spent_ > budget_) throw Error("scheduler oracle: search budget exceeded");
  }

  const Pts& pts_;
  const std::vector<bool>& allowed_;
  std::size_t budget_;
  std::size_t spent_ = 0;
  std::map<std::pair<std::size_t, std::size_t>, std::set<IndexedDistribution>> memo_;
};

}  // namespace detail

/// Scheduler-based branching bisimulation with a maximal branching-preserving
/// set, deterministic schedulers of at most `budget.max_len` τ-steps and a
/// deterministic one-step hyper transition. Cross-check oracle only.
inline BisimResult branching_bisim_scheduler_oracle(const Pts& pts, OracleBudget budget = {}) {
  struct PerSource {
    std::vector<bool> allowed;
    std::unique_ptr<detail::DeterministicReach> reach;
  };
  std::vector<PerSource> per(pts.size());
  auto prepare = [&](const IndexRelation& b) {
    for (std::size_t s = 0; s < pts.size(); ++s) {
      per[s].allowed = detail::allowed_for(pts, b, s);
      per[s].reach = std::make_unique<detail::DeterministicReach>(pts, per[s].allowed, budget.max_candidates);
    }
  };
  return detail::greatest_fixpoint(pts, prepare, [&](const IndexRelation& b, std::size_t s, std::size_t e, std::size_t t) {
    const auto& tr = pts.transitions()[e];
    if (detail::inert_against(pts, b, e, t)) return true;
    std::size_t spent = 0;
    for (const auto& d : per[s].reach->at(t, budget.max_len)) {
      std::vector<std::vector<std::size_t>> options;
      bool all = true;
      for (const auto& [u, p] : d) {
        std::vector<std::size_t> mine;
        for (std::size_t f : pts.outgoing(u))
          if (pts.transitions()[f].label == tr.label) mine.push_back(f);
        if (mine.empty()) {
          all = false;
          break;
        }
        options.push_back(std::move(mine));
      }
      if (!all) continue;
      std::vector<std::size_t> pick(options.size(), 0);
      while (true) {
        if (++spent > budget.max_candidates) throw Error("scheduler oracle: search budget exceeded");
        std::map<std::size_t, Rational> target;
        for (std::size_t k = 0; k < d.size(); ++k)
          for (const auto& [w, q] : pts.transitions()[options[k][pick[k]]].indexed) target[w] += d[k].second * q;
        if (lift_check(b, tr.indexed, IndexedDistribution(target.begin(), target.end()))) return true;
        std::size_t k = 0;
        while (k < pick.size() && ++pick[k] == options[k].size()) pick[k++] = 0;
        if (k == pick.size()) break;
      }
    }
    return false;
  });
}

/// Combined-transition clause: an allowed weak τ-step from t (only
/// branching-preserving transitions) to some π̃, then a one-step combined
/// a-transition from π̃ to some π_t lifted-related to the target of e.
/// Decided as one linear feasibility problem.
inline bool prob_branching_match(const Pts& pts, const IndexRelation& b, const std::vector<bool>& allowed,
                                 std::size_t e, std::size_t t) {
  const auto& tr = pts.transitions()[e];
  if (detail::inert_against(pts, b, e, t)) return true;
  const auto& trs = pts.transitions();

  std::vector<bool> reach(pts.size(), false);
  std::vector<std::size_t> work{t};
  reach[t] = true;
  while (!work.empty()) {
    const std::size_t u = work.back();
    work.pop_back();
    for (std::size_t f : pts.outgoing(u))
      if (allowed[f])
        for (const auto& [v, p] : trs[f].indexed)
          if (!reach[v]) {
            reach[v] = true;
            work.push_back(v);
          }
  }

  LinearSystem lp;
  std::vector<std::map<std::size_t, Rational>> balance(pts.size()), fire(pts.size()), image(pts.size());
  std::vector<bool> in_image(pts.size(), false);
  bool any_step = false;
  for (std::size_t u = 0; u < pts.size(); ++u) {
    if (!reach[u]) continue;
    const std::size_t y = lp.add_variable();
    balance[u][y] -= 1;
    fire[u][y] -= 1;
    for (std::size_t f : pts.outgoing(u)) {
      if (allowed[f]) {
        const std::size_t x = lp.add_variable();
        balance[u][x] -= 1;
        for (const auto& [v, p] : trs[f].indexed) balance[v][x] += p;
      }
      if (trs[f].label == tr.label) {
        any_step = true;
        const std::size_t z = lp.add_variable();
        fire[u][z] += 1;
        for (const auto& [v, p] : trs[f].indexed) {
          image[v][z] -= p;
          in_image[v] = true;
        }
      }
    }
  }
  if (!any_step) return false;
  for (std::size_t u = 0; u < pts.size(); ++u) {
    if (!reach[u]) continue;
    lp.add_equality(balance[u], u == t ? Rational(-1) : Rational(0));
    lp.add_equality(fire[u], 0);
  }
  for (const auto& [i, p] : tr.indexed) {
    std::map<std::size_t, Rational> row;
    for (std::size_t v = 0; v < pts.size(); ++v)
      if (in_image[v] && b(i, v)) {
        const std::size_t w = lp.add_variable();
        row[w] = 1;
        image[v][w] += 1;
      }
    if (row.empty()) return false;
    lp.add_equality(row, p);
  }
  for (std::size_t v = 0; v < pts.size(); ++v)
    if (in_image[v]) lp.add_equality(image[v], 0);
  return lp.feasible();
}

/// Greatest probabilistic branching bisimulation, with the maximal
/// branching-preserving set for each candidate.
inline BisimResult prob_branching_bisim(const Pts& pts) {
  std::vector<std::vector<bool>> allowed(pts.size());
  return detail::greatest_fixpoint(
      pts,
      [&](const IndexRelation& b) {
        for (std::size_t s = 0; s < pts.size(); ++s) allowed[s] = detail::allowed_for(pts, b, s);
      },
      [&](const IndexRelation& b, std::size_t s, std::size_t e, std::size_t t) {
        return prob_branching_match(pts, b, allowed[s], e, t);
      });
}

struct RootedResult {
  bool related = false;
  std::optional<BisimWitness> witness;
};

/// Initial transitions match one-to-one on labels with ≈_b-related targets,
/// in both directions. `bb` is ≈_b on the same PTS; computed when absent.
inline RootedResult rooted_branching_bisim(const Pts& pts, std::size_t s, std::size_t t,
                                           const IndexRelation* bb = nullptr) {
  std::optional<BisimResult> computed;
  if (!bb) {
    computed = branching_bisim(pts);
    bb = &computed->relation;
  }
  auto covers = [&](std::size_t x, std::size_t y) -> std::optional<BisimWitness> {
    for (std::size_t e : pts.outgoing(x)) {
      bool found = false;
      for (std::size_t f : pts.outgoing(y))
        if (pts.transitions()[f].label == pts.transitions()[e].label &&
            lift_check(*bb, pts.transitions()[e].indexed, pts.transitions()[f].indexed)) {
          found = true;
          break;
        }
      if (!found) return BisimWitness{x, e, y};
    }
    return std::nullopt;
  };
  if (auto w = covers(s, t)) return {false, w};
  if (auto w = covers(t, s)) return {false, w};
  return {true, std::nullopt};
}

inline bool rooted_branching_bisim(const Pts& pts, const Term& s, const Term& t) {
  return rooted_branching_bisim(pts, pts.require(s), pts.require(t)).related;
}

}  // namespace ptss
