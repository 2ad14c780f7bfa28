#pragma once

// Weak combined transitions s =a=>_c pi, decided as feasibility of an
// occupation-measure system. Phase 0 runs before the visible action, phase 1
// after it; x[e,k] is the expected number of times transition e is scheduled
// in phase k, and the scheduler may stop only in the last phase, leaving
// exactly pi. For a = tau (or no action) there is a single phase.
//
// A feasible point gives a memoryless randomized scheduler (choose e with
// probability x[e,k] / inflow); conservation forces every state with inflow
// to reach a stop, so the scheduler terminates with probability 1.

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "ptss/distribution.hpp"
#include "ptss/pts.hpp"
#include "ptss/simplex.hpp"

namespace ptss {

namespace detail {

inline std::vector<bool> closure(const Pts& pts, std::vector<std::size_t> start,
                                 const std::function<bool(std::size_t)>& usable) {
  std::vector<bool> seen(pts.size(), false);
  for (auto s : start) seen[s] = true;
  while (!start.empty()) {
    const std::size_t u = start.back();
    start.pop_back();
    for (std::size_t e : pts.outgoing(u)) {
      if (!usable(e)) continue;
      for (const auto& [v, p] : pts.transitions()[e].indexed)
        if (!seen[v]) {
          seen[v] = true;
          start.push_back(v);
        }
    }
  }
  return seen;
}

}  // namespace detail

/// `action` empty or tau means the internal (epsilon) step. `allowed`, when
/// given, is indexed by transition and restricts what the scheduler may pick.
inline bool weak_combined_reachable(const Pts& pts, std::size_t s, const std::optional<Action>& action,
                                    const IndexedDistribution& target, const std::vector<bool>* allowed = nullptr) {
  if (s >= pts.size()) throw Error("weak transition: no such state");
  Rational mass = 0;
  for (const auto& [u, p] : target) mass += p;
  if (mass != 1) throw Error("weak transition: target must be a full distribution");

  const bool visible = action && *action != kTau;
  const auto& trs = pts.transitions();
  auto ok = [&](std::size_t e) { return !allowed || (*allowed)[e]; };
  auto tau = [&](std::size_t e) { return ok(e) && trs[e].label == kTau; };
  auto vis = [&](std::size_t e) { return ok(e) && visible && trs[e].label == *action; };

  const std::vector<bool> r0 = detail::closure(pts, {s}, tau);
  std::vector<bool> r1(pts.size(), false);
  if (visible) {
    std::vector<std::size_t> after;
    for (std::size_t u = 0; u < pts.size(); ++u)
      if (r0[u])
        for (std::size_t e : pts.outgoing(u))
          if (vis(e))
            for (const auto& [v, p] : trs[e].indexed) after.push_back(v);
    r1 = detail::closure(pts, after, tau);
  }
  const std::vector<bool>& last = visible ? r1 : r0;
  for (const auto& [u, p] : target)
    if (u >= pts.size() || !last[u]) return false;

  std::map<std::size_t, Rational> want(target.begin(), target.end());
  LinearSystem lp;
  // balance[k][u]: inflow minus outflow of u in phase k.
  const std::size_t phases = visible ? 2 : 1;
  std::vector<std::vector<std::map<std::size_t, Rational>>> balance(phases,
                                                                    std::vector<std::map<std::size_t, Rational>>(pts.size()));
  for (std::size_t k = 0; k < phases; ++k) {
    const auto& reach = k == 0 ? r0 : r1;
    for (std::size_t u = 0; u < pts.size(); ++u) {
      if (!reach[u]) continue;
      for (std::size_t e : pts.outgoing(u)) {
        const bool step_tau = tau(e);
        const bool step_vis = k == 0 && vis(e);
        if (!step_tau && !step_vis) continue;
        const std::size_t x = lp.add_variable();
        balance[k][u][x] -= 1;
        const std::size_t into = step_vis ? 1 : k;
        for (const auto& [v, p] : trs[e].indexed) balance[into][v][x] += p;
      }
    }
  }
  for (std::size_t k = 0; k < phases; ++k) {
    const auto& reach = k == 0 ? r0 : r1;
    for (std::size_t u = 0; u < pts.size(); ++u) {
      if (!reach[u]) continue;
      Rational rhs = 0;
      if (k == 0 && u == s) rhs -= 1;
      if (k + 1 == phases) {
        auto it = want.find(u);
        if (it != want.end()) rhs += it->second;
      }
      lp.add_equality(balance[k][u], rhs);
    }
  }
  return lp.feasible();
}

inline bool weak_combined_reachable(const Pts& pts, const Term& s, const std::optional<Action>& action,
                                    const Distribution& target,
                                    const std::optional<std::vector<bool>>& allowed = std::nullopt) {
  const std::size_t i = pts.require(s);
  for (const auto& [t, p] : target.support())
    if (!pts.index_of(t)) return false;
  return weak_combined_reachable(pts, i, action, pts.indexed(target), allowed ? &*allowed : nullptr);
}

}  // namespace ptss
