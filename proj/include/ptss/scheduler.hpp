#pragma once

// Execution fragments, explicit bounded schedulers and the probability
// measure they induce. Used to build schedulers by hand and to cross-check
// the weak-transition decision procedure.

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "ptss/distribution.hpp"
#include "ptss/pts.hpp"

namespace ptss {

/// s0 a1 s1 ... an sn over state indices.
struct ExecutionFragment {
  std::vector<std::size_t> states;
  std::vector<Action> actions;

  static ExecutionFragment start(std::size_t s) { return {{s}, {}}; }

  std::size_t first() const { return states.front(); }
  std::size_t last() const { return states.back(); }
  std::size_t length() const { return actions.size(); }

  /// Visible actions only.
  std::vector<Action> trace() const {
    std::vector<Action> out;
    for (const auto& a : actions)
      if (a != kTau) out.push_back(a);
    return out;
  }

  ExecutionFragment extend(const Action& a, std::size_t s) const {
    ExecutionFragment f = *this;
    f.actions.push_back(a);
    f.states.push_back(s);
    return f;
  }

  /// α is a prefix of this fragment.
  bool extends(const ExecutionFragment& alpha) const {
    if (alpha.states.size() > states.size()) return false;
    for (std::size_t i = 0; i < alpha.states.size(); ++i)
      if (states[i] != alpha.states[i]) return false;
    for (std::size_t i = 0; i < alpha.actions.size(); ++i)
      if (actions[i] != alpha.actions[i]) return false;
    return true;
  }

  auto operator<=>(const ExecutionFragment&) const = default;
  bool operator==(const ExecutionFragment&) const = default;
};

/// Maps fragments to sub-distributions over the transitions leaving their
/// last state. Fragments without an entry stop.
class Scheduler {
 public:
  using Choice = std::vector<std::pair<std::size_t, Rational>>;

  explicit Scheduler(const Pts& pts) : pts_(&pts) {}

  void set(const ExecutionFragment& alpha, Choice choice) {
    Rational total = 0;
    for (const auto& [e, p] : choice) {
      if (e >= pts_->transitions().size() || pts_->transitions()[e].source != alpha.last())
        throw Error("scheduler: transition does not leave the last state of the fragment");
      if (p <= 0) throw Error("scheduler: nonpositive probability");
      total += p;
    }
    if (total > 1) throw Error("scheduler: choice mass exceeds 1");
    choices_[alpha] = std::move(choice);
  }

  const Choice& operator()(const ExecutionFragment& alpha) const {
    static const Choice none;
    auto it = choices_.find(alpha);
    return it == choices_.end() ? none : it->second;
  }

  bool deterministic() const {
    for (const auto& [alpha, c] : choices_)
      if (c.size() > 1 || (c.size() == 1 && c.front().second != 1)) return false;
    return true;
  }

  /// Longest fragment with a nonempty choice, plus one.
  std::size_t length() const {
    std::size_t n = 0;
    for (const auto& [alpha, c] : choices_)
      if (!c.empty()) n = std::max(n, alpha.length() + 1);
    return n;
  }

  const Pts& pts() const { return *pts_; }

 private:
  const Pts* pts_;
  std::map<ExecutionFragment, Choice> choices_;
};

/// Probability of the cone of α under ς from s.
inline Rational cone_probability(const Scheduler& sched, std::size_t s, const ExecutionFragment& alpha) {
  if (alpha.first() != s) return 0;
  Rational p = 1;
  ExecutionFragment prefix = ExecutionFragment::start(s);
  for (std::size_t i = 0; i < alpha.length(); ++i) {
    Rational step = 0;
    for (const auto& [e, q] : sched(prefix)) {
      const auto& tr = sched.pts().transitions()[e];
      if (tr.label != alpha.actions[i]) continue;
      for (const auto& [v, r] : tr.indexed)
        if (v == alpha.states[i + 1]) step += q * r;
    }
    p *= step;
    if (p == 0) return 0;
    prefix = prefix.extend(alpha.actions[i], alpha.states[i + 1]);
  }
  return p;
}

/// Probability that the execution from s stops exactly at α.
inline Rational stop_probability(const Scheduler& sched, std::size_t s, const ExecutionFragment& alpha) {
  Rational chosen = 0;
  for (const auto& [e, q] : sched(alpha)) chosen += q;
  return cone_probability(sched, s, alpha) * (Rational(1) - chosen);
}

struct InducedTransition {
  /// Mass of finite fragments whose trace equals the requested one.
  Rational mass;
  /// Distribution of their last states.
  IndexedDistribution target;
};

/// Sums stop probabilities over all fragments of length <= max_length from s
/// whose trace is `trace` (empty for an internal step).
inline InducedTransition induced_transition(const Scheduler& sched, std::size_t s, const std::vector<Action>& trace,
                                            std::size_t max_length) {
  std::map<std::size_t, Rational> end;
  Rational mass = 0;
  std::vector<std::pair<ExecutionFragment, Rational>> frontier{{ExecutionFragment::start(s), Rational(1)}};
  for (std::size_t len = 0; len <= max_length && !frontier.empty(); ++len) {
    std::vector<std::pair<ExecutionFragment, Rational>> next;
    for (const auto& [alpha, p] : frontier) {
      Rational chosen = 0;
      for (const auto& [e, q] : sched(alpha)) {
        chosen += q;
        const auto& tr = sched.pts().transitions()[e];
        for (const auto& [v, r] : tr.indexed) next.emplace_back(alpha.extend(tr.label, v), p * q * r);
      }
      const Rational stop = p * (Rational(1) - chosen);
      if (stop != 0 && alpha.trace() == trace) {
        end[alpha.last()] += stop;
        mass += stop;
      }
    }
    frontier = std::move(next);
  }
  return {mass, IndexedDistribution(end.begin(), end.end())};
}

}  // namespace ptss
