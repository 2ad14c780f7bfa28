#pragma once

// Finite probabilistic transition systems with states drawn from closed state
// terms. States and transitions are kept in a canonical order (lexicographic
// on rendered terms) so every traversal is deterministic.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "ptss/distribution.hpp"
#include "ptss/term.hpp"

namespace ptss {

/// Distribution over PTS state indices, sorted by index.
using IndexedDistribution = std::vector<std::pair<std::size_t, Rational>>;

struct PtsTransition {
  std::size_t source;
  Action label;
  Distribution target;
  IndexedDistribution indexed;
};

class Pts {
 public:
  struct Edge {
    Term source;
    Action label;
    Distribution target;
  };

  Pts() = default;

  /// Throws Error if a transition mentions a state outside `states`.
  Pts(std::vector<Term> states, std::vector<Edge> edges) {
    std::sort(states.begin(), states.end());
    states.erase(std::unique(states.begin(), states.end()), states.end());
    states_ = std::move(states);
    for (std::size_t i = 0; i < states_.size(); ++i) index_.emplace(states_[i], i);

    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
      return std::tie(a.source, a.label, a.target) < std::tie(b.source, b.label, b.target);
    });
    outgoing_.assign(states_.size(), {});
    for (auto& e : edges) {
      if (!transitions_.empty()) {
        const auto& last = transitions_.back();
        if (states_[last.source] == e.source && last.label == e.label && last.target == e.target) continue;
      }
      auto src = index_of(e.source);
      if (!src) throw Error("PTS transition from unknown state " + e.source.text());
      IndexedDistribution indexed;
      for (const auto& [t, p] : e.target.support()) {
        auto i = index_of(t);
        if (!i) throw Error("PTS transition target mentions unknown state " + t.text());
        indexed.emplace_back(*i, p);
      }
      std::sort(indexed.begin(), indexed.end());
      outgoing_[*src].push_back(transitions_.size());
      actions_.insert(e.label);
      transitions_.push_back({*src, e.label, std::move(e.target), std::move(indexed)});
    }
  }

  std::size_t size() const { return states_.size(); }
  const std::vector<Term>& states() const { return states_; }
  const std::vector<PtsTransition>& transitions() const { return transitions_; }
  const std::vector<std::size_t>& outgoing(std::size_t state) const { return outgoing_[state]; }
  const std::set<Action>& actions() const { return actions_; }

  std::optional<std::size_t> index_of(const Term& t) const {
    auto it = index_.find(t);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t require(const Term& t) const {
    auto i = index_of(t);
    if (!i) throw Error("not a state of the PTS: " + t.text());
    return *i;
  }

  IndexedDistribution indexed(const Distribution& d) const {
    IndexedDistribution out;
    for (const auto& [t, p] : d.support()) out.emplace_back(require(t), p);
    std::sort(out.begin(), out.end());
    return out;
  }

  Distribution to_distribution(const IndexedDistribution& d) const {
    Distribution out;
    for (const auto& [i, p] : d) out.add(states_[i], p);
    return out;
  }

  /// Line-oriented export: `state` lines then `trans` lines.
  std::string render() const {
    std::string out;
    for (const auto& s : states_) out += "state " + s.text() + "\n";
    for (const auto& t : transitions_) {
      out += "trans " + states_[t.source].text() + " --" + t.label + "-> { ";
      bool first = true;
      for (const auto& [u, p] : t.target.support()) {
        if (!first) out += ", ";
        first = false;
        out += u.text() + ": " + to_string(p);
      }
      out += " }\n";
    }
    return out;
  }

  bool operator==(const Pts& other) const { return render() == other.render(); }

 private:
  std::vector<Term> states_;
  std::map<Term, std::size_t> index_;
  std::vector<PtsTransition> transitions_;
  std::vector<std::vector<std::size_t>> outgoing_;
  std::set<Action> actions_;
};

}  // namespace ptss
