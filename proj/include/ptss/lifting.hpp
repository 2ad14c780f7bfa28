#pragma once

// Lifting of a relation on states to full distributions: a weight function
// with the two distributions as marginals whose support lies inside the
// relation. Decided as an exact max-flow problem
//   source -> left support (capacity d1) -> right support (if related)
//          -> sink (capacity d2),
// feasible iff the maximum flow saturates all mass.

#include <algorithm>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <tuple>
#include <utility>
#include <vector>

#include "ptss/distribution.hpp"
#include "ptss/pts.hpp"
#include "ptss/rational.hpp"
#include "ptss/relation.hpp"

namespace ptss {

/// Edmonds-Karp over exact rationals. An empty capacity means unbounded.
class MaxFlow {
 public:
  explicit MaxFlow(std::size_t nodes) : adj_(nodes) {}

  std::size_t add_edge(std::size_t from, std::size_t to, std::optional<Rational> capacity) {
    const std::size_t id = edges_.size();
    edges_.push_back({to, std::move(capacity), 0});
    adj_[from].push_back(id);
    edges_.push_back({from, Rational(0), 0});
    adj_[to].push_back(id + 1);
    return id;
  }

  Rational run(std::size_t s, std::size_t t) {
    Rational total = 0;
    while (true) {
      std::vector<std::optional<std::size_t>> via(adj_.size());
      std::vector<bool> seen(adj_.size(), false);
      std::deque<std::size_t> queue{s};
      seen[s] = true;
      while (!queue.empty() && !seen[t]) {
        const std::size_t u = queue.front();
        queue.pop_front();
        for (std::size_t id : adj_[u]) {
          const Edge& e = edges_[id];
          if (seen[e.to] || !residual_positive(id)) continue;
          seen[e.to] = true;
          via[e.to] = id;
          queue.push_back(e.to);
        }
      }
      if (!seen[t]) return total;
      std::optional<Rational> push;
      for (std::size_t v = t; v != s; v = edges_[*via[v] ^ 1].to) {
        auto r = residual(*via[v]);
        if (r && (!push || *r < *push)) push = r;
      }
      if (!push) throw Error("max flow: unbounded augmenting path");
      for (std::size_t v = t; v != s; v = edges_[*via[v] ^ 1].to) {
        edges_[*via[v]].flow += *push;
        edges_[*via[v] ^ 1].flow -= *push;
      }
      total += *push;
    }
  }

  const Rational& flow(std::size_t edge) const { return edges_[edge].flow; }

 private:
  struct Edge {
    std::size_t to;
    std::optional<Rational> capacity;
    Rational flow;
  };

  std::optional<Rational> residual(std::size_t id) const {
    const Edge& e = edges_[id];
    if (!e.capacity) return std::nullopt;
    return *e.capacity - e.flow;
  }
  bool residual_positive(std::size_t id) const {
    auto r = residual(id);
    return !r || *r > 0;
  }

  std::vector<std::vector<std::size_t>> adj_;
  std::vector<Edge> edges_;
};

template <class State>
using WeightFunction = std::map<std::pair<State, State>, Rational>;

/// Weight function witnessing d1 R d2, if any. `related(a, b)` is the
/// relation. Both inputs must have total mass 1.
template <class State, class Related>
std::optional<WeightFunction<State>> lift_weights(const std::vector<std::pair<State, Rational>>& d1,
                                                  const std::vector<std::pair<State, Rational>>& d2,
                                                  Related&& related) {
  Rational m1 = 0, m2 = 0;
  for (const auto& [s, p] : d1) m1 += p;
  for (const auto& [s, p] : d2) m2 += p;
  if (m1 != 1 || m2 != 1) throw Error("lifting is only defined on full distributions (masses " + to_string(m1) + ", " + to_string(m2) + ")");

  const std::size_t source = 0, sink = 1 + d1.size() + d2.size();
  MaxFlow flow(sink + 1);
  for (std::size_t i = 0; i < d1.size(); ++i) flow.add_edge(source, 1 + i, d1[i].second);
  for (std::size_t j = 0; j < d2.size(); ++j) flow.add_edge(1 + d1.size() + j, sink, d2[j].second);
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> middle;
  for (std::size_t i = 0; i < d1.size(); ++i)
    for (std::size_t j = 0; j < d2.size(); ++j)
      if (related(d1[i].first, d2[j].first))
        middle.emplace_back(i, j, flow.add_edge(1 + i, 1 + d1.size() + j, std::nullopt));
  if (flow.run(source, sink) != 1) return std::nullopt;
  WeightFunction<State> w;
  for (const auto& [i, j, e] : middle)
    if (flow.flow(e) > 0) w[{d1[i].first, d2[j].first}] += flow.flow(e);
  return w;
}

template <class State, class Related>
bool lift_check(const std::vector<std::pair<State, Rational>>& d1, const std::vector<std::pair<State, Rational>>& d2,
                Related&& related) {
  return lift_weights(d1, d2, std::forward<Related>(related)).has_value();
}

inline bool lift_check(const IndexRelation& r, const IndexedDistribution& d1, const IndexedDistribution& d2) {
  return lift_check(d1, d2, [&](std::size_t a, std::size_t b) { return r(a, b); });
}

inline bool lift_check(const StateRelation& r, const Distribution& d1, const Distribution& d2) {
  const std::vector<std::pair<Term, Rational>> v1(d1.support().begin(), d1.support().end());
  const std::vector<std::pair<Term, Rational>> v2(d2.support().begin(), d2.support().end());
  return lift_check(v1, v2, [&](const Term& a, const Term& b) { return r.contains(a, b); });
}

}  // namespace ptss
