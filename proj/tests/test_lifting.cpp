#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "ptss/ptss.hpp"
#include "test_util.hpp"

using namespace ptss;

namespace {

IndexedDistribution indexed(const oracle::SmallDist& d) {
  std::map<std::size_t, Rational> m;
  for (auto [s, k] : d.mass) m[static_cast<std::size_t>(s)] += Rational(k, d.unit);
  return {m.begin(), m.end()};
}

IndexRelation random_relation(std::mt19937& rng, std::size_t n, int density) {
  std::uniform_int_distribution<int> pct(0, 99);
  IndexRelation r(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (pct(rng) < density) r.set(i, j, true);
  return r;
}

}  // namespace

TEST(Lifting, Examples) {
  const Term s = pstate("s"), t = pstate("t"), u = pstate("u");
  StateRelation id;
  for (const auto& x : {s, t, u}) id.insert(x, x);
  Distribution d;
  d.add(s, Rational(1, 3));
  d.add(u, Rational(2, 3));
  EXPECT_TRUE(lift_check(id, d, d));

  StateRelation st;
  st.insert(s, t);
  EXPECT_TRUE(lift_check(st, Distribution::point(s), Distribution::point(t)));
  Distribution su;
  su.add(s, Rational(1, 2));
  su.add(u, Rational(1, 2));
  EXPECT_FALSE(lift_check(st, su, Distribution::point(t)));
}

TEST(Lifting, WeightsAreAWitness) {
  const std::vector<std::pair<int, Rational>> d1{{0, Rational(1, 2)}, {1, Rational(1, 2)}};
  const std::vector<std::pair<int, Rational>> d2{{2, Rational(1, 3)}, {3, Rational(2, 3)}};
  const auto w = lift_weights(d1, d2, [](int a, int b) { return !(a == 1 && b == 2); });
  ASSERT_TRUE(w);
  std::map<int, Rational> row, col;
  for (const auto& [pair, q] : *w) {
    EXPECT_FALSE(pair.first == 1 && pair.second == 2);
    row[pair.first] += q;
    col[pair.second] += q;
  }
  EXPECT_EQ(row[0], Rational(1, 2));
  EXPECT_EQ(row[1], Rational(1, 2));
  EXPECT_EQ(col[2], Rational(1, 3));
  EXPECT_EQ(col[3], Rational(2, 3));
}

TEST(Lifting, RejectsSubdistributions) {
  const std::vector<std::pair<int, Rational>> d1{{0, Rational(1, 2)}};
  EXPECT_THROW(lift_check(d1, d1, [](int, int) { return true; }), Error);
}

TEST(Lifting, MatchesBruteForceEnumeration) {
  std::mt19937 rng(1);
  for (int k = 0; k < 200; ++k) {
    const auto d1 = oracle::random_small_dist(rng, 4), d2 = oracle::random_small_dist(rng, 4);
    const IndexRelation r = random_relation(rng, 4, 45);
    const bool expected = oracle::brute_lift(d1, d2, [&](int a, int b) { return r(a, b); });
    EXPECT_EQ(lift_check(r, indexed(d1), indexed(d2)), expected) << k;
  }
}

// Reflexivity, symmetry and transitivity of R carry over to its lifting.
TEST(Lifting, PreservesRelationProperties) {
  std::mt19937 rng(2);
  const std::size_t n = 4;
  for (int k = 0; k < 200; ++k) {
    IndexRelation r = random_relation(rng, n, 35);
    switch (k % 3) {
      case 0:
        for (std::size_t i = 0; i < n; ++i) r.set(i, i, true);
        break;
      case 1:
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j)
            if (r(i, j)) r.set(j, i, true);
        break;
      default:
        for (std::size_t m = 0; m < n; ++m)
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
              if (r(i, m) && r(m, j)) r.set(i, j, true);
    }
    std::vector<IndexedDistribution> ds;
    for (int q = 0; q < 5; ++q) ds.push_back(indexed(oracle::random_small_dist(rng, n)));
    for (const auto& a : ds) {
      if (r.is_reflexive()) EXPECT_TRUE(lift_check(r, a, a));
      for (const auto& b : ds) {
        if (r.is_symmetric() && lift_check(r, a, b)) EXPECT_TRUE(lift_check(r, b, a));
        if (r.is_transitive())
          for (const auto& c : ds)
            if (lift_check(r, a, b) && lift_check(r, b, c)) EXPECT_TRUE(lift_check(r, a, c));
      }
    }
  }
}

TEST(Simplex, SmallSystems) {
  LinearSystem lp;
  const auto x = lp.add_variable(), y = lp.add_variable();
  lp.add_equality({{x, 1}, {y, 1}}, 1);
  lp.add_equality({{x, 1}, {y, -1}}, Rational(1, 3));
  const auto sol = lp.solve();
  ASSERT_TRUE(sol);
  EXPECT_EQ((*sol)[x], Rational(2, 3));
  EXPECT_EQ((*sol)[y], Rational(1, 3));
  EXPECT_TRUE(lp.satisfies(*sol));

  LinearSystem bad;
  const auto z = bad.add_variable();
  bad.add_equality({{z, 1}}, -1);
  EXPECT_FALSE(bad.feasible());
}

class WeakStepsExample : public ::testing::Test {
 protected:
  Pts pts = corpus_pts("weak_steps.pts");
  std::size_t s(int i) const { return pts.require(pstate("s" + std::to_string(i))); }
  IndexedDistribution dist(std::vector<std::pair<int, Rational>> parts) const {
    Distribution d;
    for (auto [i, p] : parts) d.add(pstate("s" + std::to_string(i)), p);
    return pts.indexed(d);
  }
};

TEST_F(WeakStepsExample, WeakTransitions) {
  EXPECT_TRUE(weak_combined_reachable(pts, s(0), std::nullopt, dist({{0, 1}})));
  EXPECT_TRUE(weak_combined_reachable(pts, s(0), kTau, dist({{0, 1}})));
  EXPECT_TRUE(weak_combined_reachable(
      pts, s(0), std::nullopt, dist({{0, Rational(1, 5)}, {2, Rational(1, 5)}, {3, Rational(1, 5)}, {6, Rational(2, 5)}})));
  EXPECT_TRUE(weak_combined_reachable(pts, s(0), "a", dist({{5, Rational(1, 2)}, {7, Rational(1, 2)}})));
  EXPECT_TRUE(weak_combined_reachable(
      pts, s(0), "a",
      dist({{5, Rational(1, 2)}, {7, Rational(1, 5)}, {8, Rational(3, 20)}, {9, Rational(3, 20)}})));
  EXPECT_FALSE(weak_combined_reachable(pts, s(0), "a", dist({{5, 1}})));
  EXPECT_FALSE(weak_combined_reachable(pts, s(0), std::nullopt, dist({{4, 1}})));
}

// No weak b-transition from s0, whatever the target: every distribution with
// weights in quarters over every subset of states.
TEST_F(WeakStepsExample, NoWeakBTransition) {
  const std::size_t n = pts.size();
  std::vector<int> units(n, 0);
  std::function<void(std::size_t, int)> go = [&](std::size_t i, int left) {
    if (i == n) {
      if (left != 0) return;
      IndexedDistribution d;
      for (std::size_t k = 0; k < n; ++k)
        if (units[k]) d.emplace_back(k, Rational(units[k], 4));
      EXPECT_FALSE(weak_combined_reachable(pts, s(0), "b", d));
      return;
    }
    for (int u = 0; u <= left; ++u) {
      units[i] = u;
      go(i + 1, left - u);
    }
    units[i] = 0;
  };
  go(0, 4);
}

// The schedulers of the worked example, built by hand; their induced
// transitions must agree with the decision procedure.
TEST_F(WeakStepsExample, SchedulersInduceTheExampleTransitions) {
  auto edge = [&](int from, const std::string& label) {
    for (std::size_t e : pts.outgoing(s(from)))
      if (pts.transitions()[e].label == label) return e;
    throw Error("no edge");
  };
  const auto root = ExecutionFragment::start(s(0));

  // (ii) stop at s0 with 1/5, otherwise resolve s1 fully.
  Scheduler eps(pts);
  eps.set(root, {{edge(0, "tau"), Rational(4, 5)}});
  eps.set(root.extend("tau", s(1)), {{edge(1, "tau"), 1}});
  const auto ii = induced_transition(eps, s(0), {}, 6);
  EXPECT_EQ(ii.mass, 1);
  EXPECT_EQ(ii.target, dist({{0, Rational(1, 5)}, {2, Rational(1, 5)}, {3, Rational(1, 5)}, {6, Rational(2, 5)}}));
  EXPECT_FALSE(eps.deterministic());

  // (iii) and (iv).
  Scheduler a(pts);
  a.set(root, {{edge(0, "tau"), 1}});
  const auto via1 = root.extend("tau", s(1));
  a.set(via1, {{edge(1, "tau"), 1}});
  a.set(via1.extend("tau", s(2)), {{edge(2, "a"), 1}});
  a.set(via1.extend("tau", s(3)), {{edge(3, "a"), 1}});
  a.set(root.extend("tau", s(6)), {{edge(6, "a"), 1}});
  EXPECT_TRUE(a.deterministic());
  const auto iii = induced_transition(a, s(0), {"a"}, 6);
  EXPECT_EQ(iii.mass, 1);
  EXPECT_EQ(iii.target, dist({{5, Rational(1, 2)}, {7, Rational(1, 2)}}));
  EXPECT_TRUE(weak_combined_reachable(pts, s(0), "a", iii.target));

  Scheduler a2 = a;
  a2.set(root.extend("tau", s(6)).extend("a", s(7)), {{edge(7, "tau"), Rational(3, 5)}});
  const auto iv = induced_transition(a2, s(0), {"a"}, 6);
  EXPECT_EQ(iv.target, dist({{5, Rational(1, 2)}, {7, Rational(1, 5)}, {8, Rational(3, 20)}, {9, Rational(3, 20)}}));

  // Cone of s0 tau s1 tau s2 a s5.
  const auto alpha = via1.extend("tau", s(2)).extend("a", s(5));
  EXPECT_EQ(cone_probability(a, s(0), alpha), Rational(1, 4));
  EXPECT_EQ(stop_probability(a, s(0), alpha), Rational(1, 4));
  EXPECT_EQ(stop_probability(a, s(0), root), 0);
  EXPECT_TRUE(alpha.extends(via1));
  EXPECT_EQ(alpha.trace(), std::vector<Action>{"a"});
}

// Random deterministic schedulers on random PTSs: every induced full weak
// transition is accepted by the decision procedure.
TEST(WeakTransitions, InducedBySchedulersAreAccepted) {
  std::mt19937 rng(5);
  for (int k = 0; k < 60; ++k) {
    const Pts pts = oracle::random_pts(rng, 5, 2);
    Scheduler sched(pts);
    std::uniform_int_distribution<int> coin(0, 2);
    // Take a visible action once, tau steps before and after, up to depth 3.
    std::function<void(const ExecutionFragment&)> assign = [&](const ExecutionFragment& f) {
      if (f.length() >= 3) return;
      const auto& out = pts.outgoing(f.last());
      if (out.empty() || coin(rng) == 0) return;
      const std::size_t e = out[std::uniform_int_distribution<std::size_t>(0, out.size() - 1)(rng)];
      const auto& t = pts.transitions()[e];
      if (t.label != kTau && !f.trace().empty()) return;
      sched.set(f, {{e, 1}});
      for (const auto& [v, p] : t.indexed) assign(f.extend(t.label, v));
    };
    const auto root = ExecutionFragment::start(0);
    assign(root);
    for (const std::vector<Action>& trace : {std::vector<Action>{}, std::vector<Action>{"a"}}) {
      const auto ind = induced_transition(sched, 0, trace, 4);
      if (ind.mass != 1) continue;
      const std::optional<Action> act = trace.empty() ? std::nullopt : std::optional<Action>("a");
      EXPECT_TRUE(weak_combined_reachable(pts, 0, act, ind.target)) << pts.render();
    }
  }
}
