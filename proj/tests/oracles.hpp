#pragma once

// Independent reference implementations and generators used by the tests.
// Nothing here calls into the code it checks, except for parsing inputs.

#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ptss/ptss.hpp"

namespace oracle {

using ptss::Rational;

// ---------------------------------------------------------------------------
// Lifting by enumeration

/// Distribution over small integers whose weights are multiples of 1/unit.
struct SmallDist {
  int unit = 1;
  std::vector<std::pair<int, int>> mass;  // (state, numerator)

  std::vector<std::pair<int, Rational>> rational() const {
    std::vector<std::pair<int, Rational>> out;
    for (auto [s, k] : mass) out.emplace_back(s, Rational(k, unit));
    return out;
  }
};

/// Enumerates every weight function in units of 1/(lcm of the two units).
/// Complete for this input class: transportation polytopes with integral
/// margins have integral vertices.
inline bool brute_lift(const SmallDist& d1, const SmallDist& d2, const std::function<bool(int, int)>& related) {
  const int l = std::lcm(d1.unit, d2.unit);
  std::vector<int> row, col;
  for (auto [s, k] : d1.mass) row.push_back(k * (l / d1.unit));
  for (auto [s, k] : d2.mass) col.push_back(k * (l / d2.unit));
  const std::size_t n = row.size(), m = col.size();
  std::function<bool(std::size_t)> cell = [&](std::size_t c) -> bool {
    if (c == n * m) {
      for (int r : row)
        if (r) return false;
      for (int k : col)
        if (k) return false;
      return true;
    }
    const std::size_t i = c / m, j = c % m;
    const int cap = related(d1.mass[i].first, d2.mass[j].first) ? std::min(row[i], col[j]) : 0;
    for (int w = cap; w >= 0; --w) {
      row[i] -= w;
      col[j] -= w;
      // A finished row must be exhausted.
      const bool ok = j + 1 < m || row[i] == 0;
      if (ok && cell(c + 1)) return true;
      row[i] += w;
      col[j] += w;
    }
    return false;
  };
  return cell(0);
}

inline SmallDist random_small_dist(std::mt19937& rng, int states) {
  std::uniform_int_distribution<int> unit_d(1, 6), size_d(1, 3), state_d(0, states - 1);
  SmallDist d;
  d.unit = unit_d(rng);
  const int k = std::min(size_d(rng), d.unit);
  std::vector<int> picked;
  while (static_cast<int>(picked.size()) < k) {
    int s = state_d(rng);
    if (std::find(picked.begin(), picked.end(), s) == picked.end()) picked.push_back(s);
  }
  // Random composition of unit into k positive parts.
  std::vector<int> cuts;
  for (int c = 1; c < d.unit; ++c) cuts.push_back(c);
  std::shuffle(cuts.begin(), cuts.end(), rng);
  cuts.resize(k - 1);
  std::sort(cuts.begin(), cuts.end());
  int prev = 0;
  for (int i = 0; i < k; ++i) {
    const int next = i + 1 < k ? cuts[i] : d.unit;
    d.mass.emplace_back(picked[i], next - prev);
    prev = next;
  }
  return d;
}

// ---------------------------------------------------------------------------
// Stable model by proof enumeration

struct GroundRule {
  std::vector<ptss::SymbolicTransition> positive;
  std::vector<std::pair<ptss::Term, ptss::Action>> negative;
  ptss::SymbolicTransition conclusion;
  bool operator<(const GroundRule& o) const {
    return std::tie(positive, negative, conclusion) < std::tie(o.positive, o.negative, o.conclusion);
  }
};

struct ProofModel {
  std::set<ptss::SymbolicTransition> ct, pt;
  std::size_t iterations = 0;
};

/// Enumerates ground rule instances over every candidate premise tuple from
/// the positive closure, then alternates Horn closures. Quadratic in
/// everything; only for tiny inputs.
inline ProofModel proof_model(const ptss::Ptss& p, const std::vector<ptss::Term>& roots, std::size_t max_rounds = 64) {
  using ptss::SymbolicTransition;
  using ptss::Term;
  std::set<Term> domain;
  std::function<void(const Term&)> add = [&](const Term& t) {
    if (t.kind() == Term::Kind::apply && !t.lifted()) domain.insert(t);
    for (const auto& a : t.args()) add(a);
  };
  for (const auto& r : roots) add(r);

  std::set<SymbolicTransition> universe;
  std::set<GroundRule> ground;
  // Extends a substitution premise by premise through every transition of
  // the current universe.
  std::function<void(const ptss::Rule&, std::size_t, ptss::Substitution, std::vector<SymbolicTransition>&)> extend =
      [&](const ptss::Rule& rule, std::size_t k, ptss::Substitution rho, std::vector<SymbolicTransition>& used) {
        if (k == rule.positive.size()) {
          GroundRule g;
          g.positive = used;
          for (const auto& n : rule.negative) g.negative.emplace_back(ptss::substitute(rho, n.source), n.label);
          g.conclusion = {ptss::substitute(rho, rule.conclusion.source), rule.conclusion.label,
                          ptss::substitute(rho, rule.conclusion.target)};
          if (!g.conclusion.target.closed()) return;
          ground.insert(std::move(g));
          return;
        }
        const auto& prem = rule.positive[k];
        for (const auto& tr : universe) {
          if (tr.label != prem.label) continue;
          ptss::Substitution r2 = rho;
          if (!ptss::match_into(prem.source, tr.source, r2) || !ptss::match_into(prem.target, tr.target, r2)) continue;
          used.push_back(tr);
          extend(rule, k + 1, r2, used);
          used.pop_back();
        }
      };

  for (std::size_t round = 0; round < max_rounds; ++round) {
    const std::size_t before = universe.size() + domain.size();
    for (const auto& rule : p.rules)
      for (const auto& d : std::set<Term>(domain)) {
        ptss::Substitution rho;
        if (!ptss::match_into(rule.conclusion.source, d, rho)) continue;
        std::vector<SymbolicTransition> used;
        extend(rule, 0, rho, used);
      }
    for (const auto& g : ground) {
      universe.insert(g.conclusion);
      const ptss::Distribution d = ptss::eval(g.conclusion.target, p.signature);
      for (const auto& [t, q] : d.support()) add(t);
      for (const auto& [s, a] : g.negative) add(s);
    }
    if (universe.size() + domain.size() == before) break;
  }

  auto horn = [&](const std::set<SymbolicTransition>* against) {
    std::set<SymbolicTransition> out;
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& g : ground) {
        if (out.count(g.conclusion)) continue;
        bool ok = true;
        for (const auto& q : g.positive) ok = ok && out.count(q);
        for (const auto& [s, a] : g.negative) {
          if (!against) {
            ok = false;  // the full relation refutes every negative literal
            break;
          }
          for (const auto& t : *against) ok = ok && !(t.source == s && t.label == a);
        }
        if (ok) {
          out.insert(g.conclusion);
          changed = true;
        }
      }
    }
    return out;
  };

  ProofModel m;
  std::set<SymbolicTransition> ct;
  std::optional<std::set<SymbolicTransition>> pt;
  for (std::size_t alpha = 0; alpha < max_rounds; ++alpha) {
    auto next_ct = horn(pt ? &*pt : nullptr);
    auto next_pt = horn(&ct);
    if (pt && next_ct == ct && next_pt == *pt) {
      m.iterations = alpha;
      break;
    }
    ct = std::move(next_ct);
    pt = std::move(next_pt);
  }
  m.ct = ct;
  m.pt = *pt;
  return m;
}

// ---------------------------------------------------------------------------
// Generators

/// Random PTS over `n` states `q0..` with labels a, b, tau and small
/// denominators.
inline ptss::Pts random_pts(std::mt19937& rng, int n, int max_out = 2) {
  std::vector<ptss::Term> states;
  for (int i = 0; i < n; ++i) states.push_back(ptss::Term::apply("q" + std::to_string(i)));
  std::uniform_int_distribution<int> out_d(0, max_out), state_d(0, n - 1), label_d(0, 2), split_d(1, 3);
  const char* labels[] = {"a", "b", "tau"};
  std::vector<ptss::Pts::Edge> edges;
  for (int s = 0; s < n; ++s) {
    const int k = out_d(rng);
    for (int e = 0; e < k; ++e) {
      ptss::Distribution d;
      const int parts = split_d(rng);
      for (int j = 0; j < parts; ++j) d.add(states[state_d(rng)], Rational(1, parts));
      edges.push_back({states[s], labels[label_d(rng)], d});
    }
  }
  return ptss::Pts(states, edges);
}

inline const char* kBaseSignature =
    "actions a, b, tau\n"
    "op 0 : -> s\n"
    "op pre<A> : d -> s\n"
    "op + : s s -> s\n";

inline const char* kBaseRules =
    "prefix: @a.mu --@a-> mu\n"
    "sum_left: x --@a-> mu |- +(x, y) --@a-> mu\n"
    "sum_right: y --@a-> mu |- +(x, y) --@a-> mu\n";

struct GeneratedSpec {
  std::string text;
  std::vector<std::string> ops;  // generated operator names, lowest stratum first
  std::vector<int> ranks;
};

/// Negative-free specification over the running-example operators plus up to
/// three stratified operators f1, f2, f3: a rule for fk only builds fj with
/// j < k in its target, so reachable terms have bounded depth. `patience`
/// adds a patience rule for every argument position.
inline GeneratedSpec random_spec(std::mt19937& rng, bool patience) {
  std::uniform_int_distribution<int> nops_d(1, 3), rank_d(1, 2), nrules_d(1, 2), coin(0, 1), label_d(0, 2), pick4(0, 3);
  const char* labels[] = {"a", "b", "tau"};
  GeneratedSpec g;
  const int nops = nops_d(rng);
  std::string ops, rules;
  for (int k = 1; k <= nops; ++k) {
    const std::string f = "f" + std::to_string(k);
    const int rank = rank_d(rng);
    g.ops.push_back(f);
    g.ranks.push_back(rank);
    ops += "op " + f + " :";
    for (int i = 0; i < rank; ++i) ops += " s";
    ops += " -> s\n";
    auto vars = [&](int i) { return "x" + std::to_string(i + 1); };
    std::string source = f + "(";
    for (int i = 0; i < rank; ++i) source += (i ? ", " : "") + vars(i);
    source += ")";
    const int nrules = nrules_d(rng);
    for (int r = 0; r < nrules; ++r) {
      std::vector<std::string> premises, simple;
      for (int i = 0; i < rank; ++i) {
        simple.push_back("delta(" + vars(i) + ")");
        if (coin(rng)) {
          const std::string mu = "mu" + std::to_string(i + 1);
          premises.push_back(vars(i) + " --" + labels[label_d(rng)] + "-> " + mu);
          simple.push_back(mu);
        }
      }
      simple.push_back("^0");
      auto leaf = [&] { return simple[std::uniform_int_distribution<std::size_t>(0, simple.size() - 1)(rng)]; };
      std::string target;
      switch (pick4(rng)) {
        case 0: target = leaf(); break;
        case 1: target = "oplus{1/2: " + leaf() + ", 1/2: " + leaf() + "}"; break;
        case 2: target = "^" + std::string(labels[label_d(rng) % 2]) + "." + leaf(); break;
        default:
          if (k > 1) {
            const int j = std::uniform_int_distribution<int>(0, k - 2)(rng);
            target = "^" + g.ops[j] + "(";
            for (int a = 0; a < g.ranks[j]; ++a) target += (a ? ", " : "") + leaf();
            target += ")";
          } else {
            target = leaf();
          }
      }
      std::string line = f + "_r" + std::to_string(r + 1) + ": ";
      for (std::size_t q = 0; q < premises.size(); ++q) line += (q ? ", " : "") + premises[q];
      if (!premises.empty()) line += " |- ";
      line += source + " --" + labels[label_d(rng)] + "-> " + target + "\n";
      rules += line;
    }
    if (patience)
      for (int i = 0; i < rank; ++i) {
        std::string tgt = "^" + f + "(";
        for (int a = 0; a < rank; ++a) tgt += (a ? ", " : "") + (a == i ? std::string("mu") : "delta(" + vars(a) + ")");
        tgt += ")";
        rules += f + "_p" + std::to_string(i + 1) + ": " + vars(i) + " --tau-> mu |- " + source + " --tau-> " + tgt + "\n";
      }
  }
  g.text = "ptss generated\n" + std::string(kBaseSignature) + ops + kBaseRules + rules;
  return g;
}

/// Small closed state terms over the running-example operators.
inline std::vector<std::string> base_terms() {
  return {"0", "a.delta(0)", "b.delta(0)", "tau.delta(0)", "a.delta(b.delta(0))", "a.delta(tau.delta(b.delta(0)))",
          "tau.delta(b.delta(0))", "+(a.delta(0), b.delta(0))", "+(b.delta(0), a.delta(0))",
          "a.oplus{1/2: delta(0), 1/2: delta(b.delta(0))}", "+(a.delta(0), a.delta(0))"};
}

// ---------------------------------------------------------------------------
// Bisimulation by partition enumeration

/// Every partition of {0..n-1}, as block numbers per element.
inline std::vector<std::vector<int>> partitions(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> a(n, 0);
  std::function<void(int, int)> go = [&](int i, int blocks) {
    if (i == n) {
      out.push_back(a);
      return;
    }
    for (int b = 0; b <= blocks; ++b) {
      a[i] = b;
      go(i + 1, std::max(blocks, b + 1));
    }
  };
  if (n > 0) go(0, 0);
  return out;
}

using ClassVector = std::vector<Rational>;

inline ClassVector class_vector(const std::vector<int>& part, const ptss::IndexedDistribution& d) {
  ClassVector v(*std::max_element(part.begin(), part.end()) + 1, Rational(0));
  for (const auto& [s, p] : d) v[part[s]] += p;
  return v;
}

/// Concrete-execution clause: from t through τ-steps whose states and targets
/// stay in the class of s, then one `label` step with the same class masses.
inline bool concrete_match(const ptss::Pts& pts, const std::vector<int>& part, std::size_t s, std::size_t e,
                           std::size_t t) {
  const auto& tr = pts.transitions()[e];
  const ClassVector want = class_vector(part, tr.indexed);
  auto inside = [&](const ptss::IndexedDistribution& d) {
    for (const auto& [v, p] : d)
      if (part[v] != part[s]) return false;
    return true;
  };
  if (tr.label == ptss::kTau && inside(tr.indexed)) return true;
  std::set<std::size_t> seen{t};
  std::vector<std::size_t> work{t};
  while (!work.empty()) {
    const std::size_t u = work.back();
    work.pop_back();
    for (std::size_t f : pts.outgoing(u)) {
      const auto& step = pts.transitions()[f];
      if (step.label == tr.label && class_vector(part, step.indexed) == want) return true;
      if (step.label == ptss::kTau && inside(step.indexed))
        for (const auto& [v, p] : step.indexed)
          if (seen.insert(v).second) work.push_back(v);
    }
  }
  return false;
}

/// Class vectors of deterministic weak `label` steps from u that move only
/// through τ-steps inside `cls`. Needs τ-acyclic systems.
inline std::set<ClassVector> deterministic_outcomes(const ptss::Pts& pts, const std::vector<int>& part, int cls,
                                                    const ptss::Action& label, std::size_t u) {
  std::set<ClassVector> out;
  for (std::size_t f : pts.outgoing(u)) {
    const auto& step = pts.transitions()[f];
    if (step.label == label) out.insert(class_vector(part, step.indexed));
    bool inside = step.label == ptss::kTau;
    for (const auto& [v, p] : step.indexed) inside = inside && part[v] == cls;
    if (!inside) continue;
    std::set<ClassVector> acc{ClassVector(*std::max_element(part.begin(), part.end()) + 1, Rational(0))};
    for (const auto& [v, p] : step.indexed) {
      std::set<ClassVector> next;
      for (const auto& o : deterministic_outcomes(pts, part, cls, label, v))
        for (const auto& a : acc) {
          ClassVector c = a;
          for (std::size_t k = 0; k < c.size(); ++k) c[k] += p * o[k];
          next.insert(c);
        }
      acc = std::move(next);
    }
    out.insert(acc.begin(), acc.end());
  }
  return out;
}

/// Combined clause: the class vector of the target lies in the convex hull of
/// the deterministic outcomes.
inline bool combined_match(const ptss::Pts& pts, const std::vector<int>& part, std::size_t s, std::size_t e,
                           std::size_t t) {
  const auto& tr = pts.transitions()[e];
  const ClassVector want = class_vector(part, tr.indexed);
  bool inert = tr.label == ptss::kTau;
  for (const auto& [v, p] : tr.indexed) inert = inert && part[v] == part[s];
  if (inert) return true;
  const auto outcomes = deterministic_outcomes(pts, part, part[s], tr.label, t);
  if (outcomes.empty()) return false;
  ptss::LinearSystem lp;
  std::vector<std::size_t> lambda;
  for (std::size_t k = 0; k < outcomes.size(); ++k) lambda.push_back(lp.add_variable());
  std::map<std::size_t, Rational> sum;
  for (auto l : lambda) sum[l] = 1;
  lp.add_equality(sum, 1);
  for (std::size_t c = 0; c < want.size(); ++c) {
    std::map<std::size_t, Rational> row;
    std::size_t k = 0;
    for (const auto& o : outcomes) {
      if (o[c] != 0) row[lambda[k]] = o[c];
      ++k;
    }
    lp.add_equality(row, want[c]);
  }
  return lp.feasible();
}

using MatchFn = bool (*)(const ptss::Pts&, const std::vector<int>&, std::size_t, std::size_t, std::size_t);

/// Union of all partitions that are bisimulations under `match`.
inline ptss::IndexRelation largest_by_partitions(const ptss::Pts& pts, MatchFn match) {
  const std::size_t n = pts.size();
  ptss::IndexRelation out(n);
  for (const auto& part : partitions(static_cast<int>(n))) {
    bool ok = true;
    for (std::size_t s = 0; s < n && ok; ++s)
      for (std::size_t t = 0; t < n && ok; ++t)
        if (part[s] == part[t])
          for (std::size_t e : pts.outgoing(s))
            if (!match(pts, part, s, e, t)) {
              ok = false;
              break;
            }
    if (!ok) continue;
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t t = 0; t < n; ++t)
        if (part[s] == part[t]) out.set(s, t);
  }
  return out;
}

/// Random PTS whose τ-steps only go to higher-numbered states.
inline ptss::Pts random_tau_acyclic_pts(std::mt19937& rng, int n) {
  std::vector<ptss::Term> states;
  for (int i = 0; i < n; ++i) states.push_back(ptss::Term::apply("q" + std::to_string(i)));
  std::uniform_int_distribution<int> out_d(0, 2), label_d(0, 2), split_d(1, 2);
  const char* labels[] = {"a", "b", "tau"};
  std::vector<ptss::Pts::Edge> edges;
  for (int s = 0; s < n; ++s)
    for (int e = out_d(rng); e > 0; --e) {
      const std::string label = labels[label_d(rng)];
      const int lo = label == "tau" ? s + 1 : 0;
      if (lo >= n) continue;
      std::uniform_int_distribution<int> target_d(lo, n - 1);
      ptss::Distribution d;
      const int parts = split_d(rng);
      for (int j = 0; j < parts; ++j) d.add(states[target_d(rng)], Rational(1, parts));
      edges.push_back({states[s], label, d});
    }
  return ptss::Pts(states, edges);
}

}  // namespace oracle
