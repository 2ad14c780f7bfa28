#pragma once

// Static check of the probabilistic RBB safe rule format: nesting graph,
// wild/tame argument positions, patience rules, w-nested occurrences and the
// per-rule conditions 2a-2d plus the rule shape.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ptss/rule.hpp"
#include "ptss/term.hpp"

namespace ptss {

/// ⟨f,i⟩ with i 1-based.
struct ArgPosition {
  std::string symbol;
  std::size_t index;

  auto operator<=>(const ArgPosition&) const = default;
  bool operator==(const ArgPosition&) const = default;

  std::string text() const { return "<" + symbol + "," + std::to_string(index) + ">"; }
};

struct NestingGraph {
  std::set<ArgPosition> vertices;
  std::set<std::pair<ArgPosition, ArgPosition>> edges;
};

/// true = wild.
using WildnessMap = std::map<ArgPosition, bool>;

namespace detail {

/// Calls visit(g, j, arg) for every argument of every (lifted or plain)
/// operator application anywhere inside t; δ and ⊕ are traversed.
template <class Visit>
void for_each_argument(const Term& t, Visit&& visit) {
  if (t.is_var()) return;
  for (std::size_t j = 0; j < t.args().size(); ++j) {
    if (t.kind() == Term::Kind::apply) visit(t.name(), j + 1, t.args()[j]);
    for_each_argument(t.args()[j], visit);
  }
}

/// Positions ζ_i of the conclusion source that are plain variables.
inline std::vector<std::pair<std::size_t, std::string>> source_variables(const Rule& r) {
  std::vector<std::pair<std::size_t, std::string>> out;
  const Term& src = r.conclusion.source;
  if (src.kind() != Term::Kind::apply || src.lifted()) return out;
  for (std::size_t i = 0; i < src.args().size(); ++i)
    if (src.args()[i].is_var()) out.emplace_back(i + 1, src.args()[i].name());
  return out;
}

}  // namespace detail

inline NestingGraph build_nesting_graph(const Ptss& p) {
  NestingGraph g;
  for (const auto& op : p.signature.state_ops())
    for (std::size_t i = 1; i <= op.rank(); ++i) g.vertices.insert({op.name, i});
  for (const auto& r : p.rules) {
    const std::string& f = r.conclusion.source.name();
    for (const auto& [i, zeta] : detail::source_variables(r))
      detail::for_each_argument(r.conclusion.target, [&](const std::string& h, std::size_t j, const Term& arg) {
        if (occurs(zeta, arg)) g.edges.insert({{f, i}, {h, j}});
      });
  }
  return g;
}

/// Least fixpoint: seeded by positive-premise targets occurring inside an
/// argument in the conclusion target, then propagated along edges.
inline WildnessMap classify_wild(const Ptss& p, const NestingGraph& g) {
  WildnessMap w;
  for (const auto& v : g.vertices) w[v] = false;
  std::vector<ArgPosition> work;
  auto mark = [&](const ArgPosition& v) {
    auto& slot = w[v];
    if (!slot) {
      slot = true;
      work.push_back(v);
    }
  };
  for (const auto& r : p.rules)
    for (const auto& prem : r.positive)
      for (const auto& mu : variables(prem.target))
        detail::for_each_argument(r.conclusion.target, [&](const std::string& h, std::size_t j, const Term& arg) {
          if (occurs(mu, arg)) mark({h, j});
        });
  while (!work.empty()) {
    const ArgPosition v = work.back();
    work.pop_back();
    for (const auto& [from, to] : g.edges)
      if (from == v) mark(to);
  }
  return w;
}

/// The patience rule position r is written for, if r has exactly that shape
/// (up to renaming): x_i -tau-> mu |- f(.., x_i, ..) -tau-> ^f(.., zbar, mu, zbar, ..).
inline std::optional<ArgPosition> patience_position(const Rule& r) {
  if (r.positive.size() != 1 || !r.negative.empty()) return std::nullopt;
  const auto& prem = r.positive.front();
  const Term& src = r.conclusion.source;
  const Term& tgt = r.conclusion.target;
  if (prem.label != kTau || r.conclusion.label != kTau) return std::nullopt;
  if (prem.source.kind() != Term::Kind::state_var || prem.target.kind() != Term::Kind::dist_var) return std::nullopt;
  if (src.kind() != Term::Kind::apply || src.lifted()) return std::nullopt;
  if (tgt.kind() != Term::Kind::apply || !tgt.lifted() || tgt.name() != src.name()) return std::nullopt;
  if (tgt.args().size() != src.args().size()) return std::nullopt;
  std::set<std::string> names{prem.target.name()};
  std::optional<std::size_t> position;
  for (std::size_t k = 0; k < src.args().size(); ++k) {
    const Term& z = src.args()[k];
    if (!z.is_var() || !names.insert(z.name()).second) return std::nullopt;
    if (z == prem.source) {
      position = k + 1;
      if (!(tgt.args()[k] == prem.target)) return std::nullopt;
      continue;
    }
    const Term expected = z.sort() == Sort::state ? Term::dirac(z) : z;
    if (!(tgt.args()[k] == expected)) return std::nullopt;
  }
  if (!position) return std::nullopt;
  return ArgPosition{src.name(), *position};
}

/// Every state-sorted argument position, with the first patience rule for it.
inline std::map<ArgPosition, std::optional<std::string>> detect_patience_rules(const Ptss& p) {
  std::map<ArgPosition, std::optional<std::string>> out;
  for (const auto& op : p.signature.state_ops())
    for (std::size_t i = 1; i <= op.rank(); ++i)
      if (op.arg_sorts[i - 1] == Sort::state) out[{op.name, i}] = std::nullopt;
  for (const auto& r : p.rules)
    if (auto pos = patience_position(r)) {
      auto it = out.find(*pos);
      if (it != out.end() && !it->second) it->second = r.name;
    }
  return out;
}

namespace detail {

inline bool wild_at(const WildnessMap& w, const std::string& f, std::size_t i) {
  auto it = w.find({f, i});
  return it != w.end() && it->second;
}

inline bool w_nested_everywhere(const Term& t, const std::string& v, const WildnessMap& w) {
  if (t.is_var()) return true;
  for (std::size_t j = 0; j < t.args().size(); ++j) {
    const Term& arg = t.args()[j];
    if (!occurs(v, arg)) continue;
    if (t.kind() == Term::Kind::apply && !wild_at(w, t.name(), j + 1)) return false;
    if (!w_nested_everywhere(arg, v, w)) return false;
  }
  return true;
}

}  // namespace detail

/// Every occurrence of v in target sits under a context built only from wild
/// argument positions, δ and ⊕. Throws if v does not occur.
inline bool is_w_nested_occurrence(const Term& target, const std::string& v, const WildnessMap& w) {
  if (!occurs(v, target)) throw Error("variable " + v + " does not occur in " + target.text());
  return detail::w_nested_everywhere(target, v, w);
}

struct FormatViolation {
  std::string condition;  // "2a", "2b", "2c", "2d" or "shape"
  std::string explanation;
};

struct RuleVerdict {
  enum class Kind { patience, rbb_safe, violations };

  std::string rule;
  Kind kind = Kind::rbb_safe;
  std::optional<ArgPosition> patience_for;
  std::vector<FormatViolation> violations;

  bool ok() const { return kind != Kind::violations; }
};

struct FormatReport {
  WildnessMap wildness;
  std::map<ArgPosition, std::optional<std::string>> patience;
  std::vector<RuleVerdict> verdicts;
  bool overall = true;

  bool has_violation(const std::string& rule, const std::string& condition) const {
    for (const auto& v : verdicts)
      if (v.rule == rule)
        for (const auto& x : v.violations)
          if (x.condition == condition) return true;
    return false;
  }

  std::string text() const {
    std::string s = "wildness:\n";
    for (const auto& [pos, wild] : wildness) s += "  " + pos.text() + " " + (wild ? "wild" : "tame") + "\n";
    s += "patience:\n";
    for (const auto& [pos, rule] : patience)
      if (rule) s += "  " + pos.text() + " " + *rule + "\n";
    s += "rules:\n";
    for (const auto& v : verdicts) {
      switch (v.kind) {
        case RuleVerdict::Kind::patience: s += "  " + v.rule + ": patience rule for " + v.patience_for->text() + "\n"; break;
        case RuleVerdict::Kind::rbb_safe: s += "  " + v.rule + ": rbb safe\n"; break;
        case RuleVerdict::Kind::violations:
          for (const auto& x : v.violations) s += "  " + v.rule + ": violation " + x.condition + ": " + x.explanation + "\n";
          break;
      }
    }
    s += std::string("overall: ") + (overall ? "pass" : "fail") + "\n";
    return s;
  }
};

inline RuleVerdict check_rule(const Rule& r, const WildnessMap& wild,
                              const std::map<ArgPosition, std::optional<std::string>>& patience) {
  RuleVerdict v{r.name, RuleVerdict::Kind::rbb_safe, std::nullopt, {}};
  if (auto pos = patience_position(r); pos && detail::wild_at(wild, pos->symbol, pos->index)) {
    v.kind = RuleVerdict::Kind::patience;
    v.patience_for = pos;
    return v;
  }
  auto violate = [&](std::string cond, std::string why) {
    v.kind = RuleVerdict::Kind::violations;
    v.violations.push_back({std::move(cond), std::move(why)});
  };

  const Term& src = r.conclusion.source;
  if (src.kind() != Term::Kind::apply || src.lifted()) {
    violate("shape", "conclusion source " + src.text() + " is not an operator applied to variables");
    return v;
  }
  std::set<std::string> names;
  bool source_ok = true;
  for (const auto& a : src.args()) {
    if (!a.is_var()) {
      violate("shape", "argument " + a.text() + " of the conclusion source is not a variable");
      source_ok = false;
    } else if (!names.insert(a.name()).second) {
      violate("shape", "variable " + a.name() + " occurs twice in the conclusion source");
      source_ok = false;
    }
  }
  if (!source_ok) return v;
  std::vector<std::string> mus;
  for (const auto& prem : r.positive) {
    if (prem.target.kind() != Term::Kind::dist_var) {
      violate("shape", "premise target " + prem.target.text() + " is not a variable");
      continue;
    }
    if (!names.insert(prem.target.name()).second) {
      violate("shape", "premise target " + prem.target.name() + " is not a fresh variable");
      continue;
    }
    mus.push_back(prem.target.name());
  }

  const std::string& f = src.name();
  for (std::size_t i = 1; i <= src.args().size(); ++i) {
    if (!detail::wild_at(wild, f, i)) continue;
    const std::string& zeta = src.args()[i - 1].name();
    auto pit = patience.find({f, i});
    const bool has_patience = pit != patience.end() && pit->second.has_value();
    const std::string where = zeta + " (wild argument " + ArgPosition{f, i}.text() + ")";
    if (has_patience) {
      for (const auto& prem : r.positive) {
        if (!occurs(zeta, prem.source) && !occurs(zeta, prem.target)) continue;
        if (!(prem.source.is_var() && prem.source.name() == zeta))
          violate("2a", where + " is tested inside premise source " + prem.source.text());
        else if (prem.label == kTau)
          violate("2a", where + " is the source of a tau premise");
      }
      for (const auto& prem : r.negative)
        if (occurs(zeta, prem.source))
          violate("2a", where + " occurs in negative premise " + prem.source.text() + " -/" + prem.label + "->");
    } else {
      for (const auto& prem : r.positive)
        if (occurs(zeta, prem.source))
          violate("2b", where + " has no patience rule but occurs in premise source " + prem.source.text());
      for (const auto& prem : r.negative)
        if (occurs(zeta, prem.source))
          violate("2b", where + " has no patience rule but occurs in negative premise source " + prem.source.text());
    }
    if (occurs(zeta, r.conclusion.target) && !detail::w_nested_everywhere(r.conclusion.target, zeta, wild))
      violate("2c", where + " occurs at a non-w-nested position in " + r.conclusion.target.text());
  }
  for (const auto& mu : mus)
    if (occurs(mu, r.conclusion.target) && !detail::w_nested_everywhere(r.conclusion.target, mu, wild))
      violate("2c", "premise target " + mu + " occurs at a non-w-nested position in " + r.conclusion.target.text());
  for (const auto& mu : mus)
    for (const auto& prem : r.positive)
      if (occurs(mu, prem.source))
        violate("2d", "premise target " + mu + " occurs in premise source " + prem.source.text());
  return v;
}

inline FormatReport check_format(const Ptss& p) {
  FormatReport report;
  const NestingGraph g = build_nesting_graph(p);
  report.wildness = classify_wild(p, g);
  report.patience = detect_patience_rules(p);
  for (const auto& r : p.rules) {
    report.verdicts.push_back(check_rule(r, report.wildness, report.patience));
    report.overall = report.overall && report.verdicts.back().ok();
  }
  return report;
}

}  // namespace ptss
