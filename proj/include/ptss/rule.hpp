#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "ptss/term.hpp"

namespace ptss {

/// `source --label-> target`
struct PositiveLiteral {
  Term source;
  Action label;
  Term target;

  bool operator==(const PositiveLiteral&) const = default;
};

/// `source -/label->`
struct NegativeLiteral {
  Term source;
  Action label;

  bool operator==(const NegativeLiteral&) const = default;
};

struct Rule {
  std::string name;
  std::vector<PositiveLiteral> positive;
  std::vector<NegativeLiteral> negative;
  PositiveLiteral conclusion;

  bool operator==(const Rule&) const = default;
};

struct Ptss {
  std::string name;
  Signature signature;
  std::vector<Rule> rules;

  bool operator==(const Ptss&) const = default;
};

/// Variables of a rule, with their sorts. A name used at two sorts is
/// reported by validate_rule.
inline std::map<std::string, Sort> rule_variables(const Rule& r) {
  std::map<std::string, Sort> out;
  auto visit = [&](auto&& self, const Term& t) -> void {
    if (t.closed()) return;
    if (t.is_var()) {
      out.emplace(t.name(), t.sort());
      return;
    }
    for (const auto& a : t.args()) self(self, a);
  };
  for (const auto& p : r.positive) {
    visit(visit, p.source);
    visit(visit, p.target);
  }
  for (const auto& n : r.negative) visit(visit, n.source);
  visit(visit, r.conclusion.source);
  visit(visit, r.conclusion.target);
  return out;
}

/// Well-formedness of a rule against a signature: declared labels, sorts of
/// sources and targets, consistent variable sorts.
inline std::vector<std::string> validate_rule(const Rule& r, const Signature& sig) {
  std::vector<std::string> out;
  auto label = [&](const Action& a) {
    if (!sig.has_action(a)) out.push_back(r.name + ": unknown action " + a);
  };
  auto expect = [&](const Term& t, Sort s, const char* what) {
    try {
      if (sort_of(t, sig) != s)
        out.push_back(r.name + ": " + what + " " + t.text() + " must have sort " + std::string(to_string(s)));
    } catch (const SortError& e) {
      out.push_back(r.name + ": " + e.what());
    }
  };
  for (const auto& p : r.positive) {
    expect(p.source, Sort::state, "premise source");
    expect(p.target, Sort::dist, "premise target");
    label(p.label);
  }
  for (const auto& n : r.negative) {
    expect(n.source, Sort::state, "premise source");
    label(n.label);
  }
  expect(r.conclusion.source, Sort::state, "conclusion source");
  expect(r.conclusion.target, Sort::dist, "conclusion target");
  label(r.conclusion.label);

  std::map<std::string, Sort> sorts;
  auto visit = [&](auto&& self, const Term& t) -> void {
    if (t.closed()) return;
    if (t.is_var()) {
      auto [it, inserted] = sorts.emplace(t.name(), t.sort());
      if (!inserted && it->second != t.sort())
        out.push_back(r.name + ": variable " + t.name() + " used at both sorts");
      return;
    }
    for (const auto& a : t.args()) self(self, a);
  };
  for (const auto& p : r.positive) {
    visit(visit, p.source);
    visit(visit, p.target);
  }
  for (const auto& n : r.negative) visit(visit, n.source);
  visit(visit, r.conclusion.source);
  visit(visit, r.conclusion.target);
  return out;
}

inline std::vector<std::string> validate_ptss(const Ptss& p) {
  std::vector<std::string> out;
  for (const auto& d : validate_signature(p.signature)) out.push_back(d.message());
  std::set<std::string> names;
  for (const auto& r : p.rules) {
    if (!names.insert(r.name).second) out.push_back(r.name + ": duplicate rule name");
    for (auto& m : validate_rule(r, p.signature)) out.push_back(std::move(m));
  }
  return out;
}

}  // namespace ptss
