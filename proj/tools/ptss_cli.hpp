#pragma once

// Command-line front end. `run` is the whole program minus main(), so tests
// can drive it with in-memory streams.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ptss/ptss.hpp"

namespace ptss::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

enum ExitCode : int { kAffirmative = 0, kNegative = 1, kUsage = 2, kBound = 3 };

/// Carries an exit code out of a subcommand.
struct Stop {
  int code;
  std::string message;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Stop{kUsage, "cannot read " + path};
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::string diagnostics_text(const std::vector<Diagnostic>& diags, const std::string& file) {
  std::string out;
  for (const auto& d : diags) out += d.format(file) + "\n";
  return out;
}

inline Ptss load_spec_text(const std::string& text, const std::string& file) {
  auto parsed = parse_spec(text);
  if (!parsed.ok()) throw Stop{kUsage, diagnostics_text(parsed.diagnostics, file)};
  return std::move(*parsed.value);
}

inline Pts load_pts_text(const std::string& text, const std::string& file) {
  auto parsed = parse_pts(text);
  if (!parsed.ok()) throw Stop{kUsage, diagnostics_text(parsed.diagnostics, file)};
  return std::move(*parsed.value);
}

inline Term state_term(const std::string& text, const Signature* sig) {
  auto r = sig ? parse_term(text, *sig, {false, false, Sort::state}) : parse_untyped_term(text);
  if (!r.ok()) throw Stop{kUsage, diagnostics_text(r.diagnostics, "<" + text + ">")};
  return std::move(*r.value);
}

inline Term dist_term(const std::string& text, const Signature& sig) {
  auto r = parse_term(text, sig, {false, false, Sort::dist});
  if (!r.ok()) throw Stop{kUsage, diagnostics_text(r.diagnostics, "<" + text + ">")};
  return std::move(*r.value);
}

inline Term context_term(const std::string& text, const Signature& sig) {
  auto r = parse_context(text, sig);
  if (!r.ok()) throw Stop{kUsage, diagnostics_text(r.diagnostics, "<" + text + ">")};
  return std::move(*r.value);
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

/// Splits on `sep` and trims every field.
inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto k = s.find(sep, start);
    out.push_back(trim(s.substr(start, k == std::string_view::npos ? std::string_view::npos : k - start)));
    if (k == std::string_view::npos) return out;
    start = k + 1;
  }
}

/// `src --a-> target` into a symbolic transition over `sig`.
inline SymbolicTransition transition_term(const std::string& text, const Signature& sig) {
  const auto dash = text.find(" --");
  const auto arrow = text.find("-> ", dash == std::string::npos ? 0 : dash + 3);
  if (dash == std::string::npos || arrow == std::string::npos) throw Stop{kUsage, "malformed transition " + text};
  return {state_term(text.substr(0, dash), &sig), trim(text.substr(dash + 3, arrow - dash - 3)),
          dist_term(text.substr(arrow + 3), sig)};
}

inline bool has_suffix(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

inline std::string yes_no(bool b) { return b ? "yes" : "no"; }

/// Wraps stable-model construction so bound and convergence failures map to
/// exit code 3.
template <class F>
auto bounded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const BoundError& e) {
    throw Stop{kBound, e.what()};
  } catch (const ConvergenceError& e) {
    throw Stop{kBound, e.what()};
  }
}

inline Pts spec_pts(const Ptss& p, DomainBound bound, std::vector<Term> roots) {
  bound.roots = std::move(roots);
  return bounded([&] {
    const ThreeValuedModel m = stable_model(p, bound);
    if (!is_complete(m)) throw Stop{kNegative, "no associated PTS: the specification is not complete on this domain"};
    return reachable_pts(p, m, bound.roots);
  });
}

// ---------------------------------------------------------------------------
// JSON views

inline json to_json(const FormatReport& r) {
  json j;
  j["overall"] = r.overall ? "pass" : "fail";
  j["wildness"] = json::array();
  for (const auto& [pos, wild] : r.wildness) j["wildness"].push_back({{"position", pos.text()}, {"wild", wild}});
  j["patience"] = json::array();
  for (const auto& [pos, rule] : r.patience)
    j["patience"].push_back({{"position", pos.text()}, {"rule", rule ? json(*rule) : json(nullptr)}});
  j["rules"] = json::array();
  for (const auto& v : r.verdicts) {
    json rv{{"rule", v.rule}};
    switch (v.kind) {
      case RuleVerdict::Kind::patience:
        rv["verdict"] = "patience";
        rv["patience_for"] = v.patience_for->text();
        break;
      case RuleVerdict::Kind::rbb_safe: rv["verdict"] = "rbb_safe"; break;
      case RuleVerdict::Kind::violations: rv["verdict"] = "violation"; break;
    }
    rv["violations"] = json::array();
    for (const auto& x : v.violations)
      rv["violations"].push_back({{"condition", x.condition}, {"explanation", x.explanation}});
    j["rules"].push_back(std::move(rv));
  }
  return j;
}

inline json to_json(const TransitionSet& ts) {
  json a = json::array();
  for (const auto& t : ts) a.push_back(t.text());
  return a;
}

// ---------------------------------------------------------------------------
// corpus-run

struct Expectation {
  std::size_t line = 0;
  std::vector<std::string> fields;  // kind first, expected verdict last
  std::string text;
};

struct CorpusFile {
  std::vector<std::string> roots;
  DomainBound bound;
  std::vector<Expectation> expectations;
};

struct CheckSpec {
  std::size_t arity;  // fields after the kind, verdict included
  std::vector<std::string> verdicts;  // empty: a number; {"*"}: anything
  bool for_pts;
  bool for_spec;
};

inline const std::map<std::string, CheckSpec>& check_table() {
  static const std::map<std::string, CheckSpec> table{
      {"complete", {1, {"yes", "no"}, false, true}},
      {"format", {1, {"pass", "fail"}, false, true}},
      {"iterations", {1, {}, false, true}},
      {"rules", {1, {}, false, true}},
      {"ct-size", {1, {}, false, true}},
      {"pt-size", {1, {}, false, true}},
      {"ct", {2, {"yes", "no"}, false, true}},
      {"pt", {2, {"yes", "no"}, false, true}},
      {"pts-states", {1, {}, true, true}},
      {"pts-transitions", {1, {}, true, true}},
      {"violation", {3, {"yes", "no"}, false, true}},
      {"wild", {3, {"wild", "tame"}, false, true}},
      {"edge", {5, {"yes", "no"}, false, true}},
      {"patience", {3, {"*"}, false, true}},
      {"bisim", {4, {"yes", "no"}, true, true}},
      {"lift", {4, {"yes", "no"}, false, true}},
      {"probe", {5, {"pass", "fail"}, false, true}},
      {"weak", {4, {"yes", "no"}, true, true}},
  };
  return table;
}

inline bool is_number(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

inline std::size_t to_count(const std::string& s, const std::string& where) {
  if (!is_number(s)) throw Stop{kUsage, where + ": expected a number, got '" + s + "'"};
  return static_cast<std::size_t>(std::stoull(s));
}

/// Reads `# roots:`, `# bounds:` and `# expect:` lines; other comments are
/// free text.
inline CorpusFile parse_corpus_header(const std::string& text, const std::string& file, bool is_pts) {
  CorpusFile out;
  std::istringstream in(text);
  std::string line;
  std::size_t ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    const std::string t = trim(line);
    if (t.empty() || t[0] != '#') continue;
    const std::string body = trim(std::string_view(t).substr(1));
    const std::string where = file + ":" + std::to_string(ln);
    auto directive = [&](std::string_view key) -> std::optional<std::string> {
      if (body.compare(0, key.size(), key) != 0) return std::nullopt;
      return trim(std::string_view(body).substr(key.size()));
    };
    if (auto r = directive("roots:")) {
      for (auto& root : split(*r, ';'))
        if (!root.empty()) out.roots.push_back(root);
    } else if (auto b = directive("bounds:")) {
      std::istringstream words(*b);
      std::string key, value;
      while (words >> key) {
        if (!(words >> value)) throw Stop{kUsage, where + ": malformed bounds line"};
        const std::size_t n = to_count(value, where);
        if (key == "depth") out.bound.max_depth = n;
        else if (key == "states") out.bound.max_states = n;
        else if (key == "iterations") out.bound.max_iterations = n;
        else throw Stop{kUsage, where + ": unknown bound '" + key + "'"};
      }
    } else if (auto e = directive("expect:")) {
      Expectation x{ln, split(*e, '|'), *e};
      auto it = check_table().find(x.fields.front());
      if (it == check_table().end()) throw Stop{kUsage, where + ": unknown check '" + x.fields.front() + "'"};
      const CheckSpec& spec = it->second;
      if (x.fields.size() != spec.arity + 1)
        throw Stop{kUsage, where + ": check '" + x.fields.front() + "' takes " + std::to_string(spec.arity) + " fields"};
      if (is_pts ? !spec.for_pts : !spec.for_spec)
        throw Stop{kUsage, where + ": check '" + x.fields.front() + "' does not apply to this file type"};
      const std::string& verdict = x.fields.back();
      if (spec.verdicts.empty()) to_count(verdict, where);
      else if (spec.verdicts.front() != "*" &&
               std::find(spec.verdicts.begin(), spec.verdicts.end(), verdict) == spec.verdicts.end())
        throw Stop{kUsage, where + ": unexpected verdict '" + verdict + "'"};
      if ((x.fields[0] == "bisim" || x.fields[0] == "probe" || x.fields[0] == "lift") && !parse_bisim_kind(x.fields[1]))
        throw Stop{kUsage, where + ": unknown bisimulation kind '" + x.fields[1] + "'"};
      if (x.fields[0] == "lift" && x.fields[1] == "rooted")
        throw Stop{kUsage, where + ": lift needs branching or pbranching"};
      out.expectations.push_back(std::move(x));
    }
  }
  return out;
}

struct CheckResult {
  std::size_t line;
  std::string check;
  std::string expected;
  std::string actual;
  bool pass;
};

struct FileResult {
  std::string file;
  std::vector<CheckResult> results;
};

inline IndexRelation relation_of(const Pts& pts, BisimKind kind) {
  return kind == BisimKind::pbranching ? prob_branching_bisim(pts).relation : branching_bisim(pts).relation;
}

/// Evaluates the expectations of one file. Everything is recomputed per
/// check except the model over the declared roots.
class Evaluator {
 public:
  Evaluator(std::string file, const std::string& text, bool is_pts, CorpusFile header)
      : file_(std::move(file)), is_pts_(is_pts), header_(std::move(header)) {
    if (is_pts_) pts_ = load_pts_text(text, file_);
    else spec_ = load_spec_text(text, file_);
  }

  std::string actual(const Expectation& x) {
    const auto& f = x.fields;
    const std::string& kind = f[0];
    if (is_pts_) return actual_pts(f);
    if (kind == "format") return format().overall ? "pass" : "fail";
    if (kind == "rules") return std::to_string(spec_->rules.size());
    if (kind == "violation") return yes_no(format().has_violation(f[1], f[2]));
    if (kind == "wild") {
      const ArgPosition pos{f[1], to_count(f[2], file_)};
      auto it = format().wildness.find(pos);
      return it != format().wildness.end() && it->second ? "wild" : "tame";
    }
    if (kind == "patience") {
      const ArgPosition pos{f[1], to_count(f[2], file_)};
      auto it = format().patience.find(pos);
      return it != format().patience.end() && it->second ? *it->second : "none";
    }
    if (kind == "edge") {
      const NestingGraph g = build_nesting_graph(*spec_);
      return yes_no(g.edges.count({ArgPosition{f[1], to_count(f[2], file_)}, ArgPosition{f[3], to_count(f[4], file_)}}));
    }
    if (kind == "complete") return yes_no(bounded([&] { return is_complete(model()); }));
    if (kind == "iterations") return std::to_string(model().iterations);
    if (kind == "ct-size") return std::to_string(model().ct.size());
    if (kind == "pt-size") return std::to_string(model().pt.size());
    if (kind == "ct" || kind == "pt") {
      const auto tr = transition_term(f[1], spec_->signature);
      return yes_no((kind == "ct" ? model().ct : model().pt).count(tr));
    }
    if (kind == "pts-states") return std::to_string(spec_pts(*spec_, header_.bound, roots()).size());
    if (kind == "pts-transitions")
      return std::to_string(spec_pts(*spec_, header_.bound, roots()).transitions().size());
    if (kind == "bisim") {
      const Term s = state_term(f[2], &spec_->signature), t = state_term(f[3], &spec_->signature);
      const Pts pts = spec_pts(*spec_, header_.bound, with(roots(), {s, t}));
      return yes_no(decide_bisim(pts, *parse_bisim_kind(f[1]), pts.require(s), pts.require(t)).related);
    }
    if (kind == "lift") {
      const Distribution d1 = eval(dist_term(f[2], spec_->signature), spec_->signature);
      const Distribution d2 = eval(dist_term(f[3], spec_->signature), spec_->signature);
      std::vector<Term> extra;
      for (const auto* d : {&d1, &d2})
        for (const auto& [t, p] : d->support()) extra.push_back(t);
      const Pts pts = spec_pts(*spec_, header_.bound, with(roots(), extra));
      return yes_no(lift_check(relation_of(pts, *parse_bisim_kind(f[1])), pts.indexed(d1), pts.indexed(d2)));
    }
    if (kind == "probe") {
      const Term c = context_term(f[2], spec_->signature);
      const Term u = state_term(f[3], &spec_->signature), v = state_term(f[4], &spec_->signature);
      const auto violations =
          bounded([&] { return congruence_probe(*spec_, {{u, v}}, {c}, header_.bound, *parse_bisim_kind(f[1])); });
      return violations.empty() ? "pass" : "fail";
    }
    if (kind == "weak") {
      const Term s = state_term(f[1], &spec_->signature);
      const Distribution d = distribution(f[3], &spec_->signature);
      std::vector<Term> extra{s};
      for (const auto& [t, p] : d.support()) extra.push_back(t);
      return weak(spec_pts(*spec_, header_.bound, with(roots(), extra)), s, f[2], d);
    }
    throw Stop{kUsage, "unhandled check " + kind};
  }

 private:
  std::string actual_pts(const std::vector<std::string>& f) {
    const std::string& kind = f[0];
    if (kind == "pts-states") return std::to_string(pts_->size());
    if (kind == "pts-transitions") return std::to_string(pts_->transitions().size());
    if (kind == "bisim") {
      const Term s = state_term(f[2], nullptr), t = state_term(f[3], nullptr);
      return yes_no(decide_bisim(*pts_, *parse_bisim_kind(f[1]), pts_->require(s), pts_->require(t)).related);
    }
    if (kind == "weak") return weak(*pts_, state_term(f[1], nullptr), f[2], distribution(f[3], nullptr));
    throw Stop{kUsage, "unhandled check " + kind};
  }

  static std::string weak(const Pts& pts, const Term& s, const std::string& action, const Distribution& d) {
    const std::optional<Action> a = action == "eps" ? std::nullopt : std::optional<Action>(action);
    return yes_no(weak_combined_reachable(pts, s, a, d));
  }

  Distribution distribution(const std::string& text, const Signature* sig) const {
    auto r = parse_distribution(text, sig);
    if (!r.ok()) throw Stop{kUsage, diagnostics_text(r.diagnostics, file_)};
    return std::move(*r.value);
  }

  static std::vector<Term> with(std::vector<Term> base, const std::vector<Term>& extra) {
    base.insert(base.end(), extra.begin(), extra.end());
    return base;
  }

  std::vector<Term> roots() const {
    std::vector<Term> out;
    for (const auto& r : header_.roots) out.push_back(state_term(r, &spec_->signature));
    return out;
  }

  const FormatReport& format() {
    if (!format_) format_ = check_format(*spec_);
    return *format_;
  }

  const ThreeValuedModel& model() {
    if (!model_) {
      DomainBound b = header_.bound;
      b.roots = roots();
      model_ = bounded([&] { return stable_model(*spec_, b); });
    }
    return *model_;
  }

  std::string file_;
  bool is_pts_;
  CorpusFile header_;
  std::optional<Ptss> spec_;
  std::optional<Pts> pts_;
  std::optional<FormatReport> format_;
  std::optional<ThreeValuedModel> model_;
};

inline FileResult run_corpus_file(const fs::path& path, const std::string& display) {
  const std::string text = read_file(path.string());
  const bool is_pts = path.extension() == ".pts";
  CorpusFile header = parse_corpus_header(text, display, is_pts);
  FileResult out{display, {}};
  std::vector<Expectation> expectations = header.expectations;
  std::optional<Evaluator> ev;
  std::string load_error;
  try {
    ev.emplace(display, text, is_pts, std::move(header));
  } catch (const Stop& s) {
    load_error = trim(s.message);
  }
  for (const auto& x : expectations) {
    std::string actual;
    if (!ev) {
      actual = "error: " + load_error;
    } else {
      try {
        actual = ev->actual(x);
      } catch (const Stop& s) {
        actual = "error: " + trim(s.message);
      } catch (const std::exception& e) {
        actual = std::string("error: ") + e.what();
      }
    }
    out.results.push_back({x.line, x.text, x.fields.back(), actual, actual == x.fields.back()});
  }
  return out;
}

inline std::size_t worker_count(std::size_t jobs) {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PTSS_KIT_THREADS")) {
    const std::string v = env;
    if (is_number(v) && std::stoull(v) > 0) n = std::min<std::size_t>(n, std::stoull(v));
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

inline int corpus_run(const std::string& dir, bool as_json, std::ostream& out) {
  if (!fs::is_directory(dir)) throw Stop{kUsage, "not a directory: " + dir};
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && (entry.path().extension() == ".ptss" || entry.path().extension() == ".pts"))
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  // Headers first, so a malformed one fails fast and deterministically.
  for (const auto& f : files) parse_corpus_header(read_file(f.string()), f.filename().string(), f.extension() == ".pts");

  std::vector<FileResult> results(files.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k; (k = next++) < files.size();) results[k] = run_corpus_file(files[k], files[k].filename().string());
  };
  std::vector<std::thread> pool;
  const std::size_t n = worker_count(files.size());
  for (std::size_t k = 1; k < n; ++k) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  std::size_t total = 0, failed = 0;
  json j{{"files", json::array()}};
  for (const auto& fr : results) {
    json jf{{"file", fr.file}, {"results", json::array()}};
    for (const auto& r : fr.results) {
      ++total;
      if (!r.pass) ++failed;
      if (as_json) {
        jf["results"].push_back(
            {{"line", r.line}, {"check", r.check}, {"expected", r.expected}, {"actual", r.actual}, {"pass", r.pass}});
      } else {
        out << (r.pass ? "PASS " : "FAIL ") << fr.file << ":" << r.line << "  " << r.check;
        if (!r.pass) out << "  (got " << r.actual << ")";
        out << "\n";
      }
    }
    j["files"].push_back(std::move(jf));
  }
  if (as_json) {
    j["total"] = total;
    j["failed"] = failed;
    out << j.dump(2) << "\n";
  } else {
    out << "expectations: " << total << ", failed: " << failed << "\n";
  }
  return failed ? kNegative : kAffirmative;
}

// ---------------------------------------------------------------------------
// Subcommands

struct BoundFlags {
  std::size_t max_depth = 8;
  std::size_t max_states = 512;
  std::size_t max_iterations = 64;

  DomainBound bound() const {
    DomainBound b;
    b.max_depth = max_depth;
    b.max_states = max_states;
    b.max_iterations = max_iterations;
    return b;
  }

  void attach(CLI::App* app) {
    app->add_option("--max-depth", max_depth, "Maximum term depth of the explored domain")->capture_default_str();
    app->add_option("--max-states", max_states, "Maximum number of terms in the explored domain")->capture_default_str();
    app->add_option("--max-iterations", max_iterations, "Maximum number of stable-model iterations")
        ->capture_default_str();
  }
};

inline int check_format_cmd(const std::string& path, bool as_json, std::ostream& out) {
  const Ptss p = load_spec_text(read_file(path), path);
  const FormatReport r = check_format(p);
  if (as_json) out << to_json(r).dump(2) << "\n";
  else out << r.text();
  return r.overall ? kAffirmative : kNegative;
}

inline std::vector<Term> parse_roots(const std::vector<std::string>& roots, const Signature& sig) {
  std::vector<Term> out;
  for (const auto& r : roots) out.push_back(state_term(r, &sig));
  return out;
}

inline int stable_model_cmd(const std::string& path, const std::vector<std::string>& roots, const BoundFlags& flags,
                            bool as_json, std::ostream& out) {
  const Ptss p = load_spec_text(read_file(path), path);
  DomainBound b = flags.bound();
  b.roots = parse_roots(roots, p.signature);
  const ThreeValuedModel m = bounded([&] { return stable_model(p, b); });
  if (!m.converged) throw Stop{kBound, "stable model did not converge within " + std::to_string(m.iterations) + " iterations"};
  const bool complete = m.ct == m.pt;
  if (as_json) {
    out << json{{"iterations", m.iterations}, {"converged", m.converged}, {"complete", complete},
                {"ct", to_json(m.ct)}, {"pt", to_json(m.pt)}}
               .dump(2)
        << "\n";
  } else {
    out << "iterations: " << m.iterations << "\ncomplete: " << yes_no(complete) << "\nct:\n";
    for (const auto& t : m.ct) out << "  " << t.text() << "\n";
    out << "pt:\n";
    for (const auto& t : m.pt) out << "  " << t.text() << "\n";
  }
  return complete ? kAffirmative : kNegative;
}

inline int pts_cmd(const std::string& path, const std::vector<std::string>& roots, const BoundFlags& flags,
                   const std::string& output, bool as_json, std::ostream& out) {
  const Ptss p = load_spec_text(read_file(path), path);
  const Pts pts = spec_pts(p, flags.bound(), parse_roots(roots, p.signature));
  const std::string text = pts.render();
  if (!output.empty()) {
    std::ofstream f(output, std::ios::binary);
    if (!f) throw Stop{kUsage, "cannot write " + output};
    f << text;
  }
  if (as_json) {
    json states = json::array(), trans = json::array();
    for (const auto& s : pts.states()) states.push_back(s.text());
    for (const auto& t : pts.transitions()) {
      json target = json::object();
      for (const auto& [i, q] : t.indexed) target[pts.states()[i].text()] = to_string(q);
      trans.push_back({{"source", pts.states()[t.source].text()}, {"label", t.label}, {"target", target}});
    }
    out << json{{"states", states}, {"transitions", trans}}.dump(2) << "\n";
  } else if (output.empty()) {
    out << text;
  }
  return kAffirmative;
}

inline int bisim_cmd(const std::string& path, const std::string& kind_text, const std::vector<std::string>& pair,
                     const std::vector<std::string>& roots, const BoundFlags& flags, bool as_json, std::ostream& out) {
  const auto kind = parse_bisim_kind(kind_text);
  if (!kind) throw Stop{kUsage, "unknown kind " + kind_text};
  if (!pair.empty() && pair.size() != 2) throw Stop{kUsage, "bisim takes either no states or exactly two"};
  if (pair.empty() && *kind == BisimKind::rooted) throw Stop{kUsage, "rooted bisimilarity needs two states"};

  std::optional<Pts> pts;
  std::vector<Term> pair_terms;
  const std::string text = read_file(path);
  if (has_suffix(path, ".pts")) {
    pts = load_pts_text(text, path);
    for (const auto& s : pair) pair_terms.push_back(state_term(s, nullptr));
  } else {
    const Ptss p = load_spec_text(text, path);
    std::vector<Term> all = parse_roots(roots, p.signature);
    for (const auto& s : pair) pair_terms.push_back(state_term(s, &p.signature));
    all.insert(all.end(), pair_terms.begin(), pair_terms.end());
    if (all.empty()) throw Stop{kUsage, "a specification needs --root or two states"};
    pts = spec_pts(p, flags.bound(), all);
  }

  if (pair_terms.empty()) {
    const IndexRelation r = relation_of(*pts, *kind);
    if (as_json) {
      json classes = json::array();
      for (const auto& cls : r.classes()) {
        json c = json::array();
        for (std::size_t i : cls) c.push_back(pts->states()[i].text());
        classes.push_back(std::move(c));
      }
      out << json{{"kind", kind_text}, {"classes", classes}}.dump(2) << "\n";
    } else {
      out << render_partition(*pts, r);
    }
    return kAffirmative;
  }

  const std::size_t s = pts->require(pair_terms[0]), t = pts->require(pair_terms[1]);
  const BisimVerdict v = decide_bisim(*pts, *kind, s, t);
  const std::string witness = v.witness ? v.witness->text(*pts) : std::string();
  if (as_json) {
    out << json{{"kind", kind_text}, {"related", v.related}, {"witness", witness.empty() ? json(nullptr) : json(witness)}}
               .dump(2)
        << "\n";
  } else {
    out << (v.related ? "YES" : "NO") << "\n";
    if (!witness.empty()) out << "witness: " << witness << "\n";
  }
  return v.related ? kAffirmative : kNegative;
}

/// Nonblank, non-comment lines.
inline std::vector<std::pair<std::size_t, std::string>> content_lines(const std::string& text) {
  std::vector<std::pair<std::size_t, std::string>> out;
  std::istringstream in(text);
  std::string line;
  for (std::size_t ln = 1; std::getline(in, line); ++ln) {
    const std::string t = trim(line);
    if (!t.empty() && t[0] != '#') out.emplace_back(ln, t);
  }
  return out;
}

inline int probe_cmd(const std::string& path, const std::string& pairs_path, const std::string& contexts_path,
                     const std::string& kind_text, const BoundFlags& flags, bool as_json, std::ostream& out) {
  const auto kind = parse_bisim_kind(kind_text);
  if (!kind) throw Stop{kUsage, "unknown kind " + kind_text};
  const Ptss p = load_spec_text(read_file(path), path);
  std::vector<std::pair<Term, Term>> pairs;
  for (const auto& [ln, line] : content_lines(read_file(pairs_path))) {
    const auto parts = split(line, '|');
    if (parts.size() != 2) throw Stop{kUsage, pairs_path + ":" + std::to_string(ln) + ": expected 'u | v'"};
    pairs.emplace_back(state_term(parts[0], &p.signature), state_term(parts[1], &p.signature));
  }
  std::vector<Term> contexts;
  for (const auto& [ln, line] : content_lines(read_file(contexts_path))) contexts.push_back(context_term(line, p.signature));

  std::vector<CongruenceViolation> violations;
  try {
    violations = bounded([&] { return congruence_probe(p, pairs, contexts, flags.bound(), *kind); });
  } catch (const Stop&) {
    throw;
  } catch (const Error& e) {
    throw Stop{kUsage, e.what()};
  }
  if (as_json) {
    json a = json::array();
    for (const auto& v : violations)
      a.push_back({{"context", v.context.text()}, {"left", v.plugged_left.text()}, {"right", v.plugged_right.text()},
                   {"witness", v.witness}});
    out << json{{"kind", kind_text}, {"violations", a}}.dump(2) << "\n";
  } else {
    out << "violations: " << violations.size() << "\n";
    for (const auto& v : violations) out << "  " << v.text() << "\n";
  }
  return violations.empty() ? kAffirmative : kNegative;
}

/// Runs one command line (without the program name).
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Probabilistic transition system specifications: models, bisimulations and the RBB safe format"};
  app.require_subcommand(1);
  bool as_json = false;
  app.add_flag("--json", as_json, "Emit JSON instead of text");

  std::string spec_path, pairs_path, contexts_path, output, kind = "rooted", dir;
  std::vector<std::string> roots, pair;
  BoundFlags flags;

  auto* fmt = app.add_subcommand("check-format", "Check the probabilistic RBB safe format");
  fmt->add_option("spec", spec_path, "Specification file")->required();
  fmt->add_flag("--json", as_json, "Emit JSON");

  auto* sm = app.add_subcommand("stable-model", "Least 3-valued stable model over the terms reachable from the roots");
  sm->add_option("spec", spec_path, "Specification file")->required();
  sm->add_option("--root", roots, "Closed state term (repeatable)")->required();
  sm->add_flag("--json", as_json, "Emit JSON");
  flags.attach(sm);

  auto* pt = app.add_subcommand("pts", "Export the associated PTS reachable from the roots");
  pt->add_option("spec", spec_path, "Specification file")->required();
  pt->add_option("--root", roots, "Closed state term (repeatable)")->required();
  pt->add_option("-o,--output", output, "Write the PTS here instead of stdout");
  pt->add_flag("--json", as_json, "Emit JSON");
  flags.attach(pt);

  auto* bi = app.add_subcommand("bisim", "Decide bisimilarity of two states, or print the partition");
  bi->add_option("file", spec_path, "Specification (.ptss) or automaton (.pts)")->required();
  bi->add_option("states", pair, "Two states to compare");
  bi->add_option("--kind", kind, "branching, pbranching or rooted")->capture_default_str();
  bi->add_option("--root", roots, "Extra roots when the file is a specification");
  bi->add_flag("--json", as_json, "Emit JSON");
  flags.attach(bi);

  auto* pr = app.add_subcommand("probe-congruence", "Plug related pairs into contexts and re-check");
  pr->add_option("spec", spec_path, "Specification file")->required();
  pr->add_option("--pairs", pairs_path, "File of 'u | v' lines")->required();
  pr->add_option("--contexts", contexts_path, "File of one-hole contexts, one per line")->required();
  pr->add_option("--kind", kind, "branching, pbranching or rooted")->capture_default_str();
  pr->add_flag("--json", as_json, "Emit JSON");
  flags.attach(pr);

  auto* cr = app.add_subcommand("corpus-run", "Check every expectation of a corpus directory");
  cr->add_option("dir", dir, "Corpus directory")->required();
  cr->add_flag("--json", as_json, "Emit JSON");

  std::vector<std::string> argv_store{"ptss"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kAffirmative;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*fmt) return check_format_cmd(spec_path, as_json, out);
    if (*sm) return stable_model_cmd(spec_path, roots, flags, as_json, out);
    if (*pt) return pts_cmd(spec_path, roots, flags, output, as_json, out);
    if (*bi) return bisim_cmd(spec_path, kind, pair, roots, flags, as_json, out);
    if (*pr) return probe_cmd(spec_path, pairs_path, contexts_path, kind, flags, as_json, out);
    if (*cr) return corpus_run(dir, as_json, out);
  } catch (const Stop& s) {
    err << trim(s.message) << "\n";
    return s.code;
  } catch (const BoundError& e) {
    err << e.what() << "\n";
    return kBound;
  } catch (const ConvergenceError& e) {
    err << e.what() << "\n";
    return kBound;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace ptss::cli
