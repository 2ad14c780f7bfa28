#pragma once

// Relations over the states of a PTS, kept as dense boolean matrices over
// state indices, plus a Term-level view for callers outside a PTS.

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ptss/pts.hpp"
#include "ptss/term.hpp"

namespace ptss {

class IndexRelation {
 public:
  IndexRelation() = default;
  explicit IndexRelation(std::size_t n, bool full = false) : n_(n), bits_(n * n, full ? 1 : 0) {}

  static IndexRelation identity(std::size_t n) {
    IndexRelation r(n);
    for (std::size_t i = 0; i < n; ++i) r.set(i, i);
    return r;
  }

  std::size_t size() const { return n_; }
  bool operator()(std::size_t i, std::size_t j) const { return bits_[i * n_ + j] != 0; }
  void set(std::size_t i, std::size_t j, bool v = true) { bits_[i * n_ + j] = v ? 1 : 0; }
  void set_symmetric(std::size_t i, std::size_t j, bool v = true) {
    set(i, j, v);
    set(j, i, v);
  }

  std::size_t count() const {
    std::size_t c = 0;
    for (auto b : bits_) c += b;
    return c;
  }

  bool is_reflexive() const {
    for (std::size_t i = 0; i < n_; ++i)
      if (!(*this)(i, i)) return false;
    return true;
  }
  bool is_symmetric() const {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        if ((*this)(i, j) != (*this)(j, i)) return false;
    return true;
  }
  bool is_transitive() const {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        if ((*this)(i, j))
          for (std::size_t k = 0; k < n_; ++k)
            if ((*this)(j, k) && !(*this)(i, k)) return false;
    return true;
  }
  bool is_equivalence() const { return is_reflexive() && is_symmetric() && is_transitive(); }

  bool subset_of(const IndexRelation& other) const {
    for (std::size_t k = 0; k < bits_.size(); ++k)
      if (bits_[k] && !other.bits_[k]) return false;
    return true;
  }

  /// Equivalence classes in index order; only meaningful for equivalences.
  std::vector<std::vector<std::size_t>> classes() const {
    std::vector<std::vector<std::size_t>> out;
    std::vector<bool> placed(n_, false);
    for (std::size_t i = 0; i < n_; ++i) {
      if (placed[i]) continue;
      std::vector<std::size_t> cls;
      for (std::size_t j = i; j < n_; ++j)
        if (!placed[j] && (i == j || (*this)(i, j))) {
          placed[j] = true;
          cls.push_back(j);
        }
      out.push_back(std::move(cls));
    }
    return out;
  }

  bool operator==(const IndexRelation&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<char> bits_;
};

/// Set of pairs of closed state terms.
class StateRelation {
 public:
  StateRelation() = default;

  static StateRelation from(const Pts& pts, const IndexRelation& r) {
    StateRelation out;
    for (std::size_t i = 0; i < r.size(); ++i)
      for (std::size_t j = 0; j < r.size(); ++j)
        if (r(i, j)) out.insert(pts.states()[i], pts.states()[j]);
    return out;
  }

  void insert(const Term& a, const Term& b) { pairs_.emplace(a, b); }
  bool contains(const Term& a, const Term& b) const { return pairs_.count({a, b}) != 0; }
  const std::set<std::pair<Term, Term>>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }

  IndexRelation on(const Pts& pts) const {
    IndexRelation r(pts.size());
    for (const auto& [a, b] : pairs_) {
      auto i = pts.index_of(a), j = pts.index_of(b);
      if (i && j) r.set(*i, *j);
    }
    return r;
  }

  bool operator==(const StateRelation&) const = default;

 private:
  std::set<std::pair<Term, Term>> pairs_;
};

/// One class per line, states sorted, classes ordered by their first state.
inline std::string render_partition(const Pts& pts, const IndexRelation& r) {
  std::string out;
  for (const auto& cls : r.classes()) {
    out += "{";
    for (std::size_t k = 0; k < cls.size(); ++k) {
      if (k) out += ", ";
      out += pts.states()[cls[k]].text();
    }
    out += "}\n";
  }
  return out;
}

}  // namespace ptss
