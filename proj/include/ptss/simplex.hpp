#pragma once

// Exact feasibility of { x >= 0 : A x = b } by phase-one simplex with
// Bland's rule over rationals. Dense tableau; meant for the small systems
// produced by the weak-transition and matching queries.

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "ptss/rational.hpp"

namespace ptss {

class LinearSystem {
 public:
  explicit LinearSystem(std::size_t vars = 0) : vars_(vars) {}

  std::size_t add_variable() { return vars_++; }
  std::size_t variables() const { return vars_; }
  std::size_t constraints() const { return rows_.size(); }

  /// Adds sum(coeffs[k] * x_k) == rhs. Zero coefficients are dropped.
  void add_equality(const std::map<std::size_t, Rational>& coeffs, Rational rhs) {
    std::vector<std::pair<std::size_t, Rational>> row;
    for (const auto& [k, c] : coeffs)
      if (c != 0) row.emplace_back(k, c);
    rows_.push_back(std::move(row));
    rhs_.push_back(std::move(rhs));
  }

  /// A nonnegative solution, or nullopt if none exists.
  std::optional<std::vector<Rational>> solve() const {
    const std::size_t m = rows_.size();
    const std::size_t n = vars_;
    for (std::size_t i = 0; i < m; ++i)
      if (rows_[i].empty() && rhs_[i] != 0) return std::nullopt;
    if (m == 0) return std::vector<Rational>(n, Rational(0));

    // Columns: n structural, m artificial, then the right-hand side.
    const std::size_t width = n + m + 1;
    std::vector<std::vector<Rational>> t(m, std::vector<Rational>(width, Rational(0)));
    std::vector<std::size_t> basis(m);
    for (std::size_t i = 0; i < m; ++i) {
      const bool flip = rhs_[i] < 0;
      for (const auto& [k, c] : rows_[i]) t[i][k] += flip ? Rational(-c) : c;
      t[i][n + i] = 1;
      t[i][n + m] = flip ? Rational(-rhs_[i]) : rhs_[i];
      basis[i] = n + i;
    }
    // Reduced costs of the phase-one objective (minimize the artificials).
    std::vector<Rational> cost(width, Rational(0));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) cost[j] -= t[i][j];
    for (std::size_t i = 0; i < m; ++i) cost[n + m] -= t[i][n + m];

    while (true) {
      std::size_t enter = width;
      for (std::size_t j = 0; j < n + m; ++j)
        if (cost[j] < 0) {
          enter = j;
          break;
        }
      if (enter == width) break;
      std::size_t leave = m;
      Rational best;
      for (std::size_t i = 0; i < m; ++i) {
        if (t[i][enter] <= 0) continue;
        Rational ratio = t[i][n + m] / t[i][enter];
        if (leave == m || ratio < best || (ratio == best && basis[i] < basis[leave])) {
          leave = i;
          best = std::move(ratio);
        }
      }
      if (leave == m) break;  // cannot happen in phase one: objective is bounded below by 0
      pivot(t, cost, leave, enter);
      basis[leave] = enter;
    }
    if (cost[n + m] != 0) return std::nullopt;

    std::vector<Rational> x(n, Rational(0));
    for (std::size_t i = 0; i < m; ++i)
      if (basis[i] < n) x[basis[i]] = t[i][n + m];
    return x;
  }

  bool feasible() const { return solve().has_value(); }

  /// True iff x >= 0 satisfies every equality.
  bool satisfies(const std::vector<Rational>& x) const {
    for (const auto& v : x)
      if (v < 0) return false;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      Rational lhs = 0;
      for (const auto& [k, c] : rows_[i]) lhs += c * x[k];
      if (lhs != rhs_[i]) return false;
    }
    return true;
  }

 private:
  static void pivot(std::vector<std::vector<Rational>>& t, std::vector<Rational>& cost, std::size_t r,
                    std::size_t c) {
    const std::size_t width = cost.size();
    const Rational p = t[r][c];
    for (std::size_t j = 0; j < width; ++j)
      if (t[r][j] != 0) t[r][j] /= p;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i == r || t[i][c] == 0) continue;
      const Rational f = t[i][c];
      for (std::size_t j = 0; j < width; ++j)
        if (t[r][j] != 0) t[i][j] -= f * t[r][j];
    }
    if (cost[c] != 0) {
      const Rational f = cost[c];
      for (std::size_t j = 0; j < width; ++j)
        if (t[r][j] != 0) cost[j] -= f * t[r][j];
    }
  }

  std::size_t vars_;
  std::vector<std::vector<std::pair<std::size_t, Rational>>> rows_;
  std::vector<Rational> rhs_;
};

}  // namespace ptss
