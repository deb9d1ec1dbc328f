#pragma once

#include <cstdint>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

#include "coflow/rational.hpp"

namespace coflow {

enum class Relation { Eq, Le, Ge };

template <class T>
struct ScalarTraits {
  static T reduced_cost_tol() { return T(0); }
  static T pivot_tol() { return T(0); }
};

template <>
struct ScalarTraits<double> {
  static double reduced_cost_tol() { return 1e-9; }
  static double pivot_tol() { return 1e-7; }
};

enum class SimplexStatus { Optimal, Infeasible, Unbounded, IterationLimit };

template <class T>
struct SimplexProblem {
  struct Row {
    std::vector<std::pair<int, T>> coeffs;  // (variable index, coefficient)
    Relation rel = Relation::Le;
    T rhs{};
  };
  int num_vars = 0;
  std::vector<T> objective;  // minimized; size num_vars
  std::vector<Row> rows;
};

template <class T>
struct SimplexResult {
  SimplexStatus status = SimplexStatus::IterationLimit;
  std::vector<T> x;  // structural variables only
  T objective{};
  long iterations = 0;
};

// Revised primal simplex over column-sparse data with a dense basis
// inverse. Two phases; Dantzig pricing with a Bland fallback after a run
// of degenerate pivots, which also serves as the anti-cycling rule.
template <class T>
class RevisedSimplex {
 public:
  explicit RevisedSimplex(const SimplexProblem<T>& problem)
      : nvars_(problem.num_vars), nrows_(static_cast<int>(problem.rows.size())) {
    cols_.resize(nvars_);
    artificial_.assign(nvars_, false);
    cost_.resize(nvars_);
    for (int j = 0; j < nvars_; ++j) cost_[j] = problem.objective[j];
    rhs_.resize(nrows_);

    // Normalize to rhs >= 0, then append slack/surplus/artificial columns.
    std::vector<Relation> rel(nrows_);
    for (int r = 0; r < nrows_; ++r) {
      T b = problem.rows[r].rhs;
      T sign = T(1);
      rel[r] = problem.rows[r].rel;
      if (b < T(0)) {
        sign = T(-1);
        b = -b;
        if (rel[r] == Relation::Le)
          rel[r] = Relation::Ge;
        else if (rel[r] == Relation::Ge)
          rel[r] = Relation::Le;
      }
      rhs_[r] = b;
      for (const auto& [j, v] : problem.rows[r].coeffs) {
        if (j < 0 || j >= nvars_)
          throw std::invalid_argument("simplex: column index out of range");
        if (v != T(0)) cols_[j].push_back({r, sign * v});
      }
    }

    basis_.assign(nrows_, -1);
    for (int r = 0; r < nrows_; ++r) {
      if (rel[r] == Relation::Le) {
        int j = add_column(r, T(1), false);
        basis_[r] = j;
      } else if (rel[r] == Relation::Ge) {
        add_column(r, T(-1), false);  // surplus, nonbasic at zero
      }
    }
    for (int r = 0; r < nrows_; ++r) {
      if (basis_[r] == -1) {
        int j = add_column(r, T(1), true);
        basis_[r] = j;
      }
    }
    ncols_ = static_cast<int>(cols_.size());
  }

  SimplexResult<T> solve(long max_iterations) {
    binv_.assign(static_cast<std::size_t>(nrows_) * nrows_, T(0));
    for (int r = 0; r < nrows_; ++r) binv_[idx(r, r)] = T(1);
    xb_ = rhs_;
    in_basis_.assign(ncols_, false);
    for (int r = 0; r < nrows_; ++r) in_basis_[basis_[r]] = true;

    SimplexResult<T> result;
    long used = 0;

    bool any_artificial = false;
    for (bool a : artificial_)
      if (a) any_artificial = true;
    if (any_artificial) {
      std::vector<T> phase1(ncols_, T(0));
      for (int j = 0; j < ncols_; ++j)
        if (artificial_[j]) phase1[j] = T(1);
      SimplexStatus st = iterate(phase1, /*allow_artificial=*/true,
                                 max_iterations, used);
      if (st != SimplexStatus::Optimal) {
        result.status = st == SimplexStatus::Unbounded
                            ? SimplexStatus::Infeasible
                            : st;
        result.iterations = used;
        return result;
      }
      if constexpr (std::is_same_v<T, double>) refactor();
      T infeas = T(0);
      for (int r = 0; r < nrows_; ++r)
        if (artificial_[basis_[r]]) infeas += xb_[r];
      if (infeas > phase1_tol()) {
        result.status = SimplexStatus::Infeasible;
        result.iterations = used;
        return result;
      }
      expel_artificials();
    }

    std::vector<T> phase2(ncols_, T(0));
    for (int j = 0; j < nvars_; ++j) phase2[j] = cost_[j];
    SimplexStatus st = iterate(phase2, /*allow_artificial=*/false,
                               max_iterations, used);
    result.status = st;
    result.iterations = used;
    if (st == SimplexStatus::Optimal) {
      if constexpr (std::is_same_v<T, double>) refactor();
      result.x.assign(nvars_, T(0));
      for (int r = 0; r < nrows_; ++r)
        if (basis_[r] < nvars_) result.x[basis_[r]] = xb_[r];
      result.objective = T(0);
      for (int j = 0; j < nvars_; ++j)
        if (result.x[j] != T(0)) result.objective += cost_[j] * result.x[j];
    }
    return result;
  }

 private:
  std::size_t idx(int r, int c) const {
    return static_cast<std::size_t>(r) * nrows_ + c;
  }

  int add_column(int row, T value, bool artificial) {
    cols_.push_back({{row, value}});
    artificial_.push_back(artificial);
    return static_cast<int>(cols_.size()) - 1;
  }

  static T phase1_tol() {
    // Residual infeasibility below this is treated as feasible.
    if constexpr (std::is_same_v<T, double>)
      return 1e-7;
    else
      return T(0);
  }

  // y = c_B^T B^{-1}
  void btran(const std::vector<T>& costs, std::vector<T>& y) const {
    y.assign(nrows_, T(0));
    for (int r = 0; r < nrows_; ++r) {
      const T& cb = costs[basis_[r]];
      if (cb == T(0)) continue;
      const T* row = &binv_[idx(r, 0)];
      for (int c = 0; c < nrows_; ++c)
        if (row[c] != T(0)) y[c] += cb * row[c];
    }
  }

  T reduced_cost(const std::vector<T>& costs, const std::vector<T>& y,
                 int j) const {
    T rc = costs[j];
    for (const auto& [r, v] : cols_[j]) rc -= y[r] * v;
    return rc;
  }

  // w = B^{-1} A_j
  void ftran(int j, std::vector<T>& w) const {
    w.assign(nrows_, T(0));
    for (const auto& [r, v] : cols_[j])
      for (int i = 0; i < nrows_; ++i)
        if (binv_[idx(i, r)] != T(0)) w[i] += binv_[idx(i, r)] * v;
  }

  // Rebuilds binv_ and xb_ from the basis columns by Gauss-Jordan with
  // partial pivoting; curbs round-off drift of the product-form update.
  void refactor() {
    std::vector<T> B(static_cast<std::size_t>(nrows_) * nrows_, T(0));
    for (int c = 0; c < nrows_; ++c)
      for (const auto& [r, v] : cols_[basis_[c]]) B[idx(r, c)] = v;
    std::vector<T> inv(static_cast<std::size_t>(nrows_) * nrows_, T(0));
    for (int i = 0; i < nrows_; ++i) inv[idx(i, i)] = T(1);
    for (int c = 0; c < nrows_; ++c) {
      int piv = -1;
      T best = T(0);
      for (int r = c; r < nrows_; ++r) {
        T mag = B[idx(r, c)] < T(0) ? T(-B[idx(r, c)]) : B[idx(r, c)];
        if (piv == -1 || mag > best) {
          piv = r;
          best = mag;
        }
      }
      if (best == T(0)) throw std::runtime_error("simplex: singular basis");
      if (piv != c) {
        for (int j = 0; j < nrows_; ++j) {
          std::swap(B[idx(piv, j)], B[idx(c, j)]);
          std::swap(inv[idx(piv, j)], inv[idx(c, j)]);
        }
      }
      const T p = B[idx(c, c)];
      for (int j = 0; j < nrows_; ++j) {
        B[idx(c, j)] /= p;
        inv[idx(c, j)] /= p;
      }
      for (int r = 0; r < nrows_; ++r) {
        if (r == c) continue;
        const T f = B[idx(r, c)];
        if (f == T(0)) continue;
        for (int j = 0; j < nrows_; ++j) {
          if (B[idx(c, j)] != T(0)) B[idx(r, j)] -= f * B[idx(c, j)];
          if (inv[idx(c, j)] != T(0)) inv[idx(r, j)] -= f * inv[idx(c, j)];
        }
      }
    }
    binv_.swap(inv);
    for (int r = 0; r < nrows_; ++r) {
      T s = T(0);
      const T* row = &binv_[idx(r, 0)];
      for (int c = 0; c < nrows_; ++c)
        if (row[c] != T(0)) s += row[c] * rhs_[c];
      if constexpr (std::is_same_v<T, double>) {
        if (s < 0 && s > -1e-9) s = 0;
      }
      xb_[r] = s;
    }
  }

  SimplexStatus iterate(const std::vector<T>& costs, bool allow_artificial,
                        long max_iterations, long& used) {
    const T rc_tol = ScalarTraits<T>::reduced_cost_tol();
    const T pv_tol = ScalarTraits<T>::pivot_tol();
    int degenerate_run = 0;
    long since_refactor = 0;
    std::vector<T> y, w;
    while (true) {
      if (used >= max_iterations) return SimplexStatus::IterationLimit;
      ++used;
      if constexpr (std::is_same_v<T, double>) {
        if (++since_refactor >= 100) {
          refactor();
          since_refactor = 0;
        }
      }
      btran(costs, y);

      const bool bland = degenerate_run > 100;
      int entering = -1;
      T best_rc = T(0);
      for (int j = 0; j < ncols_; ++j) {
        if (in_basis_[j]) continue;
        if (artificial_[j] && !allow_artificial) continue;
        T rc = reduced_cost(costs, y, j);
        if (rc < -rc_tol) {
          if (bland) {
            entering = j;
            break;
          }
          if (entering == -1 || rc < best_rc) {
            entering = j;
            best_rc = rc;
          }
        }
      }
      if (entering == -1) return SimplexStatus::Optimal;

      ftran(entering, w);
      int leave = -1;
      T best_ratio{};
      // A basic artificial sits at zero; if the entering column touches
      // its row, expel it with a zero-length step so phase-2 pivots can
      // never drag it positive again.
      if (!allow_artificial) {
        for (int i = 0; i < nrows_; ++i) {
          if (!artificial_[basis_[i]]) continue;
          T mag = w[i] < T(0) ? T(-w[i]) : w[i];
          if (mag > pv_tol) {
            leave = i;
            best_ratio = T(0);
            break;
          }
        }
      }
      if (leave == -1) for (int i = 0; i < nrows_; ++i) {
        if (w[i] > pv_tol) {
          T ratio = xb_[i] / w[i];
          if (leave == -1 || ratio < best_ratio ||
              (ratio == best_ratio && basis_[i] < basis_[leave])) {
            leave = i;
            best_ratio = ratio;
          }
        }
      }
      if (leave == -1) return SimplexStatus::Unbounded;
      degenerate_run = best_ratio == T(0) ? degenerate_run + 1 : 0;
      pivot(entering, leave, w, best_ratio);
    }
  }

  void pivot(int entering, int leave, const std::vector<T>& w,
             const T& ratio) {
    const T& piv = w[leave];
    T* lrow = &binv_[idx(leave, 0)];
    for (int c = 0; c < nrows_; ++c) lrow[c] /= piv;
    for (int i = 0; i < nrows_; ++i) {
      if (i == leave || w[i] == T(0)) continue;
      T* row = &binv_[idx(i, 0)];
      const T& f = w[i];
      for (int c = 0; c < nrows_; ++c)
        if (lrow[c] != T(0)) row[c] -= f * lrow[c];
      xb_[i] -= f * ratio;
      if constexpr (std::is_same_v<T, double>) {
        if (xb_[i] < 0 && xb_[i] > -1e-11) xb_[i] = 0;
      }
    }
    xb_[leave] = ratio;
    in_basis_[basis_[leave]] = false;
    in_basis_[entering] = true;
    basis_[leave] = entering;
  }

  // After phase 1, pivot any zero-valued basic artificial onto a
  // structural column if one has a nonzero element in its row; rows with
  // no such column are redundant and keep the artificial at zero.
  void expel_artificials() {
    const T pv_tol = ScalarTraits<T>::pivot_tol();
    std::vector<T> w;
    for (int r = 0; r < nrows_; ++r) {
      if (!artificial_[basis_[r]]) continue;
      for (int j = 0; j < ncols_; ++j) {
        if (in_basis_[j] || artificial_[j]) continue;
        ftran(j, w);
        T mag = w[r] < T(0) ? T(-w[r]) : w[r];
        if (mag > pv_tol) {
          // Basic artificial is zero here, so the ratio is zero.
          std::vector<T> w2 = w;
          if (w2[r] == T(0)) break;
          pivot_on_row(j, r, w2);
          break;
        }
      }
    }
  }

  void pivot_on_row(int entering, int row, const std::vector<T>& w) {
    const T piv = w[row];
    T* lrow = &binv_[idx(row, 0)];
    for (int c = 0; c < nrows_; ++c) lrow[c] /= piv;
    const T ratio = xb_[row] / piv;
    for (int i = 0; i < nrows_; ++i) {
      if (i == row || w[i] == T(0)) continue;
      T* brow = &binv_[idx(i, 0)];
      const T& f = w[i];
      for (int c = 0; c < nrows_; ++c)
        if (lrow[c] != T(0)) brow[c] -= f * lrow[c];
      xb_[i] -= f * ratio;
    }
    xb_[row] = ratio;
    in_basis_[basis_[row]] = false;
    in_basis_[entering] = true;
    basis_[row] = entering;
  }

  int nvars_;
  int nrows_;
  int ncols_ = 0;
  std::vector<std::vector<std::pair<int, T>>> cols_;
  std::vector<bool> artificial_;
  std::vector<T> cost_;
  std::vector<T> rhs_;
  std::vector<int> basis_;
  std::vector<bool> in_basis_;
  std::vector<T> binv_;
  std::vector<T> xb_;
};

template <class T>
SimplexResult<T> solve_simplex(const SimplexProblem<T>& problem,
                               long max_iterations = 200000) {
  RevisedSimplex<T> solver(problem);
  return solver.solve(max_iterations);
}

}  // namespace coflow
