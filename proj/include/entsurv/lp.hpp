#pragma once

// Dense two-phase revised simplex for small/medium LPs:
//   maximize c.x  s.t.  A_eq x = b_eq,  A_le x <= b_le,  x >= 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "entsurv/linalg.hpp"

namespace entsurv {

struct LinearConstraint {
  std::vector<std::pair<std::size_t, double>> terms;  // (variable, coefficient)
  double rhs = 0.0;
};

struct LinearProgram {
  std::vector<double> objective;  // maximize; one entry per variable
  std::vector<LinearConstraint> equalities;
  std::vector<LinearConstraint> inequalities;  // <=

  std::size_t num_vars() const noexcept { return objective.size(); }
  std::size_t add_variable(double cost) {
    objective.push_back(cost);
    return objective.size() - 1;
  }
  void add_le(std::vector<std::pair<std::size_t, double>> terms, double rhs) {
    inequalities.push_back({std::move(terms), rhs});
  }
  void add_eq(std::vector<std::pair<std::size_t, double>> terms, double rhs) {
    equalities.push_back({std::move(terms), rhs});
  }
};

struct LpSolution {
  std::vector<double> x;
  double objective = 0.0;
  double dual_objective = 0.0;
  std::size_t iterations = 0;
  std::vector<std::size_t> basic_variables;  // structural variables in the final basis
};

class LpInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LpUnbounded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

class Simplex {
 public:
  Simplex(const LinearProgram& lp, double feas_tol, double opt_tol)
      : feas_tol_(feas_tol), opt_tol_(opt_tol), n_struct_(lp.num_vars()) {
    for (const auto& c : lp.objective)
      if (!std::isfinite(c)) throw std::invalid_argument("solve_lp: non-finite objective coefficient");
    m_ = lp.equalities.size() + lp.inequalities.size();
    rows_.reserve(m_);
    for (const auto& c : lp.inequalities) add_row(c, true);
    for (const auto& c : lp.equalities) add_row(c, false);

    // Columns: structural, then one slack per inequality, then artificials where needed.
    cols_.assign(n_struct_, {});
    cost_.assign(n_struct_, 0.0);
    for (std::size_t j = 0; j < n_struct_; ++j) cost_[j] = lp.objective[j];
    for (std::size_t r = 0; r < m_; ++r)
      for (auto [j, v] : rows_[r].terms) cols_[j].push_back({r, v});
    basis_.assign(m_, 0);
    for (std::size_t r = 0; r < m_; ++r) {
      if (!rows_[r].slack) continue;
      double sign = rows_[r].flipped ? -1.0 : 1.0;
      std::size_t j = add_column({{r, sign}}, 0.0);
      if (!rows_[r].flipped) {
        basis_[r] = j;
        rows_[r].has_basis = true;
      }
    }
    first_artificial_ = cols_.size();
    for (std::size_t r = 0; r < m_; ++r) {
      if (rows_[r].has_basis) continue;
      basis_[r] = add_column({{r, 1.0}}, 0.0);
    }
    b_.resize(static_cast<Eigen::Index>(m_));
    for (std::size_t r = 0; r < m_; ++r) b_(static_cast<Eigen::Index>(r)) = rows_[r].rhs;
    in_basis_.assign(cols_.size(), false);
    for (std::size_t j : basis_) in_basis_[j] = true;
  }

  LpSolution run() {
    refactor();
    // Phase 1: maximize -sum(artificials).
    if (first_artificial_ < cols_.size()) {
      std::vector<double> phase1(cols_.size(), 0.0);
      for (std::size_t j = first_artificial_; j < cols_.size(); ++j) phase1[j] = -1.0;
      iterate(phase1, true);
      double infeas = 0.0;
      for (std::size_t r = 0; r < m_; ++r)
        if (basis_[r] >= first_artificial_) infeas += x_(static_cast<Eigen::Index>(r));
      double scale = 1.0;
      for (std::size_t r = 0; r < m_; ++r) scale = std::max(scale, std::abs(rows_[r].rhs));
      if (infeas > feas_tol_ * scale) throw LpInfeasible("LP infeasible (phase 1 residual " + std::to_string(infeas) + ")");
      drive_out_artificials();
    }
    std::vector<double> phase2(cols_.size(), 0.0);
    for (std::size_t j = 0; j < n_struct_; ++j) phase2[j] = cost_[j];
    iterate(phase2, false);

    LpSolution sol;
    sol.iterations = iterations_;
    sol.x.assign(n_struct_, 0.0);
    for (std::size_t r = 0; r < m_; ++r) {
      if (basis_[r] < n_struct_) {
        sol.x[basis_[r]] = std::max(0.0, x_(static_cast<Eigen::Index>(r)));
        sol.basic_variables.push_back(basis_[r]);
      }
    }
    std::sort(sol.basic_variables.begin(), sol.basic_variables.end());
    for (std::size_t j = 0; j < n_struct_; ++j) sol.objective += cost_[j] * sol.x[j];
    Eigen::RowVectorXd y = duals(phase2);
    double dual = 0.0;
    for (std::size_t r = 0; r < m_; ++r)
      dual += y(static_cast<Eigen::Index>(r)) * rows_[r].rhs;
    sol.dual_objective = dual;
    return sol;
  }

 private:
  struct Row {
    std::vector<std::pair<std::size_t, double>> terms;
    double rhs;
    bool slack;
    bool flipped;
    bool has_basis = false;
  };
  using Column = std::vector<std::pair<std::size_t, double>>;

  void add_row(const LinearConstraint& c, bool slack) {
    if (!std::isfinite(c.rhs)) throw std::invalid_argument("solve_lp: non-finite right-hand side");
    Row row{{}, c.rhs, slack, c.rhs < 0.0};
    for (auto [j, v] : c.terms) {
      if (j >= n_struct_) throw std::invalid_argument("solve_lp: constraint references unknown variable");
      if (!std::isfinite(v)) throw std::invalid_argument("solve_lp: non-finite constraint coefficient");
      if (v != 0.0) row.terms.push_back({j, row.flipped ? -v : v});
    }
    if (row.flipped) row.rhs = -row.rhs;
    rows_.push_back(std::move(row));
  }

  std::size_t add_column(Column col, double cost) {
    cols_.push_back(std::move(col));
    cost_.push_back(cost);
    return cols_.size() - 1;
  }

  void refactor() {
    const auto m = static_cast<Eigen::Index>(m_);
    Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t r = 0; r < m_; ++r)
      for (auto [i, v] : cols_[basis_[r]]) basis(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r)) = v;
    binv_ = m == 0 ? Eigen::MatrixXd() : DenseLu(basis, "simplex basis").inverse();
    x_ = m == 0 ? Eigen::VectorXd() : Eigen::VectorXd(binv_ * b_);
    since_refactor_ = 0;
  }

  Eigen::RowVectorXd duals(const std::vector<double>& c) const {
    Eigen::RowVectorXd cb(static_cast<Eigen::Index>(m_));
    for (std::size_t r = 0; r < m_; ++r) cb(static_cast<Eigen::Index>(r)) = c[basis_[r]];
    return cb * binv_;
  }

  double reduced_cost(const std::vector<double>& c, const Eigen::RowVectorXd& y, std::size_t j) const {
    double d = c[j];
    for (auto [i, v] : cols_[j]) d -= y(static_cast<Eigen::Index>(i)) * v;
    return d;
  }

  Eigen::VectorXd column(std::size_t j) const {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m_));
    for (auto [i, v] : cols_[j]) u += binv_.col(static_cast<Eigen::Index>(i)) * v;
    return u;
  }

  void pivot(std::size_t r, std::size_t j, const Eigen::VectorXd& u) {
    const auto ri = static_cast<Eigen::Index>(r);
    double theta = x_(ri) / u(ri);
    x_ -= theta * u;
    x_(ri) = theta;
    Eigen::RowVectorXd pivot_row = binv_.row(ri) / u(ri);
    binv_ -= u * pivot_row;
    binv_.row(ri) = pivot_row;
    in_basis_[basis_[r]] = false;
    basis_[r] = j;
    in_basis_[j] = true;
    ++iterations_;
    if (++since_refactor_ >= kRefactorEvery) refactor();
  }

  // Bland's rule: lowest-index improving column, lowest-index leaving variable among ratio ties.
  void iterate(const std::vector<double>& c, bool phase1) {
    const std::size_t limit = phase1 ? cols_.size() : first_artificial_;
    for (;;) {
      if (iterations_ > kMaxIterations) throw std::runtime_error("solve_lp: iteration limit exceeded");
      Eigen::RowVectorXd y = duals(c);
      std::size_t enter = cols_.size();
      for (std::size_t j = 0; j < limit; ++j) {
        if (in_basis_[j]) continue;
        if (reduced_cost(c, y, j) > opt_tol_) {
          enter = j;
          break;
        }
      }
      if (enter == cols_.size()) return;
      Eigen::VectorXd u = column(enter);
      std::size_t leave = m_;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < m_; ++r) {
        const auto ri = static_cast<Eigen::Index>(r);
        if (u(ri) <= kPivotEps) continue;
        double ratio = std::max(0.0, x_(ri)) / u(ri);
        if (ratio < best - 1e-12) {
          best = ratio;
          leave = r;
        } else if (ratio <= best + 1e-12 && basis_[r] < basis_[leave]) {
          leave = r;
        }
      }
      if (leave == m_) {
        if (phase1) throw std::runtime_error("solve_lp: phase 1 unbounded (internal error)");
        throw LpUnbounded("LP unbounded");
      }
      pivot(leave, enter, u);
    }
  }

  void drive_out_artificials() {
    for (std::size_t r = 0; r < m_; ++r) {
      if (basis_[r] < first_artificial_) continue;
      const auto ri = static_cast<Eigen::Index>(r);
      for (std::size_t j = 0; j < first_artificial_; ++j) {
        if (in_basis_[j]) continue;
        double entry = 0.0;
        for (auto [i, v] : cols_[j]) entry += binv_(ri, static_cast<Eigen::Index>(i)) * v;
        if (std::abs(entry) > 1e-9) {
          pivot(r, j, column(j));
          break;
        }
      }
      // Otherwise the row is redundant; its artificial stays basic at zero and never re-enters.
    }
  }

  static constexpr std::size_t kRefactorEvery = 50;
  static constexpr std::size_t kMaxIterations = 2'000'000;
  static constexpr double kPivotEps = 1e-11;

  double feas_tol_, opt_tol_;
  std::size_t n_struct_, m_ = 0, first_artificial_ = 0;
  std::vector<Row> rows_;
  std::vector<Column> cols_;
  std::vector<double> cost_;
  std::vector<std::size_t> basis_;
  std::vector<bool> in_basis_;
  Eigen::VectorXd b_, x_;
  Eigen::MatrixXd binv_;
  std::size_t iterations_ = 0, since_refactor_ = 0;
};

}  // namespace detail

/// Returns a basic optimal solution. Throws LpInfeasible or LpUnbounded.
inline LpSolution solve_lp(const LinearProgram& lp, double feas_tol = 1e-8, double opt_tol = 1e-7) {
  return detail::Simplex(lp, feas_tol, opt_tol).run();
}

/// Largest constraint violation of x (for checks and tests).
inline double lp_violation(const LinearProgram& lp, const std::vector<double>& x) {
  double worst = 0.0;
  for (double v : x) worst = std::max(worst, -v);
  auto lhs = [&](const LinearConstraint& c) {
    double s = 0.0;
    for (auto [j, v] : c.terms) s += v * x[j];
    return s;
  };
  for (const auto& c : lp.inequalities) worst = std::max(worst, lhs(c) - c.rhs);
  for (const auto& c : lp.equalities) worst = std::max(worst, std::abs(lhs(c) - c.rhs));
  return worst;
}

}  // namespace entsurv
