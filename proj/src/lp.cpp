#include "sparsecox/lp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace sparsecox::lp {

std::string_view to_string(LpStatus status) {
  switch (status) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Eigen::Index;

class Tableau {
 public:
  Tableau(const LinearProgram& lp, const SimplexOptions& opt) : opt_(opt) {
    rows_ = lp.constraints.rows();
    vars_ = lp.constraints.cols();
    sign_.assign(static_cast<size_t>(rows_), 1.0);
    Index artificial = 0;
    for (Index i = 0; i < rows_; ++i)
      if (lp.rhs[i] < 0.0) {
        sign_[static_cast<size_t>(i)] = -1.0;
        ++artificial;
      }
    art_begin_ = vars_ + rows_;
    cols_ = art_begin_ + artificial;
    t_ = RowMatrix::Zero(rows_, cols_ + 1);
    basis_.resize(static_cast<size_t>(rows_));
    Index a = art_begin_;
    for (Index i = 0; i < rows_; ++i) {
      const double s = sign_[static_cast<size_t>(i)];
      t_.row(i).head(vars_) = s * lp.constraints.row(i);
      t_(i, vars_ + i) = s;
      t_(i, cols_) = s * lp.rhs[i];
      if (s < 0.0) {
        t_(i, a) = 1.0;
        basis_[static_cast<size_t>(i)] = a++;
      } else {
        basis_[static_cast<size_t>(i)] = vars_ + i;
      }
    }
    active_.assign(static_cast<size_t>(rows_), true);
  }

  bool has_artificials() const { return cols_ > art_begin_; }

  // Runs simplex iterations on the current cost vector. Returns status.
  LpStatus optimize(const Eigen::VectorXd& cost, Index allowed_cols) {
    reduced_.resize(cols_);
    for (Index j = 0; j < cols_; ++j) reduced_[j] = cost[j];
    for (Index r = 0; r < rows_; ++r) {
      if (!active_[static_cast<size_t>(r)]) continue;
      const double cb = cost[basis_[static_cast<size_t>(r)]];
      if (cb != 0.0) reduced_ -= cb * t_.row(r).head(cols_).transpose();
    }
    value_ = 0.0;
    for (Index r = 0; r < rows_; ++r)
      if (active_[static_cast<size_t>(r)]) value_ += cost[basis_[static_cast<size_t>(r)]] * t_(r, cols_);

    while (true) {
      if (iterations_ >= opt_.max_iterations) return LpStatus::iteration_limit;
      Index enter = -1;
      for (Index j = 0; j < allowed_cols; ++j)
        if (reduced_[j] < -opt_.pivot_tolerance) {
          enter = j;
          break;
        }
      if (enter < 0) return LpStatus::optimal;

      Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Index r = 0; r < rows_; ++r) {
        if (!active_[static_cast<size_t>(r)]) continue;
        const double a = t_(r, enter);
        if (a <= opt_.pivot_tolerance) continue;
        const double ratio = t_(r, cols_) / a;
        if (leave < 0) {
          best = ratio;
          leave = r;
          continue;
        }
        const double slack = 1e-12 * (1.0 + std::abs(best));
        if (ratio < best - slack) {
          best = ratio;
          leave = r;
        } else if (ratio <= best + slack &&
                   basis_[static_cast<size_t>(r)] < basis_[static_cast<size_t>(leave)]) {
          leave = r;
        }
      }
      if (leave < 0) return LpStatus::unbounded;
      pivot(leave, enter);
      ++iterations_;
    }
  }

  // After phase I: pivot basic artificials out or drop redundant rows.
  void expel_artificials() {
    for (Index r = 0; r < rows_; ++r) {
      if (!active_[static_cast<size_t>(r)] || basis_[static_cast<size_t>(r)] < art_begin_) continue;
      Index col = -1;
      for (Index j = 0; j < art_begin_; ++j)
        if (std::abs(t_(r, j)) > opt_.pivot_tolerance) {
          col = j;
          break;
        }
      if (col >= 0) {
        pivot(r, col);
      } else {
        active_[static_cast<size_t>(r)] = false;
      }
    }
  }

  double value() const { return value_; }
  std::size_t iterations() const { return iterations_; }
  Index vars() const { return vars_; }
  Index cols() const { return cols_; }
  Index art_begin() const { return art_begin_; }

  Eigen::VectorXd primal() const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(vars_);
    for (Index r = 0; r < rows_; ++r) {
      if (!active_[static_cast<size_t>(r)]) continue;
      const Index b = basis_[static_cast<size_t>(r)];
      if (b < vars_) x[b] = t_(r, cols_);
    }
    return x;
  }

  // y_i = -(reduced cost of slack i); rows dropped as redundant get 0.
  Eigen::VectorXd duals() const {
    Eigen::VectorXd y(rows_);
    for (Index i = 0; i < rows_; ++i) y[i] = -reduced_[vars_ + i];
    return y;
  }

 private:
  void pivot(Index r, Index c) {
    const double piv = t_(r, c);
    t_.row(r) /= piv;
    for (Index k = 0; k < rows_; ++k) {
      if (k == r || !active_[static_cast<size_t>(k)]) continue;
      const double f = t_(k, c);
      if (f != 0.0) t_.row(k) -= f * t_.row(r);
    }
    const double f = reduced_[c];
    if (f != 0.0) {
      reduced_ -= f * t_.row(r).head(cols_).transpose();
      value_ += f * t_(r, cols_);
    }
    basis_[static_cast<size_t>(r)] = c;
  }

  SimplexOptions opt_;
  Index rows_ = 0, vars_ = 0, cols_ = 0, art_begin_ = 0;
  RowMatrix t_;
  std::vector<Index> basis_;
  std::vector<double> sign_;
  std::vector<bool> active_;
  Eigen::VectorXd reduced_;
  double value_ = 0.0;
  std::size_t iterations_ = 0;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const SimplexOptions& options) {
  const Index k = lp.constraints.rows();
  const Index m = lp.constraints.cols();
  if (k < 1 || m < 1) throw std::invalid_argument("LP needs at least one row and one column");
  if (lp.objective.size() != m || lp.rhs.size() != k)
    throw std::invalid_argument("LP dimension mismatch between objective, constraints and rhs");
  if (!lp.objective.allFinite() || !lp.constraints.allFinite() || !lp.rhs.allFinite())
    throw std::invalid_argument("LP entries must be finite");

  Tableau tab(lp, options);
  LpSolution sol;
  if (tab.has_artificials()) {
    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(tab.cols());
    phase1.tail(tab.cols() - tab.art_begin()).setOnes();
    const LpStatus st = tab.optimize(phase1, tab.cols());
    sol.iterations = tab.iterations();
    if (st == LpStatus::iteration_limit) {
      sol.status = st;
      return sol;
    }
    const double scale = 1.0 + lp.rhs.cwiseAbs().maxCoeff();
    if (tab.value() > 1e-9 * scale) {
      sol.status = LpStatus::infeasible;
      return sol;
    }
    tab.expel_artificials();
  }
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(tab.cols());
  cost.head(m) = lp.objective;
  sol.status = tab.optimize(cost, tab.art_begin());
  sol.iterations = tab.iterations();
  if (sol.status != LpStatus::optimal) return sol;
  sol.x = tab.primal();
  sol.objective_value = lp.objective.dot(sol.x);
  sol.duals = tab.duals();
  return sol;
}

}  // namespace sparsecox::lp
