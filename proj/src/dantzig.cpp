#include "sparsecox/dantzig.hpp"
#include "sparsecox/error.hpp"
#include "sparsecox/kernels.hpp"
#include "sparsecox/partial_likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace sparsecox {

void TuningSchedule::validate() const {
  if (explicit_gamma) {
    if (!(*explicit_gamma > 0.0)) throw std::invalid_argument("explicit gamma must be positive");
    return;
  }
  if (!(alpha > 0.0 && alpha <= 0.5)) throw std::invalid_argument("alpha must lie in (0, 1/2]");
  if (!(zeta > 0.0 && zeta < alpha)) throw std::invalid_argument("zeta must lie in (0, alpha)");
  if (!(c_gamma > 0.0)) throw std::invalid_argument("c_gamma must be positive");
}

double gamma_value(Index n, Index p, const TuningSchedule& sched) {
  sched.validate();
  if (sched.explicit_gamma) return *sched.explicit_gamma;
  if (n < 1) throw std::invalid_argument("gamma schedule needs n >= 1");
  if (p < 2) throw std::invalid_argument("gamma schedule needs p >= 2 (log p degenerate)");
  return sched.c_gamma * std::pow(static_cast<double>(n), -sched.alpha) *
         std::log(static_cast<double>(p));
}

namespace {

// Columns of J_n(beta_k), computed lazily for the working-set solver.
class HessianColumns {
 public:
  HessianColumns(const SurvivalDataset& ds, const Vector& beta)
      : ds_(ds),
        all_(kernels::all_indices(ds.p())),
        sweep_(kernels::make_sweep(ds, beta)),
        means_(kernels::event_means(ds, sweep_, all_)) {}

  const Vector& score() {
    if (score_.size() == 0) score_ = kernels::score(ds_, means_, all_);
    return score_;
  }

  void ensure(const IndexSet& idx) {
    IndexSet missing;
    for (Index j : idx)
      if (!cols_.count(j)) missing.push_back(j);
    if (missing.empty()) return;
    Matrix col_means(means_.rows(), static_cast<Index>(missing.size()));
    for (size_t k = 0; k < missing.size(); ++k)
      col_means.col(static_cast<Index>(k)) = means_.col(missing[k]);
    const Matrix block = kernels::hessian_block(ds_, sweep_, all_, means_, missing, col_means);
    for (size_t k = 0; k < missing.size(); ++k)
      cols_.emplace(missing[k], block.col(static_cast<Index>(k)));
  }

  const Vector& col(Index j) const { return cols_.at(j); }

 private:
  const SurvivalDataset& ds_;
  IndexSet all_;
  kernels::RiskSweep sweep_;
  Matrix means_;
  Vector score_;
  std::map<Index, Vector> cols_;
};

struct StepResult {
  Vector beta;
  std::size_t lp_iterations = 0;
};

[[noreturn]] void lp_failure(lp::LpStatus status, int outer, double gamma) {
  if (status == lp::LpStatus::infeasible)
    throw NumericalError("linearized Dantzig program infeasible at outer iteration " +
                         std::to_string(outer) + " with gamma = " + format_double(gamma) +
                         "; try a larger gamma");
  throw NumericalError("Dantzig LP ended with status " + std::string(lp::to_string(status)) +
                       " at outer iteration " + std::to_string(outer));
}

// min 1^T (x+ + x-)  s.t.  J_{R,W}(x+ - x-) <= g_R + gamma,  -J_{R,W}(x+ - x-) <= gamma - g_R.
lp::LinearProgram build_lp(const Matrix& j_rw, const Vector& g_r, double gamma) {
  const Index r = j_rw.rows();
  const Index w = j_rw.cols();
  lp::LinearProgram prog;
  prog.objective = Vector::Ones(2 * w);
  prog.constraints.resize(2 * r, 2 * w);
  prog.constraints.topLeftCorner(r, w) = j_rw;
  prog.constraints.topRightCorner(r, w) = -j_rw;
  prog.constraints.bottomLeftCorner(r, w) = -j_rw;
  prog.constraints.bottomRightCorner(r, w) = j_rw;
  prog.rhs.resize(2 * r);
  prog.rhs.head(r) = g_r.array() + gamma;
  prog.rhs.tail(r) = gamma - g_r.array();
  return prog;
}

StepResult dense_step(const Vector& beta_k, const Vector& u, const Matrix& j, double gamma,
                      const SolverControl& ctrl, int outer) {
  const Index p = beta_k.size();
  const Vector g = u + j * beta_k;
  const auto sol = lp::solve_lp(build_lp(j, g, gamma), ctrl.simplex);
  if (sol.status != lp::LpStatus::optimal) lp_failure(sol.status, outer, gamma);
  return {sol.x.head(p) - sol.x.tail(p), sol.iterations};
}

// Row/column generation: solve over rows R and columns W, then add rows the
// candidate violates and columns with negative reduced cost until neither
// exists, which certifies optimality for the full program.
StepResult working_set_step(HessianColumns& hc, const Vector& beta_k, double gamma,
                            const SolverControl& ctrl, int outer) {
  const Index p = beta_k.size();
  const Vector& u = hc.score();
  IndexSet support;
  for (Index j = 0; j < p; ++j)
    if (beta_k[j] != 0.0) support.push_back(j);
  hc.ensure(support);
  Vector g = u;
  for (Index j : support) g += hc.col(j) * beta_k[j];

  const double tol = gamma * 1e-9 + 1e-12;
  std::vector<char> in_rows(static_cast<size_t>(p), 0), in_cols(static_cast<size_t>(p), 0);
  for (Index j : support) in_rows[static_cast<size_t>(j)] = in_cols[static_cast<size_t>(j)] = 1;
  for (Index j = 0; j < p; ++j)
    if (std::abs(g[j]) > 0.9 * gamma) in_rows[static_cast<size_t>(j)] = in_cols[static_cast<size_t>(j)] = 1;

  StepResult out;
  while (true) {
    IndexSet rows, cols;
    for (Index j = 0; j < p; ++j) {
      if (in_rows[static_cast<size_t>(j)]) rows.push_back(j);
      if (in_cols[static_cast<size_t>(j)]) cols.push_back(j);
    }
    Vector beta = Vector::Zero(p);
    Vector y_diff = Vector::Zero(static_cast<Index>(rows.size()));
    if (!rows.empty() && !cols.empty()) {
      hc.ensure(cols);
      Matrix j_rw(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
      for (size_t b = 0; b < cols.size(); ++b) {
        const Vector& c = hc.col(cols[b]);
        for (size_t a = 0; a < rows.size(); ++a)
          j_rw(static_cast<Index>(a), static_cast<Index>(b)) = c[rows[a]];
      }
      Vector g_r(static_cast<Index>(rows.size()));
      for (size_t a = 0; a < rows.size(); ++a) g_r[static_cast<Index>(a)] = g[rows[a]];
      const auto sol = lp::solve_lp(build_lp(j_rw, g_r, gamma), ctrl.simplex);
      if (sol.status != lp::LpStatus::optimal) lp_failure(sol.status, outer, gamma);
      out.lp_iterations += sol.iterations;
      const Index w = static_cast<Index>(cols.size());
      const Index r = static_cast<Index>(rows.size());
      for (size_t b = 0; b < cols.size(); ++b)
        beta[cols[b]] = sol.x[static_cast<Index>(b)] - sol.x[w + static_cast<Index>(b)];
      y_diff = sol.duals.head(r) - sol.duals.tail(r);
    }

    // Primal check on every row.
    Vector resid = g;
    for (Index j : cols)
      if (beta[j] != 0.0) resid -= hc.col(j) * beta[j];
    std::vector<std::pair<double, Index>> add_rows;
    for (Index j = 0; j < p; ++j)
      if (!in_rows[static_cast<size_t>(j)] && std::abs(resid[j]) > gamma + tol)
        add_rows.emplace_back(std::abs(resid[j]) - gamma, j);

    // Dual check on every column outside W: reduced costs 1 -/+ (J_{R,j})^T y_diff.
    std::vector<std::pair<double, Index>> add_cols;
    if (!rows.empty()) {
      hc.ensure(rows);
      Vector v = Vector::Zero(p);
      for (size_t a = 0; a < rows.size(); ++a)
        if (y_diff[static_cast<Index>(a)] != 0.0) v += hc.col(rows[a]) * y_diff[static_cast<Index>(a)];
      for (Index j = 0; j < p; ++j)
        if (!in_cols[static_cast<size_t>(j)] && std::abs(v[j]) > 1.0 + 1e-9)
          add_cols.emplace_back(std::abs(v[j]) - 1.0, j);
    }
    if (add_rows.empty() && add_cols.empty()) {
      out.beta = beta;
      return out;
    }
    const size_t cap = std::max<size_t>(10, cols.size());
    auto take = [&](std::vector<std::pair<double, Index>>& list, std::vector<char>& flags) {
      std::sort(list.begin(), list.end(),
                [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
      for (size_t k = 0; k < std::min(cap, list.size()); ++k) {
        flags[static_cast<size_t>(list[k].second)] = 1;
      }
    };
    // A violated row j pairs naturally with variable j.
    take(add_rows, in_rows);
    for (const auto& [gap, j] : add_rows) in_cols[static_cast<size_t>(j)] = 1;
    take(add_cols, in_cols);
    for (const auto& [gap, j] : add_cols) in_rows[static_cast<size_t>(j)] = 1;
  }
}

}  // namespace

DantzigFit fit_dantzig(const SurvivalDataset& ds, double gamma, const SolverControl& ctrl,
                       const std::optional<Vector>& start) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  if (ds.event_count() == 0) throw NumericalError("Dantzig selector needs at least one event");
  const Index p = ds.p();
  DantzigFit fit;
  fit.gamma = gamma;
  fit.working_set = p > ctrl.dense_threshold && !ds.time_varying();
  Vector beta = start ? *start : Vector::Zero(p);
  if (beta.size() != p) throw std::invalid_argument("start vector dimension mismatch");

  const double limit = gamma * (1.0 + kFeasibilitySlack);
  for (int outer = 1; outer <= ctrl.max_outer; ++outer) {
    StepResult step;
    if (fit.working_set) {
      HessianColumns hc(ds, beta);
      step = working_set_step(hc, beta, gamma, ctrl, outer);
    } else {
      const auto ev = evaluate(ds, beta, std::nullopt, true);
      step = dense_step(beta, ev.score, ev.neg_hessian, gamma, ctrl, outer);
    }
    const double change = (step.beta - beta).lpNorm<1>();
    beta = step.beta;
    const double resid = score(ds, beta).lpNorm<Eigen::Infinity>();
    fit.trace.push_back({beta.lpNorm<1>(), resid, step.lp_iterations});
    fit.outer_iterations = outer;
    fit.feasibility_residual = resid;
    if (change <= ctrl.tol_step && resid <= limit) {
      fit.converged = true;
      break;
    }
  }
  fit.beta_hat = beta;
  return fit;
}

DantzigFit fit_dantzig(const SurvivalDataset& ds, const TuningSchedule& sched,
                       const SolverControl& ctrl) {
  return fit_dantzig(ds, gamma_value(ds.n(), ds.p(), sched), ctrl);
}

std::vector<PathEntry> gamma_path(const SurvivalDataset& ds, const std::vector<double>& gammas,
                                  const SolverControl& ctrl) {
  for (size_t k = 0; k < gammas.size(); ++k) {
    if (!(gammas[k] > 0.0)) throw std::invalid_argument("gamma path values must be positive");
    if (k > 0 && gammas[k] > gammas[k - 1])
      throw std::invalid_argument("gamma path must be descending");
  }
  std::vector<PathEntry> out;
  std::optional<Vector> warm;
  for (double g : gammas) {
    PathEntry entry;
    entry.gamma = g;
    try {
      entry.fit = fit_dantzig(ds, g, ctrl, warm);
      warm = entry.fit->beta_hat;
    } catch (const std::exception& e) {
      entry.error = e.what();
    }
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace sparsecox
