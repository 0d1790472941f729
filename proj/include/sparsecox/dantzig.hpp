#pragma once

#include "sparsecox/data_model.hpp"
#include "sparsecox/lp.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sparsecox {

/// gamma = c_gamma * n^{-alpha} * log p unless `explicit_gamma` is set.
/// `zeta` only parameterizes the growth regime log p = O(n^zeta).
struct TuningSchedule {
  double alpha = 0.5;
  double zeta = 0.25;
  double c_gamma = 0.5;
  std::optional<double> explicit_gamma;

  void validate() const;
};

struct SolverControl {
  int max_outer = 50;
  double tol_step = 1e-7;
  /// Above this dimension the LP is solved over a growing working set of
  /// rows and columns instead of the full 2p x 2p program.
  Index dense_threshold = 100;
  lp::SimplexOptions simplex;
};

struct DantzigIteration {
  double l1_norm;
  double residual;  // ||U_n(beta)||_inf after the step
  std::size_t lp_iterations;
};

struct DantzigFit {
  Vector beta_hat;
  double gamma = 0.0;
  int outer_iterations = 0;
  double feasibility_residual = 0.0;
  bool converged = false;
  bool working_set = false;
  std::vector<DantzigIteration> trace;
};

/// Relative slack on the exact constraint ||U_n(beta)||_inf <= gamma.
inline constexpr double kFeasibilitySlack = 1e-6;

double gamma_value(Index n, Index p, const TuningSchedule& sched);

/**
 * Dantzig selector: argmin ||beta||_1 subject to ||U_n(beta)||_inf <= gamma,
 * by sequential linearization of the score around the current iterate.
 * Each step solves the linear program
 *   min ||b||_1  s.t.  ||U_n(b_k) - J_n(b_k)(b - b_k)||_inf <= gamma.
 * Convergence is declared on the exact nonlinear constraint.
 * Throws NumericalError when a linearized program is infeasible.
 */
DantzigFit fit_dantzig(const SurvivalDataset& ds, double gamma, const SolverControl& ctrl = {},
                       const std::optional<Vector>& start = std::nullopt);
DantzigFit fit_dantzig(const SurvivalDataset& ds, const TuningSchedule& sched,
                       const SolverControl& ctrl = {});

struct PathEntry {
  double gamma = 0.0;
  std::optional<DantzigFit> fit;
  std::string error;  // non-empty when the fit failed
};

/// One fit per gamma (descending), each warm-started from the previous estimate.
std::vector<PathEntry> gamma_path(const SurvivalDataset& ds, const std::vector<double>& gammas,
                                  const SolverControl& ctrl = {});

}  // namespace sparsecox
