#pragma once

// Risk-set kernels behind the partial likelihood.
//
// Two families live here:
//  * the reference kernels evaluate every risk-set sum directly from its
//    definition, one event time at a time (O(d n p^2), time-varying paths
//    supported). They are the ground truth for tests and the fallback for
//    step covariates.
//  * the sweep kernels share one descending-time pass over the sample and
//    compute per-coordinate quantities independently, which lets the
//    coordinate loops run under OpenMP. They need constant covariates.
//
// Both parallel and serial sweep variants perform identical arithmetic per
// output entry, so results do not depend on the thread count.

#include "sparsecox/data_model.hpp"

namespace sparsecox::kernels {

/// Largest |beta^T Z| accepted before exp() is considered divergent.
inline constexpr double kMaxLinearPredictor = 700.0;

/// Shared per-beta state of one descending sweep.
struct RiskSweep {
  Vector eta;            // beta^T Z_i
  double shift = 0.0;    // max_i eta_i; all weights are scaled by exp(-shift)
  Vector weight;         // exp(eta_i - shift)
  Vector s0;             // shifted S0 at each event (ascending event order)
  std::vector<Index> at_risk_end;  // #subjects in descending order with X >= t_e
  Vector inv_s0_cum;     // per subject: sum_{t_e <= X_i} 1 / s0_e (shifted)
};

void check_linear_predictor(const Vector& eta);

/// eta = Z beta, skipping zero coefficients. Throws NumericalError on overflow.
Vector linear_predictor(const SurvivalDataset& ds, const Vector& beta);

RiskSweep make_sweep(const SurvivalDataset& ds, const Vector& beta);

/// Risk-set means S1_j / S0 at every event, d x |cols|.
Matrix event_means(const SurvivalDataset& ds, const RiskSweep& sw, const IndexSet& cols);
Matrix event_means_serial(const SurvivalDataset& ds, const RiskSweep& sw, const IndexSet& cols);

/// l_n(beta) from a sweep.
double loglik(const SurvivalDataset& ds, const RiskSweep& sw);

/// U_n(beta) restricted to `cols` given the matching mean matrix.
Vector score(const SurvivalDataset& ds, const Matrix& means, const IndexSet& cols);

/**
 * Block J_n(beta)[rows, cols] given the mean matrices for `rows` and `cols`.
 * Uses J = (1/n) [ Z^T diag(w_i c_i) Z - M^T M ], with c_i the cumulative
 * inverse S0 over events the subject was at risk for.
 */
Matrix hessian_block(const SurvivalDataset& ds, const RiskSweep& sw, const IndexSet& rows,
                     const Matrix& row_means, const IndexSet& cols, const Matrix& col_means);
Matrix hessian_block_serial(const SurvivalDataset& ds, const RiskSweep& sw,
                            const IndexSet& rows, const Matrix& row_means,
                            const IndexSet& cols, const Matrix& col_means);

/// Direct-definition evaluation at one time point.
struct ReferenceStats {
  double s0 = 0.0;
  Vector s1;
  Matrix s2;
  Index at_risk = 0;
};
ReferenceStats reference_risk_stats(const SurvivalDataset& ds, const Vector& beta, double t,
                                    int order);

struct ReferenceEvaluation {
  double loglik = 0.0;
  Vector score;
  Matrix neg_hessian;
};
/// Full loglik/score/J by summing the definitions event by event; `truncate`
/// keeps only events with time <= truncate.
ReferenceEvaluation reference_evaluate(const SurvivalDataset& ds, const Vector& beta,
                                       bool with_hessian, double truncate = 1.0);

IndexSet all_indices(Index p);

}  // namespace sparsecox::kernels
