#pragma once

#include "sparsecox/data_model.hpp"

#include <optional>

namespace sparsecox {

/// (S0, S1, S2) at (beta, t). `s1`/`s2` are restricted to `restrict` when given.
struct RiskSetStats {
  double s0 = 0.0;
  Vector s1;
  Matrix s2;        // only filled for order 2
  bool empty = true;  // no subject at risk; s0 == 0
};

/// l_n(beta), U_n(beta) and J_n(beta), possibly restricted to an index set.
struct ScoreHessian {
  double loglik = 0.0;
  Vector score;
  Matrix neg_hessian;
};

RiskSetStats risk_stats(const SurvivalDataset& ds, const Vector& beta, double t, int order,
                        const std::optional<IndexSet>& restrict = std::nullopt);

/// l_n(beta) = C_n(beta) / n. Throws NumericalError without events.
double log_partial_likelihood(const SurvivalDataset& ds, const Vector& beta);

Vector score(const SurvivalDataset& ds, const Vector& beta,
             const std::optional<IndexSet>& restrict = std::nullopt);

Matrix neg_hessian(const SurvivalDataset& ds, const Vector& beta,
                   const std::optional<IndexSet>& restrict = std::nullopt);

/// J_n(beta)[rows, cols]; cheaper than the full matrix when either set is small.
Matrix neg_hessian_block(const SurvivalDataset& ds, const Vector& beta, const IndexSet& rows,
                         const IndexSet& cols);

/// Loglik, score and J in one sweep; J is skipped when `with_hessian` is false.
ScoreHessian evaluate(const SurvivalDataset& ds, const Vector& beta,
                      const std::optional<IndexSet>& restrict, bool with_hessian);

/// U_n(beta, t): the score summed over events with time <= t.
Vector score_process(const SurvivalDataset& ds, const Vector& beta, double t);

}  // namespace sparsecox
