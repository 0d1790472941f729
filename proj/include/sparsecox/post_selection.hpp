#pragma once

#include "sparsecox/dantzig.hpp"

#include <vector>

namespace sparsecox {

struct SelectedSupport {
  IndexSet indices;        // { j : |beta_hat_j| > threshold }
  double threshold = 0.0;  // gamma of the source fit
  Vector source_beta;      // Dantzig estimate the support was read from
};

/// Strict threshold rule on a converged fit; throws std::invalid_argument otherwise.
SelectedSupport select_support(const DantzigFit& fit);

enum class NewtonStart { dantzig, zero };

struct NewtonControl {
  NewtonStart start = NewtonStart::dantzig;
  int max_iterations = 200;
  double score_tolerance = 1e-8;
  double step_tolerance = 1e-6;
  /// Iterates with ||beta||_inf beyond this are treated as a monotone likelihood.
  double max_beta = 50.0;
};

struct WaldInterval {
  Index coordinate;
  double estimate;
  double lower;
  double upper;
};

struct RefitResult {
  SelectedSupport support;
  Vector beta2;          // zero off the support
  Matrix info_matrix;    // J_n restricted to the support at beta2
  Matrix covariance;     // info_matrix^{-1} / n
  double min_info_eigenvalue = 0.0;
  double loglik = 0.0;
  double score_residual = 0.0;  // ||U_n restricted||_inf at beta2
  std::vector<WaldInterval> wald_intervals;
  int newton_iterations = 0;
  bool converged = false;
  bool monotone_likelihood = false;
  bool restarted_from_zero = false;
  Index n = 0;
};

/**
 * Restricted maximum partial likelihood on the selected support via
 * Newton-Raphson with step halving. Divergence towards a monotone likelihood
 * is reported through `monotone_likelihood` rather than thrown. A singular
 * information matrix at a converged point throws NumericalError.
 */
RefitResult refit_mle(const SurvivalDataset& ds, const SelectedSupport& support,
                      const NewtonControl& ctrl = {});

/// beta2_j +- z_{(1+level)/2} * sqrt(covariance_jj) for each selected j.
std::vector<WaldInterval> wald_inference(const RefitResult& res, double level);

}  // namespace sparsecox
