#pragma once

#include "sparsecox/post_selection.hpp"

#include <optional>
#include <vector>

namespace sparsecox {

/**
 * Breslow-type cumulative baseline hazard at a fixed coefficient vector.
 * All series are indexed by event (ascending time).
 *  - jumps[e]      1 / S0(beta, t_e)
 *  - cumulative[e] Lambda_hat(t_e)
 *  - variance[e]   n * sum_{t_f <= t_e} jumps[f]^2, the plug-in variance of
 *                  sqrt(n) (Lambda_hat - Lambda_0) from the martingale part
 *  - drift         H_hat(t_e) = -sum_{t_f <= t_e} S1_T / S0^2 over the support
 *  - total_variance variance + n * H^T Cov(beta2) H, including the estimation
 *                  of beta (empty without a covariance)
 */
struct HazardEstimate {
  std::vector<double> jump_times;
  std::vector<double> jumps;
  std::vector<double> cumulative;
  std::vector<double> variance;
  std::vector<Vector> drift;
  std::vector<double> total_variance;
  IndexSet support;
  Vector beta;
  Index n = 0;
  /// Largest observed time; term (III) of the error decomposition vanishes for t <= horizon.
  double risk_horizon = 0.0;

  /// Index of the last jump at or before t, or -1.
  Index position(double t) const;
  double cumulative_at(double t) const;
  double variance_at(double t) const;
  double total_variance_at(double t) const;
  Vector drift_at(double t) const;
};

HazardEstimate breslow_estimate(const SurvivalDataset& ds, const RefitResult& res);

/// Variant at caller-provided coefficients; `covariance` (|support| square)
/// enables the total-variance column.
HazardEstimate breslow_estimate(const SurvivalDataset& ds, const Vector& beta,
                                const IndexSet& support = {},
                                const std::optional<Matrix>& covariance = std::nullopt);

/// Plug-in variance of sqrt(n)(Lambda_hat(t) - Lambda_0(t)).
double variance_function(const HazardEstimate& est, double t);

/// H_hat(beta2, t) over the selected support.
Vector drift_vector(const HazardEstimate& est, double t);

enum class BandVariance { martingale, total };

struct HazardInterval {
  double t;
  double cumulative;
  double lower;
  double upper;
};

/// Pointwise Lambda_hat(t) +- z sqrt(var(t)/n) at each jump, floored at zero.
std::vector<HazardInterval> hazard_confidence_band(const HazardEstimate& est, double level,
                                                   BandVariance kind = BandVariance::martingale);

/// Pointwise interval at an arbitrary t in [0, 1].
HazardInterval hazard_interval(const HazardEstimate& est, double t, double level,
                               BandVariance kind = BandVariance::martingale);

/// `t,lambda_jump,Lambda,var,lo,hi` (+ `total_var,total_lo,total_hi` when requested).
/// Times are reported on the original axis via `time_scale`.
std::string format_hazard_csv(const HazardEstimate& est, double level, double time_scale = 1.0,
                              bool with_total = false);

}  // namespace sparsecox
