#pragma once

#include "sparsecox/breslow.hpp"

#include <cstdint>

namespace sparsecox {

/// Matrix and support defining the cone {h : ||h_{T^c}||_1 <= ||h_T||_1}.
struct ConeProblem {
  Matrix matrix;
  IndexSet support;
};

enum class KappaMethod { exact_orthant, sampled };

struct KappaResult {
  double value = 0.0;
  bool upper_bound = false;  // sampled results only bound the infimum from above
  Vector minimizer;          // scaled to ||h_T||_1 = 1
  int subproblems = 0;
  int max_iterations_used = 0;
};

inline constexpr Index kMaxExactSparsity = 12;

struct KappaOptions {
  int max_iterations = 10000;
  double tolerance = 1e-8;
  int samples = 2000;
  std::uint64_t seed = 0x5eed;
};

/**
 * Compatibility factor
 *   kappa(T; M) = inf_{h in cone, h != 0} sqrt(S) (h^T M h)^{1/2} / ||h_T||_1.
 * exact_orthant fixes ||h_T||_1 = 1, enumerates sign patterns on T and solves
 * each convex QP by accelerated projected gradient (step 1/L).
 */
KappaResult compatibility_factor(const ConeProblem& prob, KappaMethod method,
                                 const KappaOptions& opt = {});

/// max_{i,j} |A_ij - B_ij|.
double matrix_sup_distance(const Matrix& a, const Matrix& b);

/// M_hat_i(1) = D_i - sum_{t_e <= X_i} exp(beta^T Z_i(t_e)) dLambda_hat(t_e).
Vector martingale_residuals(const SurvivalDataset& ds, const HazardEstimate& est);
Vector martingale_residuals(const SurvivalDataset& ds, const RefitResult& res,
                            const HazardEstimate& est);

/// Euclidean projection onto {x >= 0, sum x = radius}.
Vector project_simplex(const Vector& v, double radius = 1.0);
/// Euclidean projection onto {||x||_1 <= radius}.
Vector project_l1_ball(const Vector& v, double radius = 1.0);

}  // namespace sparsecox
