#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string_view>

namespace sparsecox::lp {

/// minimize c^T x  subject to  A x <= b,  x >= 0.
struct LinearProgram {
  Eigen::VectorXd objective;
  Eigen::MatrixXd constraints;
  Eigen::VectorXd rhs;
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

std::string_view to_string(LpStatus status);

struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  Eigen::VectorXd x;
  double objective_value = 0.0;
  std::size_t iterations = 0;
  /// Multipliers y <= 0 of A x <= b at the optimum; b^T y equals the optimal value.
  Eigen::VectorXd duals;
};

struct SimplexOptions {
  double pivot_tolerance = 1e-9;
  std::size_t max_iterations = 200000;
};

/// Two-phase dense tableau simplex with Bland's rule. Deterministic.
LpSolution solve_lp(const LinearProgram& lp, const SimplexOptions& options = {});

}  // namespace sparsecox::lp
