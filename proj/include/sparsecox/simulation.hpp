#pragma once

#include "sparsecox/breslow.hpp"
#include "sparsecox/dantzig.hpp"
#include "sparsecox/post_selection.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sparsecox {

/// Cumulative baseline Lambda_0: rate * t, or (t / scale)^shape.
struct Baseline {
  enum class Kind { constant, weibull } kind = Kind::constant;
  double rate = 1.0;
  double shape = 1.0;
  double scale = 1.0;

  double cumulative(double t) const;
  double inverse_cumulative(double v) const;
  void validate() const;
};

struct Censoring {
  enum class Kind { administrative, uniform } kind = Kind::administrative;
  double c_max = 2.0;  // uniform(0, c_max), then capped at 1
};

enum class CovariateLaw { rademacher, uniform, ar1 };

struct GeneratorConfig {
  Index n = 100;
  Index p = 50;
  Index sparsity = 2;
  IndexSet support;                  // defaults to {0, ..., S-1}
  std::vector<double> beta0_values;  // defaults to +signal, -signal, +signal, ...
  double signal = 1.0;
  Baseline baseline;
  Censoring censoring;
  CovariateLaw covariates = CovariateLaw::rademacher;
  double ar1_rho = 0.5;  // ar1 only; clipped to [-1, 1]
  std::uint64_t seed = 1;

  void validate() const;
  IndexSet true_support() const;
  Vector beta0() const;
};

struct TruthRecord {
  Vector beta0;
  IndexSet support;
  Baseline baseline;
  Vector event_times;      // latent T_i
  Vector censoring_times;  // latent C_i (before the cap at 1)
  double event_rate = 0.0;
  double expected_events = 0.0;
  bool few_events = false;          // expected event count < 5
  bool outside_assumptions = false; // ar1 design
};

struct SimulatedData {
  SurvivalDataset data;
  TruthRecord truth;
};

/// Inverse-transform sampling T = Lambda_0^{-1}(E exp(-beta0^T Z)), E ~ Exp(1),
/// X = min(T, C, 1). Deterministic given the seed.
SimulatedData generate(const GeneratorConfig& cfg);

/// splitmix64-based stream derivation: independent seeds per (stream, index).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

/// Monte Carlo approximation of I_n(beta): mean of J_n(beta) over fresh samples.
Matrix population_info(const GeneratorConfig& cfg, const Vector& beta, Index r_inner);

struct EstimatorSettings {
  TuningSchedule schedule;
  SolverControl solver;
  NewtonControl newton;
  double level = 0.95;
};

struct StudySettings {
  std::vector<GeneratorConfig> grid;
  EstimatorSettings estimator;
  Index replicates = 100;
  std::uint64_t master_seed = 20240101;
  std::vector<double> probe_times{0.5};
  Index population_replicates = 0;  // > 0 adds kappa / epsilon_n diagnostics
};

struct SummaryStats {
  std::size_t count = 0;
  double mean = 0.0, sd = 0.0, median = 0.0, q90 = 0.0, min = 0.0, max = 0.0;
};

SummaryStats summarize(std::vector<double> values);

/// Kolmogorov-Smirnov distance between the sample and N(0, 1).
double ks_distance_normal(std::vector<double> sample);

double correlation(const std::vector<double>& a, const std::vector<double>& b);

struct CoordinateReport {
  Index coordinate;
  double beta0;
  std::size_t count;  // replicates with exact selection and a converged refit
  double mean;        // of (beta2_j - beta0_j) / se_j
  double sd;
  double ks;
  double coverage;
};

struct ProbeReport {
  double t;
  double lambda0;
  std::size_t count;
  double coverage_martingale;  // band from the martingale variance only
  double coverage_total;       // band including the variance from beta2
  double mean_error;           // mean of Lambda_hat(t) - Lambda_0(t)
  std::vector<double> correlation;  // corr(sqrt(n)(beta2_j - beta0_j), corrected hazard statistic)
};

struct PopulationDiagnostics {
  double kappa = 0.0;
  double bound_shape = 0.0;  // S gamma / kappa^2
  SummaryStats epsilon;      // ||I_n(beta0) - J_n(beta0)||_inf over replicates
};

struct McReport {
  GeneratorConfig config;
  double gamma = 0.0;
  Index replicates = 0;
  Index failures = 0;
  std::vector<std::string> failure_messages;
  double dantzig_converged_rate = 0.0;
  double selection_exact_rate = 0.0;
  double refit_converged_rate = 0.0;
  double mean_selected_size = 0.0;
  SummaryStats l1_dantzig;
  SummaryStats l1_refit;
  std::vector<CoordinateReport> normality;
  std::vector<ProbeReport> hazard;
  std::optional<PopulationDiagnostics> population;
};

/**
 * Runs every grid point: per replicate generate -> fit_dantzig ->
 * select_support -> refit_mle -> breslow_estimate. Replicate seeds come from
 * (master seed, grid index, replicate index), and aggregation happens in
 * replicate order, so reports do not depend on `threads`.
 * Throws NumericalError when more than 20% of a grid point's replicates fail.
 */
std::vector<McReport> run_mc_study(const StudySettings& settings, int threads = 1);

}  // namespace sparsecox
