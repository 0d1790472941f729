#pragma once

#include "oracles.hpp"
#include "sparsecox/data_model.hpp"
#include "sparsecox/lp.hpp"

#include <random>

namespace fixture {

// Three subjects: (0.2, event, (1,0)), (0.5, event, (0,1)), (0.9, censored, (1,1)).
inline sparsecox::SurvivalDataset d1() {
  sparsecox::Vector t(3);
  t << 0.2, 0.5, 0.9;
  sparsecox::Matrix z(3, 2);
  z << 1, 0, 0, 1, 1, 1;
  return sparsecox::SurvivalDataset::from_matrix(t, {true, true, false}, z);
}

inline oracle::Sample to_sample(const sparsecox::SurvivalDataset& ds) {
  oracle::Sample s;
  for (sparsecox::Index i = 0; i < ds.n(); ++i) {
    s.x.push_back(ds.time(i));
    s.d.push_back(ds.event(i) ? 1 : 0);
  }
  s.z = ds.covariates();
  return s;
}

/// Continuous times (no ties), uniform covariates in [-1, 1], ~70% events.
inline sparsecox::SurvivalDataset random_dataset(std::mt19937_64& rng, int n, int p) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  sparsecox::Vector t(n);
  std::vector<bool> ev(static_cast<size_t>(n));
  sparsecox::Matrix z(n, p);
  for (int i = 0; i < n; ++i) {
    t[i] = 0.01 + 0.99 * u(rng);
    ev[static_cast<size_t>(i)] = u(rng) < 0.7;
    for (int j = 0; j < p; ++j) z(i, j) = 2.0 * u(rng) - 1.0;
  }
  ev[0] = true;
  return sparsecox::SurvivalDataset::from_matrix(t, ev, z);
}

inline sparsecox::Vector random_beta(std::mt19937_64& rng, int p, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  sparsecox::Vector b(p);
  for (int j = 0; j < p; ++j) b[j] = u(rng);
  return b;
}

/// Feasible and bounded: the last row caps the sum of x.
inline sparsecox::lp::LinearProgram random_lp(std::mt19937_64& rng, int m, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  sparsecox::lp::LinearProgram lp;
  lp.objective = Eigen::VectorXd(n);
  lp.constraints = Eigen::MatrixXd(m, n);
  for (int j = 0; j < n; ++j) lp.objective[j] = u(rng);
  for (int i = 0; i < m - 1; ++i)
    for (int j = 0; j < n; ++j) lp.constraints(i, j) = u(rng);
  lp.constraints.row(m - 1).setOnes();
  Eigen::VectorXd x0(n);
  for (int j = 0; j < n; ++j) x0[j] = 0.5 * (u(rng) + 1.0);
  lp.rhs = lp.constraints * x0;
  for (int i = 0; i < m - 1; ++i) lp.rhs[i] += 0.5 * (u(rng) + 1.0) - 0.25;
  lp.rhs[m - 1] = 10.0;
  return lp;
}

inline sparsecox::Matrix random_psd(std::mt19937_64& rng, int p, int rank) {
  std::normal_distribution<double> g;
  sparsecox::Matrix a(p, rank);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < rank; ++j) a(i, j) = g(rng);
  return a * a.transpose() / rank;
}

}  // namespace fixture
