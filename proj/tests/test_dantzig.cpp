#include <doctest.h>

#include "fixtures.hpp"
#include "sparsecox/dantzig.hpp"
#include "sparsecox/error.hpp"
#include "sparsecox/partial_likelihood.hpp"
#include "sparsecox/simulation.hpp"

#include <cmath>

using namespace sparsecox;

namespace {

void check_certificate(const SurvivalDataset& ds, const DantzigFit& fit) {
  if (!fit.converged) return;
  const double res = score(ds, fit.beta_hat).lpNorm<Eigen::Infinity>();
  CHECK(res <= fit.gamma * (1.0 + kFeasibilitySlack));
  CHECK(fit.feasibility_residual == doctest::Approx(res).epsilon(1e-12));
}

}  // namespace

TEST_CASE("gamma schedule") {
  TuningSchedule s;
  s.c_gamma = 1.0;
  CHECK(gamma_value(100, 8, s) == doctest::Approx(0.1 * std::log(8.0)).epsilon(1e-15));
  CHECK(gamma_value(100, 7, s) == doctest::Approx(0.1 * std::log(7.0)).epsilon(1e-15));
  s.explicit_gamma = 0.05;
  CHECK(gamma_value(3, 2, s) == 0.05);
  CHECK(gamma_value(100000, 5000, s) == 0.05);
  CHECK(gamma_value(400, 1000, TuningSchedule{}) == doctest::Approx(0.1727).epsilon(2e-4));
  CHECK_THROWS_AS(gamma_value(100, 1, TuningSchedule{}), std::invalid_argument);
  TuningSchedule bad;
  bad.zeta = 0.6;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = {};
  bad.alpha = 0.7;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = {};
  bad.c_gamma = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = {};
  bad.explicit_gamma = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("large gamma gives the zero estimate in one step") {
  const auto ds = fixture::d1();
  const double g0 = score(ds, Vector::Zero(2)).lpNorm<Eigen::Infinity>();
  for (double g : {g0, 2.0 * g0}) {
    const auto fit = fit_dantzig(ds, g);
    CHECK(fit.converged);
    CHECK(fit.outer_iterations == 1);
    CHECK(fit.beta_hat.cwiseAbs().maxCoeff() == 0.0);
  }
  std::mt19937_64 rng(5);
  const auto r = fixture::random_dataset(rng, 40, 150);
  const double gr = score(r, Vector::Zero(150)).lpNorm<Eigen::Infinity>();
  const auto fit = fit_dantzig(r, gr * 1.01);
  CHECK(fit.beta_hat.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("D1 at half the zero-score level matches the grid oracle") {
  const auto ds = fixture::d1();
  const double g = score(ds, Vector::Zero(2)).lpNorm<Eigen::Infinity>() / 2.0;
  const auto fit = fit_dantzig(ds, g);
  REQUIRE(fit.converged);
  check_certificate(ds, fit);
  CHECK(fit.beta_hat.lpNorm<1>() > 0.0);
  const auto [lb, ub] = oracle::dantzig_grid(fixture::to_sample(ds), g, 2.0);
  CHECK(fit.beta_hat.lpNorm<1>() >= lb - 5e-3);
  CHECK(fit.beta_hat.lpNorm<1>() <= ub + 5e-3);
}

TEST_CASE("small random instances match the grid oracle") {
  std::mt19937_64 rng(61);
  int compared = 0;
  for (int rep = 0; rep < 12; ++rep) {
    const int p = 2 + rep % 2;
    const int n = 15 + static_cast<int>(rng() % 16);
    const auto ds = fixture::random_dataset(rng, n, p);
    const double g0 = score(ds, Vector::Zero(p)).lpNorm<Eigen::Infinity>();
    const auto fit = fit_dantzig(ds, 0.4 * g0);
    if (!fit.converged) continue;
    check_certificate(ds, fit);
    const double r = fit.beta_hat.lpNorm<1>() + 0.5;
    const auto [lb, ub] = oracle::dantzig_grid(fixture::to_sample(ds), 0.4 * g0, r);
    CHECK(fit.beta_hat.lpNorm<1>() >= lb - 5e-3);
    CHECK(fit.beta_hat.lpNorm<1>() <= ub + 5e-3);
    ++compared;
  }
  CHECK(compared >= 10);
}

TEST_CASE("working set solver matches the dense solver") {
  GeneratorConfig cfg;
  cfg.n = 120;
  cfg.p = 160;
  cfg.seed = 3;
  const auto sim = generate(cfg);
  SolverControl dense, ws;
  dense.dense_threshold = 1000;
  ws.dense_threshold = 50;
  const double g = gamma_value(cfg.n, cfg.p, TuningSchedule{});
  const auto a = fit_dantzig(sim.data, g, dense);
  const auto b = fit_dantzig(sim.data, g, ws);
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  CHECK_FALSE(a.working_set);
  CHECK(b.working_set);
  check_certificate(sim.data, a);
  check_certificate(sim.data, b);
  CHECK(std::abs(a.beta_hat.lpNorm<1>() - b.beta_hat.lpNorm<1>()) <= 1e-6);
  CHECK((a.beta_hat - b.beta_hat).cwiseAbs().maxCoeff() <= 1e-5);
}

TEST_CASE("fits are deterministic and carry a trace") {
  GeneratorConfig cfg;
  cfg.n = 150;
  cfg.p = 30;
  cfg.seed = 12;
  const auto sim = generate(cfg);
  const auto a = fit_dantzig(sim.data, TuningSchedule{});
  const auto b = fit_dantzig(sim.data, TuningSchedule{});
  CHECK(a.beta_hat == b.beta_hat);
  CHECK(a.outer_iterations == b.outer_iterations);
  CHECK(a.trace.size() == static_cast<size_t>(a.outer_iterations));
  REQUIRE(a.converged);
  check_certificate(sim.data, a);
  CHECK(a.trace.back().l1_norm == doctest::Approx(a.beta_hat.lpNorm<1>()));
}

TEST_CASE("unconverged fits are reported") {
  GeneratorConfig cfg;
  cfg.n = 100;
  cfg.p = 20;
  cfg.signal = 2.0;
  cfg.seed = 4;
  const auto sim = generate(cfg);
  SolverControl ctrl;
  ctrl.max_outer = 1;
  const auto fit = fit_dantzig(sim.data, gamma_value(100, 20, TuningSchedule{}), ctrl);
  CHECK_FALSE(fit.converged);
  CHECK(fit.outer_iterations == 1);
}

TEST_CASE("infeasible linearization raises an error advising a larger gamma") {
  // more covariates than events: J has a null space that the score leaves
  Vector t(3);
  t << 0.2, 0.5, 0.9;
  Matrix z(3, 4);
  z << 1, 0, 0.5, -1, 0, 1, -0.5, 1, 1, 1, 0, 0;
  const auto ds = SurvivalDataset::from_matrix(t, {true, false, false}, z);
  try {
    const auto fit = fit_dantzig(ds, 1e-12);
    CHECK_FALSE(fit.converged);
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("gamma") != std::string::npos);
  }
}

TEST_CASE("gamma path") {
  const auto ds = fixture::d1();
  const double g0 = score(ds, Vector::Zero(2)).lpNorm<Eigen::Infinity>();
  auto single = gamma_path(ds, {1.5 * g0});
  REQUIRE(single.size() == 1);
  REQUIRE(single[0].fit);
  CHECK(single[0].fit->beta_hat.cwiseAbs().maxCoeff() == 0.0);

  auto dup = gamma_path(ds, {0.5 * g0, 0.5 * g0});
  REQUIRE(dup[0].fit);
  REQUIRE(dup[1].fit);
  CHECK((dup[0].fit->beta_hat - dup[1].fit->beta_hat).cwiseAbs().maxCoeff() <= 1e-9);

  const std::vector<double> gammas{0.9 * g0, 0.75 * g0, 0.6 * g0, 0.5 * g0, 0.4 * g0};
  const auto path = gamma_path(ds, gammas);
  REQUIRE(path.size() == gammas.size());
  double prev = -1.0;
  for (size_t k = 0; k < path.size(); ++k) {
    REQUIRE(path[k].fit);
    const double l1 = path[k].fit->beta_hat.lpNorm<1>();
    CHECK(l1 >= prev - 1e-8);  // gamma decreases along the path
    prev = l1;
    const auto cold = fit_dantzig(ds, gammas[k]);
    CHECK(std::abs(cold.beta_hat.lpNorm<1>() - l1) <= 1e-6);
  }
  CHECK_THROWS_AS(gamma_path(ds, {0.1, 0.2}), std::invalid_argument);
}

TEST_CASE("zero signal gives the zero estimate") {
  // p = 1000 keeps log p large enough for the default schedule to dominate
  // the null score maximum at n = 100
  int zeros = 0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    GeneratorConfig cfg;
    cfg.n = 100;
    cfg.p = 1000;
    cfg.sparsity = 0;
    cfg.seed = derive_seed(77, 0, static_cast<std::uint64_t>(r));
    const auto sim = generate(cfg);
    const auto fit = fit_dantzig(sim.data, TuningSchedule{});
    zeros += fit.converged && fit.beta_hat.cwiseAbs().maxCoeff() == 0.0;
  }
  MESSAGE("zero estimates: " << zeros << " / " << reps);
  CHECK(zeros >= 0.95 * reps);
}

TEST_CASE("l1 error decreases with n") {
  std::vector<double> medians;
  for (Index n : {100, 200, 400}) {
    std::vector<double> err;
    for (int r = 0; r < 25; ++r) {
      GeneratorConfig cfg;
      cfg.n = n;
      cfg.p = 50;
      cfg.seed = derive_seed(99, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(r));
      const auto sim = generate(cfg);
      const auto fit = fit_dantzig(sim.data, TuningSchedule{});
      REQUIRE(fit.converged);
      check_certificate(sim.data, fit);
      err.push_back((fit.beta_hat - sim.truth.beta0).lpNorm<1>());
    }
    medians.push_back(summarize(err).median);
  }
  MESSAGE("median l1 errors: " << medians[0] << " " << medians[1] << " " << medians[2]);
  CHECK(medians[1] < medians[0]);
  CHECK(medians[2] < medians[1]);
}
