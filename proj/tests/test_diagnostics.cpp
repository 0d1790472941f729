#include <doctest.h>

#include "fixtures.hpp"
#include "sparsecox/diagnostics.hpp"
#include "sparsecox/partial_likelihood.hpp"
#include "sparsecox/simulation.hpp"

#include <cmath>

using namespace sparsecox;

namespace {

using fixture::random_psd;

double kappa(const Matrix& m, const IndexSet& t, KappaMethod method = KappaMethod::exact_orthant) {
  return compatibility_factor({m, t}, method).value;
}

}  // namespace

TEST_CASE("identity and scaled identity") {
  for (const IndexSet& t : {IndexSet{0}, IndexSet{1, 3}, IndexSet{0, 2, 4}, IndexSet{0, 1, 2, 3, 4, 5}}) {
    CHECK(kappa(Matrix::Identity(6, 6), t) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(kappa(2.25 * Matrix::Identity(6, 6), t) == doctest::Approx(1.5).epsilon(1e-6));
  }
  const auto r = compatibility_factor({Matrix::Identity(4, 4), {0, 1}}, KappaMethod::exact_orthant);
  CHECK_FALSE(r.upper_bound);
  CHECK(r.subproblems == 2);
  CHECK(r.minimizer.head(2).cwiseAbs().sum() == doctest::Approx(1.0));
}

TEST_CASE("scale equivariance") {
  std::mt19937_64 rng(91);
  for (int rep = 0; rep < 6; ++rep) {
    const Matrix m = random_psd(rng, 6, 6);
    const IndexSet t{0, 3};
    const double k = kappa(m, t);
    CHECK(kappa(4.0 * m, t) == doctest::Approx(2.0 * k).epsilon(1e-7).scale(1.0));
    CHECK(kappa(0.25 * m, t) == doctest::Approx(0.5 * k).epsilon(1e-7).scale(1.0));
  }
}

TEST_CASE("single support coordinate matches the face enumeration oracle") {
  std::mt19937_64 rng(97);
  for (int rep = 0; rep < 25; ++rep) {
    const Matrix m = random_psd(rng, 4, 4);
    const int s = static_cast<int>(rng() % 4);
    const double k = kappa(m, {s});
    CHECK(k == doctest::Approx(oracle::kappa_single_support(m, s)).epsilon(1e-3).scale(1.0));
  }
}

TEST_CASE("monotone in the PSD order") {
  std::mt19937_64 rng(101);
  for (int rep = 0; rep < 6; ++rep) {
    const Matrix m1 = random_psd(rng, 5, 3);
    const Matrix m2 = m1 + random_psd(rng, 5, 2);
    const IndexSet t{1, 2};
    CHECK(kappa(m1, t) <= kappa(m2, t) + 1e-7);
  }
}

TEST_CASE("sampled method bounds the exact value from above") {
  std::mt19937_64 rng(103);
  for (int rep = 0; rep < 5; ++rep) {
    const Matrix m = random_psd(rng, 6, 6);
    const IndexSet t{0, 1, 4};
    const auto exact = compatibility_factor({m, t}, KappaMethod::exact_orthant);
    const auto sampled = compatibility_factor({m, t}, KappaMethod::sampled);
    CHECK(sampled.upper_bound);
    CHECK(sampled.value >= exact.value - 1e-6);
  }
}

TEST_CASE("input validation") {
  Matrix bad = Matrix::Identity(3, 3);
  bad(0, 0) = -1.0;
  CHECK_THROWS_AS(kappa(bad, {0}), std::invalid_argument);
  Matrix asym = Matrix::Identity(3, 3);
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(kappa(asym, {0}), std::invalid_argument);
  CHECK_THROWS_AS(kappa(Matrix::Identity(3, 3), {}), std::invalid_argument);
  CHECK_THROWS_AS(kappa(Matrix::Identity(3, 3), {3}), std::invalid_argument);
  IndexSet big(13);
  for (Index j = 0; j < 13; ++j) big[static_cast<size_t>(j)] = j;
  try {
    kappa(Matrix::Identity(14, 14), big);
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("sampled") != std::string::npos);
  }
  CHECK(kappa(Matrix::Identity(14, 14), big, KappaMethod::sampled) >= 1.0 - 1e-6);
}

TEST_CASE("matrix sup distance") {
  const Matrix a = Matrix::Random(4, 4);
  CHECK(matrix_sup_distance(a, a) == 0.0);
  Matrix b = a;
  b(2, 1) += 0.3;
  CHECK(matrix_sup_distance(a, b) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK_THROWS_AS(matrix_sup_distance(a, Matrix::Zero(3, 4)), std::invalid_argument);
}

TEST_CASE("martingale residuals") {
  const auto ds = fixture::d1();
  const auto est = breslow_estimate(ds, Vector::Zero(2));
  const Vector r = martingale_residuals(ds, est);
  CHECK(r[0] == doctest::Approx(1.0 - 1.0 / 3.0).epsilon(1e-15));
  CHECK(r[1] == doctest::Approx(1.0 - 5.0 / 6.0).epsilon(1e-15));
  CHECK(r[2] == doctest::Approx(-5.0 / 6.0).epsilon(1e-15));
  CHECK(std::abs(r.sum()) <= 1e-10);

  Vector t(3);
  t << 0.1, 0.5, 0.8;
  const auto early = SurvivalDataset::from_matrix(t, {false, true, false}, Matrix::Random(3, 2));
  const Vector re = martingale_residuals(early, breslow_estimate(early, Vector::Ones(2)));
  CHECK(re[0] == 0.0);

  std::mt19937_64 rng(107);
  for (int rep = 0; rep < 10; ++rep) {
    const auto r2 = fixture::random_dataset(rng, 100, 3);
    const auto e2 = breslow_estimate(r2, fixture::random_beta(rng, 3, 1.5));
    CHECK(std::abs(martingale_residuals(r2, e2).sum()) <= 1e-10);
  }
  CHECK_THROWS_AS(martingale_residuals(fixture::random_dataset(rng, 4, 2), est),
                  std::invalid_argument);

  GeneratorConfig cfg;
  cfg.n = 150;
  cfg.p = 20;
  cfg.seed = 8;
  const auto sim = generate(cfg);
  const auto res = refit_mle(sim.data, select_support(fit_dantzig(sim.data, TuningSchedule{})));
  const auto e3 = breslow_estimate(sim.data, res);
  CHECK(std::abs(martingale_residuals(sim.data, res, e3).sum()) <= 1e-10);
}

TEST_CASE("projections") {
  Vector v(3);
  v << 0.5, 2.0, -1.0;
  const Vector s = project_simplex(v);
  CHECK(s.sum() == doctest::Approx(1.0));
  CHECK(s.minCoeff() >= 0.0);
  CHECK(s[1] == doctest::Approx(1.0 - 0.0).epsilon(1e-12));
  Vector w(2);
  w << 0.2, -0.3;
  CHECK(project_l1_ball(w) == w);
  w << 2.0, -2.0;
  const Vector pw = project_l1_ball(w);
  CHECK(pw[0] == doctest::Approx(0.5));
  CHECK(pw[1] == doctest::Approx(-0.5));
}

TEST_CASE("plug-in information error shrinks with n") {
  std::vector<double> med;
  for (Index n : {100, 200, 400}) {
    std::vector<double> d;
    for (int r = 0; r < 20; ++r) {
      GeneratorConfig cfg;
      cfg.n = n;
      cfg.p = 20;
      cfg.seed = derive_seed(3, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(r));
      const auto sim = generate(cfg);
      const auto res =
          refit_mle(sim.data, select_support(fit_dantzig(sim.data, TuningSchedule{})));
      if (!res.converged) continue;
      d.push_back(matrix_sup_distance(neg_hessian(sim.data, res.beta2),
                                      neg_hessian(sim.data, sim.truth.beta0)));
    }
    med.push_back(summarize(d).median);
  }
  MESSAGE("median sup distance: " << med[0] << " " << med[1] << " " << med[2]);
  CHECK(med[1] < med[0]);
  CHECK(med[2] < med[1]);
}
