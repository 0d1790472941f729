#include <doctest.h>

#include "fixtures.hpp"
#include "sparsecox/error.hpp"
#include "sparsecox/partial_likelihood.hpp"

#include <cmath>

using namespace sparsecox;

TEST_CASE("risk set statistics on D1") {
  const auto ds = fixture::d1();
  const Vector zero = Vector::Zero(2);
  auto st = risk_stats(ds, zero, 0.2, 2);
  CHECK_FALSE(st.empty);
  CHECK(st.s0 == 3.0);
  CHECK(st.s1[0] == 2.0);
  CHECK(st.s1[1] == 2.0);
  CHECK(st.s2(0, 1) == 1.0);
  st = risk_stats(ds, zero, 0.95, 1);
  CHECK(st.empty);
  CHECK(st.s0 == 0.0);
  st = risk_stats(ds, zero, 0.2, 1, IndexSet{1});
  REQUIRE(st.s1.size() == 1);
  CHECK(st.s1[0] == 2.0);
  CHECK_THROWS_AS(risk_stats(ds, Vector::Zero(3), 0.2, 1), std::invalid_argument);
}

TEST_CASE("single subject risk set") {
  Vector t(1);
  t << 0.7;
  Matrix z(1, 2);
  z << 0.3, -0.8;
  const auto ds = SurvivalDataset::from_matrix(t, {true}, z);
  Vector beta(2);
  beta << 1.5, -0.4;
  const auto st = risk_stats(ds, beta, 0.5, 1);
  const double w = std::exp(z.row(0).dot(beta));
  CHECK(st.s0 == doctest::Approx(w).epsilon(1e-15));
  CHECK(st.s1[0] == doctest::Approx(0.3 * w).epsilon(1e-15));
  CHECK(st.s1[1] == doctest::Approx(-0.8 * w).epsilon(1e-15));
  CHECK(score(ds, beta).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(neg_hessian(ds, beta).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("log partial likelihood on D1") {
  const auto ds = fixture::d1();
  const double expected = (-std::log(3.0) - std::log(2.0)) / 3.0;
  CHECK(log_partial_likelihood(ds, Vector::Zero(2)) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("all subjects at risk at the single event") {
  const int n = 7;
  Vector t(n);
  std::vector<bool> ev(n, false);
  for (int i = 0; i < n; ++i) t[i] = 0.5 + 0.05 * i;
  ev[0] = true;
  std::mt19937_64 rng(2);
  const Matrix z = Matrix::Random(n, 3);
  const auto ds = SurvivalDataset::from_matrix(t, ev, z);
  CHECK(log_partial_likelihood(ds, Vector::Zero(3)) ==
        doctest::Approx(-std::log(static_cast<double>(n)) / n).epsilon(1e-15));
}

TEST_CASE("no events is an error") {
  Vector t(2);
  t << 0.3, 0.4;
  const auto ds = SurvivalDataset::from_matrix(t, {false, false}, Matrix::Ones(2, 1));
  CHECK_THROWS_AS(log_partial_likelihood(ds, Vector::Zero(1)), NumericalError);
  CHECK_THROWS_AS(score(ds, Vector::Zero(1)), NumericalError);
}

TEST_CASE("score on D1") {
  const auto ds = fixture::d1();
  const Vector u = score(ds, Vector::Zero(2));
  CHECK(u[0] == doctest::Approx(-1.0 / 18.0).epsilon(1e-14));
  CHECK(u[1] == doctest::Approx(-2.0 / 9.0).epsilon(1e-14));
  const Vector u1 = score(ds, Vector::Zero(2), IndexSet{1});
  REQUIRE(u1.size() == 1);
  CHECK(u1[0] == doctest::Approx(-2.0 / 9.0).epsilon(1e-14));
  Vector t(1);
  t << 0.5;
  const auto one = SurvivalDataset::from_matrix(t, {true}, Matrix::Constant(1, 2, 0.7));
  CHECK(score(one, Vector::Ones(2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("negative Hessian on D1") {
  const auto ds = fixture::d1();
  const Matrix j = neg_hessian(ds, Vector::Zero(2));
  Matrix expected(2, 2);
  expected << 2.0 / 9.0 + 0.25, -1.0 / 9.0, -1.0 / 9.0, 2.0 / 9.0;
  expected /= 3.0;
  CHECK((j - expected).cwiseAbs().maxCoeff() <= 1e-15);
  const Matrix jr = neg_hessian(ds, Vector::Zero(2), IndexSet{0});
  REQUIRE(jr.rows() == 1);
  CHECK(jr(0, 0) == doctest::Approx(expected(0, 0)).epsilon(1e-15));
  const Matrix jb = neg_hessian_block(ds, Vector::Zero(2), {1}, {0, 1});
  REQUIRE(jb.rows() == 1);
  REQUIRE(jb.cols() == 2);
  CHECK(jb(0, 0) == doctest::Approx(expected(1, 0)).epsilon(1e-14));
}

TEST_CASE("score process") {
  const auto ds = fixture::d1();
  const Vector zero = Vector::Zero(2);
  CHECK(score_process(ds, zero, 0.0).cwiseAbs().maxCoeff() == 0.0);
  const Vector mid = score_process(ds, zero, 0.3);
  CHECK(mid[0] == doctest::Approx(1.0 / 9.0).epsilon(1e-14));
  CHECK(mid[1] == doctest::Approx(-2.0 / 9.0).epsilon(1e-14));
  std::mt19937_64 rng(3);
  const auto r = fixture::random_dataset(rng, 30, 4);
  const Vector beta = fixture::random_beta(rng, 4, 0.8);
  CHECK((score_process(r, beta, 1.0) - score(r, beta)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("calculus against finite differences and the brute-force likelihood") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 40; ++rep) {
    const int n = 5 + static_cast<int>(rng() % 46);
    const int p = 1 + static_cast<int>(rng() % 6);
    const auto ds = fixture::random_dataset(rng, n, p);
    const auto sample = fixture::to_sample(ds);
    const Vector beta = fixture::random_beta(rng, p, 1.0);
    const auto ev = evaluate(ds, beta, std::nullopt, true);
    CHECK(ev.loglik == doctest::Approx(oracle::loglik(sample, beta)).epsilon(1e-12));
    CHECK((ev.score - oracle::score(sample, beta)).cwiseAbs().maxCoeff() <= 1e-12);
    const Vector fd = oracle::central_gradient(
        [&](const Vector& b) { return oracle::loglik(sample, b); }, beta, 1e-5);
    CHECK((ev.score - fd).cwiseAbs().maxCoeff() <= 1e-6 * (1.0 + ev.score.cwiseAbs().maxCoeff()));
    const Matrix fdj = -oracle::central_jacobian(
        [&](const Vector& b) { return oracle::score(sample, b); }, beta, 1e-5);
    CHECK((ev.neg_hessian - fdj).cwiseAbs().maxCoeff() <= 1e-5);
    Eigen::SelfAdjointEigenSolver<Matrix> es(ev.neg_hessian);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    CHECK((ev.neg_hessian - ev.neg_hessian.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("concavity along segments") {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 30; ++rep) {
    const auto ds = fixture::random_dataset(rng, 25, 3);
    const Vector a = fixture::random_beta(rng, 3, 2.0);
    const Vector b = fixture::random_beta(rng, 3, 2.0);
    const double la = log_partial_likelihood(ds, a);
    const double lb = log_partial_likelihood(ds, b);
    const double lm = log_partial_likelihood(ds, 0.5 * (a + b));
    CHECK(lm >= 0.5 * (la + lb) - 1e-12);
  }
}

TEST_CASE("location invariance") {
  std::mt19937_64 rng(29);
  const auto ds = fixture::random_dataset(rng, 30, 3);
  Vector c(3);
  c << 0.25, -0.5, 0.125;
  Matrix shifted = ds.covariates();
  shifted.rowwise() += c.transpose();
  std::vector<bool> ev;
  for (Index i = 0; i < ds.n(); ++i) ev.push_back(ds.event(i));
  const auto moved = SurvivalDataset::from_matrix(ds.times(), ev, shifted);
  const Vector beta = fixture::random_beta(rng, 3, 1.0);
  CHECK(log_partial_likelihood(moved, beta) ==
        doctest::Approx(log_partial_likelihood(ds, beta)).epsilon(1e-12));
  CHECK((score(moved, beta) - score(ds, beta)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("overflowing linear predictor is rejected") {
  const auto ds = fixture::d1();
  Vector beta(2);
  beta << 800.0, 0.0;
  CHECK_THROWS_AS(score(ds, beta), NumericalError);
}

TEST_CASE("step covariates follow the reference definition") {
  Vector lo(1), hi(1);
  lo << -1.0;
  hi << 1.0;
  std::vector<Subject> subjects;
  subjects.push_back({0.3, true, CovariatePath::constant(lo)});
  subjects.push_back({0.6, true, CovariatePath::step({0.4}, {lo, hi})});
  subjects.push_back({0.9, false, CovariatePath::step({0.5}, {hi, lo})});
  const SurvivalDataset ds(subjects);
  Vector beta(1);
  beta << 0.7;
  // event at 0.3: values -1, -1, 1; event at 0.6: values 1 (subject 2), -1 (subject 3)
  const double e1 = std::exp(-0.7), e2 = std::exp(0.7);
  const double l = ((-0.7 - std::log(2 * e1 + e2)) + (0.7 - std::log(e2 + e1))) / 3.0;
  CHECK(log_partial_likelihood(ds, beta) == doctest::Approx(l).epsilon(1e-14));
  const double u = ((-1.0 - (-2 * e1 + e2) / (2 * e1 + e2)) + (1.0 - (e2 - e1) / (e2 + e1))) / 3.0;
  CHECK(score(ds, beta)[0] == doctest::Approx(u).epsilon(1e-13));
  const double fd = (log_partial_likelihood(ds, beta + Vector::Constant(1, 1e-6)) -
                     log_partial_likelihood(ds, beta - Vector::Constant(1, 1e-6))) / 2e-6;
  CHECK(score(ds, beta)[0] == doctest::Approx(fd).epsilon(1e-7));
}
