#include "sparsecox/partial_likelihood.hpp"
#include "sparsecox/error.hpp"
#include "sparsecox/kernels.hpp"

#include <algorithm>

namespace sparsecox {

namespace {

IndexSet resolve(const SurvivalDataset& ds, const std::optional<IndexSet>& restrict) {
  if (!restrict) return kernels::all_indices(ds.p());
  for (size_t k = 0; k < restrict->size(); ++k) {
    const Index j = (*restrict)[k];
    if (j < 0 || j >= ds.p())
      throw std::invalid_argument("index " + std::to_string(j) + " outside [0, p)");
    if (k > 0 && j <= (*restrict)[k - 1])
      throw std::invalid_argument("index set must be strictly ascending");
  }
  return *restrict;
}

void require_events(const SurvivalDataset& ds) {
  if (ds.event_count() == 0)
    throw NumericalError("partial likelihood undefined: dataset has no events");
}

void check_beta(const SurvivalDataset& ds, const Vector& beta) {
  if (beta.size() != ds.p())
    throw std::invalid_argument("beta has dimension " + std::to_string(beta.size()) +
                                ", dataset has p = " + std::to_string(ds.p()));
}

Matrix restrict_matrix(const Matrix& m, const IndexSet& rows, const IndexSet& cols) {
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (size_t a = 0; a < rows.size(); ++a)
    for (size_t b = 0; b < cols.size(); ++b)
      out(static_cast<Index>(a), static_cast<Index>(b)) = m(rows[a], cols[b]);
  return out;
}

Vector restrict_vector(const Vector& v, const IndexSet& idx) {
  Vector out(static_cast<Index>(idx.size()));
  for (size_t a = 0; a < idx.size(); ++a) out[static_cast<Index>(a)] = v[idx[a]];
  return out;
}

}  // namespace

RiskSetStats risk_stats(const SurvivalDataset& ds, const Vector& beta, double t, int order,
                        const std::optional<IndexSet>& restrict) {
  check_beta(ds, beta);
  if (order < 0 || order > 2) throw std::invalid_argument("order must be 0, 1 or 2");
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("t outside [0,1]");
  const IndexSet idx = resolve(ds, restrict);
  const auto ref = kernels::reference_risk_stats(ds, beta, t, order);
  RiskSetStats st;
  st.s0 = ref.s0;
  st.empty = ref.at_risk == 0;
  if (order >= 1) st.s1 = restrict_vector(ref.s1, idx);
  if (order >= 2) st.s2 = restrict_matrix(ref.s2, idx, idx);
  return st;
}

ScoreHessian evaluate(const SurvivalDataset& ds, const Vector& beta,
                      const std::optional<IndexSet>& restrict, bool with_hessian) {
  check_beta(ds, beta);
  require_events(ds);
  const IndexSet idx = resolve(ds, restrict);
  ScoreHessian out;
  if (ds.time_varying()) {
    const auto ref = kernels::reference_evaluate(ds, beta, with_hessian);
    out.loglik = ref.loglik;
    out.score = restrict_vector(ref.score, idx);
    if (with_hessian) out.neg_hessian = restrict_matrix(ref.neg_hessian, idx, idx);
    return out;
  }
  const auto sw = kernels::make_sweep(ds, beta);
  const Matrix means = kernels::event_means(ds, sw, idx);
  out.loglik = kernels::loglik(ds, sw);
  out.score = kernels::score(ds, means, idx);
  if (with_hessian) {
    out.neg_hessian = kernels::hessian_block(ds, sw, idx, means, idx, means);
    out.neg_hessian = 0.5 * (out.neg_hessian + out.neg_hessian.transpose()).eval();
  }
  return out;
}

double log_partial_likelihood(const SurvivalDataset& ds, const Vector& beta) {
  check_beta(ds, beta);
  require_events(ds);
  if (ds.time_varying()) return kernels::reference_evaluate(ds, beta, false).loglik;
  return kernels::loglik(ds, kernels::make_sweep(ds, beta));
}

Vector score(const SurvivalDataset& ds, const Vector& beta,
             const std::optional<IndexSet>& restrict) {
  return evaluate(ds, beta, restrict, false).score;
}

Matrix neg_hessian(const SurvivalDataset& ds, const Vector& beta,
                   const std::optional<IndexSet>& restrict) {
  return evaluate(ds, beta, restrict, true).neg_hessian;
}

Matrix neg_hessian_block(const SurvivalDataset& ds, const Vector& beta, const IndexSet& rows,
                         const IndexSet& cols) {
  check_beta(ds, beta);
  require_events(ds);
  const IndexSet r = resolve(ds, rows);
  const IndexSet c = resolve(ds, cols);
  if (ds.time_varying())
    return restrict_matrix(kernels::reference_evaluate(ds, beta, true).neg_hessian, r, c);
  const auto sw = kernels::make_sweep(ds, beta);
  const Matrix row_means = kernels::event_means(ds, sw, r);
  const Matrix col_means = kernels::event_means(ds, sw, c);
  return kernels::hessian_block(ds, sw, r, row_means, c, col_means);
}

Vector score_process(const SurvivalDataset& ds, const Vector& beta, double t) {
  check_beta(ds, beta);
  require_events(ds);
  if (ds.time_varying()) return kernels::reference_evaluate(ds, beta, false, t).score;
  const auto sw = kernels::make_sweep(ds, beta);
  const IndexSet idx = kernels::all_indices(ds.p());
  const Matrix means = kernels::event_means(ds, sw, idx);
  const auto& events = ds.event_times();
  Vector u = Vector::Zero(ds.p());
  for (size_t e = 0; e < events.size() && events[e].time <= t; ++e)
    u += ds.covariates().row(events[e].subject).transpose() -
         means.row(static_cast<Index>(e)).transpose();
  return u / static_cast<double>(ds.n());
}

}  // namespace sparsecox
