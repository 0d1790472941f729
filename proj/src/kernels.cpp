#include "sparsecox/kernels.hpp"
#include "sparsecox/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sparsecox::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr double kParallelWork = 2.0e5;

Matrix gather_columns(const Matrix& z, const IndexSet& cols) {
  Matrix out(z.rows(), static_cast<Index>(cols.size()));
  for (size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Index>(k)) = z.col(cols[k]);
  return out;
}

void require_constant(const SurvivalDataset& ds) {
  if (ds.time_varying())
    throw std::invalid_argument("sweep kernels require constant covariates");
}

void means_column(const SurvivalDataset& ds, const RiskSweep& sw, Index col, double* out) {
  const auto& order = ds.descending_order();
  const auto& z = ds.covariates();
  const Index d = sw.s0.size();
  double acc = 0.0;
  Index k = 0;
  for (Index e = d - 1; e >= 0; --e) {
    for (; k < sw.at_risk_end[static_cast<size_t>(e)]; ++k) {
      const Index i = order[static_cast<size_t>(k)];
      acc += sw.weight[i] * z(i, col);
    }
    out[e] = acc / sw.s0[e];
  }
}

void hessian_column(const SurvivalDataset& ds, const RiskSweep& sw, const Matrix& z_rows,
                    const Matrix& row_means, Index col, const Matrix& col_means, Index k,
                    double* out) {
  const Index n = ds.n();
  const Vector v =
      (sw.weight.array() * sw.inv_s0_cum.array() * ds.covariates().col(col).array()).matrix();
  Eigen::Map<Vector> dst(out, z_rows.cols());
  dst.noalias() = z_rows.transpose() * v;
  dst.noalias() -= row_means.transpose() * col_means.col(k);
  dst /= static_cast<double>(n);
}

}  // namespace

IndexSet all_indices(Index p) {
  IndexSet idx(static_cast<size_t>(p));
  std::iota(idx.begin(), idx.end(), Index{0});
  return idx;
}

void check_linear_predictor(const Vector& eta) {
  for (Index i = 0; i < eta.size(); ++i)
    if (!(std::abs(eta[i]) <= kMaxLinearPredictor))
      throw NumericalError("linear predictor |beta^T Z| = " + std::to_string(std::abs(eta[i])) +
                           " exceeds " + std::to_string(kMaxLinearPredictor) +
                           " (diverging iterate)");
}

Vector linear_predictor(const SurvivalDataset& ds, const Vector& beta) {
  if (beta.size() != ds.p())
    throw std::invalid_argument("beta has dimension " + std::to_string(beta.size()) +
                                ", dataset has p = " + std::to_string(ds.p()));
  Vector eta = Vector::Zero(ds.n());
  for (Index j = 0; j < beta.size(); ++j)
    if (beta[j] != 0.0) eta.noalias() += beta[j] * ds.covariates().col(j);
  check_linear_predictor(eta);
  return eta;
}

RiskSweep make_sweep(const SurvivalDataset& ds, const Vector& beta) {
  require_constant(ds);
  RiskSweep sw;
  sw.eta = linear_predictor(ds, beta);
  sw.shift = sw.eta.size() ? sw.eta.maxCoeff() : 0.0;
  sw.weight = (sw.eta.array() - sw.shift).exp().matrix();

  const auto& events = ds.event_times();
  const auto& order = ds.descending_order();
  const Index d = static_cast<Index>(events.size());
  const Index n = ds.n();
  sw.s0.resize(d);
  sw.at_risk_end.assign(static_cast<size_t>(d), 0);
  double acc = 0.0;
  Index k = 0;
  for (Index e = d - 1; e >= 0; --e) {
    const double t = events[static_cast<size_t>(e)].time;
    while (k < n && ds.time(order[static_cast<size_t>(k)]) >= t) {
      acc += sw.weight[order[static_cast<size_t>(k)]];
      ++k;
    }
    sw.s0[e] = acc;
    sw.at_risk_end[static_cast<size_t>(e)] = k;
  }

  std::vector<double> cum(static_cast<size_t>(d) + 1, 0.0);
  for (Index e = 0; e < d; ++e)
    cum[static_cast<size_t>(e) + 1] = cum[static_cast<size_t>(e)] + 1.0 / sw.s0[e];
  sw.inv_s0_cum.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double x = ds.time(i);
    const auto it = std::upper_bound(events.begin(), events.end(), x,
                                     [](double v, const EventTime& ev) { return v < ev.time; });
    sw.inv_s0_cum[i] = cum[static_cast<size_t>(it - events.begin())];
  }
  return sw;
}

Matrix event_means(const SurvivalDataset& ds, const RiskSweep& sw, const IndexSet& cols) {
  require_constant(ds);
  const Index d = sw.s0.size();
  const Index m = static_cast<Index>(cols.size());
  Matrix out(d, m);
  const bool big = static_cast<double>(ds.n()) * static_cast<double>(m) > kParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (Index k = 0; k < m; ++k) means_column(ds, sw, cols[static_cast<size_t>(k)], out.col(k).data());
  return out;
}

Matrix event_means_serial(const SurvivalDataset& ds, const RiskSweep& sw, const IndexSet& cols) {
  require_constant(ds);
  const Index m = static_cast<Index>(cols.size());
  Matrix out(sw.s0.size(), m);
  for (Index k = 0; k < m; ++k) means_column(ds, sw, cols[static_cast<size_t>(k)], out.col(k).data());
  return out;
}

double loglik(const SurvivalDataset& ds, const RiskSweep& sw) {
  const auto& events = ds.event_times();
  double total = 0.0;
  for (size_t e = 0; e < events.size(); ++e)
    total += sw.eta[events[e].subject] - sw.shift - std::log(sw.s0[static_cast<Index>(e)]);
  return total / static_cast<double>(ds.n());
}

Vector score(const SurvivalDataset& ds, const Matrix& means, const IndexSet& cols) {
  const auto& events = ds.event_times();
  const auto& z = ds.covariates();
  Vector u = Vector::Zero(static_cast<Index>(cols.size()));
  for (size_t k = 0; k < cols.size(); ++k) {
    double acc = 0.0;
    for (size_t e = 0; e < events.size(); ++e)
      acc += z(events[e].subject, cols[k]) - means(static_cast<Index>(e), static_cast<Index>(k));
    u[static_cast<Index>(k)] = acc / static_cast<double>(ds.n());
  }
  return u;
}

Matrix hessian_block(const SurvivalDataset& ds, const RiskSweep& sw, const IndexSet& rows,
                     const Matrix& row_means, const IndexSet& cols, const Matrix& col_means) {
  require_constant(ds);
  const Matrix z_rows = gather_columns(ds.covariates(), rows);
  const Index m = static_cast<Index>(cols.size());
  Matrix out(static_cast<Index>(rows.size()), m);
  const double work = static_cast<double>(ds.n() + sw.s0.size()) *
                      static_cast<double>(rows.size()) * static_cast<double>(m);
  const bool big = work > kParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (Index k = 0; k < m; ++k)
    hessian_column(ds, sw, z_rows, row_means, cols[static_cast<size_t>(k)], col_means, k,
                   out.col(k).data());
  return out;
}

Matrix hessian_block_serial(const SurvivalDataset& ds, const RiskSweep& sw,
                            const IndexSet& rows, const Matrix& row_means,
                            const IndexSet& cols, const Matrix& col_means) {
  require_constant(ds);
  const Matrix z_rows = gather_columns(ds.covariates(), rows);
  const Index m = static_cast<Index>(cols.size());
  Matrix out(static_cast<Index>(rows.size()), m);
  for (Index k = 0; k < m; ++k)
    hessian_column(ds, sw, z_rows, row_means, cols[static_cast<size_t>(k)], col_means, k,
                   out.col(k).data());
  return out;
}

ReferenceStats reference_risk_stats(const SurvivalDataset& ds, const Vector& beta, double t,
                                    int order) {
  if (beta.size() != ds.p()) throw std::invalid_argument("beta dimension mismatch");
  const Index p = ds.p();
  ReferenceStats st;
  st.s1 = Vector::Zero(p);
  if (order >= 2) st.s2 = Matrix::Zero(p, p);
  for (Index i = 0; i < ds.n(); ++i) {
    if (!(ds.time(i) >= t)) continue;
    const Vector z = ds.covariate_at(i, t);
    const double eta = beta.dot(z);
    if (!(std::abs(eta) <= kMaxLinearPredictor))
      throw NumericalError("linear predictor overflow in risk-set sum");
    const double w = std::exp(eta);
    ++st.at_risk;
    st.s0 += w;
    if (order >= 1) st.s1 += w * z;
    if (order >= 2) st.s2 += w * z * z.transpose();
  }
  return st;
}

ReferenceEvaluation reference_evaluate(const SurvivalDataset& ds, const Vector& beta,
                                       bool with_hessian, double truncate) {
  if (beta.size() != ds.p()) throw std::invalid_argument("beta dimension mismatch");
  const Index p = ds.p();
  const double n = static_cast<double>(ds.n());
  ReferenceEvaluation out;
  out.score = Vector::Zero(p);
  if (with_hessian) out.neg_hessian = Matrix::Zero(p, p);
  for (const auto& ev : ds.event_times()) {
    if (ev.time > truncate) break;
    // Shift by the largest risk-set predictor so the sums stay finite.
    std::vector<Index> risk;
    std::vector<double> eta;
    double shift = -kMaxLinearPredictor;
    for (Index i = 0; i < ds.n(); ++i) {
      if (!(ds.time(i) >= ev.time)) continue;
      const double e = beta.dot(ds.covariate_at(i, ev.time));
      if (!(std::abs(e) <= kMaxLinearPredictor))
        throw NumericalError("linear predictor overflow in risk-set sum");
      risk.push_back(i);
      eta.push_back(e);
      shift = std::max(shift, e);
    }
    double s0 = 0.0;
    Vector s1 = Vector::Zero(p);
    Matrix s2;
    if (with_hessian) s2 = Matrix::Zero(p, p);
    for (size_t r = 0; r < risk.size(); ++r) {
      const Vector z = ds.covariate_at(risk[r], ev.time);
      const double w = std::exp(eta[r] - shift);
      s0 += w;
      s1 += w * z;
      if (with_hessian) s2 += w * z * z.transpose();
    }
    const Vector zi = ds.covariate_at(ev.subject, ev.time);
    out.loglik += beta.dot(zi) - shift - std::log(s0);
    const Vector mean = s1 / s0;
    out.score += zi - mean;
    if (with_hessian) out.neg_hessian += s2 / s0 - mean * mean.transpose();
  }
  out.loglik /= n;
  out.score /= n;
  if (with_hessian) out.neg_hessian /= n;
  return out;
}

}  // namespace sparsecox::kernels
