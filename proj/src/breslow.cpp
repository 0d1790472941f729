#include "sparsecox/breslow.hpp"
#include "sparsecox/error.hpp"
#include "sparsecox/kernels.hpp"
#include "sparsecox/normal.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace sparsecox {

Index HazardEstimate::position(double t) const {
  const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
  return static_cast<Index>(it - jump_times.begin()) - 1;
}

double HazardEstimate::cumulative_at(double t) const {
  const Index k = position(t);
  return k < 0 ? 0.0 : cumulative[static_cast<size_t>(k)];
}

double HazardEstimate::variance_at(double t) const {
  const Index k = position(t);
  return k < 0 ? 0.0 : variance[static_cast<size_t>(k)];
}

double HazardEstimate::total_variance_at(double t) const {
  if (total_variance.empty()) return variance_at(t);
  const Index k = position(t);
  return k < 0 ? 0.0 : total_variance[static_cast<size_t>(k)];
}

Vector HazardEstimate::drift_at(double t) const {
  const Index k = position(t);
  return k < 0 ? Vector::Zero(static_cast<Index>(support.size())) : drift[static_cast<size_t>(k)];
}

HazardEstimate breslow_estimate(const SurvivalDataset& ds, const Vector& beta,
                                const IndexSet& support, const std::optional<Matrix>& covariance) {
  if (beta.size() != ds.p()) throw std::invalid_argument("beta dimension mismatch");
  const Index s = static_cast<Index>(support.size());
  if (covariance && (covariance->rows() != s || covariance->cols() != s))
    throw std::invalid_argument("covariance does not match the support size");
  HazardEstimate est;
  est.support = support;
  est.beta = beta;
  est.n = ds.n();
  est.risk_horizon = ds.times().maxCoeff();
  const auto& events = ds.event_times();
  const size_t d = events.size();
  if (d == 0) return est;

  // Unshifted S0 and S1 on the support at each event.
  std::vector<double> s0(d);
  Matrix s1_over_s0(static_cast<Index>(d), s);
  if (ds.time_varying()) {
    for (size_t e = 0; e < d; ++e) {
      const auto st = kernels::reference_risk_stats(ds, beta, events[e].time, 1);
      assert(st.at_risk > 0);
      s0[e] = st.s0;
      for (Index k = 0; k < s; ++k)
        s1_over_s0(static_cast<Index>(e), k) = st.s1[support[static_cast<size_t>(k)]] / st.s0;
    }
  } else {
    const auto sw = kernels::make_sweep(ds, beta);
    const double scale = std::exp(sw.shift);
    for (size_t e = 0; e < d; ++e) s0[e] = sw.s0[static_cast<Index>(e)] * scale;
    if (s > 0) s1_over_s0 = kernels::event_means(ds, sw, support);
  }

  const double n = static_cast<double>(ds.n());
  double cum = 0.0, var = 0.0;
  Vector h = Vector::Zero(s);
  for (size_t e = 0; e < d; ++e) {
    assert(s0[e] > 0.0);
    const double jump = 1.0 / s0[e];
    cum += jump;
    var += jump * jump;
    h -= s1_over_s0.row(static_cast<Index>(e)).transpose() * jump;
    est.jump_times.push_back(events[e].time);
    est.jumps.push_back(jump);
    est.cumulative.push_back(cum);
    est.variance.push_back(n * var);
    est.drift.push_back(h);
    if (covariance) est.total_variance.push_back(n * var + n * h.dot(*covariance * h));
  }
  return est;
}

HazardEstimate breslow_estimate(const SurvivalDataset& ds, const RefitResult& res) {
  if (!res.converged) throw NumericalError("Breslow estimate needs a converged refit");
  std::optional<Matrix> cov;
  if (!res.support.indices.empty()) cov = res.covariance;
  return breslow_estimate(ds, res.beta2, res.support.indices, cov);
}

double variance_function(const HazardEstimate& est, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("t outside [0,1]");
  return est.variance_at(t);
}

Vector drift_vector(const HazardEstimate& est, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("t outside [0,1]");
  return est.drift_at(t);
}

HazardInterval hazard_interval(const HazardEstimate& est, double t, double level,
                               BandVariance kind) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must lie in (0,1)");
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("t outside [0,1]");
  const double z = normal_quantile(0.5 * (1.0 + level));
  const double v = kind == BandVariance::total ? est.total_variance_at(t) : est.variance_at(t);
  const double cum = est.cumulative_at(t);
  const double half = est.n > 0 ? z * std::sqrt(v / static_cast<double>(est.n)) : 0.0;
  return {t, cum, std::max(0.0, cum - half), cum + half};
}

std::vector<HazardInterval> hazard_confidence_band(const HazardEstimate& est, double level,
                                                   BandVariance kind) {
  std::vector<HazardInterval> out;
  out.reserve(est.jump_times.size());
  for (double t : est.jump_times) out.push_back(hazard_interval(est, t, level, kind));
  return out;
}

std::string format_hazard_csv(const HazardEstimate& est, double level, double time_scale,
                              bool with_total) {
  std::string out = "t,lambda_jump,Lambda,var,lo,hi";
  if (with_total) out += ",total_var,total_lo,total_hi";
  out += '\n';
  const auto band = hazard_confidence_band(est, level, BandVariance::martingale);
  std::vector<HazardInterval> total;
  if (with_total) total = hazard_confidence_band(est, level, BandVariance::total);
  for (size_t e = 0; e < est.jump_times.size(); ++e) {
    out += format_double(est.jump_times[e] * time_scale) + ',' + format_double(est.jumps[e]) +
           ',' + format_double(est.cumulative[e]) + ',' + format_double(est.variance[e]) + ',' +
           format_double(band[e].lower) + ',' + format_double(band[e].upper);
    if (with_total)
      out += ',' + format_double(est.total_variance.empty() ? est.variance[e] : est.total_variance[e]) +
             ',' + format_double(total[e].lower) + ',' + format_double(total[e].upper);
    out += '\n';
  }
  return out;
}

}  // namespace sparsecox
