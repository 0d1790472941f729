#include "sparsecox/post_selection.hpp"
#include "sparsecox/error.hpp"
#include "sparsecox/normal.hpp"
#include "sparsecox/partial_likelihood.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace sparsecox {

SelectedSupport select_support(const DantzigFit& fit) {
  if (!fit.converged)
    throw std::invalid_argument("support selection refused: Dantzig fit did not converge");
  SelectedSupport s;
  s.threshold = fit.gamma;
  s.source_beta = fit.beta_hat;
  for (Index j = 0; j < fit.beta_hat.size(); ++j)
    if (std::abs(fit.beta_hat[j]) > fit.gamma) s.indices.push_back(j);
  return s;
}

namespace {

// exp(-30) is below 1e-13: weights this far apart make the information
// vanish to rounding error.
constexpr double kSeparationSpread = 30.0;

Vector embed(const Vector& sub, const IndexSet& idx, Index p) {
  Vector full = Vector::Zero(p);
  for (size_t k = 0; k < idx.size(); ++k) full[idx[k]] = sub[static_cast<Index>(k)];
  return full;
}

struct NewtonOutcome {
  Vector beta;
  int iterations = 0;
  bool converged = false;
  bool monotone = false;
};

NewtonOutcome newton(const SurvivalDataset& ds, const IndexSet& idx, Vector theta,
                     const NewtonControl& ctrl) {
  const Index p = ds.p();
  NewtonOutcome out;
  auto ev = evaluate(ds, embed(theta, idx, p), idx, true);
  for (int it = 1; it <= ctrl.max_iterations; ++it) {
    out.iterations = it;
    Eigen::LDLT<Matrix> ldlt(ev.neg_hessian);
    Vector step;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive())
      step = ldlt.solve(ev.score);
    if (step.size() == 0 || !step.allFinite()) {
      // Flat direction: fall back to a gradient step.
      step = ev.score;
    }
    const double score_inf = ev.score.lpNorm<Eigen::Infinity>();
    if (score_inf <= ctrl.score_tolerance && step.lpNorm<Eigen::Infinity>() <= ctrl.step_tolerance) {
      out.converged = true;
      break;
    }
    // Step halving until the log partial likelihood does not decrease.
    double t = 1.0;
    bool accepted = false;
    ScoreHessian next;
    Vector candidate;
    for (int h = 0; h < 60; ++h, t *= 0.5) {
      candidate = theta + t * step;
      if (candidate.lpNorm<Eigen::Infinity>() > ctrl.max_beta) {
        out.beta = candidate;
        out.monotone = true;
        return out;
      }
      try {
        next = evaluate(ds, embed(candidate, idx, p), idx, true);
      } catch (const NumericalError&) {
        continue;
      }
      if (next.loglik >= ev.loglik - 1e-14 * (1.0 + std::abs(ev.loglik))) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    theta = candidate;
    ev = std::move(next);
  }
  out.beta = theta;
  return out;
}

}  // namespace

RefitResult refit_mle(const SurvivalDataset& ds, const SelectedSupport& support,
                      const NewtonControl& ctrl) {
  const Index p = ds.p();
  const IndexSet& idx = support.indices;
  const Index s = static_cast<Index>(idx.size());
  if (s > ds.event_count())
    throw std::invalid_argument("support size " + std::to_string(s) + " exceeds event count " +
                                std::to_string(ds.event_count()));
  RefitResult res;
  res.support = support;
  res.n = ds.n();
  res.beta2 = Vector::Zero(p);
  if (s == 0) {
    res.converged = true;
    res.loglik = ds.event_count() > 0 ? log_partial_likelihood(ds, res.beta2) : 0.0;
    return res;
  }

  Vector start = Vector::Zero(s);
  if (ctrl.start == NewtonStart::dantzig && support.source_beta.size() == p)
    for (Index k = 0; k < s; ++k) start[k] = support.source_beta[idx[static_cast<size_t>(k)]];

  NewtonOutcome out = newton(ds, idx, start, ctrl);
  if (!out.converged && ctrl.start == NewtonStart::dantzig && start.any()) {
    NewtonOutcome retry = newton(ds, idx, Vector::Zero(s), ctrl);
    res.restarted_from_zero = true;
    retry.iterations += out.iterations;
    out = std::move(retry);
  }
  res.newton_iterations = out.iterations;
  res.monotone_likelihood = out.monotone;
  res.converged = out.converged;
  res.beta2 = embed(out.beta, idx, p);
  if (res.monotone_likelihood) return res;

  const auto ev = evaluate(ds, res.beta2, idx, true);
  res.loglik = ev.loglik;
  res.score_residual = ev.score.lpNorm<Eigen::Infinity>();
  res.info_matrix = ev.neg_hessian;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(res.info_matrix, Eigen::EigenvaluesOnly);
  res.min_info_eigenvalue = eig.eigenvalues()[0];
  if (!res.converged) return res;
  const double scale = std::max(1.0, eig.eigenvalues()[s - 1]);
  if (!(res.min_info_eigenvalue > 1e-12 * scale)) {
    // Risk sets dominated by single subjects: the likelihood has flattened out
    // in floating point on its way to a supremum at infinity.
    const Vector eta = ds.covariates() * res.beta2;
    if (!ds.time_varying() && eta.maxCoeff() - eta.minCoeff() > kSeparationSpread) {
      res.converged = false;
      res.monotone_likelihood = true;
      return res;
    }
    throw NumericalError("information matrix on the selected support is singular (smallest "
                         "eigenvalue " + format_double(res.min_info_eigenvalue) + ")");
  }
  res.covariance = res.info_matrix.inverse() / static_cast<double>(ds.n());
  res.covariance = 0.5 * (res.covariance + res.covariance.transpose()).eval();
  res.wald_intervals = wald_inference(res, 0.95);
  return res;
}

std::vector<WaldInterval> wald_inference(const RefitResult& res, double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must lie in (0,1)");
  const auto& idx = res.support.indices;
  if (idx.empty()) return {};
  if (!res.converged || !(res.min_info_eigenvalue > 0.0) ||
      res.covariance.rows() != static_cast<Index>(idx.size()))
    throw NumericalError("Wald inference needs a converged refit with positive definite information");
  const double z = normal_quantile(0.5 * (1.0 + level));
  std::vector<WaldInterval> out;
  for (size_t k = 0; k < idx.size(); ++k) {
    const Index j = idx[k];
    const double est = res.beta2[j];
    const double half = z * std::sqrt(std::max(0.0, res.covariance(static_cast<Index>(k), static_cast<Index>(k))));
    out.push_back({j, est, est - half, est + half});
  }
  return out;
}

}  // namespace sparsecox
