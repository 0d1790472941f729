#include "sparsecox/diagnostics.hpp"
#include "sparsecox/error.hpp"
#include "sparsecox/kernels.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace sparsecox {

Vector project_simplex(const Vector& v, double radius) {
  const Index m = v.size();
  if (m == 0) return v;
  std::vector<double> u(v.data(), v.data() + m);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (Index k = 0; k < m; ++k) {
    cum += u[static_cast<size_t>(k)];
    const double t = (cum - radius) / static_cast<double>(k + 1);
    if (u[static_cast<size_t>(k)] - t > 0.0) theta = t;
  }
  return (v.array() - theta).max(0.0).matrix();
}

Vector project_l1_ball(const Vector& v, double radius) {
  if (v.lpNorm<1>() <= radius) return v;
  const Vector w = project_simplex(v.cwiseAbs(), radius);
  return (w.array() * v.array().sign()).matrix();
}

namespace {

double largest_eigenvalue(const Matrix& m) {
  // Power iteration from a fixed start; deterministic.
  Vector x = Vector::Ones(m.rows()).normalized();
  double lambda = 0.0;
  for (int it = 0; it < 100000; ++it) {
    Vector y = m * x;
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    y /= norm;
    const double next = y.dot(m * y);
    x = y;
    if (std::abs(next - lambda) <= 1e-8 * std::max(1.0, std::abs(next))) return next;
    lambda = next;
  }
  return lambda;
}

struct OrthantResult {
  double value = std::numeric_limits<double>::infinity();
  Vector h;
  int iterations = 0;
};

// minimize h^T M h over h_T = sigma .* u (u in the unit simplex), ||h_{T^c}||_1 <= 1.
class OrthantQp {
 public:
  OrthantQp(const Matrix& m, const IndexSet& support, double lipschitz)
      : m_(m), lipschitz_(lipschitz) {
    const Index p = m.rows();
    std::vector<char> in(static_cast<size_t>(p), 0);
    for (Index j : support) in[static_cast<size_t>(j)] = 1;
    for (Index j = 0; j < p; ++j) (in[static_cast<size_t>(j)] ? on_ : off_).push_back(j);
  }

  Vector assemble(const Vector& sigma, const Vector& x) const {
    Vector h(m_.rows());
    const Index s = static_cast<Index>(on_.size());
    for (Index k = 0; k < s; ++k) h[on_[static_cast<size_t>(k)]] = sigma[k] * x[k];
    for (size_t k = 0; k < off_.size(); ++k) h[off_[k]] = x[s + static_cast<Index>(k)];
    return h;
  }

  Vector project(const Vector& x) const {
    const Index s = static_cast<Index>(on_.size());
    Vector out(x.size());
    out.head(s) = project_simplex(x.head(s));
    if (x.size() > s) out.tail(x.size() - s) = project_l1_ball(x.tail(x.size() - s));
    return out;
  }

  OrthantResult solve(const Vector& sigma, Vector x, int max_iter, double tol) const {
    const Index s = static_cast<Index>(on_.size());
    OrthantResult res;
    auto value_of = [&](const Vector& z) {
      const Vector h = assemble(sigma, z);
      return h.dot(m_ * h);
    };
    x = project(x);
    if (lipschitz_ <= 0.0) {
      res.value = 0.0;
      res.h = assemble(sigma, x);
      return res;
    }
    const double step = 1.0 / lipschitz_;
    Vector y = x, prev = x;
    double t = 1.0;
    double fx = value_of(x);
    for (int it = 1; it <= max_iter; ++it) {
      res.iterations = it;
      const Vector hy = assemble(sigma, y);
      const Vector grad_h = 2.0 * (m_ * hy);
      Vector grad(y.size());
      for (Index k = 0; k < s; ++k) grad[k] = sigma[k] * grad_h[on_[static_cast<size_t>(k)]];
      for (size_t k = 0; k < off_.size(); ++k) grad[s + static_cast<Index>(k)] = grad_h[off_[k]];
      Vector next = project(y - step * grad);
      const double fnext = value_of(next);
      // Restart momentum whenever the objective goes up.
      if (fnext > fx) {
        t = 1.0;
        y = x;
        continue;
      }
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = next + ((t - 1.0) / t_next) * (next - x);
      const double moved = (next - x).lpNorm<Eigen::Infinity>();
      prev = x;
      x = std::move(next);
      fx = fnext;
      t = t_next;
      if (moved <= tol * 1e-2) break;
    }
    res.value = fx;
    res.h = assemble(sigma, x);
    return res;
  }

  Index support_size() const { return static_cast<Index>(on_.size()); }
  Index dim() const { return m_.rows(); }

 private:
  const Matrix& m_;
  double lipschitz_;
  IndexSet on_, off_;
};

void validate(const ConeProblem& prob) {
  const Matrix& m = prob.matrix;
  if (m.rows() != m.cols()) throw std::invalid_argument("cone matrix must be square");
  if (prob.support.empty()) throw std::invalid_argument("cone support must be non-empty");
  for (size_t k = 0; k < prob.support.size(); ++k) {
    const Index j = prob.support[k];
    if (j < 0 || j >= m.rows()) throw std::invalid_argument("support index out of range");
    if (k > 0 && j <= prob.support[k - 1])
      throw std::invalid_argument("support must be strictly ascending");
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument("cone matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  if (eig.eigenvalues()[0] < -1e-10 * scale)
    throw std::invalid_argument("cone matrix is not positive semidefinite (min eigenvalue " +
                                format_double(eig.eigenvalues()[0]) + ")");
}

}  // namespace

KappaResult compatibility_factor(const ConeProblem& prob, KappaMethod method,
                                 const KappaOptions& opt) {
  validate(prob);
  const Matrix m = 0.5 * (prob.matrix + prob.matrix.transpose());
  const Index s = static_cast<Index>(prob.support.size());
  const Index p = m.rows();
  const double lipschitz = 2.0 * std::max(0.0, largest_eigenvalue(m));
  OrthantQp qp(m, prob.support, lipschitz);
  const Index free_dim = p;
  KappaResult out;

  if (method == KappaMethod::exact_orthant) {
    if (s > kMaxExactSparsity)
      throw std::invalid_argument("exact_orthant supports |T| <= " +
                                  std::to_string(kMaxExactSparsity) + "; use the sampled method");
    // h and -h give the same ratio, so the first sign is fixed to +1.
    const long patterns = 1L << (s - 1);
    std::vector<OrthantResult> results(static_cast<size_t>(patterns));
#pragma omp parallel for schedule(dynamic) if (patterns > 1 && p * p > 400)
    for (long mask = 0; mask < patterns; ++mask) {
      Vector sigma(s);
      sigma[0] = 1.0;
      for (Index k = 1; k < s; ++k) sigma[k] = (mask >> (k - 1)) & 1 ? -1.0 : 1.0;
      Vector x0 = Vector::Zero(free_dim);
      x0.head(s).setConstant(1.0 / static_cast<double>(s));
      results[static_cast<size_t>(mask)] = qp.solve(sigma, x0, opt.max_iterations, opt.tolerance);
    }
    size_t best = 0;
    for (size_t k = 1; k < results.size(); ++k)
      if (results[k].value < results[best].value) best = k;
    for (const auto& r : results) out.max_iterations_used = std::max(out.max_iterations_used, r.iterations);
    out.subproblems = static_cast<int>(patterns);
    out.value = std::sqrt(static_cast<double>(s) * std::max(0.0, results[best].value));
    out.minimizer = results[best].h;
    return out;
  }

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double best_value = std::numeric_limits<double>::infinity();
  Vector best_x, best_sigma;
  for (int k = 0; k < opt.samples; ++k) {
    Vector sigma(s);
    for (Index j = 0; j < s; ++j) sigma[j] = unif(rng) < 0.5 ? -1.0 : 1.0;
    Vector x(free_dim);
    double total = 0.0;
    for (Index j = 0; j < s; ++j) {
      x[j] = -std::log(1.0 - unif(rng));
      total += x[j];
    }
    x.head(s) /= total;
    if (p > s) {
      const double radius = unif(rng);
      Vector off(p - s);
      for (Index j = 0; j < p - s; ++j) off[j] = -std::log(1.0 - unif(rng)) * (unif(rng) < 0.5 ? -1.0 : 1.0);
      const double l1 = off.lpNorm<1>();
      x.tail(p - s) = l1 > 0.0 ? (off * (radius / l1)).eval() : off;
    }
    const Vector h = qp.assemble(sigma, x);
    const double v = h.dot(m * h);
    if (v < best_value) {
      best_value = v;
      best_x = x;
      best_sigma = sigma;
    }
  }
  const auto refined = qp.solve(best_sigma, best_x, opt.max_iterations, opt.tolerance);
  Vector h = qp.assemble(best_sigma, best_x);
  if (refined.value < best_value) {
    best_value = refined.value;
    h = refined.h;
  }
  out.value = std::sqrt(static_cast<double>(s) * std::max(0.0, best_value));
  out.upper_bound = true;
  out.minimizer = h;
  out.subproblems = 1;
  out.max_iterations_used = refined.iterations;
  return out;
}

double matrix_sup_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("matrix_sup_distance: shape mismatch");
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff();
}

Vector martingale_residuals(const SurvivalDataset& ds, const HazardEstimate& est) {
  if (est.n != ds.n() || est.beta.size() != ds.p() ||
      est.jump_times.size() != ds.event_times().size())
    throw std::invalid_argument("hazard estimate does not belong to this dataset");
  const auto& events = ds.event_times();
  for (size_t e = 0; e < events.size(); ++e)
    if (est.jump_times[e] != events[e].time)
      throw std::invalid_argument("hazard estimate does not belong to this dataset");
  Vector r(ds.n());
  if (!ds.time_varying()) {
    const Vector eta = kernels::linear_predictor(ds, est.beta);
    for (Index i = 0; i < ds.n(); ++i)
      r[i] = (ds.event(i) ? 1.0 : 0.0) - std::exp(eta[i]) * est.cumulative_at(ds.time(i));
    return r;
  }
  for (Index i = 0; i < ds.n(); ++i) {
    double exposure = 0.0;
    for (size_t e = 0; e < events.size() && events[e].time <= ds.time(i); ++e)
      exposure += std::exp(est.beta.dot(ds.covariate_at(i, events[e].time))) * est.jumps[e];
    r[i] = (ds.event(i) ? 1.0 : 0.0) - exposure;
  }
  return r;
}

Vector martingale_residuals(const SurvivalDataset& ds, const RefitResult& res,
                            const HazardEstimate& est) {
  if (res.n != ds.n() || res.beta2.size() != ds.p() || res.beta2 != est.beta)
    throw std::invalid_argument("refit and hazard estimate disagree");
  return martingale_residuals(ds, est);
}

}  // namespace sparsecox
