#include "sparsecox/simulation.hpp"
#include "sparsecox/error.hpp"
#include "sparsecox/diagnostics.hpp"
#include "sparsecox/normal.hpp"
#include "sparsecox/partial_likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace sparsecox {

double Baseline::cumulative(double t) const {
  if (t <= 0.0) return 0.0;
  return kind == Kind::constant ? rate * t : std::pow(t / scale, shape);
}

double Baseline::inverse_cumulative(double v) const {
  return kind == Kind::constant ? v / rate : scale * std::pow(v, 1.0 / shape);
}

void Baseline::validate() const {
  if (kind == Kind::constant && !(rate > 0.0))
    throw std::invalid_argument("baseline rate must be positive");
  if (kind == Kind::weibull && !(shape > 0.0 && scale > 0.0))
    throw std::invalid_argument("weibull shape and scale must be positive");
}

void GeneratorConfig::validate() const {
  if (n < 1) throw std::invalid_argument("generator needs n >= 1");
  if (p < 1) throw std::invalid_argument("generator needs p >= 1");
  if (sparsity < 0 || sparsity > p) throw std::invalid_argument("sparsity must lie in [0, p]");
  if (!support.empty()) {
    if (static_cast<Index>(support.size()) != sparsity)
      throw std::invalid_argument("support size must equal sparsity");
    for (size_t k = 0; k < support.size(); ++k)
      if (support[k] < 0 || support[k] >= p || (k > 0 && support[k] <= support[k - 1]))
        throw std::invalid_argument("support must be ascending indices in [0, p)");
  }
  if (!beta0_values.empty()) {
    if (static_cast<Index>(beta0_values.size()) != sparsity)
      throw std::invalid_argument("beta0 values must have one entry per support index");
    for (double b : beta0_values)
      if (!(std::abs(b) > 0.0) || !std::isfinite(b))
        throw std::invalid_argument("beta0 values on the support must be nonzero");
  } else if (sparsity > 0 && !(std::abs(signal) > 0.0)) {
    throw std::invalid_argument("signal must be nonzero");
  }
  baseline.validate();
  if (censoring.kind == Censoring::Kind::uniform && !(censoring.c_max > 0.0))
    throw std::invalid_argument("censoring c_max must be positive");
  if (!(ar1_rho > -1.0 && ar1_rho < 1.0)) throw std::invalid_argument("ar1 rho must lie in (-1, 1)");
}

IndexSet GeneratorConfig::true_support() const {
  if (!support.empty()) return support;
  IndexSet s(static_cast<size_t>(sparsity));
  std::iota(s.begin(), s.end(), Index{0});
  return s;
}

Vector GeneratorConfig::beta0() const {
  Vector b = Vector::Zero(p);
  const IndexSet s = true_support();
  for (size_t k = 0; k < s.size(); ++k)
    b[s[k]] = beta0_values.empty() ? (k % 2 == 0 ? signal : -signal) : beta0_values[k];
  return b;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(master) ^ stream) ^ index);
}

namespace {

// Open-interval uniform from the raw engine output; independent of the
// standard library's distribution implementations.
double uniform01(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double event_probability(const Baseline& base, const Censoring& cens, double eta) {
  const double r = std::exp(eta);
  auto cdf = [&](double t) { return 1.0 - std::exp(-base.cumulative(t) * r); };
  if (cens.kind == Censoring::Kind::administrative) return cdf(1.0);
  const double c = cens.c_max;
  const double upper = std::min(c, 1.0);
  constexpr int kNodes = 256;
  double integral = 0.0;
  for (int k = 0; k < kNodes; ++k) integral += cdf(upper * (k + 0.5) / kNodes);
  integral *= upper / kNodes;
  if (c > 1.0) integral += (c - 1.0) * cdf(1.0);
  return integral / c;
}

}  // namespace

SimulatedData generate(const GeneratorConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  const Index n = cfg.n, p = cfg.p;
  const Vector beta0 = cfg.beta0();
  Matrix z(n, p);
  Vector time(n), latent_t(n), latent_c(n);
  std::vector<bool> event(static_cast<size_t>(n));
  const double innov = std::sqrt(1.0 - cfg.ar1_rho * cfg.ar1_rho);
  double expected = 0.0;
  for (Index i = 0; i < n; ++i) {
    double prev = 0.0;
    for (Index j = 0; j < p; ++j) {
      double v = 0.0;
      switch (cfg.covariates) {
        case CovariateLaw::rademacher: v = (rng() >> 63) ? 1.0 : -1.0; break;
        case CovariateLaw::uniform: v = 2.0 * uniform01(rng) - 1.0; break;
        case CovariateLaw::ar1: {
          const double e = 2.0 * uniform01(rng) - 1.0;
          v = j == 0 ? e : cfg.ar1_rho * prev + innov * e;
          v = std::clamp(v, -1.0, 1.0);
          break;
        }
      }
      z(i, j) = v;
      prev = v;
    }
    const double eta = z.row(i).dot(beta0);
    const double e = -std::log(uniform01(rng));
    const double t = cfg.baseline.inverse_cumulative(e * std::exp(-eta));
    const double c = cfg.censoring.kind == Censoring::Kind::administrative
                         ? 1.0
                         : cfg.censoring.c_max * uniform01(rng);
    const double cap = std::min(c, 1.0);
    latent_t[i] = t;
    latent_c[i] = c;
    event[static_cast<size_t>(i)] = t <= cap;
    time[i] = std::min(t, cap);
    expected += event_probability(cfg.baseline, cfg.censoring, eta);
  }
  SimulatedData out{SurvivalDataset::from_matrix(time, event, z, 1.0), {}};
  auto& truth = out.truth;
  truth.beta0 = beta0;
  truth.support = cfg.true_support();
  truth.baseline = cfg.baseline;
  truth.event_times = latent_t;
  truth.censoring_times = latent_c;
  truth.event_rate = static_cast<double>(out.data.event_count()) / static_cast<double>(n);
  truth.expected_events = expected;
  truth.few_events = expected < 5.0;
  truth.outside_assumptions = cfg.covariates == CovariateLaw::ar1;
  return out;
}

Matrix population_info(const GeneratorConfig& cfg, const Vector& beta, Index r_inner) {
  if (r_inner < 1) throw std::invalid_argument("population_info needs r_inner >= 1");
  if (beta.size() != cfg.p) throw std::invalid_argument("beta dimension mismatch");
  std::vector<Matrix> draws(static_cast<size_t>(r_inner));
#pragma omp parallel for schedule(dynamic)
  for (Index r = 0; r < r_inner; ++r) {
    GeneratorConfig c = cfg;
    c.seed = derive_seed(cfg.seed, 0x1F0, static_cast<std::uint64_t>(r));
    draws[static_cast<size_t>(r)] = neg_hessian(generate(c).data, beta);
  }
  Matrix acc = Matrix::Zero(cfg.p, cfg.p);
  for (const auto& d : draws) acc += d;
  acc /= static_cast<double>(r_inner);
  return 0.5 * (acc + acc.transpose());
}

SummaryStats summarize(std::vector<double> v) {
  SummaryStats s;
  s.count = v.size();
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  auto quantile = [&](double q) {
    const double pos = q * (n - 1.0);
    const size_t lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  s.median = quantile(0.5);
  s.q90 = quantile(0.9);
  s.min = v.front();
  s.max = v.back();
  return s;
}

double ks_distance_normal(std::vector<double> x) {
  if (x.empty()) return 0.0;
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double f = normal_cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const size_t n = a.size();
  if (n < 2 || b.size() != n) return 0.0;
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(n);
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return saa > 0.0 && sbb > 0.0 ? sab / std::sqrt(saa * sbb) : 0.0;
}

namespace {

struct ProbeRecord {
  double cumulative = 0.0;
  bool covered_martingale = false;
  bool covered_total = false;
  double corrected = 0.0;
};

struct ReplicateRecord {
  bool ok = false;
  std::string error;
  bool dantzig_converged = false;
  bool selection_exact = false;
  bool refit_converged = false;
  Index selected_size = 0;
  double l1_dantzig = 0.0;
  double l1_refit = 0.0;
  std::vector<double> z;           // standardized refit errors on T0
  std::vector<double> scaled_err;  // sqrt(n) (beta2_j - beta0_j)
  std::vector<char> covered;
  std::vector<ProbeRecord> probes;
  double epsilon = std::numeric_limits<double>::quiet_NaN();
};

ReplicateRecord run_replicate(const GeneratorConfig& cfg, const StudySettings& st, double gamma,
                              const Matrix* population, double level_z) {
  ReplicateRecord rec;
  const auto sim = generate(cfg);
  const auto& ds = sim.data;
  const auto& truth = sim.truth;
  if (population)
    rec.epsilon = matrix_sup_distance(*population, neg_hessian(ds, truth.beta0));
  if (ds.event_count() == 0) throw NumericalError("replicate has no events");
  const auto fit = fit_dantzig(ds, gamma, st.estimator.solver);
  rec.dantzig_converged = fit.converged;
  rec.l1_dantzig = (fit.beta_hat - truth.beta0).lpNorm<1>();
  rec.ok = true;
  if (!fit.converged) return rec;
  const auto support = select_support(fit);
  rec.selected_size = static_cast<Index>(support.indices.size());
  rec.selection_exact = support.indices == truth.support;
  if (rec.selected_size > ds.event_count()) return rec;
  const auto refit = refit_mle(ds, support, st.estimator.newton);
  rec.refit_converged = refit.converged;
  if (!refit.converged) return rec;
  rec.l1_refit = (refit.beta2 - truth.beta0).lpNorm<1>();
  if (!rec.selection_exact) return rec;

  const double sqrt_n = std::sqrt(static_cast<double>(ds.n()));
  const Index s = static_cast<Index>(truth.support.size());
  Vector err(s);
  for (Index k = 0; k < s; ++k) {
    const Index j = truth.support[static_cast<size_t>(k)];
    err[k] = refit.beta2[j] - truth.beta0[j];
    const double se = std::sqrt(refit.covariance(k, k));
    rec.z.push_back(err[k] / se);
    rec.scaled_err.push_back(sqrt_n * err[k]);
    rec.covered.push_back(std::abs(err[k] / se) <= level_z);
  }
  const auto est = breslow_estimate(ds, refit);
  for (double t : st.probe_times) {
    ProbeRecord pr;
    const double lambda0 = truth.baseline.cumulative(t);
    const auto im = hazard_interval(est, t, st.estimator.level, BandVariance::martingale);
    const auto it = hazard_interval(est, t, st.estimator.level, BandVariance::total);
    pr.cumulative = im.cumulative;
    pr.covered_martingale = im.lower <= lambda0 && lambda0 <= im.upper;
    pr.covered_total = it.lower <= lambda0 && lambda0 <= it.upper;
    const Vector h = est.drift_at(t);
    pr.corrected = sqrt_n * (im.cumulative - lambda0) - sqrt_n * h.dot(err);
    rec.probes.push_back(pr);
  }
  return rec;
}

}  // namespace

std::vector<McReport> run_mc_study(const StudySettings& st, int threads) {
  if (st.replicates < 1) throw std::invalid_argument("study needs at least one replicate");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
  if (!(st.estimator.level > 0.0 && st.estimator.level < 1.0))
    throw std::invalid_argument("level must lie in (0,1)");
  for (double t : st.probe_times)
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("probe times must lie in [0,1]");
  const double level_z = normal_quantile(0.5 * (1.0 + st.estimator.level));
  std::vector<McReport> reports;
  for (size_t g = 0; g < st.grid.size(); ++g) {
    const GeneratorConfig& cfg = st.grid[g];
    cfg.validate();
    McReport rep;
    rep.config = cfg;
    rep.replicates = st.replicates;
    rep.gamma = gamma_value(cfg.n, cfg.p, st.estimator.schedule);
    const Vector beta0 = cfg.beta0();
    const IndexSet support = cfg.true_support();

    std::optional<Matrix> population;
    if (st.population_replicates > 0) {
      GeneratorConfig pc = cfg;
      pc.seed = derive_seed(st.master_seed, 0xB0B0 + g, 0);
      population = population_info(pc, beta0, st.population_replicates);
    }

    std::vector<ReplicateRecord> records(static_cast<size_t>(st.replicates));
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (Index r = 0; r < st.replicates; ++r) {
      GeneratorConfig c = cfg;
      c.seed = derive_seed(st.master_seed, g, static_cast<std::uint64_t>(r));
      auto& rec = records[static_cast<size_t>(r)];
      try {
        rec = run_replicate(c, st, rep.gamma, population ? &*population : nullptr, level_z);
      } catch (const std::exception& e) {
        rec = ReplicateRecord{};
        rec.error = e.what();
      }
    }

    std::vector<double> l1d, l1r, eps;
    Index ok = 0, dconv = 0, exact = 0, rconv = 0;
    double size_sum = 0.0;
    const size_t s = support.size();
    std::vector<std::vector<double>> z(s), scaled(s);
    std::vector<size_t> covered(s, 0);
    const size_t probes = st.probe_times.size();
    std::vector<std::vector<double>> corrected(probes);
    std::vector<size_t> cov_m(probes, 0), cov_t(probes, 0);
    std::vector<double> err_sum(probes, 0.0);
    for (const auto& rec : records) {
      if (!rec.ok) {
        ++rep.failures;
        if (rep.failure_messages.size() < 5) rep.failure_messages.push_back(rec.error);
        continue;
      }
      ++ok;
      if (!std::isnan(rec.epsilon)) eps.push_back(rec.epsilon);
      l1d.push_back(rec.l1_dantzig);
      if (!rec.dantzig_converged) continue;
      ++dconv;
      size_sum += static_cast<double>(rec.selected_size);
      if (rec.selection_exact) ++exact;
      if (!rec.refit_converged) continue;
      ++rconv;
      l1r.push_back(rec.l1_refit);
      if (!rec.selection_exact) continue;
      for (size_t k = 0; k < s; ++k) {
        z[k].push_back(rec.z[k]);
        scaled[k].push_back(rec.scaled_err[k]);
        covered[k] += rec.covered[k] ? 1 : 0;
      }
      for (size_t q = 0; q < probes; ++q) {
        corrected[q].push_back(rec.probes[q].corrected);
        cov_m[q] += rec.probes[q].covered_martingale ? 1 : 0;
        cov_t[q] += rec.probes[q].covered_total ? 1 : 0;
        err_sum[q] += rec.probes[q].cumulative - cfg.baseline.cumulative(st.probe_times[q]);
      }
    }
    if (static_cast<double>(rep.failures) > 0.2 * static_cast<double>(st.replicates))
      throw NumericalError("Monte Carlo study aborted: " + std::to_string(rep.failures) + " of " +
                           std::to_string(st.replicates) + " replicates failed at grid point " +
                           std::to_string(g) +
                           (rep.failure_messages.empty() ? "" : " (" + rep.failure_messages.front() + ")"));
    const double okd = std::max<double>(1.0, static_cast<double>(ok));
    rep.dantzig_converged_rate = static_cast<double>(dconv) / okd;
    rep.selection_exact_rate = static_cast<double>(exact) / okd;
    rep.refit_converged_rate = static_cast<double>(rconv) / okd;
    rep.mean_selected_size = dconv > 0 ? size_sum / static_cast<double>(dconv) : 0.0;
    rep.l1_dantzig = summarize(l1d);
    rep.l1_refit = summarize(l1r);
    for (size_t k = 0; k < s; ++k) {
      const auto sz = summarize(z[k]);
      const double cnt = static_cast<double>(z[k].size());
      rep.normality.push_back({support[k], beta0[support[k]], z[k].size(), sz.mean, sz.sd,
                               ks_distance_normal(z[k]),
                               cnt > 0 ? static_cast<double>(covered[k]) / cnt : 0.0});
    }
    for (size_t q = 0; q < probes; ++q) {
      ProbeReport pr;
      pr.t = st.probe_times[q];
      pr.lambda0 = cfg.baseline.cumulative(pr.t);
      pr.count = corrected[q].size();
      const double cnt = std::max<double>(1.0, static_cast<double>(pr.count));
      pr.coverage_martingale = static_cast<double>(cov_m[q]) / cnt;
      pr.coverage_total = static_cast<double>(cov_t[q]) / cnt;
      pr.mean_error = err_sum[q] / cnt;
      for (size_t k = 0; k < s; ++k) pr.correlation.push_back(correlation(scaled[k], corrected[q]));
      rep.hazard.push_back(std::move(pr));
    }
    if (population) {
      PopulationDiagnostics pd;
      pd.epsilon = summarize(eps);
      if (!support.empty() && static_cast<Index>(support.size()) <= kMaxExactSparsity) {
        pd.kappa = compatibility_factor({*population, support}, KappaMethod::exact_orthant).value;
        pd.bound_shape = pd.kappa > 0.0 ? static_cast<double>(s) * rep.gamma / (pd.kappa * pd.kappa)
                                        : std::numeric_limits<double>::infinity();
      }
      rep.population = pd;
    }
    reports.push_back(std::move(rep));
  }
  return reports;
}

}  // namespace sparsecox
