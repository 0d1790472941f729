#include "sparsecox/cli.hpp"
#include "sparsecox/diagnostics.hpp"
#include "sparsecox/error.hpp"
#include "sparsecox/partial_likelihood.hpp"
#include "sparsecox/report.hpp"
#include "sparsecox/study_config.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;

namespace sparsecox {

namespace {

struct CommonArgs {
  std::string output_dir = ".";
  std::uint64_t seed = 0;
  double level = 0.95;
  int verbosity = 0;
};

struct FitArgs {
  std::string input;
  std::optional<double> gamma;
  double alpha = 0.5;
  double c_gamma = 0.5;
  bool normalize_time = false;
  bool standardize = false;
  bool total_variance = false;
  std::string newton_start = "dantzig";
  int max_outer = 50;
  Index dense_threshold = 100;
};

struct SimulateArgs {
  Index n = 100;
  Index p = 50;
  Index sparsity = 2;
  double signal = 1.0;
  std::string baseline = "constant";
  double rate = 1.0, shape = 1.0, scale = 1.0;
  std::string censoring = "administrative";
  double c_max = 2.0;
  std::string covariates = "rademacher";
  double rho = 0.5;
};

struct McArgs {
  std::string config;
  int threads = 0;
  std::optional<std::uint64_t> seed;
};

struct DiagnoseArgs {
  std::string input;
  std::string fit_dir;
  std::string method = "exact";
  bool self_test = false;
  bool normalize_time = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path prepare_output_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw IngestError("output directory '" + dir + "' is not usable");
  return fs::path(dir);
}

Vector rms_scale(const Matrix& z) {
  Vector s(z.cols());
  for (Index j = 0; j < z.cols(); ++j) {
    const double r = std::sqrt(z.col(j).squaredNorm() / static_cast<double>(z.rows()));
    s[j] = r > 0.0 ? r : 1.0;
  }
  return s;
}

/// Maps a refit computed on covariates Z / scale back to the original covariates.
RefitResult unscale(RefitResult res, const Vector& scale, double level) {
  res.beta2 = res.beta2.cwiseQuotient(scale);
  res.support.source_beta = res.support.source_beta.cwiseQuotient(scale);
  const auto& t = res.support.indices;
  Vector st(static_cast<Index>(t.size()));
  for (size_t k = 0; k < t.size(); ++k) st[static_cast<Index>(k)] = scale[t[k]];
  res.info_matrix = st.asDiagonal() * res.info_matrix * st.asDiagonal();
  const Vector inv = st.cwiseInverse();
  res.covariance = inv.asDiagonal() * res.covariance * inv.asDiagonal();
  if (!t.empty()) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(res.info_matrix, Eigen::EigenvaluesOnly);
    res.min_info_eigenvalue = es.eigenvalues().minCoeff();
  }
  res.wald_intervals = wald_inference(res, level);
  return res;
}

Json fit_settings(const FitArgs& a, const CommonArgs& c, const std::string& input_text) {
  Json s;
  s["command"] = "fit";
  s["input"] = fs::path(a.input).filename().string();
  s["input_hash"] = fnv1a_hex(input_text);
  TuningSchedule sched;
  sched.alpha = a.alpha;
  sched.c_gamma = a.c_gamma;
  sched.explicit_gamma = a.gamma;
  s["schedule"] = to_json(sched);
  s["level"] = c.level;
  s["normalize_time"] = a.normalize_time;
  s["standardize"] = a.standardize;
  s["total_variance"] = a.total_variance;
  s["newton_start"] = a.newton_start;
  s["max_outer"] = a.max_outer;
  s["dense_threshold"] = a.dense_threshold;
  return s;
}

int cmd_fit(const FitArgs& a, const CommonArgs& c, std::ostream& out, std::ostream& err) {
  if (a.input.empty()) throw IngestError("fit needs --input");
  if (!fs::exists(a.input)) throw IngestError("input file '" + a.input + "' does not exist");
  if (!(c.level > 0.0 && c.level < 1.0)) throw std::invalid_argument("--level must lie in (0, 1)");
  const std::string text = read_file(a.input);
  IngestOptions opts;
  opts.normalize_time = a.normalize_time;
  SurvivalDataset raw = parse_csv(text, opts);
  for (const auto& adj : raw.tie_adjustments())
    err << "warning: tied time for subject " << adj.subject + 1 << " moved from "
        << format_double(adj.original_time) << " to " << format_double(adj.adjusted_time) << "\n";
  const Vector scale = a.standardize ? rms_scale(raw.covariates()) : Vector::Ones(raw.p());
  const SurvivalDataset ds = a.standardize ? raw.rescaled_covariates(scale) : raw;
  const fs::path dir = prepare_output_dir(c.output_dir);

  TuningSchedule sched;
  sched.alpha = a.alpha;
  sched.c_gamma = a.c_gamma;
  sched.explicit_gamma = a.gamma;
  sched.validate();
  SolverControl ctrl;
  ctrl.max_outer = a.max_outer;
  ctrl.dense_threshold = a.dense_threshold;
  NewtonControl newton;
  if (a.newton_start == "zero") newton.start = NewtonStart::zero;
  else if (a.newton_start != "dantzig") throw std::invalid_argument("--newton-start must be dantzig or zero");

  Json j;
  j["metadata"] = metadata_block(c.seed, fit_settings(a, c, text));
  Json data;
  data["n"] = ds.n();
  data["p"] = ds.p();
  data["events"] = ds.event_count();
  data["time_scale"] = ds.time_scale();
  data["ties_broken"] = ds.tie_adjustments().size();
  data["covariate_scale"] = vector_json(scale);
  j["data"] = data;

  const double gamma = gamma_value(ds.n(), std::max<Index>(ds.p(), 2), sched);
  j["gamma"] = gamma;
  int code = kExitOk;
  std::optional<DantzigFit> fit;
  try {
    fit = fit_dantzig(ds, gamma, ctrl);
  } catch (const NumericalError& e) {
    j["error"] = e.what();
    j["dantzig"] = Json{{"converged", false}};
    write_text_file((dir / "fit.json").string(), dump_json(j));
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  Json dz;
  dz["beta_hat"] = vector_json(fit->beta_hat.cwiseQuotient(scale));
  dz["converged"] = fit->converged;
  dz["outer_iterations"] = fit->outer_iterations;
  dz["feasibility_residual"] = fit->feasibility_residual;
  dz["working_set"] = fit->working_set;
  j["dantzig"] = dz;

  std::optional<RefitResult> refit;
  if (!fit->converged) {
    err << "warning: Dantzig iteration did not converge in " << fit->outer_iterations
        << " steps\n";
    code = kExitNumerical;
  } else {
    const auto support = select_support(*fit);
    j["support"] = support.indices;
    try {
      refit = refit_mle(ds, support, newton);
    } catch (const NumericalError& e) {
      j["refit"] = Json{{"converged", false}, {"error", e.what()}};
      err << "error: " << e.what() << "\n";
      code = kExitNumerical;
    }
  }

  std::optional<HazardEstimate> est;
  if (refit) {
    if (!refit->converged) {
      err << "warning: refit did not converge"
          << (refit->monotone_likelihood ? " (monotone likelihood)" : "") << "\n";
      code = kExitNumerical;
    }
    const RefitResult shown = unscale(*refit, scale, c.level);
    Json r;
    r["beta2"] = vector_json(shown.beta2);
    r["converged"] = shown.converged;
    r["monotone_likelihood"] = shown.monotone_likelihood;
    r["restarted_from_zero"] = shown.restarted_from_zero;
    r["newton_iterations"] = shown.newton_iterations;
    r["loglik"] = shown.loglik;
    r["score_residual"] = shown.score_residual;
    r["min_info_eigenvalue"] = shown.min_info_eigenvalue;
    r["info_matrix"] = matrix_json(shown.info_matrix);
    r["covariance"] = matrix_json(shown.covariance);
    Json w = Json::array();
    for (const auto& iv : shown.wald_intervals)
      w.push_back(Json{{"coordinate", iv.coordinate},
                       {"estimate", iv.estimate},
                       {"lower", iv.lower},
                       {"upper", iv.upper}});
    r["level"] = c.level;
    r["wald_intervals"] = w;
    j["refit"] = r;
    if (refit->converged) est = breslow_estimate(ds, *refit);
  }
  if (!est) est = breslow_estimate(ds, fit->beta_hat);
  Json hz;
  hz["file"] = "hazard.csv";
  hz["from_refit"] = refit && refit->converged;
  hz["risk_horizon"] = est->risk_horizon * ds.time_scale();
  j["hazard"] = hz;
  write_text_file((dir / "fit.json").string(), dump_json(j));
  write_text_file((dir / "hazard.csv").string(),
                  format_hazard_csv(*est, c.level, ds.time_scale(),
                                    a.total_variance && !est->total_variance.empty()));
  out << "gamma=" << format_double(gamma) << " support={";
  if (j.contains("support"))
    for (size_t k = 0; k < j["support"].size(); ++k)
      out << (k ? ",z" : "z") << j["support"][k].get<Index>() + 1;
  out << "} converged=" << (code == kExitOk ? "yes" : "no") << "\n";
  return code;
}

GeneratorConfig generator_from(const SimulateArgs& a, std::uint64_t seed) {
  GeneratorConfig g;
  g.n = a.n;
  g.p = a.p;
  g.sparsity = a.sparsity;
  g.signal = a.signal;
  if (a.baseline == "constant") g.baseline.kind = Baseline::Kind::constant;
  else if (a.baseline == "weibull") g.baseline.kind = Baseline::Kind::weibull;
  else throw std::invalid_argument("--baseline must be constant or weibull");
  g.baseline.rate = a.rate;
  g.baseline.shape = a.shape;
  g.baseline.scale = a.scale;
  if (a.censoring == "administrative") g.censoring.kind = Censoring::Kind::administrative;
  else if (a.censoring == "uniform") g.censoring.kind = Censoring::Kind::uniform;
  else throw std::invalid_argument("--censoring must be administrative or uniform");
  g.censoring.c_max = a.c_max;
  if (a.covariates == "rademacher") g.covariates = CovariateLaw::rademacher;
  else if (a.covariates == "uniform") g.covariates = CovariateLaw::uniform;
  else if (a.covariates == "ar1") g.covariates = CovariateLaw::ar1;
  else throw std::invalid_argument("--covariates must be rademacher, uniform or ar1");
  g.ar1_rho = a.rho;
  g.seed = seed;
  return g;
}

int cmd_simulate(const SimulateArgs& a, const CommonArgs& c, std::ostream& out, std::ostream& err) {
  const GeneratorConfig cfg = generator_from(a, c.seed);
  cfg.validate();
  const auto sim = generate(cfg);
  const fs::path dir = prepare_output_dir(c.output_dir);
  Json settings;
  settings["command"] = "simulate";
  settings["generator"] = to_json(cfg);
  Json j;
  j["metadata"] = metadata_block(c.seed, settings);
  j["truth"] = to_json(sim.truth);
  write_text_file((dir / "data.csv").string(), format_csv(sim.data));
  write_text_file((dir / "truth.json").string(), dump_json(j));
  if (sim.truth.few_events)
    err << "warning: expected event count " << format_double(sim.truth.expected_events)
        << " is below 5\n";
  out << "n=" << cfg.n << " p=" << cfg.p << " events=" << sim.data.event_count()
      << " event_rate=" << format_double(sim.truth.event_rate) << "\n";
  return kExitOk;
}

int cmd_mc(const McArgs& a, const CommonArgs& c, std::ostream& out, std::ostream& err) {
  if (a.config.empty()) throw IngestError("mc needs --config");
  StudySettings st = load_study(a.config);
  if (a.seed) st.master_seed = *a.seed;
  const int threads = a.threads > 0 ? a.threads : omp_get_num_procs();
  const fs::path dir = prepare_output_dir(c.output_dir);
  if (c.verbosity > 0)
    err << "running " << st.grid.size() << " grid point(s) x " << st.replicates
        << " replicates on " << threads << " thread(s)\n";
  const auto reports = run_mc_study(st, threads);
  write_text_file((dir / "report.json").string(), dump_json(mc_report_json(st, reports)));
  write_text_file((dir / "report.csv").string(), mc_report_csv(reports));
  for (const auto& r : reports) {
    out << "n=" << r.config.n << " p=" << r.config.p << " S=" << r.config.sparsity
        << " selection=" << format_double(r.selection_exact_rate);
    double cov = 0.0, ks = 0.0;
    for (const auto& k : r.normality) {
      cov += k.coverage;
      ks = std::max(ks, k.ks);
    }
    if (!r.normality.empty()) cov /= static_cast<double>(r.normality.size());
    out << " wald_coverage=" << format_double(cov) << " max_ks=" << format_double(ks);
    for (const auto& h : r.hazard)
      out << " hazard_coverage@" << format_double(h.t) << "=" << format_double(h.coverage_total);
    if (r.failures > 0) out << " failures=" << r.failures;
    out << "\n";
  }
  return kExitOk;
}

int cmd_diagnose(const DiagnoseArgs& a, const CommonArgs& c, std::ostream& out, std::ostream& err) {
  const KappaMethod method = a.method == "exact"     ? KappaMethod::exact_orthant
                             : a.method == "sampled" ? KappaMethod::sampled
                                                     : throw std::invalid_argument(
                                                           "--method must be exact or sampled");
  if (a.self_test) {
    const auto k = compatibility_factor({Matrix::Identity(4, 4), {0, 1}}, method);
    out << "kappa=" << format_double(std::round(k.value * 1e9) / 1e9) << "\n";
    return std::abs(k.value - 1.0) <= 1e-6 ? kExitOk : kExitNumerical;
  }
  if (a.input.empty()) throw IngestError("diagnose needs --input");
  if (a.fit_dir.empty()) throw IngestError("diagnose needs --fit-dir");
  const fs::path fit_path = fs::path(a.fit_dir) / "fit.json";
  if (!fs::exists(fit_path)) throw IngestError("missing fit artifact '" + fit_path.string() + "'");
  Json fit;
  try {
    fit = Json::parse(read_file(fit_path.string()));
  } catch (const Json::parse_error& e) {
    throw IngestError("cannot parse '" + fit_path.string() + "': " + e.what());
  }
  if (!fit.contains("refit") || !fit["refit"].contains("beta2") || !fit.contains("support"))
    throw IngestError("'" + fit_path.string() + "' has no converged refit to diagnose");
  IngestOptions opts;
  opts.normalize_time = a.normalize_time;
  const SurvivalDataset ds = load_csv(a.input, opts);
  const auto& b = fit["refit"]["beta2"];
  if (static_cast<Index>(b.size()) != ds.p())
    throw IngestError("fit dimension " + std::to_string(b.size()) +
                      " does not match dataset p=" + std::to_string(ds.p()));
  Vector beta2(ds.p()), beta_hat = Vector::Zero(ds.p());
  for (Index j = 0; j < ds.p(); ++j) beta2[j] = b[static_cast<size_t>(j)].get<double>();
  if (fit.contains("dantzig") && fit["dantzig"].contains("beta_hat"))
    for (Index j = 0; j < ds.p(); ++j)
      beta_hat[j] = fit["dantzig"]["beta_hat"][static_cast<size_t>(j)].get<double>();
  const IndexSet support = fit["support"].get<IndexSet>();
  if (method == KappaMethod::exact_orthant && static_cast<Index>(support.size()) > kMaxExactSparsity)
    throw IngestError("support size " + std::to_string(support.size()) +
                      " exceeds the exact limit of " + std::to_string(kMaxExactSparsity) +
                      "; use --method sampled");

  const Matrix jn = neg_hessian(ds, beta2);
  Json j;
  Json settings;
  settings["command"] = "diagnose";
  settings["input"] = fs::path(a.input).filename().string();
  settings["fit_hash"] = fit["metadata"].value("settings_hash", "");
  settings["method"] = a.method;
  j["metadata"] = metadata_block(c.seed, settings);
  Json kj;
  if (!support.empty()) {
    KappaOptions ko;
    ko.seed = c.seed;
    const auto k = compatibility_factor({jn, support}, method, ko);
    kj["value"] = k.value;
    kj["upper_bound_only"] = k.upper_bound;
    kj["subproblems"] = k.subproblems;
    kj["bound_shape"] = k.value > 0.0 ? static_cast<double>(support.size()) *
                                            fit.value("gamma", 0.0) / (k.value * k.value)
                                      : std::numeric_limits<double>::infinity();
    if (!std::isfinite(kj["bound_shape"].get<double>())) kj["bound_shape"] = nullptr;
  } else {
    kj["value"] = nullptr;
    kj["note"] = "empty support";
  }
  kj["method"] = a.method;
  kj["support"] = support;
  j["kappa"] = kj;

  const auto est = breslow_estimate(ds, beta2, support);
  const Vector res = martingale_residuals(ds, est);
  std::vector<double> rv(res.data(), res.data() + res.size());
  Json rj = to_json(summarize(rv));
  rj["sum"] = res.sum();
  j["residuals"] = rj;
  Json dj;
  dj["jn_refit_vs_dantzig"] = matrix_sup_distance(jn, neg_hessian(ds, beta_hat));
  j["sup_distance"] = dj;
  const fs::path dir = prepare_output_dir(c.output_dir);
  write_text_file((dir / "diagnostics.json").string(), dump_json(j));
  (void)err;
  out << "kappa=" << (kj["value"].is_null() ? std::string("n/a") : format_double(kj["value"].get<double>()))
      << " residual_sum=" << format_double(res.sum()) << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse high-dimensional Cox regression: Dantzig selector, refit, Breslow hazard"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string(kVersion));
  CommonArgs common;
  FitArgs fa;
  SimulateArgs sa;
  McArgs ma;
  DiagnoseArgs da;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--output-dir", common.output_dir, "Directory for output files");
    sub->add_option("--seed", common.seed, "Seed recorded in the metadata block");
    sub->add_option("--level", common.level, "Confidence level")->check(CLI::Range(0.0, 1.0));
    sub->add_flag("-v,--verbose", common.verbosity, "More progress output");
  };

  auto* fit = app.add_subcommand("fit", "Dantzig selector, refit and Breslow hazard for a CSV");
  add_common(fit);
  fit->add_option("--input", fa.input, "Dataset CSV (time,status,z1,...,zp)")->required();
  fit->add_option("--gamma", fa.gamma, "Explicit tuning parameter");
  fit->add_option("--alpha", fa.alpha, "Schedule exponent: gamma = c * n^-alpha * log p");
  fit->add_option("--c-gamma", fa.c_gamma, "Schedule constant");
  fit->add_flag("--normalize-time", fa.normalize_time, "Divide times by the maximum time");
  fit->add_flag("--standardize", fa.standardize, "Scale covariates to unit RMS (undone on output)");
  fit->add_flag("--total-variance", fa.total_variance,
                "Add variance from the coefficient estimate to hazard.csv");
  fit->add_option("--newton-start", fa.newton_start, "dantzig or zero");
  fit->add_option("--max-outer", fa.max_outer, "Outer linearization steps");
  fit->add_option("--dense-threshold", fa.dense_threshold, "Largest p solved as one dense LP");

  auto* sim = app.add_subcommand("simulate", "Draw a dataset with known truth");
  add_common(sim);
  sim->add_option("--n", sa.n, "Subjects");
  sim->add_option("--p", sa.p, "Covariates");
  sim->add_option("--sparsity", sa.sparsity, "Nonzero coefficients");
  sim->add_option("--signal", sa.signal, "Magnitude of the alternating +/- coefficients");
  sim->add_option("--baseline", sa.baseline, "constant or weibull");
  sim->add_option("--rate", sa.rate, "Constant baseline rate");
  sim->add_option("--shape", sa.shape, "Weibull shape");
  sim->add_option("--scale", sa.scale, "Weibull scale");
  sim->add_option("--censoring", sa.censoring, "administrative or uniform");
  sim->add_option("--c-max", sa.c_max, "Upper end of uniform censoring");
  sim->add_option("--covariates", sa.covariates, "rademacher, uniform or ar1");
  sim->add_option("--rho", sa.rho, "ar1 correlation");

  auto* mc = app.add_subcommand("mc", "Run a Monte Carlo study from a config file");
  add_common(mc);
  mc->add_option("--config", ma.config, "Study config file")->required();
  mc->add_option("--threads", ma.threads, "Worker threads (default: available cores)");
  mc->add_option("--master-seed", ma.seed, "Override the config's master seed");

  auto* diag = app.add_subcommand("diagnose", "Compatibility factor and residuals for a fit");
  add_common(diag);
  diag->add_option("--input", da.input, "Dataset CSV the fit was computed on");
  diag->add_option("--fit-dir", da.fit_dir, "Directory holding fit.json");
  diag->add_option("--method", da.method, "exact or sampled");
  diag->add_flag("--self-test", da.self_test, "Check kappa on the identity matrix");
  diag->add_flag("--normalize-time", da.normalize_time, "Divide times by the maximum time");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  if (mc->parsed() && common.seed != 0 && !ma.seed) ma.seed = common.seed;

  try {
    if (fit->parsed()) return cmd_fit(fa, common, out, err);
    if (sim->parsed()) return cmd_simulate(sa, common, out, err);
    if (mc->parsed()) return cmd_mc(ma, common, out, err);
    return cmd_diagnose(da, common, out, err);
  } catch (const IngestError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace sparsecox
