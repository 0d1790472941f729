#include "sparsecox/report.hpp"
#include "sparsecox/data_model.hpp"
#include "sparsecox/error.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace sparsecox {

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json metadata_block(std::uint64_t seed, const Json& settings) {
  Json m;
  m["version"] = kVersion;
  m["seed"] = seed;
  m["settings_hash"] = fnv1a_hex(settings.dump());
  m["settings"] = settings;
  return m;
}

namespace {

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

const char* name(Baseline::Kind k) { return k == Baseline::Kind::constant ? "constant" : "weibull"; }
const char* name(Censoring::Kind k) {
  return k == Censoring::Kind::administrative ? "administrative" : "uniform";
}
const char* name(CovariateLaw k) {
  switch (k) {
    case CovariateLaw::rademacher: return "rademacher";
    case CovariateLaw::uniform: return "uniform";
    case CovariateLaw::ar1: return "ar1";
  }
  return "";
}

Json baseline_json(const Baseline& b) {
  Json j;
  j["kind"] = name(b.kind);
  if (b.kind == Baseline::Kind::constant) {
    j["rate"] = b.rate;
  } else {
    j["shape"] = b.shape;
    j["scale"] = b.scale;
  }
  return j;
}

}  // namespace

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
  return a;
}

Json matrix_json(const Matrix& m) {
  Json a = Json::array();
  for (Index i = 0; i < m.rows(); ++i) a.push_back(vector_json(m.row(i).transpose()));
  return a;
}

Json to_json(const GeneratorConfig& c) {
  Json j;
  j["n"] = c.n;
  j["p"] = c.p;
  j["sparsity"] = c.sparsity;
  j["support"] = c.true_support();
  j["beta0"] = vector_json(c.beta0());
  j["baseline"] = baseline_json(c.baseline);
  j["censoring"] = name(c.censoring.kind);
  if (c.censoring.kind == Censoring::Kind::uniform) j["c_max"] = c.censoring.c_max;
  j["covariates"] = name(c.covariates);
  if (c.covariates == CovariateLaw::ar1) j["rho"] = c.ar1_rho;
  return j;
}

Json to_json(const TuningSchedule& s) {
  Json j;
  j["alpha"] = s.alpha;
  j["zeta"] = s.zeta;
  j["c_gamma"] = s.c_gamma;
  j["gamma"] = s.explicit_gamma ? Json(*s.explicit_gamma) : Json(nullptr);
  return j;
}

Json to_json(const SolverControl& c) {
  Json j;
  j["max_outer"] = c.max_outer;
  j["tol_step"] = c.tol_step;
  j["dense_threshold"] = c.dense_threshold;
  j["pivot_tolerance"] = c.simplex.pivot_tolerance;
  j["max_lp_iterations"] = c.simplex.max_iterations;
  return j;
}

Json to_json(const NewtonControl& c) {
  Json j;
  j["start"] = c.start == NewtonStart::dantzig ? "dantzig" : "zero";
  j["max_iterations"] = c.max_iterations;
  j["score_tolerance"] = c.score_tolerance;
  j["step_tolerance"] = c.step_tolerance;
  j["max_beta"] = c.max_beta;
  return j;
}

Json to_json(const EstimatorSettings& e) {
  Json j;
  j["schedule"] = to_json(e.schedule);
  j["solver"] = to_json(e.solver);
  j["newton"] = to_json(e.newton);
  j["level"] = e.level;
  return j;
}

Json to_json(const StudySettings& st) {
  Json j;
  j["replicates"] = st.replicates;
  j["master_seed"] = st.master_seed;
  j["probe_times"] = st.probe_times;
  j["population_replicates"] = st.population_replicates;
  j["estimator"] = to_json(st.estimator);
  Json grid = Json::array();
  for (const auto& g : st.grid) grid.push_back(to_json(g));
  j["grid"] = grid;
  return j;
}

Json to_json(const SummaryStats& s) {
  Json j;
  j["count"] = s.count;
  j["mean"] = number(s.mean);
  j["sd"] = number(s.sd);
  j["median"] = number(s.median);
  j["q90"] = number(s.q90);
  j["min"] = number(s.min);
  j["max"] = number(s.max);
  return j;
}

Json to_json(const McReport& r) {
  Json j;
  j["config"] = to_json(r.config);
  j["gamma"] = r.gamma;
  j["replicates"] = r.replicates;
  j["failures"] = r.failures;
  j["failure_messages"] = r.failure_messages;
  j["dantzig_converged_rate"] = r.dantzig_converged_rate;
  j["selection_exact_rate"] = r.selection_exact_rate;
  j["refit_converged_rate"] = r.refit_converged_rate;
  j["mean_selected_size"] = r.mean_selected_size;
  j["l1_error_dantzig"] = to_json(r.l1_dantzig);
  j["l1_error_refit"] = to_json(r.l1_refit);
  Json norm = Json::array();
  for (const auto& c : r.normality) {
    Json e;
    e["coordinate"] = c.coordinate;
    e["beta0"] = c.beta0;
    e["count"] = c.count;
    e["mean"] = number(c.mean);
    e["sd"] = number(c.sd);
    e["ks"] = number(c.ks);
    e["coverage"] = number(c.coverage);
    norm.push_back(e);
  }
  j["normality"] = norm;
  Json hz = Json::array();
  for (const auto& h : r.hazard) {
    Json e;
    e["t"] = h.t;
    e["lambda0"] = h.lambda0;
    e["count"] = h.count;
    e["coverage_martingale"] = number(h.coverage_martingale);
    e["coverage_total"] = number(h.coverage_total);
    e["mean_error"] = number(h.mean_error);
    Json corr = Json::array();
    for (double c : h.correlation) corr.push_back(number(c));
    e["independence_correlation"] = corr;
    hz.push_back(e);
  }
  j["hazard"] = hz;
  if (r.population) {
    Json p;
    p["kappa"] = number(r.population->kappa);
    p["bound_shape"] = number(r.population->bound_shape);
    p["epsilon"] = to_json(r.population->epsilon);
    j["population"] = p;
  }
  return j;
}

Json to_json(const TruthRecord& t) {
  Json j;
  j["beta0"] = vector_json(t.beta0);
  j["support"] = t.support;
  j["baseline"] = baseline_json(t.baseline);
  j["event_rate"] = t.event_rate;
  j["expected_events"] = t.expected_events;
  j["few_events"] = t.few_events;
  j["outside_assumptions"] = t.outside_assumptions;
  j["event_times"] = vector_json(t.event_times);
  j["censoring_times"] = vector_json(t.censoring_times);
  return j;
}

Json mc_report_json(const StudySettings& st, const std::vector<McReport>& reports) {
  Json j;
  j["metadata"] = metadata_block(st.master_seed, to_json(st));
  Json arr = Json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  j["grid"] = arr;
  return j;
}

std::string mc_report_csv(const std::vector<McReport>& reports) {
  size_t s_max = 0, probes = 0;
  for (const auto& r : reports) {
    s_max = std::max(s_max, r.normality.size());
    probes = std::max(probes, r.hazard.size());
  }
  std::ostringstream out;
  out << "n,p,sparsity,gamma,replicates,failures,selection_exact_rate,mean_selected_size,"
         "l1_dantzig_mean,l1_refit_mean";
  for (size_t k = 0; k < s_max; ++k)
    out << ",z" << k + 1 << "_mean,z" << k + 1 << "_sd,z" << k + 1 << "_ks,z" << k + 1
        << "_coverage";
  for (size_t q = 0; q < probes; ++q)
    out << ",hazard" << q + 1 << "_t,hazard" << q + 1 << "_coverage,hazard" << q + 1
        << "_coverage_total";
  out << '\n';
  auto f = [](double v) { return std::isfinite(v) ? format_double(v) : std::string(); };
  for (const auto& r : reports) {
    out << r.config.n << ',' << r.config.p << ',' << r.config.sparsity << ',' << f(r.gamma) << ','
        << r.replicates << ',' << r.failures << ',' << f(r.selection_exact_rate) << ','
        << f(r.mean_selected_size) << ',' << f(r.l1_dantzig.mean) << ',' << f(r.l1_refit.mean);
    for (size_t k = 0; k < s_max; ++k) {
      if (k < r.normality.size()) {
        const auto& c = r.normality[k];
        out << ',' << f(c.mean) << ',' << f(c.sd) << ',' << f(c.ks) << ',' << f(c.coverage);
      } else {
        out << ",,,,";
      }
    }
    for (size_t q = 0; q < probes; ++q) {
      if (q < r.hazard.size()) {
        const auto& h = r.hazard[q];
        out << ',' << f(h.t) << ',' << f(h.coverage_martingale) << ',' << f(h.coverage_total);
      } else {
        out << ",,,";
      }
    }
    out << '\n';
  }
  return out.str();
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot write '" + path + "'");
  out << content;
  if (!out) throw IngestError("failed writing '" + path + "'");
}

}  // namespace sparsecox
