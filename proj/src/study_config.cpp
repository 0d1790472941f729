#include "sparsecox/study_config.hpp"
#include "sparsecox/error.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace sparsecox {

ConfigError::ConfigError(int line, const std::string& msg)
    : IngestError(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

struct Entry {
  std::string value;
  int line;
};

double to_double(const Entry& e, const std::string& key) {
  double v = 0.0;
  const char* b = e.value.data();
  const char* end = b + e.value.size();
  auto [ptr, ec] = std::from_chars(b, end, v);
  if (ec != std::errc() || ptr != end)
    throw ConfigError(e.line, "'" + key + "' expects a number, got '" + e.value + "'");
  return v;
}

std::vector<double> to_doubles(const Entry& e, const std::string& key) {
  std::vector<double> out;
  for (const auto& item : split_list(e.value)) out.push_back(to_double({item, e.line}, key));
  if (out.empty()) throw ConfigError(e.line, "'" + key + "' expects at least one value");
  return out;
}

long long to_integer(const Entry& e, const std::string& key) {
  long long v = 0;
  const char* b = e.value.data();
  const char* end = b + e.value.size();
  auto [ptr, ec] = std::from_chars(b, end, v);
  if (ec != std::errc() || ptr != end)
    throw ConfigError(e.line, "'" + key + "' expects an integer, got '" + e.value + "'");
  return v;
}

std::vector<Index> to_indices(const Entry& e, const std::string& key, long long min) {
  std::vector<Index> out;
  for (const auto& item : split_list(e.value)) {
    const long long v = to_integer({item, e.line}, key);
    if (v < min)
      throw ConfigError(e.line, "'" + key + "' must be >= " + std::to_string(min));
    out.push_back(static_cast<Index>(v));
  }
  if (out.empty()) throw ConfigError(e.line, "'" + key + "' expects at least one value");
  return out;
}

using Section = std::map<std::string, Entry>;

}  // namespace

StudySettings parse_study(const std::string& text) {
  static const std::map<std::string, std::vector<std::string>> known = {
      {"study", {"replicates", "seed", "probe_times", "level", "population_replicates"}},
      {"generator",
       {"n", "p", "sparsity", "signal", "beta0", "support", "baseline", "rate", "shape", "scale",
        "censoring", "c_max", "covariates", "rho"}},
      {"estimator",
       {"c_gamma", "alpha", "zeta", "gamma", "max_outer", "tol_step", "dense_threshold",
        "newton_start", "max_beta", "newton_max_iterations"}},
  };
  std::map<std::string, Section> sections;
  std::string current;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto cut = raw.find_first_of("#;");
    const std::string line = trim(std::string_view(raw).substr(0, cut));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(line_no, "unterminated section header");
      current = trim(std::string_view(line).substr(1, line.size() - 2));
      if (!known.count(current)) throw ConfigError(line_no, "unknown section [" + current + "]");
      sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line_no, "expected 'key = value'");
    if (current.empty()) throw ConfigError(line_no, "key outside of any section");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const auto& allowed = known.at(current);
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError(line_no, "unknown key '" + key + "' in [" + current + "]");
    if (value.empty()) throw ConfigError(line_no, "empty value for '" + key + "'");
    auto& sec = sections[current];
    if (sec.count(key)) throw ConfigError(line_no, "duplicate key '" + key + "'");
    sec[key] = {value, line_no};
  }

  StudySettings st;
  auto with = [&](const std::string& sec, const std::string& key,
                  const std::function<void(const Entry&)>& f) {
    auto s = sections.find(sec);
    if (s == sections.end()) return;
    auto e = s->second.find(key);
    if (e != s->second.end()) f(e->second);
  };

  with("study", "replicates", [&](const Entry& e) {
    st.replicates = to_indices(e, "replicates", 1).front();
  });
  with("study", "seed", [&](const Entry& e) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (ec != std::errc() || ptr != e.value.data() + e.value.size())
      throw ConfigError(e.line, "'seed' expects an unsigned integer");
    st.master_seed = v;
  });
  with("study", "probe_times", [&](const Entry& e) {
    st.probe_times = to_doubles(e, "probe_times");
    for (double t : st.probe_times)
      if (!(t >= 0.0 && t <= 1.0)) throw ConfigError(e.line, "probe times must lie in [0, 1]");
  });
  with("study", "level", [&](const Entry& e) {
    st.estimator.level = to_double(e, "level");
    if (!(st.estimator.level > 0.0 && st.estimator.level < 1.0))
      throw ConfigError(e.line, "'level' must lie in (0, 1)");
  });
  with("study", "population_replicates", [&](const Entry& e) {
    st.population_replicates = to_indices(e, "population_replicates", 0).front();
  });

  if (!sections.count("generator")) throw ConfigError(0, "missing section [generator]");
  const Section& gen = sections.at("generator");
  if (!gen.count("n")) throw ConfigError(0, "missing required key 'n' in [generator]");
  if (!gen.count("p")) throw ConfigError(0, "missing required key 'p' in [generator]");
  const auto ns = to_indices(gen.at("n"), "n", 1);
  const auto ps = to_indices(gen.at("p"), "p", 1);
  std::vector<Index> ss{2};
  GeneratorConfig base;
  with("generator", "sparsity", [&](const Entry& e) { ss = to_indices(e, "sparsity", 0); });
  with("generator", "signal", [&](const Entry& e) { base.signal = to_double(e, "signal"); });
  std::optional<Entry> beta0_entry, support_entry;
  with("generator", "beta0", [&](const Entry& e) {
    beta0_entry = e;
    base.beta0_values = to_doubles(e, "beta0");
  });
  with("generator", "support", [&](const Entry& e) {
    support_entry = e;
    base.support = to_indices(e, "support", 0);
  });
  with("generator", "baseline", [&](const Entry& e) {
    if (e.value == "constant") base.baseline.kind = Baseline::Kind::constant;
    else if (e.value == "weibull") base.baseline.kind = Baseline::Kind::weibull;
    else throw ConfigError(e.line, "baseline must be 'constant' or 'weibull'");
  });
  with("generator", "rate", [&](const Entry& e) { base.baseline.rate = to_double(e, "rate"); });
  with("generator", "shape", [&](const Entry& e) { base.baseline.shape = to_double(e, "shape"); });
  with("generator", "scale", [&](const Entry& e) { base.baseline.scale = to_double(e, "scale"); });
  with("generator", "censoring", [&](const Entry& e) {
    if (e.value == "administrative") base.censoring.kind = Censoring::Kind::administrative;
    else if (e.value == "uniform") base.censoring.kind = Censoring::Kind::uniform;
    else throw ConfigError(e.line, "censoring must be 'administrative' or 'uniform'");
  });
  with("generator", "c_max", [&](const Entry& e) { base.censoring.c_max = to_double(e, "c_max"); });
  with("generator", "covariates", [&](const Entry& e) {
    if (e.value == "rademacher") base.covariates = CovariateLaw::rademacher;
    else if (e.value == "uniform") base.covariates = CovariateLaw::uniform;
    else if (e.value == "ar1") base.covariates = CovariateLaw::ar1;
    else throw ConfigError(e.line, "covariates must be 'rademacher', 'uniform' or 'ar1'");
  });
  with("generator", "rho", [&](const Entry& e) { base.ar1_rho = to_double(e, "rho"); });

  auto& est = st.estimator;
  with("estimator", "c_gamma", [&](const Entry& e) { est.schedule.c_gamma = to_double(e, "c_gamma"); });
  with("estimator", "alpha", [&](const Entry& e) { est.schedule.alpha = to_double(e, "alpha"); });
  with("estimator", "zeta", [&](const Entry& e) { est.schedule.zeta = to_double(e, "zeta"); });
  with("estimator", "gamma", [&](const Entry& e) { est.schedule.explicit_gamma = to_double(e, "gamma"); });
  with("estimator", "max_outer", [&](const Entry& e) {
    est.solver.max_outer = static_cast<int>(to_indices(e, "max_outer", 1).front());
  });
  with("estimator", "tol_step", [&](const Entry& e) { est.solver.tol_step = to_double(e, "tol_step"); });
  with("estimator", "dense_threshold", [&](const Entry& e) {
    est.solver.dense_threshold = to_indices(e, "dense_threshold", 0).front();
  });
  with("estimator", "newton_start", [&](const Entry& e) {
    if (e.value == "dantzig") est.newton.start = NewtonStart::dantzig;
    else if (e.value == "zero") est.newton.start = NewtonStart::zero;
    else throw ConfigError(e.line, "newton_start must be 'dantzig' or 'zero'");
  });
  with("estimator", "max_beta", [&](const Entry& e) { est.newton.max_beta = to_double(e, "max_beta"); });
  with("estimator", "newton_max_iterations", [&](const Entry& e) {
    est.newton.max_iterations = static_cast<int>(to_indices(e, "newton_max_iterations", 1).front());
  });
  try {
    est.schedule.validate();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(0, std::string("[estimator] ") + ex.what());
  }

  for (Index s : ss)
    for (Index p : ps)
      for (Index n : ns) {
        GeneratorConfig cfg = base;
        cfg.n = n;
        cfg.p = p;
        cfg.sparsity = s;
        try {
          cfg.validate();
        } catch (const std::invalid_argument& ex) {
          const int line = support_entry ? support_entry->line
                           : beta0_entry ? beta0_entry->line
                                         : gen.at("n").line;
          throw ConfigError(line, std::string("invalid generator (n=") + std::to_string(n) +
                                      ", p=" + std::to_string(p) + ", sparsity=" +
                                      std::to_string(s) + "): " + ex.what());
        }
        st.grid.push_back(std::move(cfg));
      }
  return st;
}

StudySettings load_study(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open study config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_study(ss.str());
}

}  // namespace sparsecox
