#include "sparsecox/data_model.hpp"
#include "sparsecox/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace sparsecox {

CovariatePath CovariatePath::constant(Vector value) {
  if (value.size() < 1) throw std::invalid_argument("covariate vector must have dimension >= 1");
  CovariatePath path;
  path.values_.push_back(std::move(value));
  return path;
}

CovariatePath CovariatePath::step(std::vector<double> breakpoints, std::vector<Vector> values) {
  if (values.size() != breakpoints.size() + 1)
    throw std::invalid_argument("step path needs one value per segment");
  for (size_t k = 0; k < breakpoints.size(); ++k) {
    if (!(breakpoints[k] > 0.0 && breakpoints[k] < 1.0))
      throw std::invalid_argument("step path breakpoints must lie in (0,1)");
    if (k > 0 && !(breakpoints[k] > breakpoints[k - 1]))
      throw std::invalid_argument("step path breakpoints must be strictly ascending");
  }
  const Index p = values.front().size();
  if (p < 1) throw std::invalid_argument("covariate vector must have dimension >= 1");
  for (const auto& v : values)
    if (v.size() != p) throw std::invalid_argument("step path segments differ in dimension");
  CovariatePath path;
  path.breakpoints_ = std::move(breakpoints);
  path.values_ = std::move(values);
  return path;
}

const Vector& CovariatePath::at(double t) const {
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  return values_[static_cast<size_t>(it - breakpoints_.begin())];
}

double CovariatePath::sup_norm() const {
  double m = 0.0;
  for (const auto& v : values_) m = std::max(m, v.lpNorm<Eigen::Infinity>());
  return m;
}

SurvivalDataset::SurvivalDataset(std::vector<Subject> subjects,
                                 std::optional<double> covariate_bound, double time_scale)
    : subjects_(std::move(subjects)), time_scale_(time_scale) {
  if (subjects_.empty()) throw std::invalid_argument("dataset must contain at least one subject");
  p_ = subjects_.front().covariates.dim();
  if (p_ < 1) throw std::invalid_argument("covariate dimension must be >= 1");
  double sup = 0.0;
  for (size_t i = 0; i < subjects_.size(); ++i) {
    const auto& s = subjects_[i];
    if (!(s.observed_time > 0.0 && s.observed_time <= 1.0))
      throw std::invalid_argument("observed time of subject " + std::to_string(i) +
                                  " outside (0,1]");
    if (s.covariates.dim() != p_)
      throw std::invalid_argument("subject " + std::to_string(i) + " has covariate dimension " +
                                  std::to_string(s.covariates.dim()) + ", expected " +
                                  std::to_string(p_));
    const double norm = s.covariates.sup_norm();
    if (!std::isfinite(norm))
      throw std::invalid_argument("non-finite covariate for subject " + std::to_string(i));
    sup = std::max(sup, norm);
    time_varying_ = time_varying_ || !s.covariates.is_constant();
  }
  if (covariate_bound) {
    if (sup > *covariate_bound)
      throw std::invalid_argument("covariate sup-norm " + format_double(sup) +
                                  " exceeds declared bound " + format_double(*covariate_bound));
    covariate_bound_ = *covariate_bound;
  } else {
    covariate_bound_ = sup;
  }
  resolve_ties();
  build_views();
}

SurvivalDataset SurvivalDataset::from_matrix(const Vector& time, const std::vector<bool>& event,
                                             const Matrix& z,
                                             std::optional<double> covariate_bound) {
  if (time.size() != z.rows() || static_cast<Index>(event.size()) != z.rows())
    throw std::invalid_argument("time, event and covariate rows differ in length");
  std::vector<Subject> subjects(static_cast<size_t>(z.rows()));
  for (Index i = 0; i < z.rows(); ++i) {
    auto& s = subjects[static_cast<size_t>(i)];
    s.observed_time = time[i];
    s.event = event[static_cast<size_t>(i)];
    s.covariates = CovariatePath::constant(z.row(i).transpose());
  }
  return SurvivalDataset(std::move(subjects), covariate_bound);
}

// Tied event times: the first row of a tie group keeps its time, the k-th
// later row moves by gap / 2^k where gap is the smallest positive spacing
// among {0} U times U {1}. Moves go downward only at t = 1.
void SurvivalDataset::resolve_ties() {
  std::vector<double> grid;
  grid.reserve(subjects_.size() + 2);
  grid.push_back(0.0);
  grid.push_back(1.0);
  for (const auto& s : subjects_) grid.push_back(s.observed_time);
  std::sort(grid.begin(), grid.end());
  double gap = 1.0;
  for (size_t k = 1; k < grid.size(); ++k) {
    const double d = grid[k] - grid[k - 1];
    if (d > 0.0) gap = std::min(gap, d);
  }
  std::map<double, int> seen;
  for (size_t i = 0; i < subjects_.size(); ++i) {
    auto& s = subjects_[i];
    if (!s.event) continue;
    const int rank = seen[s.observed_time]++;
    if (rank == 0) continue;
    const double delta = std::ldexp(gap, -rank);
    const double original = s.observed_time;
    s.observed_time = original + delta <= 1.0 ? original + delta : original - delta;
    ties_.push_back({static_cast<Index>(i), original, s.observed_time, rank});
  }
}

void SurvivalDataset::build_views() {
  const Index n = this->n();
  time_.resize(n);
  event_.resize(static_cast<size_t>(n));
  z_.resize(n, p_);
  for (Index i = 0; i < n; ++i) {
    const auto& s = subjects_[static_cast<size_t>(i)];
    time_[i] = s.observed_time;
    event_[static_cast<size_t>(i)] = s.event;
    z_.row(i) = s.covariates.values().front().transpose();
  }
  desc_order_.resize(static_cast<size_t>(n));
  std::iota(desc_order_.begin(), desc_order_.end(), Index{0});
  std::stable_sort(desc_order_.begin(), desc_order_.end(),
                   [&](Index a, Index b) { return time_[a] > time_[b]; });
  events_.clear();
  for (Index i = 0; i < n; ++i)
    if (event_[static_cast<size_t>(i)]) events_.push_back({time_[i], i});
  std::sort(events_.begin(), events_.end(),
            [](const EventTime& a, const EventTime& b) { return a.time < b.time; });
}

Vector SurvivalDataset::covariate_at(Index i, double t) const {
  const auto& path = subject(i).covariates;
  if (path.is_constant()) return z_.row(i).transpose();
  return path.at(t);
}

SurvivalDataset SurvivalDataset::rescaled_covariates(const Vector& scale) const {
  if (scale.size() != p_) throw std::invalid_argument("scale vector dimension mismatch");
  std::vector<Subject> out = subjects_;
  double bound = 0.0;
  for (auto& s : out) {
    std::vector<Vector> values = s.covariates.values();
    for (auto& v : values) v = v.cwiseQuotient(scale);
    s.covariates = s.covariates.is_constant()
                       ? CovariatePath::constant(std::move(values.front()))
                       : CovariatePath::step(s.covariates.breakpoints(), std::move(values));
    bound = std::max(bound, s.covariates.sup_norm());
  }
  SurvivalDataset ds(std::move(out), bound, time_scale_);
  ds.ties_ = ties_;
  return ds;
}

CountingState counting_process(const SurvivalDataset& ds, Index i, double t) {
  if (i < 0 || i >= ds.n())
    throw std::invalid_argument("subject index " + std::to_string(i) + " out of range");
  const double x = ds.time(i);
  return {(ds.event(i) && x <= t) ? 1 : 0, x >= t ? 1 : 0};
}

std::vector<EventTime> event_times(const SurvivalDataset& ds) { return ds.event_times(); }

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Rows are numbered among data rows; the file line is given alongside.
std::string row_label(size_t row, size_t line) {
  return "row " + std::to_string(row) + " (line " + std::to_string(line) + ")";
}

[[noreturn]] void fail(const std::string& row, const std::string& column, const std::string& what) {
  throw IngestError(row + ", column '" + column + "': " + what);
}

double parse_number(const std::string& field, const std::string& row, const std::string& column) {
  if (field.empty()) fail(row, column, "missing value");
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) fail(row, column, "non-numeric value '" + field + "'");
  if (!std::isfinite(value)) fail(row, column, "non-finite value '" + field + "'");
  return value;
}

}  // namespace

SurvivalDataset parse_csv(const std::string& text, const IngestOptions& options) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    header = split(t);
    break;
  }
  if (header.size() < 3 || header[0] != "time" || header[1] != "status")
    throw IngestError("header must be 'time,status,z1,...,zp'");
  const size_t p = header.size() - 2;
  for (size_t j = 0; j < p; ++j)
    if (header[j + 2] != "z" + std::to_string(j + 1))
      throw IngestError("header column " + std::to_string(j + 3) + " must be 'z" +
                        std::to_string(j + 1) + "', found '" + header[j + 2] + "'");

  std::vector<double> times;
  std::vector<bool> status;
  std::vector<Vector> rows;
  std::vector<size_t> line_of_row;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto fields = split(t);
    const std::string row = row_label(times.size() + 1, line_no);
    if (fields.size() != header.size())
      throw IngestError(row + ": expected " +
                        std::to_string(header.size()) + " fields, found " +
                        std::to_string(fields.size()));
    const double time = parse_number(fields[0], row, "time");
    const double st = parse_number(fields[1], row, "status");
    if (st != 0.0 && st != 1.0) fail(row, "status", "status must be 0 or 1");
    Vector z(static_cast<Index>(p));
    for (size_t j = 0; j < p; ++j)
      z[static_cast<Index>(j)] = parse_number(fields[j + 2], row, header[j + 2]);
    times.push_back(time);
    status.push_back(st == 1.0);
    rows.push_back(std::move(z));
    line_of_row.push_back(line_no);
  }
  if (times.empty()) throw IngestError("dataset contains no rows");

  double scale = 1.0;
  if (options.normalize_time) {
    scale = *std::max_element(times.begin(), times.end());
    if (!(scale > 0.0)) throw IngestError("normalize_time needs a positive maximum time");
  }
  std::vector<Subject> subjects(times.size());
  for (size_t i = 0; i < times.size(); ++i) {
    const double t = options.normalize_time ? times[i] / scale : times[i];
    if (!(t > 0.0 && t <= 1.0))
      fail(row_label(i + 1, line_of_row[i]), "time",
           "time " + format_double(times[i]) + " outside (0,1] (use normalize_time)");
    subjects[i] = {t, status[i], CovariatePath::constant(std::move(rows[i]))};
  }
  try {
    return SurvivalDataset(std::move(subjects), options.covariate_bound, scale);
  } catch (const std::invalid_argument& e) {
    throw IngestError(e.what());
  }
}

SurvivalDataset load_csv(const std::filesystem::path& path, const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), options);
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string format_csv(const SurvivalDataset& ds) {
  if (ds.time_varying())
    throw std::invalid_argument("CSV format carries constant covariates only");
  std::string out = "time,status";
  for (Index j = 0; j < ds.p(); ++j) out += ",z" + std::to_string(j + 1);
  out += '\n';
  for (Index i = 0; i < ds.n(); ++i) {
    out += format_double(ds.time(i));
    out += ds.event(i) ? ",1" : ",0";
    for (Index j = 0; j < ds.p(); ++j) {
      out += ',';
      out += format_double(ds.covariates()(i, j));
    }
    out += '\n';
  }
  return out;
}

void save_csv(const SurvivalDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot write '" + path.string() + "'");
  out << format_csv(ds);
}

}  // namespace sparsecox
