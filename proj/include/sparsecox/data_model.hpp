#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sparsecox {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// Ascending, duplicate-free list of 0-based coordinate indices.
using IndexSet = std::vector<Index>;

/**
 * Covariate process Z_i(t) of one subject, restricted to constant or
 * piecewise-constant paths. Segment k covers [b_k, b_{k+1}) with b_0 = 0
 * and the last segment extending to 1, so evaluation at a breakpoint
 * returns the value of the segment that starts there.
 */
class CovariatePath {
 public:
  CovariatePath() = default;

  static CovariatePath constant(Vector value);
  /// `values.size()` must equal `breakpoints.size() + 1`; breakpoints
  /// strictly ascending inside (0, 1).
  static CovariatePath step(std::vector<double> breakpoints, std::vector<Vector> values);

  bool is_constant() const { return breakpoints_.empty(); }
  Index dim() const { return values_.empty() ? 0 : values_.front().size(); }
  const Vector& at(double t) const;
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<Vector>& values() const { return values_; }
  double sup_norm() const;

 private:
  std::vector<double> breakpoints_;
  std::vector<Vector> values_;
};

struct Subject {
  double observed_time = 0.0;  // X_i = min(T_i, C_i) on the unit time window
  bool event = false;          // D_i
  CovariatePath covariates;
};

/// One tied event time moved off its tie.
struct TieAdjustment {
  Index subject;
  double original_time;
  double adjusted_time;
  int rank;  // 1 for the second event in the tie group, 2 for the third, ...
};

struct EventTime {
  double time;
  Index subject;
};

struct CountingState {
  int N;  // event has occurred by t
  int Y;  // still at risk at t
};

struct IngestOptions {
  bool normalize_time = false;
  /// Declared covariate bound K1. When absent the observed sup-norm is used.
  std::optional<double> covariate_bound;
};

/**
 * Immutable censored survival sample {(X_i, D_i, Z_i)}. Construction
 * validates the unit time window and the covariate bound and breaks ties
 * between event times (see `tie_adjustments`).
 */
class SurvivalDataset {
 public:
  SurvivalDataset(std::vector<Subject> subjects, std::optional<double> covariate_bound = {},
                  double time_scale = 1.0);

  /// Constant-covariate convenience constructor; `z` is n x p.
  static SurvivalDataset from_matrix(const Vector& time, const std::vector<bool>& event,
                                     const Matrix& z, std::optional<double> covariate_bound = {});

  Index n() const { return static_cast<Index>(subjects_.size()); }
  Index p() const { return p_; }
  double covariate_bound() const { return covariate_bound_; }
  /// Factor mapping stored times back to the original axis (t_orig = t * scale).
  double time_scale() const { return time_scale_; }

  const Subject& subject(Index i) const { return subjects_.at(static_cast<size_t>(i)); }
  const std::vector<Subject>& subjects() const { return subjects_; }
  double time(Index i) const { return time_[i]; }
  bool event(Index i) const { return event_[static_cast<size_t>(i)]; }
  const Vector& times() const { return time_; }

  bool time_varying() const { return time_varying_; }
  /// n x p matrix of constant covariates (first segment values when time varying).
  const Matrix& covariates() const { return z_; }
  Vector covariate_at(Index i, double t) const;

  /// Event times, strictly ascending.
  const std::vector<EventTime>& event_times() const { return events_; }
  Index event_count() const { return static_cast<Index>(events_.size()); }
  /// Subjects sorted by descending observed time (ties by ascending index).
  const std::vector<Index>& descending_order() const { return desc_order_; }

  bool ties_broken() const { return !ties_.empty(); }
  const std::vector<TieAdjustment>& tie_adjustments() const { return ties_; }

  /// Returns a copy with covariate columns divided by `scale` (entrywise).
  SurvivalDataset rescaled_covariates(const Vector& scale) const;

 private:
  void resolve_ties();
  void build_views();

  std::vector<Subject> subjects_;
  Index p_ = 0;
  double covariate_bound_ = 0.0;
  double time_scale_ = 1.0;
  bool time_varying_ = false;
  Vector time_;
  std::vector<bool> event_;
  Matrix z_;
  std::vector<EventTime> events_;
  std::vector<Index> desc_order_;
  std::vector<TieAdjustment> ties_;
};

/// N_i(t) = 1{X_i <= t, D_i = 1}, Y_i(t) = 1{X_i >= t}.
CountingState counting_process(const SurvivalDataset& ds, Index i, double t);

/// Convenience accessor mirroring `SurvivalDataset::event_times`.
std::vector<EventTime> event_times(const SurvivalDataset& ds);

/**
 * Reads `time,status,z1,...,zp` CSV. Lines starting with `#` are skipped.
 * Throws IngestError naming row (1-based data line number in the file) and
 * column on malformed values.
 */
SurvivalDataset load_csv(const std::filesystem::path& path, const IngestOptions& options = {});
SurvivalDataset parse_csv(const std::string& text, const IngestOptions& options = {});

/// Writes stored times (rescaled axis) with shortest round-trip formatting.
void save_csv(const SurvivalDataset& ds, const std::filesystem::path& path);
std::string format_csv(const SurvivalDataset& ds);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

}  // namespace sparsecox
