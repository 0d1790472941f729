#pragma once

#include "sparsecox/error.hpp"
#include "sparsecox/simulation.hpp"

#include <string>

namespace sparsecox {

/// Parse error carrying the offending line (0 when the problem is a missing key).
class ConfigError : public IngestError {
 public:
  ConfigError(int line, const std::string& msg);
  int line() const { return line_; }

 private:
  int line_;
};

/**
 * Study file: INI-style sections [study], [generator], [estimator] with
 * `key = value` lines; `#` and `;` start comments. In [generator], `n`, `p`
 * and `sparsity` accept comma-separated lists and expand to their Cartesian
 * grid (n varies fastest). See studies/example.study for every key.
 */
StudySettings parse_study(const std::string& text);
StudySettings load_study(const std::string& path);

}  // namespace sparsecox
