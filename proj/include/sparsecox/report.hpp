#pragma once

#include "sparsecox/simulation.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>

namespace sparsecox {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

/// 64-bit FNV-1a of `text`, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

/// {version, seed, settings_hash, settings}; the hash covers the compact dump of `settings`.
Json metadata_block(std::uint64_t seed, const Json& settings);

Json to_json(const GeneratorConfig& cfg);
Json to_json(const EstimatorSettings& est);
Json to_json(const StudySettings& st);
Json to_json(const SummaryStats& s);
Json to_json(const McReport& r);
Json to_json(const TruthRecord& t);
Json to_json(const SolverControl& c);
Json to_json(const NewtonControl& c);
Json to_json(const TuningSchedule& s);

Json vector_json(const Vector& v);
Json matrix_json(const Matrix& m);

Json mc_report_json(const StudySettings& st, const std::vector<McReport>& reports);
/// One row per grid point.
std::string mc_report_csv(const std::vector<McReport>& reports);

/// Pretty dump with a trailing newline; non-finite numbers become null.
std::string dump_json(const Json& j);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace sparsecox
