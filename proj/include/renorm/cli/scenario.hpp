#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "renorm/error.hpp"

namespace renorm::cli {

enum class Kind { WMicro, Minimize, Oracle, Sweep, Annulus };
std::string_view to_string(Kind kind);

struct Scenario {
  std::string name;
  Kind kind = Kind::WMicro;
  std::uint64_t seed = 0;
  bool seed_from_env = false;
  std::string output;
  nlohmann::json payload;
  /// The document as read, for meta.json.
  nlohmann::json source;
};

/// Parses a scenario document. ParseError for malformed JSON, ValidationError
/// for a document or payload that does not match the schema of its kind.
/// `env_seed` replaces the document's seed when set.
Scenario parse_scenario(const std::string& text, std::optional<std::uint64_t> env_seed = {});

/// RENORM_MICRO_SEED, if set and numeric.
std::optional<std::uint64_t> seed_from_environment();

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string format_number(double v);
std::string to_csv(const Table& table);

/// Runs a validated scenario; module errors come back as ComputeError naming
/// the scenario. `timings` collects wall-clock entries for meta.json.
Table execute(const Scenario& sc, const std::string& prefix, unsigned jobs, nlohmann::json& timings);

struct RunOutcome {
  std::filesystem::path csv;
  std::filesystem::path meta;
  std::size_t rows = 0;
};

/// Reads, validates and runs the scenario at `file`, writing `<prefix>.csv`
/// and `<prefix>.meta.json` (each through a temporary file and a rename).
RunOutcome run(const std::filesystem::path& file, const std::optional<std::string>& out_prefix,
               unsigned jobs);
RunOutcome run_scenario(const Scenario& sc, const std::optional<std::string>& out_prefix,
                        unsigned jobs);

void write_atomic(const std::filesystem::path& path, const std::string& content);

/// {"error": code, "scenario": name, "message": ...} on one line.
std::string error_record(const Error& e, const std::string& scenario);

/// CSV table for `renorm-micro regimes`: b list and degree patterns from JSON.
Table regimes_table(const nlohmann::json& config, std::optional<std::uint64_t> env_seed = {});

}  // namespace renorm::cli
