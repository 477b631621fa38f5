#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "report.hpp"
#include "wavenl/error.hpp"

namespace wavenl::cli {

inline constexpr int kSchemaVersion = 1;

enum class Pipeline { forward, frechet_check, probe_certify, recover_boundary, recover_nonlinearity, recover_initial };

const char* to_string(Pipeline p);
// Accepts both "frechet_check" and "frechet-check".
std::optional<Pipeline> parse_pipeline(const std::string& name);

struct ExperimentConfig {
  json raw;
  Pipeline pipeline = Pipeline::forward;
  std::uint64_t seed = 1;
  int threads = 1;
  std::filesystem::path output = "out";
};

// Validates the schema version, the pipeline, catalog names, the domain and
// the grid (CFL). `pipeline` overrides or must agree with the file's field.
ExperimentConfig parse_config(const json& raw, std::optional<Pipeline> pipeline = std::nullopt);
ExperimentConfig load_config(const std::filesystem::path& path, std::optional<Pipeline> pipeline = std::nullopt);

// Runs the pipeline and returns report.json content. Independent of the
// thread count.
json run_experiment(const ExperimentConfig& config);

// Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 resolution error.
int exit_code(ErrorKind kind);
json error_json(const Error& e);

// FNV-1a of the canonical config with output and thread fields removed.
std::string config_hash(const json& raw);

}  // namespace wavenl::cli
