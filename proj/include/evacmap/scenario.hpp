#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "evacmap/community.hpp"
#include "evacmap/synthetic.hpp"
#include "evacmap/traffic_flow.hpp"
#include "evacmap/vulnerability.hpp"

namespace evacmap {

// Flat `key = value` scenario file; `#` starts a comment. Relative paths are
// resolved against the file's directory.
struct ScenarioConfig {
  std::filesystem::path network_path;
  std::filesystem::path buildings_path; // empty: no buildings
  std::filesystem::path events_path;    // empty: no events
  std::optional<BBox> bbox;             // nullopt: node extent plus margin
  double dt = 1.0;
  std::int64_t total_steps = 0;
  std::int64_t epochs_per_step = 10;
  std::int64_t snapshot_every = 0;
  Period period = Period::Day;
  double occupancy = 2.5;
  ColonyConfig colony;
  DelayParams delay;
  std::filesystem::path out_dir = "out";
  bool diagnostics = false;

  // Canonical text of every setting except out_dir; hashed into index.json.
  std::string canonical() const;
  std::string hash() const;
};

struct Diagnostic {
  std::string field; // config key, or the input file for data problems
  std::string message;
  std::optional<std::size_t> feature; // offending feature / event index
  bool data = false;                  // true for input-data problems
};

struct ParsedConfig {
  ScenarioConfig config;
  std::vector<Diagnostic> diagnostics;
};

ParsedConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);

// Throws ConfigError listing the diagnostics when any are present.
ScenarioConfig load_config(const std::filesystem::path& path);

// Checks the config file and its input files without running anything.
std::vector<Diagnostic> validate(const std::filesystem::path& config_path);

nlohmann::json diagnostics_json(const std::vector<Diagnostic>& diags);

struct RunReport {
  double wall_time_s = 0.0;
  std::size_t snapshots = 0;
  double injected = 0.0;       // requested by inject events
  double placed = 0.0;         // accepted onto the network
  double overflow = 0.0;       // rejected for lack of capacity
  double on_network_end = 0.0;
  double residual = 0.0;       // placed - on_network_end
  std::size_t events_applied = 0;
  std::size_t reseeds = 0;
  std::size_t outside_buildings = 0;
  std::string config_hash;

  nlohmann::json to_json() const;
};

// Full pipeline. Writes <out_dir>/snapshots/{snapshot_*.geojson,index.json},
// <out_dir>/ingestion_report.json and <out_dir>/run_report.json, plus
// <out_dir>/diagnostics.jsonl when enabled.
RunReport run(const ScenarioConfig& config);

// Writes network.geojson, buildings.geojson and a scenario.cfg that runs them.
void write_synthetic(SyntheticKind kind, const SyntheticParams& params, const std::filesystem::path& out_dir);

} // namespace evacmap
