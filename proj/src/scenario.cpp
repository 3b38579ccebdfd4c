#include "evacmap/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "evacmap/errors.hpp"
#include "evacmap/voronoi.hpp"

namespace evacmap {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<double> to_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::int64_t> to_int(const std::string& s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

fs::path resolve(const fs::path& base, const std::string& raw) {
  const fs::path p(raw);
  return fs::absolute(p.is_absolute() ? p : base / p).lexically_normal();
}

using Setter = std::function<std::string(ScenarioConfig&, const std::string&, const fs::path&)>;

Setter positive_double(double ScenarioConfig::*field, const char* what) {
  return [field, what](ScenarioConfig& c, const std::string& v, const fs::path&) -> std::string {
    auto d = to_double(v);
    if (!d) return "expected a number";
    if (!(*d > 0.0)) return std::string(what) + " must be > 0";
    c.*field = *d;
    return {};
  };
}

template <typename Member>
Setter colony_double(Member member) {
  return [member](ScenarioConfig& c, const std::string& v, const fs::path&) -> std::string {
    auto d = to_double(v);
    if (!d) return "expected a number";
    c.colony.*member = *d;
    return {};
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"network_path",
       [](ScenarioConfig& c, const std::string& v, const fs::path& base) -> std::string {
         if (v.empty()) return "path is empty";
         c.network_path = resolve(base, v);
         return {};
       }},
      {"buildings_path",
       [](ScenarioConfig& c, const std::string& v, const fs::path& base) -> std::string {
         c.buildings_path = v.empty() ? fs::path() : resolve(base, v);
         return {};
       }},
      {"events_path",
       [](ScenarioConfig& c, const std::string& v, const fs::path& base) -> std::string {
         c.events_path = v.empty() ? fs::path() : resolve(base, v);
         return {};
       }},
      {"out_dir",
       [](ScenarioConfig& c, const std::string& v, const fs::path& base) -> std::string {
         if (v.empty()) return "path is empty";
         c.out_dir = resolve(base, v);
         return {};
       }},
      {"bbox",
       [](ScenarioConfig& c, const std::string& v, const fs::path&) -> std::string {
         if (v == "auto") {
           c.bbox.reset();
           return {};
         }
         std::vector<double> parts;
         std::stringstream ss(v);
         std::string item;
         while (std::getline(ss, item, ',')) {
           auto d = to_double(trim(item));
           if (!d) return "expected 'auto' or min_x,min_y,max_x,max_y";
           parts.push_back(*d);
         }
         if (parts.size() != 4) return "expected 'auto' or min_x,min_y,max_x,max_y";
         BBox box{parts[0], parts[1], parts[2], parts[3]};
         if (!box.valid()) return "box must have max > min on both axes";
         c.bbox = box;
         return {};
       }},
      {"dt", positive_double(&ScenarioConfig::dt, "dt")},
      {"occupancy", positive_double(&ScenarioConfig::occupancy, "occupancy")},
      {"total_steps",
       [](ScenarioConfig& c, const std::string& v, const fs::path&) -> std::string {
         auto i = to_int(v);
         if (!i) return "expected an integer";
         if (*i < 1) return "total_steps must be >= 1";
         c.total_steps = *i;
         return {};
       }},
      {"snapshot_every",
       [](ScenarioConfig& c, const std::string& v, const fs::path&) -> std::string {
         auto i = to_int(v);
         if (!i) return "expected an integer";
         if (*i < 1) return "snapshot_every must be >= 1";
         c.snapshot_every = *i;
         return {};
       }},
      {"epochs_per_step",
       [](ScenarioConfig& c, const std::string& v, const fs::path&) -> std::string {
         auto i = to_int(v);
         if (!i) return "expected an integer";
         if (*i < 0) return "epochs_per_step must be >= 0";
         c.epochs_per_step = *i;
         return {};
       }},
      {"period",
       [](ScenarioConfig& c, const std::string& v, const fs::path&) -> std::string {
         auto p = parse_period(v);
         if (!p) return "expected day or night";
         c.period = *p;
         return {};
       }},
      {"num_colors",
       [](ScenarioConfig& c, const std::string& v, const fs::path&) -> std::string {
         auto i = to_int(v);
         if (!i || *i < 2 || *i > 1024) return "expected an integer in [2, 1024]";
         c.colony.num_colors = static_cast<int>(*i);
         return {};
       }},
      {"ants_per_color",
       [](ScenarioConfig& c, const std::string& v, const fs::path&) -> std::string {
         auto i = to_int(v);
         if (!i || *i < 1 || *i > 1'000'000) return "expected an integer >= 1";
         c.colony.ants_per_color = static_cast<int>(*i);
         return {};
       }},
      {"evaporation_rate", colony_double(&ColonyConfig::evaporation_rate)},
      {"deposit", colony_double(&ColonyConfig::deposit)},
      {"pheromone_exponent", colony_double(&ColonyConfig::pheromone_exponent)},
      {"force_exponent", colony_double(&ColonyConfig::force_exponent)},
      {"pheromone_floor", colony_double(&ColonyConfig::pheromone_floor)},
      {"relocation_probability", colony_double(&ColonyConfig::relocation_probability)},
      {"rng_seed",
       [](ScenarioConfig& c, const std::string& v, const fs::path&) -> std::string {
         std::uint64_t s = 0;
         auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), s);
         if (ec != std::errc() || ptr != v.data() + v.size()) return "expected an unsigned 64-bit integer";
         c.colony.seed = s;
         return {};
       }},
      {"delay_alpha",
       [](ScenarioConfig& c, const std::string& v, const fs::path&) -> std::string {
         auto d = to_double(v);
         if (!d || *d < 0.0) return "expected a number >= 0";
         c.delay.alpha = *d;
         return {};
       }},
      {"delay_beta",
       [](ScenarioConfig& c, const std::string& v, const fs::path&) -> std::string {
         auto d = to_double(v);
         if (!d || *d < 0.0) return "expected a number >= 0";
         c.delay.beta = *d;
         return {};
       }},
      {"diagnostics",
       [](ScenarioConfig& c, const std::string& v, const fs::path&) -> std::string {
         if (v == "true" || v == "1") {
           c.diagnostics = true;
         } else if (v == "false" || v == "0") {
           c.diagnostics = false;
         } else {
           return "expected true or false";
         }
         return {};
       }},
  };
  return table;
}

// Colony fields have cross-field constraints checked once parsing is done.
void check_colony(const ScenarioConfig& c, std::vector<Diagnostic>& diags) {
  const ColonyConfig& k = c.colony;
  auto add = [&](const char* field, const char* msg) { diags.push_back({field, msg, std::nullopt, false}); };
  if (!(k.evaporation_rate > 0.0 && k.evaporation_rate < 1.0)) add("evaporation_rate", "must be in (0, 1)");
  if (!(k.deposit > 0.0)) add("deposit", "must be > 0");
  if (!(k.pheromone_exponent >= 0.0)) add("pheromone_exponent", "must be >= 0");
  if (!(k.force_exponent >= 0.0)) add("force_exponent", "must be >= 0");
  if (!(k.pheromone_floor >= 0.0)) add("pheromone_floor", "must be >= 0");
  if (!(k.relocation_probability >= 0.0 && k.relocation_probability <= 1.0))
    add("relocation_probability", "must be in [0, 1]");
}

} // namespace

std::string ScenarioConfig::canonical() const {
  std::map<std::string, std::string> kv;
  kv["network_path"] = network_path.generic_string();
  kv["buildings_path"] = buildings_path.generic_string();
  kv["events_path"] = events_path.generic_string();
  kv["bbox"] = bbox ? fmt_double(bbox->min_x) + "," + fmt_double(bbox->min_y) + "," + fmt_double(bbox->max_x) + "," +
                          fmt_double(bbox->max_y)
                    : "auto";
  kv["dt"] = fmt_double(dt);
  kv["total_steps"] = std::to_string(total_steps);
  kv["epochs_per_step"] = std::to_string(epochs_per_step);
  kv["snapshot_every"] = std::to_string(snapshot_every);
  kv["period"] = to_string(period);
  kv["occupancy"] = fmt_double(occupancy);
  kv["num_colors"] = std::to_string(colony.num_colors);
  kv["ants_per_color"] = std::to_string(colony.ants_per_color);
  kv["evaporation_rate"] = fmt_double(colony.evaporation_rate);
  kv["deposit"] = fmt_double(colony.deposit);
  kv["pheromone_exponent"] = fmt_double(colony.pheromone_exponent);
  kv["force_exponent"] = fmt_double(colony.force_exponent);
  kv["pheromone_floor"] = fmt_double(colony.pheromone_floor);
  kv["relocation_probability"] = fmt_double(colony.relocation_probability);
  kv["rng_seed"] = std::to_string(colony.seed);
  kv["delay_alpha"] = fmt_double(delay.alpha);
  kv["delay_beta"] = fmt_double(delay.beta);
  kv["diagnostics"] = diagnostics ? "true" : "false";
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::string ScenarioConfig::hash() const {
  // FNV-1a, 64-bit.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : canonical()) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a64:") + buf;
}

ParsedConfig parse_config(const std::string& text, const fs::path& base_dir) {
  ParsedConfig out;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      out.diagnostics.push_back({"line " + std::to_string(lineno), "expected key = value", std::nullopt, false});
      continue;
    }
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    const std::string value = trim(std::string_view(stripped).substr(eq + 1));
    auto it = setters().find(key);
    if (it == setters().end()) {
      out.diagnostics.push_back({key, "unknown key", std::nullopt, false});
      continue;
    }
    if (!seen.insert(key).second) {
      out.diagnostics.push_back({key, "duplicate key", std::nullopt, false});
      continue;
    }
    if (auto err = it->second(out.config, value, base_dir); !err.empty())
      out.diagnostics.push_back({key, err, std::nullopt, false});
  }
  auto required = [&](const char* key) {
    if (!seen.count(key)) out.diagnostics.push_back({key, "required key missing", std::nullopt, false});
  };
  required("network_path");
  required("total_steps");
  required("snapshot_every");
  required("dt");
  if (!seen.count("out_dir")) out.config.out_dir = resolve(base_dir, "out");
  check_colony(out.config, out.diagnostics);
  return out;
}

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace

ScenarioConfig load_config(const fs::path& path) {
  ParsedConfig parsed = parse_config(read_text(path), path.parent_path());
  if (!parsed.diagnostics.empty()) {
    std::string msg = "invalid config:";
    for (const auto& d : parsed.diagnostics) msg += " " + d.field + ": " + d.message + ";";
    throw ConfigError(msg);
  }
  return parsed.config;
}

std::vector<Diagnostic> validate(const fs::path& config_path) {
  std::vector<Diagnostic> diags;
  std::string text;
  try {
    text = read_text(config_path);
  } catch (const ConfigError& e) {
    diags.push_back({"config", e.what(), std::nullopt, false});
    return diags;
  }
  ParsedConfig parsed = parse_config(text, config_path.parent_path());
  diags = parsed.diagnostics;
  const ScenarioConfig& cfg = parsed.config;

  auto data_issue = [&](const char* field, const FeatureIssue& issue) {
    std::optional<std::size_t> feature;
    if (issue.feature_index != ParseError::npos) feature = issue.feature_index;
    diags.push_back({field, issue.message, feature, true});
  };
  auto read_doc = [&](const char* field, const fs::path& path) -> std::optional<json> {
    try {
      return read_json_file(path);
    } catch (const Error& e) {
      diags.push_back({field, e.what(), std::nullopt, true});
      return std::nullopt;
    }
  };

  std::optional<RoadGraph> graph;
  if (!cfg.network_path.empty()) {
    if (auto doc = read_doc("network_path", cfg.network_path)) {
      const auto issues = check_network_features(*doc);
      for (const auto& issue : issues) data_issue("network_path", issue);
      if (issues.empty()) {
        try {
          graph = load_network(*doc).graph;
        } catch (const Error& e) {
          diags.push_back({"network_path", e.what(), std::nullopt, true});
        }
      }
    }
  }
  if (!cfg.buildings_path.empty()) {
    if (auto doc = read_doc("buildings_path", cfg.buildings_path))
      for (const auto& issue : check_building_features(*doc)) data_issue("buildings_path", issue);
  }
  if (!cfg.events_path.empty()) {
    if (auto doc = read_doc("events_path", cfg.events_path))
      for (const auto& issue : check_events(*doc, graph ? &*graph : nullptr)) data_issue("events_path", issue);
  }
  if (graph && cfg.bbox) {
    for (const Node& n : graph->nodes()) {
      if (!cfg.bbox->contains(n.position))
        diags.push_back({"bbox", "node " + std::to_string(index(n.id)) + " lies outside the bounding box", std::nullopt,
                         true});
    }
  }
  return diags;
}

json diagnostics_json(const std::vector<Diagnostic>& diags) {
  json out = json::array();
  for (const auto& d : diags) {
    json item = {{"field", d.field}, {"message", d.message}, {"kind", d.data ? "input" : "config"}};
    if (d.feature) item["feature"] = *d.feature;
    out.push_back(item);
  }
  return out;
}

json RunReport::to_json() const {
  return {
      {"wall_time_s", wall_time_s},
      {"snapshots", snapshots},
      {"conservation",
       {{"injected", injected},
        {"placed", placed},
        {"overflow", overflow},
        {"on_network_end", on_network_end},
        {"residual", residual}}},
      {"events_applied", events_applied},
      {"reseeds", reseeds},
      {"outside_buildings", outside_buildings},
      {"config_hash", config_hash},
  };
}

namespace {

BBox auto_bbox(const RoadGraph& graph) {
  BBox b{INFINITY, INFINITY, -INFINITY, -INFINITY};
  for (const Node& n : graph.nodes()) {
    b.min_x = std::min(b.min_x, n.position.x);
    b.min_y = std::min(b.min_y, n.position.y);
    b.max_x = std::max(b.max_x, n.position.x);
    b.max_y = std::max(b.max_y, n.position.y);
  }
  const double margin = std::max(0.1 * std::max(b.max_x - b.min_x, b.max_y - b.min_y), 50.0);
  return {b.min_x - margin, b.min_y - margin, b.max_x + margin, b.max_y + margin};
}

void write_json(const fs::path& path, const json& doc, int indent = -1) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << doc.dump(indent) << "\n";
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void prepare_output(const fs::path& out_dir, const fs::path& snapshot_dir) {
  std::error_code ec;
  fs::create_directories(snapshot_dir, ec);
  if (ec) throw IoError("cannot create '" + snapshot_dir.string() + "': " + ec.message());
  // Stale snapshots from an earlier run would break the index contract.
  for (const auto& entry : fs::directory_iterator(snapshot_dir)) {
    const std::string name = entry.path().filename().string();
    if ((name.rfind("snapshot_", 0) == 0 && entry.path().extension() == ".geojson") || name == "index.json")
      fs::remove(entry.path());
  }
  fs::remove(out_dir / "diagnostics.jsonl", ec);
}

} // namespace

RunReport run(const ScenarioConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  if (config.total_steps < 1) throw ConfigError("total_steps must be >= 1");
  if (config.snapshot_every < 1) throw ConfigError("snapshot_every must be >= 1");
  if (!(config.dt > 0.0)) throw ConfigError("dt must be > 0");
  if (!(config.occupancy > 0.0)) throw ConfigError("occupancy must be > 0");
  config.colony.validate();

  RunReport report;
  report.config_hash = config.hash();
  const fs::path snapshot_dir = config.out_dir / "snapshots";
  prepare_output(config.out_dir, snapshot_dir);

  LoadedNetwork net = load_network_file(config.network_path);
  write_json(config.out_dir / "ingestion_report.json", net.report.to_json(), 2);
  const BBox bbox = config.bbox ? *config.bbox : auto_bbox(net.graph);
  const auto cells = build_voronoi(net.graph, bbox);
  std::vector<BuildingRecord> buildings;
  if (!config.buildings_path.empty()) buildings = load_buildings_file(config.buildings_path);
  PopulationResult populated = assign_population(net.graph, buildings, cells);
  report.outside_buildings = populated.outside_buildings.size();
  const RoadGraph& graph = populated.graph;

  std::vector<DemandEvent> events;
  if (!config.events_path.empty()) events = load_events(read_json_file(config.events_path), graph);

  FlowState state = FlowState::empty_for(graph);
  Colony colony(graph, config.colony);
  std::ofstream diag_stream;
  if (config.diagnostics) {
    diag_stream.open(config.out_dir / "diagnostics.jsonl", std::ios::binary | std::ios::trunc);
    if (!diag_stream) throw IoError("cannot write '" + (config.out_dir / "diagnostics.jsonl").string() + "'");
  }

  json index_entries = json::array();
  std::size_t next_event = 0;
  for (std::int64_t k = 0; k < config.total_steps; ++k) {
    const double now = static_cast<double>(k) * config.dt;
    while (next_event < events.size() && events[next_event].at_time <= now + 1e-9 * config.dt) {
      const DemandEvent& ev = events[next_event++];
      EventOutcome outcome = apply_event(graph, state, ev);
      if (ev.kind == DemandEvent::Kind::Inject) {
        report.injected += ev.vehicles;
        report.placed += outcome.placed;
        report.overflow += outcome.overflow;
      }
      state = std::move(outcome.state);
      ++report.events_applied;
    }

    state = step(graph, state, residual_capacity_routing(graph, state), config.dt, config.delay);
    state.time = static_cast<double>(k + 1) * config.dt;
    const AttractionWeights force = attraction_weights(graph, state);
    for (std::int64_t e = 0; e < config.epochs_per_step; ++e) {
      const EpochStats stats = colony.run_epoch(force);
      if (config.diagnostics) {
        const CommunityPartition p = extract_partition(graph, colony.pheromones());
        std::vector<std::size_t> histogram(static_cast<std::size_t>(config.colony.num_colors), 0);
        for (Color c : p.color_of) ++histogram[static_cast<std::size_t>(c)];
        json line = {{"epoch", colony.epochs()},
                     {"step", k + 1},
                     {"communities", p.communities.size()},
                     {"color_histogram", histogram},
                     {"reseeds", stats.reseeds},
                     {"relocations", stats.relocations}};
        diag_stream << line.dump() << "\n";
      }
    }

    const std::int64_t step_no = k + 1;
    if (step_no % config.snapshot_every != 0) continue;
    const CommunityPartition partition = extract_partition(graph, colony.pheromones());
    const auto records = build_community_records(partition, graph, cells);
    std::vector<VulnerabilityRecord> scores;
    scores.reserve(records.size());
    for (const auto& rec : records)
      scores.push_back(score_community(rec, state, graph, config.period, config.occupancy, config.delay));
    categorize(scores);
    const auto colors = arc_colors(colony.pheromones());
    SnapshotView view{static_cast<std::size_t>(step_no), state.time, config.period, records, scores, colors};
    const fs::path written = export_snapshot(view, graph, state, snapshot_dir);
    index_entries.push_back({{"file", written.filename().string()}, {"step", step_no}, {"time", state.time}});
    ++report.snapshots;
  }

  write_json(snapshot_dir / "index.json",
             {{"config_hash", report.config_hash}, {"dt", config.dt}, {"snapshots", index_entries}}, 2);

  report.on_network_end = total_vehicles(state);
  report.residual = report.placed - report.on_network_end;
  report.reseeds = colony.total_reseeds();
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_json(config.out_dir / "run_report.json", report.to_json(), 2);
  return report;
}

void write_synthetic(SyntheticKind kind, const SyntheticParams& params, const fs::path& out_dir) {
  const SyntheticData data = gen_synthetic(kind, params);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());
  write_json(out_dir / "network.geojson", data.network, 2);
  write_json(out_dir / "buildings.geojson", data.buildings, 2);
  std::ofstream cfg(out_dir / "scenario.cfg", std::ios::binary | std::ios::trunc);
  if (!cfg) throw IoError("cannot write '" + (out_dir / "scenario.cfg").string() + "'");
  cfg << "# synthetic scenario\n"
      << "network_path = network.geojson\n"
      << "buildings_path = buildings.geojson\n"
      << "bbox = " << fmt_double(data.bbox.min_x) << "," << fmt_double(data.bbox.min_y) << ","
      << fmt_double(data.bbox.max_x) << "," << fmt_double(data.bbox.max_y) << "\n"
      << "dt = 1\n"
      << "total_steps = 100\n"
      << "epochs_per_step = 10\n"
      << "snapshot_every = 10\n"
      << "period = day\n"
      << "occupancy = 2.5\n"
      << "rng_seed = 1\n"
      << "out_dir = out\n";
  if (!cfg) throw IoError("failed writing scenario.cfg");
}

} // namespace evacmap
