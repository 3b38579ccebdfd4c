#include "evacmap/evacmap.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "evacmap/community.hpp"
#include "evacmap/errors.hpp"
#include "evacmap/road_graph.hpp"
#include "evacmap/scenario.hpp"
#include "evacmap/synthetic.hpp"
#include "evacmap/traffic_flow.hpp"

using namespace evacmap;
using nlohmann::json;

struct evacmap_graph {
  std::shared_ptr<const RoadGraph> graph;
};

struct evacmap_flow {
  std::shared_ptr<const RoadGraph> graph;
  FlowState state;
  DelayParams params;
};

struct evacmap_colony {
  std::shared_ptr<const RoadGraph> graph;
  std::unique_ptr<Colony> colony;
};

namespace {

thread_local std::string last_error;

evacmap_status fail(evacmap_status status, const std::string& code, const std::string& message) {
  last_error = json{{"error", code}, {"message", message}}.dump();
  return status;
}

template <typename Fn>
evacmap_status guarded(Fn&& fn) {
  last_error.clear();
  try {
    return fn();
  } catch (const Error& e) {
    return fail(static_cast<evacmap_status>(static_cast<int>(e.kind())), e.code(), e.what());
  } catch (const json::exception& e) {
    return fail(EVACMAP_INPUT_ERROR, "parse_error", e.what());
  } catch (const std::exception& e) {
    return fail(EVACMAP_RUNTIME_ERROR, "runtime_error", e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

evacmap_status null_argument(const char* name) {
  return fail(EVACMAP_INVALID_ARGUMENT, "invalid_argument", std::string(name) + " must not be NULL");
}

} // namespace

extern "C" {

const char* evacmap_version(void) { return "1.0.0"; }

const char* evacmap_last_error(void) { return last_error.c_str(); }

void evacmap_free_string(char* s) { std::free(s); }

evacmap_status evacmap_run(const char* config_path, const uint64_t* seed_override, const char* out_dir_override,
                           char** report_json) {
  if (config_path == nullptr) return null_argument("config_path");
  return guarded([&] {
    ScenarioConfig cfg = load_config(config_path);
    if (seed_override != nullptr) cfg.colony.seed = *seed_override;
    if (out_dir_override != nullptr) cfg.out_dir = std::filesystem::absolute(out_dir_override).lexically_normal();
    const RunReport report = run(cfg);
    if (report_json != nullptr) *report_json = dup_string(report.to_json().dump());
    return EVACMAP_OK;
  });
}

evacmap_status evacmap_validate(const char* config_path, char** diagnostics_json) {
  if (config_path == nullptr) return null_argument("config_path");
  return guarded([&] {
    const auto diags = validate(config_path);
    if (diagnostics_json != nullptr) *diagnostics_json = dup_string(evacmap::diagnostics_json(diags).dump());
    bool config_problem = false;
    for (const auto& d : diags) config_problem = config_problem || !d.data;
    if (diags.empty()) return EVACMAP_OK;
    return fail(config_problem ? EVACMAP_CONFIG_ERROR : EVACMAP_INPUT_ERROR, "validation_failed",
                std::to_string(diags.size()) + " problem(s) found");
  });
}

evacmap_status evacmap_generate(const char* kind, const char* params_json, const char* out_dir) {
  if (kind == nullptr) return null_argument("kind");
  if (out_dir == nullptr) return null_argument("out_dir");
  return guarded([&] {
    const auto parsed_kind = parse_synthetic_kind(kind);
    if (!parsed_kind) throw ConfigError(std::string("unknown synthetic kind '") + kind + "'");
    SyntheticParams params;
    if (params_json != nullptr && *params_json != '\0') {
      json p;
      try {
        p = json::parse(params_json);
      } catch (const json::exception& e) {
        throw ConfigError(std::string("params are not valid JSON: ") + e.what());
      }
      if (!p.is_object()) throw ConfigError("params must be a JSON object");
      try {
        params.rows = p.value("rows", params.rows);
        params.cols = p.value("cols", params.cols);
        params.block_size = p.value("block_size", params.block_size);
        params.ring_nodes = p.value("nodes", params.ring_nodes);
        params.spacing = p.value("spacing", params.spacing);
        params.pop_day = p.value("pop_day", params.pop_day);
        params.pop_night = p.value("pop_night", params.pop_night);
        params.lanes = p.value("lanes", params.lanes);
      } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid synthetic parameter: ") + e.what());
      }
    }
    write_synthetic(*parsed_kind, params, out_dir);
    return EVACMAP_OK;
  });
}

evacmap_status evacmap_graph_load(const char* network_path, evacmap_graph** out, char** report_json) {
  if (network_path == nullptr) return null_argument("network_path");
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    LoadedNetwork net = load_network_file(network_path);
    if (report_json != nullptr) *report_json = dup_string(net.report.to_json().dump());
    *out = new evacmap_graph{std::make_shared<const RoadGraph>(std::move(net.graph))};
    return EVACMAP_OK;
  });
}

void evacmap_graph_free(evacmap_graph* graph) { delete graph; }

size_t evacmap_graph_node_count(const evacmap_graph* graph) { return graph ? graph->graph->node_count() : 0; }

size_t evacmap_graph_arc_count(const evacmap_graph* graph) { return graph ? graph->graph->arc_count() : 0; }

evacmap_status evacmap_graph_find_arc(const evacmap_graph* graph, const char* name, uint32_t* arc) {
  if (graph == nullptr) return null_argument("graph");
  if (name == nullptr) return null_argument("name");
  if (arc == nullptr) return null_argument("arc");
  return guarded([&] {
    const auto found = graph->graph->find_arc(name);
    if (!found) throw UnknownIdError(std::string("unknown arc '") + name + "'");
    *arc = static_cast<uint32_t>(index(*found));
    return EVACMAP_OK;
  });
}

evacmap_status evacmap_graph_arc_capacity(const evacmap_graph* graph, uint32_t arc, int64_t* capacity) {
  if (graph == nullptr) return null_argument("graph");
  if (capacity == nullptr) return null_argument("capacity");
  if (arc >= graph->graph->arc_count()) return fail(EVACMAP_INPUT_ERROR, "unknown_id", "arc index out of range");
  *capacity = graph->graph->arc(arc_id(arc)).capacity;
  last_error.clear();
  return EVACMAP_OK;
}

evacmap_status evacmap_travel_time(const evacmap_graph* graph, uint32_t arc, double load, double alpha, double beta,
                                   double* seconds) {
  if (graph == nullptr) return null_argument("graph");
  if (seconds == nullptr) return null_argument("seconds");
  return guarded([&] {
    if (arc >= graph->graph->arc_count()) throw UnknownIdError("arc index out of range");
    *seconds = travel_time(graph->graph->arc(arc_id(arc)), load, DelayParams{alpha, beta});
    return EVACMAP_OK;
  });
}

evacmap_status evacmap_flow_create(const evacmap_graph* graph, double alpha, double beta, evacmap_flow** out) {
  if (graph == nullptr) return null_argument("graph");
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ConfigError("delay parameters must be >= 0");
    *out = new evacmap_flow{graph->graph, FlowState::empty_for(*graph->graph), DelayParams{alpha, beta}};
    return EVACMAP_OK;
  });
}

void evacmap_flow_free(evacmap_flow* flow) { delete flow; }

evacmap_status evacmap_flow_inject(evacmap_flow* flow, uint32_t node, double vehicles, double* overflow) {
  if (flow == nullptr) return null_argument("flow");
  return guarded([&] {
    DemandEvent ev;
    ev.at_time = flow->state.time;
    ev.kind = DemandEvent::Kind::Inject;
    ev.target = node_id(node);
    ev.vehicles = vehicles;
    EventOutcome outcome = apply_event(*flow->graph, flow->state, ev);
    flow->state = std::move(outcome.state);
    if (overflow != nullptr) *overflow = outcome.overflow;
    return EVACMAP_OK;
  });
}

evacmap_status evacmap_flow_set_closed(evacmap_flow* flow, uint32_t arc, int closed) {
  if (flow == nullptr) return null_argument("flow");
  return guarded([&] {
    DemandEvent ev;
    ev.at_time = flow->state.time;
    ev.kind = closed ? DemandEvent::Kind::CloseArc : DemandEvent::Kind::OpenArc;
    ev.target = arc_id(arc);
    flow->state = apply_event(*flow->graph, flow->state, ev).state;
    return EVACMAP_OK;
  });
}

evacmap_status evacmap_flow_step(evacmap_flow* flow, double dt) {
  if (flow == nullptr) return null_argument("flow");
  return guarded([&] {
    flow->state = step(*flow->graph, flow->state, residual_capacity_routing(*flow->graph, flow->state), dt, flow->params);
    return EVACMAP_OK;
  });
}

double evacmap_flow_time(const evacmap_flow* flow) { return flow ? flow->state.time : 0.0; }

double evacmap_flow_total(const evacmap_flow* flow) { return flow ? total_vehicles(flow->state) : 0.0; }

evacmap_status evacmap_flow_load(const evacmap_flow* flow, uint32_t arc, double* load) {
  if (flow == nullptr) return null_argument("flow");
  if (load == nullptr) return null_argument("load");
  if (arc >= flow->state.load.size()) return fail(EVACMAP_INPUT_ERROR, "unknown_id", "arc index out of range");
  *load = flow->state.load[arc];
  last_error.clear();
  return EVACMAP_OK;
}

evacmap_status evacmap_colony_create(const evacmap_graph* graph, int num_colors, uint64_t seed, evacmap_colony** out) {
  if (graph == nullptr) return null_argument("graph");
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    ColonyConfig cfg;
    cfg.num_colors = num_colors;
    cfg.seed = seed;
    auto colony = std::make_unique<Colony>(*graph->graph, cfg);
    *out = new evacmap_colony{graph->graph, std::move(colony)};
    return EVACMAP_OK;
  });
}

void evacmap_colony_free(evacmap_colony* colony) { delete colony; }

evacmap_status evacmap_colony_run(evacmap_colony* colony, const evacmap_flow* flow, int epochs) {
  if (colony == nullptr) return null_argument("colony");
  return guarded([&] {
    if (epochs < 0) throw DomainError("epochs must be >= 0");
    if (flow != nullptr && flow->graph != colony->graph) throw DomainError("flow and colony use different graphs");
    const AttractionWeights force = flow != nullptr ? attraction_weights(*colony->graph, flow->state)
                                                    : AttractionWeights(colony->graph->arc_count(), 0.0);
    for (int e = 0; e < epochs; ++e) colony->colony->run_epoch(force);
    return EVACMAP_OK;
  });
}

evacmap_status evacmap_colony_vertex_colors(const evacmap_colony* colony, int32_t* colors, size_t n) {
  if (colony == nullptr) return null_argument("colony");
  if (colors == nullptr) return null_argument("colors");
  if (n != colony->graph->node_count())
    return fail(EVACMAP_INVALID_ARGUMENT, "invalid_argument", "buffer size does not match the node count");
  for (size_t i = 0; i < n; ++i) colors[i] = vertex_color(node_id(i), *colony->graph, colony->colony->pheromones());
  last_error.clear();
  return EVACMAP_OK;
}

size_t evacmap_colony_community_count(const evacmap_colony* colony) {
  if (colony == nullptr) return 0;
  return extract_partition(*colony->graph, colony->colony->pheromones()).communities.size();
}

} // extern "C"
