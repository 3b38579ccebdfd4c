/*
 * C interface to the evacmap library: scenario runs, validation, synthetic
 * fixtures, and handle-based access to the road graph, flow simulation and
 * community detection.
 *
 * Every function returning evacmap_status leaves a one-line JSON description
 * of the failure in evacmap_last_error() (per thread) when it does not return
 * EVACMAP_OK. Strings handed out through char** must be released with
 * evacmap_free_string.
 */
#ifndef EVACMAP_H
#define EVACMAP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(EVACMAP_BUILDING)
#    define EVACMAP_API __declspec(dllexport)
#  else
#    define EVACMAP_API __declspec(dllimport)
#  endif
#else
#  define EVACMAP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values 1-3 double as CLI exit codes. */
typedef enum evacmap_status {
  EVACMAP_OK = 0,
  EVACMAP_CONFIG_ERROR = 1,
  EVACMAP_INPUT_ERROR = 2,
  EVACMAP_RUNTIME_ERROR = 3,
  EVACMAP_INVALID_ARGUMENT = 4
} evacmap_status;

typedef struct evacmap_graph evacmap_graph;
typedef struct evacmap_flow evacmap_flow;
typedef struct evacmap_colony evacmap_colony;

EVACMAP_API const char* evacmap_version(void);

/* JSON object {"error": code, "message": text}, or "" after success. */
EVACMAP_API const char* evacmap_last_error(void);

EVACMAP_API void evacmap_free_string(char* s);

/* ---- scenario pipeline ------------------------------------------------- */

/* seed_override / out_dir_override may be NULL. On success *report_json (if
 * report_json is non-NULL) receives the run report. */
EVACMAP_API evacmap_status evacmap_run(const char* config_path, const uint64_t* seed_override,
                                       const char* out_dir_override, char** report_json);

/* Always writes the diagnostics array (possibly "[]"). Returns EVACMAP_OK when
 * it is empty, EVACMAP_CONFIG_ERROR when any config problem was found, and
 * EVACMAP_INPUT_ERROR when only input-data problems were found. */
EVACMAP_API evacmap_status evacmap_validate(const char* config_path, char** diagnostics_json);

/* kind: "grid" | "two-blocks" | "ring". params_json may be NULL or an object
 * with any of rows, cols, block_size, nodes, spacing, pop_day, pop_night,
 * lanes. */
EVACMAP_API evacmap_status evacmap_generate(const char* kind, const char* params_json, const char* out_dir);

/* ---- road graph --------------------------------------------------------- */

/* report_json (optional) receives the ingestion report. */
EVACMAP_API evacmap_status evacmap_graph_load(const char* network_path, evacmap_graph** out, char** report_json);
EVACMAP_API void evacmap_graph_free(evacmap_graph* graph);
EVACMAP_API size_t evacmap_graph_node_count(const evacmap_graph* graph);
EVACMAP_API size_t evacmap_graph_arc_count(const evacmap_graph* graph);
EVACMAP_API evacmap_status evacmap_graph_find_arc(const evacmap_graph* graph, const char* name, uint32_t* arc);
EVACMAP_API evacmap_status evacmap_graph_arc_capacity(const evacmap_graph* graph, uint32_t arc, int64_t* capacity);
EVACMAP_API evacmap_status evacmap_travel_time(const evacmap_graph* graph, uint32_t arc, double load, double alpha,
                                               double beta, double* seconds);

/* ---- flow simulation ---------------------------------------------------- */

/* The flow keeps the graph alive; the graph handle may be freed first. */
EVACMAP_API evacmap_status evacmap_flow_create(const evacmap_graph* graph, double alpha, double beta,
                                               evacmap_flow** out);
EVACMAP_API void evacmap_flow_free(evacmap_flow* flow);
EVACMAP_API evacmap_status evacmap_flow_inject(evacmap_flow* flow, uint32_t node, double vehicles, double* overflow);
EVACMAP_API evacmap_status evacmap_flow_set_closed(evacmap_flow* flow, uint32_t arc, int closed);
/* One step with residual-capacity routing. */
EVACMAP_API evacmap_status evacmap_flow_step(evacmap_flow* flow, double dt);
EVACMAP_API double evacmap_flow_time(const evacmap_flow* flow);
EVACMAP_API double evacmap_flow_total(const evacmap_flow* flow);
EVACMAP_API evacmap_status evacmap_flow_load(const evacmap_flow* flow, uint32_t arc, double* load);

/* ---- community detection ------------------------------------------------ */

/* Default colony parameters except for the colour count and seed. */
EVACMAP_API evacmap_status evacmap_colony_create(const evacmap_graph* graph, int num_colors, uint64_t seed,
                                                 evacmap_colony** out);
EVACMAP_API void evacmap_colony_free(evacmap_colony* colony);
/* flow may be NULL, meaning zero attraction on every arc. */
EVACMAP_API evacmap_status evacmap_colony_run(evacmap_colony* colony, const evacmap_flow* flow, int epochs);
/* Writes the vertex colour of each node; n must equal the node count. */
EVACMAP_API evacmap_status evacmap_colony_vertex_colors(const evacmap_colony* colony, int32_t* colors, size_t n);
EVACMAP_API size_t evacmap_colony_community_count(const evacmap_colony* colony);

#ifdef __cplusplus
}
#endif

#endif /* EVACMAP_H */
