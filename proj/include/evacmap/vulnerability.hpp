#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evacmap/community.hpp"
#include "evacmap/geometry.hpp"
#include "evacmap/road_graph.hpp"
#include "evacmap/traffic_flow.hpp"
#include "evacmap/voronoi.hpp"

namespace evacmap {

enum class Period { Day, Night };

std::optional<Period> parse_period(const std::string& s);
const char* to_string(Period p);

struct CommunityRecord {
  NodeId id{}; // smallest member
  Color color = 0;
  std::vector<NodeId> nodes;
  std::int64_t population_day = 0;
  std::int64_t population_night = 0;
  // Directed arcs leaving the community (tail inside, head outside), by id.
  std::vector<ArcId> exit_arcs;
  MultiPolygon polygon;

  std::int64_t population(Period p) const { return p == Period::Day ? population_day : population_night; }
};

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

struct VulnerabilityRecord {
  NodeId community{};
  double vehicles_to_evacuate = 0.0;
  double clearance_time = 0.0; // s, kUnbounded when no exit can discharge
  int category = 0;            // 1..5 once categorized, 0 before
};

// Dissolves the shared edges of the given cells. Vertices closer than a small
// fraction of the cells' extent are treated as one.
MultiPolygon union_cells(std::span<const VoronoiCell> cells, std::span<const NodeId> members);

std::vector<CommunityRecord> build_community_records(const CommunityPartition& partition, const RoadGraph& graph,
                                                     std::span<const VoronoiCell> cells);

// Vehicles per second an arc can still absorb: residual capacity over the
// current travel time.
double discharge(const Arc& arc, const FlowState& state, const DelayParams& params = {});

// Pessimistic clearance: every vehicle leaves by one and the same exit route,
// with no spreading over the others. The route is the open exit with the
// largest discharge, so removing an exit never shortens clearance. Closed exit
// arcs are not usable exits. Throws DomainError for occupancy <= 0.
VulnerabilityRecord score_community(const CommunityRecord& rec, const FlowState& state, const RoadGraph& graph,
                                    Period period, double occupancy, const DelayParams& params = {});

// Mid-rank quintiles over the finite clearance times of one snapshot;
// unbounded clearance is category 5.
void categorize(std::span<VulnerabilityRecord> records);

// Dominant colour of each arc's own pheromone row (ties to the lowest colour).
std::vector<Color> arc_colors(const PheromoneField& tau);

struct SnapshotView {
  std::size_t step = 0;
  double time = 0.0;
  Period period = Period::Day;
  std::span<const CommunityRecord> communities;
  std::span<const VulnerabilityRecord> scores; // aligned with communities
  std::span<const Color> arc_colors;
};

nlohmann::json snapshot_geojson(const SnapshotView& view, const RoadGraph& graph, const FlowState& state);

std::string snapshot_file_name(std::size_t step);

// Writes snapshot_{step:06}.geojson under out_dir; throws IoError with the path.
std::filesystem::path export_snapshot(const SnapshotView& view, const RoadGraph& graph, const FlowState& state,
                                      const std::filesystem::path& out_dir);

} // namespace evacmap
