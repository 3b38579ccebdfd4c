#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evacmap/geometry.hpp"
#include "evacmap/road_graph.hpp"

namespace evacmap {

// Thiessen cell of one intersection, clipped to the study-area box. Cells of
// a Euclidean Voronoi diagram are convex, so one CCW ring suffices.
struct VoronoiCell {
  NodeId node_id{};
  Ring polygon;
};

// One cell per node, in node-id order. Throws OutsideBoundsError when a node
// lies outside `bbox`, DomainError on an invalid box or an empty graph.
std::vector<VoronoiCell> build_voronoi(const RoadGraph& graph, const BBox& bbox);

// Point location over a cell list through a uniform bucket grid.
class CellLocator {
public:
  explicit CellLocator(std::span<const VoronoiCell> cells);

  // Cell containing `p`; points on a shared boundary resolve to the lower node
  // id. nullopt when `p` is outside every cell.
  std::optional<NodeId> locate(Point p) const;

private:
  std::span<const VoronoiCell> cells_;
  BBox extent_{};
  std::size_t nx_ = 1;
  std::size_t ny_ = 1;
  double tol_ = 0.0;
  std::vector<std::vector<std::size_t>> buckets_;
};

struct BuildingRecord {
  std::string id;
  Point point;
  std::int64_t population_day = 0;
  std::int64_t population_night = 0;
};

std::vector<FeatureIssue> check_building_features(const nlohmann::json& doc);
// Throws ParseError naming the first malformed feature.
std::vector<BuildingRecord> load_buildings(const nlohmann::json& doc);
std::vector<BuildingRecord> load_buildings_file(const std::filesystem::path& path);

struct PopulationResult {
  RoadGraph graph;
  // Buildings that fell outside every cell and went to the nearest node.
  std::vector<std::string> outside_buildings;
};

PopulationResult assign_population(const RoadGraph& graph, std::span<const BuildingRecord> buildings,
                                   std::span<const VoronoiCell> cells);

} // namespace evacmap
