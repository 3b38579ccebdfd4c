#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evacmap/geometry.hpp"
#include "json.hpp"

namespace evacmap {

enum class NodeId : std::uint32_t {};
enum class ArcId : std::uint32_t {};

constexpr std::size_t index(NodeId id) { return static_cast<std::size_t>(id); }
constexpr std::size_t index(ArcId id) { return static_cast<std::size_t>(id); }
constexpr NodeId node_id(std::size_t i) { return static_cast<NodeId>(i); }
constexpr ArcId arc_id(std::size_t i) { return static_cast<ArcId>(i); }

struct Node {
  NodeId id{};
  Point position;
  std::int64_t population_day = 0;
  std::int64_t population_night = 0;
};

struct Arc {
  ArcId id{};
  // External name: the feature id for one-way roads, "<id>:f" / "<id>:r" for
  // the two directions of a two-way road.
  std::string name;
  std::string road_type;
  NodeId from{};
  NodeId to{};
  double length = 0.0;          // m
  std::int64_t capacity = 1;    // vehicles
  double free_flow_speed = 0.0; // m/s
  int lanes = 1;
  std::vector<Point> geometry;

  double free_flow_time() const { return length / free_flow_speed; }
};

// Directed multigraph of intersections and road arcs. Immutable once built;
// node and arc ids are dense indices.
class RoadGraph {
public:
  RoadGraph() = default;
  // Throws DomainError if an arc violates its invariants or references a
  // missing node.
  RoadGraph(std::vector<Node> nodes, std::vector<Arc> arcs);

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t arc_count() const { return arcs_.size(); }

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Arc>& arcs() const { return arcs_; }
  const Node& node(NodeId id) const { return nodes_[index(id)]; }
  const Arc& arc(ArcId id) const { return arcs_[index(id)]; }

  std::span<const ArcId> out_arcs(NodeId id) const { return out_[index(id)]; }
  std::span<const ArcId> in_arcs(NodeId id) const { return in_[index(id)]; }
  // Out- and in-arcs merged in arc-id order (undirected view).
  std::span<const ArcId> incident_arcs(NodeId id) const { return incident_[index(id)]; }
  // Distinct adjacent nodes ignoring direction and multiplicity, sorted.
  std::span<const NodeId> neighbors(NodeId id) const { return neighbors_[index(id)]; }

  NodeId opposite(ArcId arc, NodeId end) const {
    const Arc& a = arcs_[index(arc)];
    return a.from == end ? a.to : a.from;
  }

  std::optional<ArcId> find_arc(const std::string& name) const;

  // Copy of this graph with node populations replaced.
  RoadGraph with_populations(std::span<const std::int64_t> day,
                             std::span<const std::int64_t> night) const;

private:
  std::vector<Node> nodes_;
  std::vector<Arc> arcs_;
  std::vector<std::vector<ArcId>> out_;
  std::vector<std::vector<ArcId>> in_;
  std::vector<std::vector<ArcId>> incident_;
  std::vector<std::vector<NodeId>> neighbors_;
  std::map<std::string, ArcId> by_name_;
};

struct IngestionOptions {
  double snap_tolerance = 0.5; // m
  double jam_spacing = 7.5;    // m of lane per vehicle
  double speed_motorway = 27.8;
  double speed_primary = 13.9;
  double speed_other = 8.3;
};

// One offending feature in an input collection.
struct FeatureIssue {
  std::size_t feature_index = 0;
  std::string feature_id;
  std::string message;
};

struct IngestionReport {
  struct Dropped {
    std::size_t feature_index;
    std::string feature_id;
    std::string reason;
  };
  struct Merged {
    std::size_t feature_index;
    NodeId node;
    double offset; // m between the input endpoint and the retained node
  };
  struct Defaulted {
    std::string feature_id;
    std::string attribute;
    double value;
  };

  std::vector<Dropped> dropped;
  std::vector<Merged> merged;
  std::vector<Defaulted> defaulted;
  std::size_t dropped_components = 0;

  nlohmann::json to_json() const;
};

struct LoadedNetwork {
  RoadGraph graph;
  IngestionReport report;
};

// Schema check of a network collection without building anything; one issue
// per malformed feature. Document-level problems are reported with index npos.
std::vector<FeatureIssue> check_network_features(const nlohmann::json& doc);

// Builds the largest weakly connected component of the network. Malformed
// input throws ParseError (first offending feature); no usable feature throws
// EmptyNetworkError.
LoadedNetwork load_network(const nlohmann::json& doc, const IngestionOptions& options = {});
LoadedNetwork load_network_file(const std::filesystem::path& path,
                                const IngestionOptions& options = {});

nlohmann::json read_json_file(const std::filesystem::path& path);

} // namespace evacmap
