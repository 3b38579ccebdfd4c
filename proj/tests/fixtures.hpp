#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "evacmap/road_graph.hpp"
#include "json.hpp"

namespace fixtures {

struct ArcSpec {
  std::size_t from;
  std::size_t to;
  double length = 100.0;
  std::int64_t capacity = 10;
  double speed = 10.0;
};

inline evacmap::RoadGraph make_graph(const std::vector<evacmap::Point>& positions, const std::vector<ArcSpec>& specs) {
  std::vector<evacmap::Node> nodes;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    evacmap::Node n;
    n.id = evacmap::node_id(i);
    n.position = positions[i];
    nodes.push_back(n);
  }
  std::vector<evacmap::Arc> arcs;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    evacmap::Arc a;
    a.id = evacmap::arc_id(i);
    a.name = "a" + std::to_string(i);
    a.road_type = "other";
    a.from = evacmap::node_id(specs[i].from);
    a.to = evacmap::node_id(specs[i].to);
    a.length = specs[i].length;
    a.capacity = specs[i].capacity;
    a.free_flow_speed = specs[i].speed;
    // Out-of-range endpoints are left for RoadGraph to reject.
    if (specs[i].from < positions.size() && specs[i].to < positions.size())
      a.geometry = {positions[specs[i].from], positions[specs[i].to]};
    arcs.push_back(a);
  }
  return evacmap::RoadGraph(std::move(nodes), std::move(arcs));
}

// Nodes on a line at x = 100 i; each undirected edge becomes two arcs.
inline evacmap::RoadGraph undirected_graph(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                                           std::int64_t capacity = 10) {
  std::vector<evacmap::Point> pos;
  for (std::size_t i = 0; i < n; ++i) pos.push_back({100.0 * static_cast<double>(i), 37.0 * static_cast<double>(i % 3)});
  std::vector<ArcSpec> specs;
  for (auto [u, v] : edges) {
    specs.push_back({u, v, 100.0, capacity, 10.0});
    specs.push_back({v, u, 100.0, capacity, 10.0});
  }
  return make_graph(pos, specs);
}

inline nlohmann::json road(const std::string& id, std::vector<std::pair<double, double>> coords, bool twoway = true,
                           nlohmann::json extra = nlohmann::json::object()) {
  nlohmann::json c = nlohmann::json::array();
  for (auto [x, y] : coords) c.push_back({x, y});
  nlohmann::json props = {{"id", id}, {"direction", twoway ? "twoway" : "oneway"}};
  for (auto& [k, v] : extra.items()) props[k] = v;
  return {{"type", "Feature"}, {"geometry", {{"type", "LineString"}, {"coordinates", c}}}, {"properties", props}};
}

inline nlohmann::json collection(nlohmann::json features) {
  return {{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

inline nlohmann::json building(const std::string& id, double x, double y, std::int64_t day, std::int64_t night) {
  return {{"type", "Feature"},
          {"geometry", {{"type", "Point"}, {"coordinates", {x, y}}}},
          {"properties", {{"id", id}, {"pop_day", day}, {"pop_night", night}}}};
}

} // namespace fixtures
