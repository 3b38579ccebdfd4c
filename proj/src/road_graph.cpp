#include "evacmap/road_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "evacmap/errors.hpp"

namespace evacmap {

using nlohmann::json;

RoadGraph::RoadGraph(std::vector<Node> nodes, std::vector<Arc> arcs)
    : nodes_(std::move(nodes)), arcs_(std::move(arcs)) {
  const std::size_t n = nodes_.size();
  out_.resize(n);
  in_.resize(n);
  incident_.resize(n);
  neighbors_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Node& node = nodes_[i];
    node.id = node_id(i);
    if (!std::isfinite(node.position.x) || !std::isfinite(node.position.y))
      throw DomainError("node " + std::to_string(i) + " has non-finite coordinates");
    if (node.population_day < 0 || node.population_night < 0)
      throw DomainError("node " + std::to_string(i) + " has negative population");
  }
  for (std::size_t i = 0; i < arcs_.size(); ++i) {
    Arc& a = arcs_[i];
    a.id = arc_id(i);
    const std::string label = "arc '" + a.name + "'";
    if (index(a.from) >= n || index(a.to) >= n) throw DomainError(label + " references a missing node");
    if (!(a.length > 0.0) || !std::isfinite(a.length)) throw DomainError(label + " has non-positive length");
    if (!(a.free_flow_speed > 0.0) || !std::isfinite(a.free_flow_speed))
      throw DomainError(label + " has non-positive free-flow speed");
    if (a.lanes < 1 || a.capacity < a.lanes) throw DomainError(label + " violates capacity >= lanes >= 1");
    if (a.geometry.size() < 2) throw DomainError(label + " geometry needs at least two points");
    if (distance(a.geometry.front(), nodes_[index(a.from)].position) > 0.5 ||
        distance(a.geometry.back(), nodes_[index(a.to)].position) > 0.5)
      throw DomainError(label + " geometry does not meet its endpoint nodes");
    if (!by_name_.emplace(a.name, a.id).second) throw DomainError("duplicate arc name '" + a.name + "'");
    out_[index(a.from)].push_back(a.id);
    in_[index(a.to)].push_back(a.id);
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto& inc = incident_[i];
    std::merge(out_[i].begin(), out_[i].end(), in_[i].begin(), in_[i].end(), std::back_inserter(inc));
    inc.erase(std::unique(inc.begin(), inc.end()), inc.end());
    auto& nb = neighbors_[i];
    for (ArcId a : inc) {
      const NodeId other = opposite(a, node_id(i));
      if (other != node_id(i)) nb.push_back(other);
    }
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
}

std::optional<ArcId> RoadGraph::find_arc(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

RoadGraph RoadGraph::with_populations(std::span<const std::int64_t> day,
                                      std::span<const std::int64_t> night) const {
  if (day.size() != nodes_.size() || night.size() != nodes_.size())
    throw DomainError("population vectors do not match node count");
  RoadGraph copy = *this;
  for (std::size_t i = 0; i < copy.nodes_.size(); ++i) {
    if (day[i] < 0 || night[i] < 0) throw DomainError("negative population");
    copy.nodes_[i].population_day = day[i];
    copy.nodes_[i].population_night = night[i];
  }
  return copy;
}

json IngestionReport::to_json() const {
  json out = json::object();
  out["dropped_features"] = json::array();
  for (const auto& d : dropped)
    out["dropped_features"].push_back({{"index", d.feature_index}, {"id", d.feature_id}, {"reason", d.reason}});
  out["merged_nodes"] = json::array();
  for (const auto& m : merged)
    out["merged_nodes"].push_back({{"feature_index", m.feature_index}, {"node", index(m.node)}, {"offset_m", m.offset}});
  out["defaulted_attributes"] = json::array();
  for (const auto& d : defaulted)
    out["defaulted_attributes"].push_back({{"id", d.feature_id}, {"attribute", d.attribute}, {"value", d.value}});
  out["dropped_components"] = dropped_components;
  return out;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

namespace {

bool is_integer(const json& v) { return v.is_number_integer() || v.is_number_unsigned(); }

std::optional<Point> parse_position(const json& v) {
  if (!v.is_array() || v.size() < 2 || !v[0].is_number() || !v[1].is_number()) return std::nullopt;
  Point p{v[0].get<double>(), v[1].get<double>()};
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) return std::nullopt;
  return p;
}

// Returns an empty string when the feature is well formed.
std::string feature_problem(const json& f, std::set<std::string>& seen_ids) {
  if (!f.is_object()) return "feature is not an object";
  if (f.value("type", "") != "Feature") return "type is not \"Feature\"";
  if (!f.contains("geometry") || !f["geometry"].is_object()) return "missing geometry";
  const json& g = f["geometry"];
  if (g.value("type", "") != "LineString") return "geometry is not a LineString";
  if (!g.contains("coordinates") || !g["coordinates"].is_array() || g["coordinates"].size() < 2)
    return "LineString needs at least two positions";
  for (const json& c : g["coordinates"])
    if (!parse_position(c)) return "invalid coordinate";
  if (!f.contains("properties") || !f["properties"].is_object()) return "missing properties";
  const json& p = f["properties"];
  if (!p.contains("id") || !p["id"].is_string() || p["id"].get<std::string>().empty())
    return "property 'id' must be a non-empty string";
  if (!seen_ids.insert(p["id"].get<std::string>()).second) return "duplicate id";
  if (!p.contains("direction") || !p["direction"].is_string()) return "property 'direction' missing";
  const std::string dir = p["direction"].get<std::string>();
  if (dir != "oneway" && dir != "twoway") return "property 'direction' must be oneway or twoway";
  if (p.contains("type") && !p["type"].is_null() && !p["type"].is_string()) return "property 'type' must be a string";
  std::int64_t lanes = 1;
  if (p.contains("lanes") && !p["lanes"].is_null()) {
    if (!is_integer(p["lanes"]) || p["lanes"].get<std::int64_t>() < 1) return "property 'lanes' must be an integer >= 1";
    lanes = p["lanes"].get<std::int64_t>();
  }
  if (p.contains("capacity") && !p["capacity"].is_null()) {
    if (!is_integer(p["capacity"]) || p["capacity"].get<std::int64_t>() < 1)
      return "property 'capacity' must be an integer >= 1";
    if (p["capacity"].get<std::int64_t>() < lanes) return "property 'capacity' must be >= lanes";
  }
  if (p.contains("speed") && !p["speed"].is_null()) {
    if (!p["speed"].is_number() || !(p["speed"].get<double>() > 0.0) || !std::isfinite(p["speed"].get<double>()))
      return "property 'speed' must be a positive number";
  }
  return {};
}

std::string document_problem(const json& doc) {
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection") return "document is not a FeatureCollection";
  if (!doc.contains("features") || !doc["features"].is_array()) return "FeatureCollection has no features array";
  return {};
}

std::string feature_id_of(const json& f) {
  if (f.is_object() && f.contains("properties") && f["properties"].is_object()) {
    const json& p = f["properties"];
    if (p.contains("id") && p["id"].is_string()) return p["id"].get<std::string>();
  }
  return {};
}

// Snaps endpoint coordinates to existing nodes on a grid of tolerance-sized cells.
class NodeSnapper {
public:
  explicit NodeSnapper(double tolerance) : tol_(tolerance) {}

  std::optional<std::size_t> find(Point p, std::span<const Point> positions) const {
    const auto [cx, cy] = cell(p);
    std::optional<std::size_t> best;
    double best_d = 0.0;
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = grid_.find(key(cx + dx, cy + dy));
        if (it == grid_.end()) continue;
        for (std::size_t idx : it->second) {
          const double d = distance(p, positions[idx]);
          if (d > tol_) continue;
          if (!best || d < best_d || (d == best_d && idx < *best)) {
            best = idx;
            best_d = d;
          }
        }
      }
    }
    return best;
  }

  void insert(std::size_t idx, Point p) {
    const auto [cx, cy] = cell(p);
    grid_[key(cx, cy)].push_back(idx);
  }

private:
  std::pair<std::int64_t, std::int64_t> cell(Point p) const {
    return {static_cast<std::int64_t>(std::floor(p.x / tol_)), static_cast<std::int64_t>(std::floor(p.y / tol_))};
  }
  static std::uint64_t key(std::int64_t x, std::int64_t y) {
    return (static_cast<std::uint64_t>(x) * 0x9E3779B97F4A7C15ull) ^ static_cast<std::uint64_t>(y);
  }

  double tol_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid_;
};

struct FeatureArcs {
  std::size_t feature_index;
  std::string feature_id;
  std::vector<std::size_t> arcs;
};

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

} // namespace

std::vector<FeatureIssue> check_network_features(const json& doc) {
  std::vector<FeatureIssue> issues;
  if (auto problem = document_problem(doc); !problem.empty()) {
    issues.push_back({ParseError::npos, {}, problem});
    return issues;
  }
  std::set<std::string> seen;
  const json& features = doc["features"];
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (auto problem = feature_problem(features[i], seen); !problem.empty())
      issues.push_back({i, feature_id_of(features[i]), problem});
  }
  return issues;
}

LoadedNetwork load_network(const json& doc, const IngestionOptions& options) {
  const auto issues = check_network_features(doc);
  if (!issues.empty()) {
    const auto& first = issues.front();
    if (first.feature_index == ParseError::npos) throw ParseError(first.message);
    throw ParseError("feature " + std::to_string(first.feature_index) + ": " + first.message, first.feature_index);
  }
  const json& features = doc["features"];
  if (features.empty()) throw EmptyNetworkError("network has no features");

  IngestionReport report;
  std::vector<Point> positions;
  std::vector<Arc> arcs;
  std::vector<FeatureArcs> feature_arcs;
  NodeSnapper snapper(options.snap_tolerance);

  for (std::size_t fi = 0; fi < features.size(); ++fi) {
    const json& f = features[fi];
    const json& props = f["properties"];
    const std::string fid = props["id"].get<std::string>();
    std::vector<Point> line;
    for (const json& c : f["geometry"]["coordinates"]) line.push_back(*parse_position(c));

    // Resolve endpoints; a new start node is only committed if the feature is kept.
    const Point start = line.front();
    const Point end = line.back();
    const auto start_hit = snapper.find(start, positions);
    std::optional<std::size_t> end_hit = snapper.find(end, positions);
    bool end_is_new_start = false;
    if (!start_hit && distance(start, end) <= options.snap_tolerance) {
      if (!end_hit || distance(start, end) < distance(end, positions[*end_hit])) {
        end_hit.reset();
        end_is_new_start = true;
      }
    }
    const Point start_pos = start_hit ? positions[*start_hit] : start;
    const Point end_pos = end_is_new_start ? start_pos : (end_hit ? positions[*end_hit] : end);
    line.front() = start_pos;
    line.back() = end_pos;
    const double length = polyline_length(line);
    if (!(length > 0.0) || !std::isfinite(length)) {
      report.dropped.push_back({fi, fid, "non_positive_length"});
      continue;
    }

    std::size_t from = 0;
    if (start_hit) {
      from = *start_hit;
      if (distance(start, start_pos) > 0.0) report.merged.push_back({fi, node_id(from), distance(start, start_pos)});
    } else {
      from = positions.size();
      positions.push_back(start_pos);
      snapper.insert(from, start_pos);
    }
    std::size_t to = 0;
    if (end_is_new_start) {
      to = from;
      if (distance(end, end_pos) > 0.0) report.merged.push_back({fi, node_id(to), distance(end, end_pos)});
    } else if (end_hit) {
      to = *end_hit;
      if (distance(end, end_pos) > 0.0) report.merged.push_back({fi, node_id(to), distance(end, end_pos)});
    } else {
      to = positions.size();
      positions.push_back(end_pos);
      snapper.insert(to, end_pos);
    }

    const std::string road_type =
        props.contains("type") && props["type"].is_string() ? props["type"].get<std::string>() : std::string("other");
    int lanes = 1;
    if (props.contains("lanes") && !props["lanes"].is_null()) {
      lanes = static_cast<int>(props["lanes"].get<std::int64_t>());
    } else {
      report.defaulted.push_back({fid, "lanes", 1.0});
    }
    std::int64_t capacity = 0;
    if (props.contains("capacity") && !props["capacity"].is_null()) {
      capacity = props["capacity"].get<std::int64_t>();
    } else {
      capacity = static_cast<std::int64_t>(lanes) *
                 static_cast<std::int64_t>(std::ceil(length / options.jam_spacing));
      capacity = std::max<std::int64_t>(capacity, lanes);
      report.defaulted.push_back({fid, "capacity", static_cast<double>(capacity)});
    }
    double speed = 0.0;
    if (props.contains("speed") && !props["speed"].is_null()) {
      speed = props["speed"].get<double>();
    } else {
      speed = road_type == "motorway" ? options.speed_motorway
              : road_type == "primary" ? options.speed_primary
                                       : options.speed_other;
      report.defaulted.push_back({fid, "speed", speed});
    }

    const bool twoway = props["direction"].get<std::string>() == "twoway";
    FeatureArcs fa{fi, fid, {}};
    Arc forward;
    forward.name = twoway ? fid + ":f" : fid;
    forward.road_type = road_type;
    forward.from = node_id(from);
    forward.to = node_id(to);
    forward.length = length;
    forward.capacity = capacity;
    forward.free_flow_speed = speed;
    forward.lanes = lanes;
    forward.geometry = line;
    fa.arcs.push_back(arcs.size());
    arcs.push_back(forward);
    if (twoway) {
      Arc reverse = forward;
      reverse.name = fid + ":r";
      std::swap(reverse.from, reverse.to);
      std::reverse(reverse.geometry.begin(), reverse.geometry.end());
      fa.arcs.push_back(arcs.size());
      arcs.push_back(std::move(reverse));
    }
    feature_arcs.push_back(std::move(fa));
  }

  if (arcs.empty()) throw EmptyNetworkError("network has no usable features");

  // Weakly connected components; keep the one with most nodes, then most arcs,
  // then the one holding the lowest node id.
  std::vector<std::size_t> parent(positions.size());
  std::iota(parent.begin(), parent.end(), 0);
  for (const Arc& a : arcs) {
    const std::size_t ra = find_root(parent, index(a.from));
    const std::size_t rb = find_root(parent, index(a.to));
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> sizes; // root -> (nodes, arcs)
  for (std::size_t i = 0; i < positions.size(); ++i) ++sizes[find_root(parent, i)].first;
  for (const Arc& a : arcs) ++sizes[find_root(parent, index(a.from))].second;
  std::size_t keep = sizes.begin()->first;
  for (const auto& [root, count] : sizes) {
    const auto& best = sizes[keep];
    if (count.first > best.first || (count.first == best.first && count.second > best.second)) keep = root;
  }
  report.dropped_components = sizes.size() - 1;

  std::vector<std::int64_t> remap(positions.size(), -1);
  std::vector<Node> nodes;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (find_root(parent, i) != keep) continue;
    remap[i] = static_cast<std::int64_t>(nodes.size());
    Node n;
    n.position = positions[i];
    nodes.push_back(n);
  }
  std::vector<Arc> kept;
  for (const FeatureArcs& fa : feature_arcs) {
    if (find_root(parent, index(arcs[fa.arcs.front()].from)) != keep) {
      report.dropped.push_back({fa.feature_index, fa.feature_id, "disconnected_component"});
      continue;
    }
    for (std::size_t ai : fa.arcs) {
      Arc a = arcs[ai];
      a.from = node_id(static_cast<std::size_t>(remap[index(a.from)]));
      a.to = node_id(static_cast<std::size_t>(remap[index(a.to)]));
      kept.push_back(std::move(a));
    }
  }
  std::sort(report.dropped.begin(), report.dropped.end(),
            [](const auto& a, const auto& b) { return a.feature_index < b.feature_index; });
  std::vector<IngestionReport::Merged> merged;
  for (auto m : report.merged) {
    if (remap[index(m.node)] < 0) continue;
    m.node = node_id(static_cast<std::size_t>(remap[index(m.node)]));
    merged.push_back(m);
  }
  report.merged = std::move(merged);

  return {RoadGraph(std::move(nodes), std::move(kept)), std::move(report)};
}

LoadedNetwork load_network_file(const std::filesystem::path& path, const IngestionOptions& options) {
  return load_network(read_json_file(path), options);
}

} // namespace evacmap
