#include "evacmap/voronoi.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "evacmap/errors.hpp"

namespace evacmap {

using nlohmann::json;

namespace {

// Uniform grid of generator indices for expanding-ring neighbor search.
struct GeneratorGrid {
  GeneratorGrid(std::span<const Node> nodes, const BBox& box) : box(box) {
    const double n = static_cast<double>(std::max<std::size_t>(nodes.size(), 1));
    cell = std::sqrt(box.area() / n);
    nx = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((box.max_x - box.min_x) / cell)));
    ny = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((box.max_y - box.min_y) / cell)));
    buckets.resize(nx * ny);
    for (const Node& node : nodes) {
      const auto [cx, cy] = coords(node.position);
      buckets[cy * nx + cx].push_back(index(node.id));
    }
  }

  std::pair<std::size_t, std::size_t> coords(Point p) const {
    auto clamp = [](double v, std::size_t hi) {
      if (v < 0.0) return std::size_t{0};
      const auto c = static_cast<std::size_t>(v);
      return std::min(c, hi - 1);
    };
    return {clamp((p.x - box.min_x) / cell, nx), clamp((p.y - box.min_y) / cell, ny)};
  }

  BBox box;
  double cell = 1.0;
  std::size_t nx = 1;
  std::size_t ny = 1;
  std::vector<std::vector<std::size_t>> buckets;
};

Ring voronoi_cell(std::size_t self, std::span<const Node> nodes, const BBox& box, const GeneratorGrid& grid) {
  const Point g = nodes[self].position;
  // Clip in coordinates relative to the generator to limit cancellation.
  Ring ring = bbox_ring({box.min_x - g.x, box.min_y - g.y, box.max_x - g.x, box.max_y - g.y});
  auto radius = [&ring]() {
    double r = 0.0;
    for (const Point& p : ring) r = std::max(r, std::hypot(p.x, p.y));
    return r;
  };
  const auto [cx, cy] = grid.coords(g);
  const std::size_t max_ring = std::max(grid.nx, grid.ny);
  for (std::size_t r = 0; r <= max_ring; ++r) {
    const auto lo_x = static_cast<std::int64_t>(cx) - static_cast<std::int64_t>(r);
    const auto hi_x = static_cast<std::int64_t>(cx) + static_cast<std::int64_t>(r);
    const auto lo_y = static_cast<std::int64_t>(cy) - static_cast<std::int64_t>(r);
    const auto hi_y = static_cast<std::int64_t>(cy) + static_cast<std::int64_t>(r);
    for (std::int64_t y = lo_y; y <= hi_y; ++y) {
      if (y < 0 || y >= static_cast<std::int64_t>(grid.ny)) continue;
      for (std::int64_t x = lo_x; x <= hi_x; ++x) {
        if (x < 0 || x >= static_cast<std::int64_t>(grid.nx)) continue;
        if (y != lo_y && y != hi_y && x != lo_x && x != hi_x) continue; // ring boundary only
        for (std::size_t other : grid.buckets[static_cast<std::size_t>(y) * grid.nx + static_cast<std::size_t>(x)]) {
          if (other == self) continue;
          const Point d{nodes[other].position.x - g.x, nodes[other].position.y - g.y};
          ring = clip_convex(ring, d, (d.x * d.x + d.y * d.y) / 2.0);
        }
      }
    }
    // Generators in later rings are at least r * cell away; the cell can only
    // be cut by generators within twice its radius.
    if (static_cast<double>(r) * grid.cell > 2.0 * radius()) break;
  }
  for (Point& p : ring) {
    p.x += g.x;
    p.y += g.y;
  }
  return ring;
}

} // namespace

std::vector<VoronoiCell> build_voronoi(const RoadGraph& graph, const BBox& bbox) {
  if (!bbox.valid()) throw DomainError("bounding box must be finite with positive extent");
  if (graph.node_count() == 0) throw DomainError("cannot tessellate an empty graph");
  for (const Node& n : graph.nodes()) {
    if (!bbox.contains(n.position))
      throw OutsideBoundsError("node " + std::to_string(index(n.id)) + " lies outside the bounding box");
  }
  const GeneratorGrid grid(graph.nodes(), bbox);
  std::vector<VoronoiCell> cells;
  cells.reserve(graph.node_count());
  for (const Node& n : graph.nodes()) cells.push_back({n.id, voronoi_cell(index(n.id), graph.nodes(), bbox, grid)});
  return cells;
}

CellLocator::CellLocator(std::span<const VoronoiCell> cells) : cells_(cells) {
  if (cells.empty()) return;
  extent_ = {INFINITY, INFINITY, -INFINITY, -INFINITY};
  for (const auto& c : cells) {
    for (const Point& p : c.polygon) {
      extent_.min_x = std::min(extent_.min_x, p.x);
      extent_.min_y = std::min(extent_.min_y, p.y);
      extent_.max_x = std::max(extent_.max_x, p.x);
      extent_.max_y = std::max(extent_.max_y, p.y);
    }
  }
  if (!extent_.valid()) return;
  const double scale = std::max(extent_.max_x - extent_.min_x, extent_.max_y - extent_.min_y);
  tol_ = 1e-9 * scale;
  const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(cells.size()))));
  nx_ = ny_ = std::max<std::size_t>(1, side);
  buckets_.resize(nx_ * ny_);
  const double wx = (extent_.max_x - extent_.min_x) / static_cast<double>(nx_);
  const double wy = (extent_.max_y - extent_.min_y) / static_cast<double>(ny_);
  auto bucket = [](double v, double lo, double w, std::size_t n) {
    const double c = std::floor((v - lo) / w);
    return static_cast<std::size_t>(std::clamp(c, 0.0, static_cast<double>(n - 1)));
  };
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Ring& ring = cells[i].polygon;
    if (ring.empty()) continue;
    double lx = INFINITY, ly = INFINITY, hx = -INFINITY, hy = -INFINITY;
    for (const Point& p : ring) {
      lx = std::min(lx, p.x);
      ly = std::min(ly, p.y);
      hx = std::max(hx, p.x);
      hy = std::max(hy, p.y);
    }
    const std::size_t bx0 = bucket(lx - tol_, extent_.min_x, wx, nx_);
    const std::size_t bx1 = bucket(hx + tol_, extent_.min_x, wx, nx_);
    const std::size_t by0 = bucket(ly - tol_, extent_.min_y, wy, ny_);
    const std::size_t by1 = bucket(hy + tol_, extent_.min_y, wy, ny_);
    for (std::size_t y = by0; y <= by1; ++y)
      for (std::size_t x = bx0; x <= bx1; ++x) buckets_[y * nx_ + x].push_back(i);
  }
}

std::optional<NodeId> CellLocator::locate(Point p) const {
  if (buckets_.empty()) return std::nullopt;
  if (p.x < extent_.min_x - tol_ || p.x > extent_.max_x + tol_ || p.y < extent_.min_y - tol_ ||
      p.y > extent_.max_y + tol_)
    return std::nullopt;
  const double wx = (extent_.max_x - extent_.min_x) / static_cast<double>(nx_);
  const double wy = (extent_.max_y - extent_.min_y) / static_cast<double>(ny_);
  const auto bx = static_cast<std::size_t>(
      std::clamp(std::floor((p.x - extent_.min_x) / wx), 0.0, static_cast<double>(nx_ - 1)));
  const auto by = static_cast<std::size_t>(
      std::clamp(std::floor((p.y - extent_.min_y) / wy), 0.0, static_cast<double>(ny_ - 1)));
  std::optional<NodeId> found;
  for (std::size_t i : buckets_[by * nx_ + bx]) {
    if (!convex_contains(cells_[i].polygon, p, tol_)) continue;
    if (!found || cells_[i].node_id < *found) found = cells_[i].node_id;
  }
  return found;
}

namespace {

std::string building_problem(const json& f) {
  if (!f.is_object()) return "feature is not an object";
  if (f.value("type", "") != "Feature") return "type is not \"Feature\"";
  if (!f.contains("geometry") || !f["geometry"].is_object() || f["geometry"].value("type", "") != "Point")
    return "geometry is not a Point";
  const json& c = f["geometry"].value("coordinates", json());
  if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number() ||
      !std::isfinite(c[0].get<double>()) || !std::isfinite(c[1].get<double>()))
    return "invalid coordinate";
  if (!f.contains("properties") || !f["properties"].is_object()) return "missing properties";
  const json& p = f["properties"];
  if (!p.contains("id") || !(p["id"].is_string() || p["id"].is_number_integer())) return "property 'id' missing";
  for (const char* key : {"pop_day", "pop_night"}) {
    if (!p.contains(key) || !(p[key].is_number_integer() || p[key].is_number_unsigned()) ||
        p[key].get<std::int64_t>() < 0)
      return std::string("property '") + key + "' must be an integer >= 0";
  }
  return {};
}

} // namespace

std::vector<FeatureIssue> check_building_features(const json& doc) {
  std::vector<FeatureIssue> issues;
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
      !doc["features"].is_array()) {
    issues.push_back({ParseError::npos, {}, "document is not a FeatureCollection"});
    return issues;
  }
  const json& features = doc["features"];
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (auto problem = building_problem(features[i]); !problem.empty()) {
      std::string id;
      if (features[i].is_object() && features[i].contains("properties") && features[i]["properties"].is_object())
        if (const json& v = features[i]["properties"].value("id", json()); v.is_string()) id = v.get<std::string>();
      issues.push_back({i, id, problem});
    }
  }
  return issues;
}

std::vector<BuildingRecord> load_buildings(const json& doc) {
  const auto issues = check_building_features(doc);
  if (!issues.empty()) {
    const auto& first = issues.front();
    if (first.feature_index == ParseError::npos) throw ParseError("buildings: " + first.message);
    throw ParseError("building feature " + std::to_string(first.feature_index) + ": " + first.message,
                     first.feature_index);
  }
  std::vector<BuildingRecord> out;
  for (const json& f : doc["features"]) {
    const json& p = f["properties"];
    BuildingRecord b;
    b.id = p["id"].is_string() ? p["id"].get<std::string>() : std::to_string(p["id"].get<std::int64_t>());
    b.point = {f["geometry"]["coordinates"][0].get<double>(), f["geometry"]["coordinates"][1].get<double>()};
    b.population_day = p["pop_day"].get<std::int64_t>();
    b.population_night = p["pop_night"].get<std::int64_t>();
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<BuildingRecord> load_buildings_file(const std::filesystem::path& path) {
  return load_buildings(read_json_file(path));
}

PopulationResult assign_population(const RoadGraph& graph, std::span<const BuildingRecord> buildings,
                                   std::span<const VoronoiCell> cells) {
  if (cells.size() != graph.node_count()) throw DomainError("cell list does not match the graph's nodes");
  const CellLocator locator(cells);
  std::vector<std::int64_t> day(graph.node_count(), 0);
  std::vector<std::int64_t> night(graph.node_count(), 0);
  for (const Node& n : graph.nodes()) {
    day[index(n.id)] = n.population_day;
    night[index(n.id)] = n.population_night;
  }
  PopulationResult result;
  for (const BuildingRecord& b : buildings) {
    if (b.population_day < 0 || b.population_night < 0)
      throw DomainError("building '" + b.id + "' has negative population");
    std::optional<NodeId> target = locator.locate(b.point);
    if (!target) {
      double best = INFINITY;
      for (const Node& n : graph.nodes()) {
        const double d = squared_distance(n.position, b.point);
        if (d < best) {
          best = d;
          target = n.id;
        }
      }
      result.outside_buildings.push_back(b.id);
    }
    day[index(*target)] += b.population_day;
    night[index(*target)] += b.population_night;
  }
  result.graph = graph.with_populations(day, night);
  return result;
}

} // namespace evacmap
