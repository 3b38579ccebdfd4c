#include "evacmap/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "evacmap/errors.hpp"

namespace evacmap {

using nlohmann::json;

std::optional<SyntheticKind> parse_synthetic_kind(const std::string& name) {
  if (name == "grid") return SyntheticKind::Grid;
  if (name == "two-blocks") return SyntheticKind::TwoBlocks;
  if (name == "ring") return SyntheticKind::Ring;
  return std::nullopt;
}

namespace {

// Millimetre rounding keeps the files short and platform-stable.
double mm(double v) { return std::round(v * 1000.0) / 1000.0; }

struct Builder {
  const SyntheticParams& params;
  std::vector<Point> nodes;
  json features = json::array();

  std::size_t add_node(Point p) {
    nodes.push_back({mm(p.x), mm(p.y)});
    return nodes.size() - 1;
  }

  void add_road(const std::string& id, std::size_t a, std::size_t b) {
    features.push_back({
        {"type", "Feature"},
        {"geometry", {{"type", "LineString"},
                      {"coordinates", json::array({json::array({nodes[a].x, nodes[a].y}),
                                                   json::array({nodes[b].x, nodes[b].y})})}}},
        {"properties", {{"id", id}, {"direction", "twoway"}, {"type", "other"}, {"lanes", params.lanes}}},
    });
  }

  SyntheticData finish() const {
    SyntheticData out;
    out.network = {{"type", "FeatureCollection"}, {"features", features}};
    json buildings = json::array();
    BBox box{INFINITY, INFINITY, -INFINITY, -INFINITY};
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      buildings.push_back({
          {"type", "Feature"},
          {"geometry", {{"type", "Point"}, {"coordinates", json::array({nodes[i].x, nodes[i].y})}}},
          {"properties", {{"id", "bldg" + std::to_string(i)}, {"pop_day", params.pop_day}, {"pop_night", params.pop_night}}},
      });
      box.min_x = std::min(box.min_x, nodes[i].x);
      box.min_y = std::min(box.min_y, nodes[i].y);
      box.max_x = std::max(box.max_x, nodes[i].x);
      box.max_y = std::max(box.max_y, nodes[i].y);
    }
    out.buildings = {{"type", "FeatureCollection"}, {"features", buildings}};
    const double margin = params.spacing;
    out.bbox = {box.min_x - margin, box.min_y - margin, box.max_x + margin, box.max_y + margin};
    return out;
  }
};

} // namespace

SyntheticData gen_synthetic(SyntheticKind kind, const SyntheticParams& params) {
  if (!(params.spacing > 0.0) || !std::isfinite(params.spacing)) throw ConfigError("spacing must be > 0");
  if (params.pop_day < 0 || params.pop_night < 0) throw ConfigError("populations must be >= 0");
  if (params.lanes < 1) throw ConfigError("lanes must be >= 1");
  Builder b{params};
  const double s = params.spacing;
  switch (kind) {
  case SyntheticKind::Grid: {
    if (params.rows < 1 || params.cols < 1 || params.rows * params.cols < 2)
      throw ConfigError("grid needs rows, cols >= 1 and at least two nodes");
    for (int r = 0; r < params.rows; ++r)
      for (int c = 0; c < params.cols; ++c) b.add_node({c * s, r * s});
    auto at = [&](int r, int c) { return static_cast<std::size_t>(r * params.cols + c); };
    for (int r = 0; r < params.rows; ++r)
      for (int c = 0; c + 1 < params.cols; ++c) b.add_road("h" + std::to_string(r) + "_" + std::to_string(c), at(r, c), at(r, c + 1));
    for (int r = 0; r + 1 < params.rows; ++r)
      for (int c = 0; c < params.cols; ++c) b.add_road("v" + std::to_string(r) + "_" + std::to_string(c), at(r, c), at(r + 1, c));
    break;
  }
  case SyntheticKind::TwoBlocks: {
    const int n = params.block_size;
    if (n < 2) throw ConfigError("block_size must be >= 2");
    // Block nodes on a circle whose chord between neighbours is `spacing`.
    const double radius = s / (2.0 * std::sin(std::numbers::pi / n));
    const Point left{radius, radius};
    const Point right{left.x + 2.0 * radius + 3.0 * s, radius};
    for (int j = 0; j < n; ++j) {
      const double ang = 2.0 * std::numbers::pi * j / n;
      b.add_node({left.x + radius * std::cos(ang), left.y + radius * std::sin(ang)});
    }
    for (int j = 0; j < n; ++j) {
      const double ang = std::numbers::pi + 2.0 * std::numbers::pi * j / n;
      b.add_node({right.x + radius * std::cos(ang), right.y + radius * std::sin(ang)});
    }
    for (int blk = 0; blk < 2; ++blk) {
      const std::string tag = blk == 0 ? "a" : "b";
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          b.add_road(tag + std::to_string(i) + "_" + std::to_string(j), static_cast<std::size_t>(blk * n + i),
                     static_cast<std::size_t>(blk * n + j));
    }
    // Node 0 of each block faces the other block.
    b.add_road("bridge", 0, static_cast<std::size_t>(n));
    break;
  }
  case SyntheticKind::Ring: {
    const int n = params.ring_nodes;
    if (n < 3) throw ConfigError("ring needs at least 3 nodes");
    const double radius = s / (2.0 * std::sin(std::numbers::pi / n));
    for (int j = 0; j < n; ++j) {
      const double ang = 2.0 * std::numbers::pi * j / n;
      b.add_node({radius + radius * std::cos(ang), radius + radius * std::sin(ang)});
    }
    for (int j = 0; j < n; ++j)
      b.add_road("r" + std::to_string(j), static_cast<std::size_t>(j), static_cast<std::size_t>((j + 1) % n));
    break;
  }
  }
  return b.finish();
}

} // namespace evacmap
