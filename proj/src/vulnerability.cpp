#include "evacmap/vulnerability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <unordered_map>

#include "evacmap/errors.hpp"

namespace evacmap {

using nlohmann::json;

std::optional<Period> parse_period(const std::string& s) {
  if (s == "day") return Period::Day;
  if (s == "night") return Period::Night;
  return std::nullopt;
}

const char* to_string(Period p) { return p == Period::Day ? "day" : "night"; }

namespace {

// Merges vertices within `tol` of an earlier vertex.
class VertexPool {
public:
  explicit VertexPool(double tol) : tol_(tol) {}

  std::size_t intern(Point p) {
    const auto cx = static_cast<std::int64_t>(std::floor(p.x / tol_));
    const auto cy = static_cast<std::int64_t>(std::floor(p.y / tol_));
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = grid_.find({cx + dx, cy + dy});
        if (it == grid_.end()) continue;
        for (std::size_t v : it->second)
          if (distance(points_[v], p) <= tol_) return v;
      }
    }
    points_.push_back(p);
    grid_[{cx, cy}].push_back(points_.size() - 1);
    return points_.size() - 1;
  }

  Point at(std::size_t v) const { return points_[v]; }

private:
  double tol_;
  std::vector<Point> points_;
  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>> grid_;
};

double turn_angle(Point a, Point b, Point c) {
  const double ux = b.x - a.x, uy = b.y - a.y;
  const double vx = c.x - b.x, vy = c.y - b.y;
  return std::atan2(ux * vy - uy * vx, ux * vx + uy * vy);
}

} // namespace

MultiPolygon union_cells(std::span<const VoronoiCell> cells, std::span<const NodeId> members) {
  MultiPolygon out;
  if (members.empty()) return out;
  double lo_x = INFINITY, lo_y = INFINITY, hi_x = -INFINITY, hi_y = -INFINITY;
  for (const auto& c : cells) {
    for (const Point& p : c.polygon) {
      lo_x = std::min(lo_x, p.x);
      lo_y = std::min(lo_y, p.y);
      hi_x = std::max(hi_x, p.x);
      hi_y = std::max(hi_y, p.y);
    }
  }
  const double scale = std::max({hi_x - lo_x, hi_y - lo_y, 1.0});
  VertexPool pool(1e-7 * scale);

  // Directed boundary edges with multiplicity; shared edges appear once in
  // each direction and cancel.
  std::map<std::pair<std::size_t, std::size_t>, int> edges;
  for (NodeId m : members) {
    const Ring& ring = cells[index(m)].polygon;
    std::vector<std::size_t> ids;
    for (const Point& p : ring) {
      const std::size_t v = pool.intern(p);
      if (ids.empty() || ids.back() != v) ids.push_back(v);
    }
    while (ids.size() > 1 && ids.front() == ids.back()) ids.pop_back();
    if (ids.size() < 3) continue;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const std::size_t a = ids[i];
      const std::size_t b = ids[(i + 1) % ids.size()];
      auto rev = edges.find({b, a});
      if (rev != edges.end()) {
        if (--rev->second == 0) edges.erase(rev);
      } else {
        ++edges[{a, b}];
      }
    }
  }

  std::multimap<std::size_t, std::size_t> outgoing;
  for (const auto& [e, count] : edges)
    for (int i = 0; i < count; ++i) outgoing.emplace(e.first, e.second);

  std::vector<Ring> outers;
  std::vector<Ring> holes;
  while (!outgoing.empty()) {
    auto first = outgoing.begin();
    const std::size_t start = first->first;
    std::size_t prev = start;
    std::size_t cur = first->second;
    outgoing.erase(first);
    Ring ring{pool.at(start)};
    while (cur != start) {
      ring.push_back(pool.at(cur));
      auto [lo, hi] = outgoing.equal_range(cur);
      if (lo == hi) break; // open chain; cannot happen for closed cells
      // Leftmost turn keeps regions that touch at a single vertex apart.
      auto pick = lo;
      double best = -INFINITY;
      for (auto it = lo; it != hi; ++it) {
        const double ang = turn_angle(pool.at(prev), pool.at(cur), pool.at(it->second));
        if (ang > best) {
          best = ang;
          pick = it;
        }
      }
      prev = cur;
      cur = pick->second;
      outgoing.erase(pick);
    }
    if (ring.size() < 3) continue;
    const double area = signed_area(ring);
    if (area > 0.0) {
      outers.push_back(std::move(ring));
    } else if (area < 0.0) {
      holes.push_back(std::move(ring));
    }
  }

  for (Ring& r : outers) out.push_back({std::move(r), {}});
  for (Ring& h : holes) {
    const Point probe{(h[0].x + h[1].x) / 2.0, (h[0].y + h[1].y) / 2.0};
    std::optional<std::size_t> owner;
    double owner_area = INFINITY;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double a = signed_area(out[i].outer);
      if (a < owner_area && ring_contains(out[i].outer, probe)) {
        owner = i;
        owner_area = a;
      }
    }
    if (owner) out[*owner].holes.push_back(std::move(h));
  }
  return out;
}

std::vector<CommunityRecord> build_community_records(const CommunityPartition& partition, const RoadGraph& graph,
                                                     std::span<const VoronoiCell> cells) {
  if (cells.size() != graph.node_count()) throw DomainError("cell list does not match the graph's nodes");
  std::vector<CommunityRecord> out;
  out.reserve(partition.communities.size());
  for (std::size_t ci = 0; ci < partition.communities.size(); ++ci) {
    const auto& members = partition.communities[ci];
    CommunityRecord rec;
    rec.id = members.front();
    rec.color = partition.color_of[index(rec.id)];
    rec.nodes = members;
    for (NodeId n : members) {
      rec.population_day += graph.node(n).population_day;
      rec.population_night += graph.node(n).population_night;
      for (ArcId a : graph.out_arcs(n))
        if (partition.community_of[index(graph.arc(a).to)] != ci) rec.exit_arcs.push_back(a);
    }
    std::sort(rec.exit_arcs.begin(), rec.exit_arcs.end());
    rec.polygon = union_cells(cells, members);
    out.push_back(std::move(rec));
  }
  std::sort(out.begin(), out.end(), [](const CommunityRecord& a, const CommunityRecord& b) { return a.id < b.id; });
  return out;
}

double discharge(const Arc& arc, const FlowState& state, const DelayParams& params) {
  const double load = state.load[index(arc.id)];
  const double residual = std::max(0.0, static_cast<double>(arc.capacity) - load);
  return residual / travel_time(arc, load, params);
}

VulnerabilityRecord score_community(const CommunityRecord& rec, const FlowState& state, const RoadGraph& graph,
                                    Period period, double occupancy, const DelayParams& params) {
  if (!(occupancy > 0.0) || !std::isfinite(occupancy)) throw DomainError("occupancy must be > 0");
  VulnerabilityRecord out;
  out.community = rec.id;
  out.vehicles_to_evacuate = static_cast<double>(rec.population(period)) / occupancy;
  std::optional<double> route;
  for (ArcId a : rec.exit_arcs) {
    if (state.closed[index(a)]) continue;
    const double d = discharge(graph.arc(a), state, params);
    if (!route || d > *route) route = d;
  }
  if (!route) {
    out.clearance_time = kUnbounded;
  } else if (out.vehicles_to_evacuate == 0.0) {
    out.clearance_time = 0.0;
  } else if (*route <= 0.0) {
    out.clearance_time = kUnbounded;
  } else {
    out.clearance_time = out.vehicles_to_evacuate / *route;
  }
  return out;
}

void categorize(std::span<VulnerabilityRecord> records) {
  std::vector<double> finite;
  for (const auto& r : records)
    if (std::isfinite(r.clearance_time)) finite.push_back(r.clearance_time);
  std::sort(finite.begin(), finite.end());
  const auto n = static_cast<std::int64_t>(finite.size());
  for (auto& r : records) {
    if (!std::isfinite(r.clearance_time)) {
      r.category = 5;
      continue;
    }
    if (n == 1) {
      r.category = 3;
      continue;
    }
    const auto less = std::lower_bound(finite.begin(), finite.end(), r.clearance_time) - finite.begin();
    const auto equal = std::upper_bound(finite.begin(), finite.end(), r.clearance_time) - finite.begin() - less;
    // Mid-rank percentile (less + (equal - 1) / 2) / (n - 1), in integer form.
    const std::int64_t bucket = (5 * (2 * less + equal - 1)) / (2 * (n - 1));
    r.category = 1 + static_cast<int>(std::min<std::int64_t>(4, bucket));
  }
}

std::vector<Color> arc_colors(const PheromoneField& tau) {
  std::vector<Color> out(tau.arcs(), 0);
  for (std::size_t a = 0; a < tau.arcs(); ++a) {
    const auto row = tau.row(arc_id(a));
    Color best = 0;
    for (int c = 1; c < tau.colors(); ++c)
      if (row[static_cast<std::size_t>(c)] > row[static_cast<std::size_t>(best)]) best = c;
    out[a] = best;
  }
  return out;
}

namespace {

json ring_json(const Ring& ring) {
  json r = json::array();
  for (const Point& p : ring) r.push_back({p.x, p.y});
  r.push_back({ring.front().x, ring.front().y});
  return r;
}

json polygon_json(const Polygon& poly) {
  json rings = json::array({ring_json(poly.outer)});
  for (const Ring& h : poly.holes) rings.push_back(ring_json(h));
  return rings;
}

} // namespace

json snapshot_geojson(const SnapshotView& view, const RoadGraph& graph, const FlowState& state) {
  if (view.scores.size() != view.communities.size()) throw DomainError("scores are not aligned with communities");
  if (view.arc_colors.size() != graph.arc_count()) throw DomainError("arc colours do not match the graph");
  json features = json::array();
  std::vector<std::size_t> order(view.communities.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return view.communities[a].id < view.communities[b].id; });
  for (std::size_t i : order) {
    const CommunityRecord& rec = view.communities[i];
    const VulnerabilityRecord& score = view.scores[i];
    json geometry;
    if (rec.polygon.size() == 1) {
      geometry = {{"type", "Polygon"}, {"coordinates", polygon_json(rec.polygon.front())}};
    } else {
      json polys = json::array();
      for (const Polygon& p : rec.polygon) polys.push_back(polygon_json(p));
      geometry = {{"type", "MultiPolygon"}, {"coordinates", polys}};
    }
    json members = json::array();
    for (NodeId n : rec.nodes) members.push_back(index(n));
    json exits = json::array();
    for (ArcId a : rec.exit_arcs) exits.push_back(graph.arc(a).name);
    features.push_back({
        {"type", "Feature"},
        {"geometry", geometry},
        {"properties",
         {{"kind", "community"},
          {"community_id", index(rec.id)},
          {"color", rec.color},
          {"members", members},
          {"exit_arcs", exits},
          {"population_day", rec.population_day},
          {"population_night", rec.population_night},
          {"vehicles_to_evacuate", score.vehicles_to_evacuate},
          {"clearance_s", std::isfinite(score.clearance_time) ? json(score.clearance_time) : json(nullptr)},
          {"category", score.category}}},
    });
  }
  for (const Arc& a : graph.arcs()) {
    json coords = json::array();
    for (const Point& p : a.geometry) coords.push_back({p.x, p.y});
    const double load = state.load[index(a.id)];
    features.push_back({
        {"type", "Feature"},
        {"geometry", {{"type", "LineString"}, {"coordinates", coords}}},
        {"properties",
         {{"kind", "arc"},
          {"arc_id", a.name},
          {"index", index(a.id)},
          {"from", index(a.from)},
          {"to", index(a.to)},
          {"load", load},
          {"capacity", a.capacity},
          {"f", attraction(a, state)},
          {"color", view.arc_colors[index(a.id)]},
          {"closed", static_cast<bool>(state.closed[index(a.id)])}}},
    });
  }
  return {{"type", "FeatureCollection"},
          {"step", view.step},
          {"time", view.time},
          {"period", to_string(view.period)},
          {"features", features}};
}

std::string snapshot_file_name(std::size_t step) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "snapshot_%06zu.geojson", step);
  return buf;
}

std::filesystem::path export_snapshot(const SnapshotView& view, const RoadGraph& graph, const FlowState& state,
                                      const std::filesystem::path& out_dir) {
  const std::filesystem::path path = out_dir / snapshot_file_name(view.step);
  const std::string text = snapshot_geojson(view, graph, state).dump() + "\n";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
  return path;
}

} // namespace evacmap
