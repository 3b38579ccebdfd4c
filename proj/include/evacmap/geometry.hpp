#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace evacmap {

// Planar projected coordinates, meters.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline double squared_distance(Point a, Point b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

struct BBox {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  bool valid() const {
    return std::isfinite(min_x) && std::isfinite(min_y) && std::isfinite(max_x) &&
           std::isfinite(max_y) && max_x > min_x && max_y > min_y;
  }
  bool contains(Point p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }
  double area() const { return (max_x - min_x) * (max_y - min_y); }
  Point center() const { return {(min_x + max_x) / 2.0, (min_y + max_y) / 2.0}; }
};

// Closed ring without the repeated closing vertex.
using Ring = std::vector<Point>;

// Outer ring (counter-clockwise) followed by holes (clockwise).
struct Polygon {
  Ring outer;
  std::vector<Ring> holes;
};

using MultiPolygon = std::vector<Polygon>;

// Positive for counter-clockwise rings.
double signed_area(std::span<const Point> ring);

double polyline_length(std::span<const Point> line);

Ring bbox_ring(const BBox& box);

// Keeps the part of a convex ring where dot(p - origin, normal) <= offset.
Ring clip_convex(const Ring& ring, Point normal, double offset);

// Boundary counts as inside, with absolute tolerance `eps` on the edge test.
bool convex_contains(const Ring& ring, Point p, double eps = 0.0);

// Even-odd containment for a general simple ring.
bool ring_contains(std::span<const Point> ring, Point p);

} // namespace evacmap
