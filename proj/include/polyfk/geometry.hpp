#pragma once

#include <Eigen/Dense>

#include <array>
#include <span>
#include <vector>

namespace polyfk {

using Point = Eigen::Vector2d;
using Triangle = std::array<Point, 3>;

/// Axis-aligned box; used for basis scaling and as the Voronoi domain.
struct BoundingBox {
  Point lo{Point::Zero()};
  Point hi{Point::Zero()};

  double width() const { return hi.x() - lo.x(); }
  double height() const { return hi.y() - lo.y(); }
  double area() const { return width() * height(); }
  Point center() const { return 0.5 * (lo + hi); }
};

inline double cross(const Point &a, const Point &b) {
  return a.x() * b.y() - a.y() * b.x();
}

/// Shoelace area; positive for counter-clockwise loops.
double signed_area(std::span<const Point> polygon);

Point polygon_centroid(std::span<const Point> polygon);

/// Largest vertex-to-vertex distance (the diameter of a polygon).
double polygon_diameter(std::span<const Point> polygon);

double polygon_perimeter(std::span<const Point> polygon);

BoundingBox bounding_box(std::span<const Point> polygon);

/// True when no two non-adjacent edges intersect.
bool is_simple_polygon(std::span<const Point> polygon);

/// Sub-triangulation used by element quadrature.
///
/// A fan from the area centroid is used when every fan triangle is positively
/// oriented (always the case for convex cells); otherwise the loop is
/// ear-clipped. Throws std::runtime_error when neither succeeds.
std::vector<Triangle> triangulate_polygon(std::span<const Point> polygon);

/// Ear clipping of a counter-clockwise simple polygon.
std::vector<Triangle> ear_clip(std::span<const Point> polygon);

/// Distance from p to the segment [a, b].
double point_segment_distance(const Point &p, const Point &a, const Point &b);

} // namespace polyfk
