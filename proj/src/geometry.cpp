#include "polyfk/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace polyfk {

double signed_area(std::span<const Point> polygon) {
  const std::size_t n = polygon.size();
  double a = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    a += cross(polygon[i], polygon[(i + 1) % n]);
  return 0.5 * a;
}

Point polygon_centroid(std::span<const Point> polygon) {
  const std::size_t n = polygon.size();
  // Shift to the first vertex to limit cancellation on small cells far from
  // the origin.
  const Point o = polygon[0];
  double a = 0.0;
  Point c = Point::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Point p = polygon[i] - o;
    const Point q = polygon[(i + 1) % n] - o;
    const double w = cross(p, q);
    a += w;
    c += w * (p + q);
  }
  if (a == 0.0)
    throw std::runtime_error("polygon_centroid: zero-area polygon");
  return o + c / (3.0 * a);
}

double polygon_diameter(std::span<const Point> polygon) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i)
    for (std::size_t j = i + 1; j < polygon.size(); ++j)
      d2 = std::max(d2, (polygon[i] - polygon[j]).squaredNorm());
  return std::sqrt(d2);
}

double polygon_perimeter(std::span<const Point> polygon) {
  double s = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i)
    s += (polygon[(i + 1) % polygon.size()] - polygon[i]).norm();
  return s;
}

BoundingBox bounding_box(std::span<const Point> polygon) {
  BoundingBox b;
  b.lo = b.hi = polygon[0];
  for (const auto &p : polygon) {
    b.lo = b.lo.cwiseMin(p);
    b.hi = b.hi.cwiseMax(p);
  }
  return b;
}

namespace {

int orientation(const Point &a, const Point &b, const Point &c, double tol) {
  const double v = cross(b - a, c - a);
  if (v > tol)
    return 1;
  if (v < -tol)
    return -1;
  return 0;
}

bool on_segment(const Point &a, const Point &b, const Point &p, double tol) {
  return point_segment_distance(p, a, b) <= tol;
}

bool segments_intersect(const Point &a, const Point &b, const Point &c,
                        const Point &d, double tol) {
  const int o1 = orientation(a, b, c, tol * (b - a).norm());
  const int o2 = orientation(a, b, d, tol * (b - a).norm());
  const int o3 = orientation(c, d, a, tol * (d - c).norm());
  const int o4 = orientation(c, d, b, tol * (d - c).norm());
  if (o1 * o2 < 0 && o3 * o4 < 0)
    return true;
  if (o1 == 0 && on_segment(a, b, c, tol))
    return true;
  if (o2 == 0 && on_segment(a, b, d, tol))
    return true;
  if (o3 == 0 && on_segment(c, d, a, tol))
    return true;
  if (o4 == 0 && on_segment(c, d, b, tol))
    return true;
  return false;
}

} // namespace

double point_segment_distance(const Point &p, const Point &a, const Point &b) {
  const Point ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0)
    return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

bool is_simple_polygon(std::span<const Point> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3)
    return false;
  const double tol = 1e-12 * polygon_diameter(polygon);
  for (std::size_t i = 0; i < n; ++i) {
    const Point &a = polygon[i];
    const Point &b = polygon[(i + 1) % n];
    if ((b - a).norm() <= tol)
      return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      // Adjacent edges share a vertex by construction.
      if (j == i + 1 || (i == 0 && j == n - 1))
        continue;
      if (segments_intersect(a, b, polygon[j], polygon[(j + 1) % n], tol))
        return false;
    }
  }
  return true;
}

std::vector<Triangle> ear_clip(std::span<const Point> polygon) {
  // Drop collinear vertices first; they produce zero-area ears.
  std::vector<Point> loop;
  const std::size_t n0 = polygon.size();
  const double scale = polygon_diameter(polygon);
  for (std::size_t i = 0; i < n0; ++i) {
    const Point &prev = polygon[(i + n0 - 1) % n0];
    const Point &cur = polygon[i];
    const Point &next = polygon[(i + 1) % n0];
    if (std::abs(cross(cur - prev, next - cur)) >
        1e-14 * scale * scale)
      loop.push_back(cur);
  }

  std::vector<Triangle> out;
  std::vector<std::size_t> idx(loop.size());
  for (std::size_t i = 0; i < idx.size(); ++i)
    idx[i] = i;

  auto inside = [](const Point &p, const Point &a, const Point &b,
                   const Point &c) {
    return cross(b - a, p - a) >= 0.0 && cross(c - b, p - b) >= 0.0 &&
           cross(a - c, p - c) >= 0.0;
  };

  std::size_t guard = 0;
  while (idx.size() > 3) {
    bool clipped = false;
    const std::size_t m = idx.size();
    for (std::size_t i = 0; i < m; ++i) {
      const Point &a = loop[idx[(i + m - 1) % m]];
      const Point &b = loop[idx[i]];
      const Point &c = loop[idx[(i + 1) % m]];
      if (cross(b - a, c - b) <= 0.0)
        continue; // reflex vertex
      bool ear = true;
      for (std::size_t j = 0; j < m && ear; ++j) {
        if (j == i || j == (i + 1) % m || j == (i + m - 1) % m)
          continue;
        const Point &p = loop[idx[j]];
        if (p == a || p == b || p == c)
          continue;
        if (inside(p, a, b, c))
          ear = false;
      }
      if (!ear)
        continue;
      out.push_back({a, b, c});
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(i));
      clipped = true;
      break;
    }
    if (!clipped || ++guard > 4 * n0)
      throw std::runtime_error("ear_clip: polygon could not be triangulated");
  }
  if (idx.size() == 3)
    out.push_back({loop[idx[0]], loop[idx[1]], loop[idx[2]]});
  return out;
}

std::vector<Triangle> triangulate_polygon(std::span<const Point> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3)
    throw std::runtime_error("triangulate_polygon: fewer than 3 vertices");
  if (n == 3)
    return {{polygon[0], polygon[1], polygon[2]}};

  const Point c = polygon_centroid(polygon);
  const double area = signed_area(polygon);
  std::vector<Triangle> fan;
  fan.reserve(n);
  bool valid = true;
  for (std::size_t i = 0; i < n && valid; ++i) {
    const Point &a = polygon[i];
    const Point &b = polygon[(i + 1) % n];
    const double t = 0.5 * cross(a - c, b - c);
    // Collinear hanging vertices give near-zero fan triangles; those are
    // harmless but strictly negative ones are not.
    if (t < -1e-14 * area)
      valid = false;
    else if (t > 1e-14 * area)
      fan.push_back({c, a, b});
  }
  if (valid)
    return fan;
  return ear_clip(polygon);
}

} // namespace polyfk
