#include "polyfk/voronoi.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

namespace polyfk {

namespace {

/// Uniform double in [0, 1) built from the raw 64-bit stream, so the mesh
/// does not depend on the standard library's distribution implementation.
double unit_uniform(std::mt19937_64 &rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Clip a convex counter-clockwise polygon to {x : (x - m) . d <= 0}.
std::vector<Point> clip_half_plane(const std::vector<Point> &poly,
                                   const Point &m, const Point &d) {
  std::vector<Point> out;
  out.reserve(poly.size() + 1);
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point &p = poly[i];
    const Point &q = poly[(i + 1) % n];
    const double dp = (p - m).dot(d);
    const double dq = (q - m).dot(d);
    if (dp <= 0.0)
      out.push_back(p);
    if ((dp < 0.0 && dq > 0.0) || (dp > 0.0 && dq < 0.0))
      out.push_back(p + (dp / (dp - dq)) * (q - p));
  }
  // Drop near-duplicates produced when the bisector grazes a vertex.
  if (out.size() < 3)
    return out;
  const double scale = polygon_diameter(poly);
  std::vector<Point> clean;
  clean.reserve(out.size());
  for (const auto &p : out)
    if (clean.empty() || (p - clean.back()).norm() > 1e-14 * scale)
      clean.push_back(p);
  while (clean.size() > 1 && (clean.front() - clean.back()).norm() <= 1e-14 * scale)
    clean.pop_back();
  return clean;
}

std::string describe_seed(std::size_t i, const Point &p) {
  std::ostringstream os;
  os.precision(12);
  os << "seed " << i << " at (" << p.x() << ", " << p.y() << ")";
  return os.str();
}

} // namespace

std::vector<std::vector<Point>> voronoi_cells(std::span<const Point> seeds,
                                              const BoundingBox &domain) {
  if (!(domain.width() > 0.0) || !(domain.height() > 0.0))
    throw MeshError("voronoi: degenerate domain");
  const std::size_t n = seeds.size();
  if (n == 0)
    throw MeshError("voronoi: no seeds");

  const double w = domain.width();
  const double h = domain.height();
  const int gx = std::max(1, static_cast<int>(std::lround(std::sqrt(n * w / h))));
  const int gy = std::max(1, static_cast<int>(std::lround(static_cast<double>(n) / gx)));
  const double cw = w / gx;
  const double ch = h / gy;
  std::vector<std::vector<int>> bucket(static_cast<std::size_t>(gx) * gy);
  auto cell_of = [&](const Point &p) {
    const int ix = std::clamp(static_cast<int>((p.x() - domain.lo.x()) / cw), 0, gx - 1);
    const int iy = std::clamp(static_cast<int>((p.y() - domain.lo.y()) / ch), 0, gy - 1);
    return std::pair{ix, iy};
  };
  for (std::size_t i = 0; i < n; ++i) {
    const auto [ix, iy] = cell_of(seeds[i]);
    bucket[static_cast<std::size_t>(iy) * gx + ix].push_back(static_cast<int>(i));
  }

  const std::vector<Point> box = {domain.lo, Point(domain.hi.x(), domain.lo.y()),
                                  domain.hi, Point(domain.lo.x(), domain.hi.y())};
  const double min_cell = std::min(cw, ch);
  const int max_ring = std::max(gx, gy);

  std::vector<std::vector<Point>> cells(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Point &si = seeds[i];
    std::vector<Point> cell = box;
    const auto [hx, hy] = cell_of(si);
    for (int r = 0; r <= max_ring; ++r) {
      for (int iy = hy - r; iy <= hy + r; ++iy) {
        if (iy < 0 || iy >= gy)
          continue;
        for (int ix = hx - r; ix <= hx + r; ++ix) {
          if (ix < 0 || ix >= gx)
            continue;
          if (std::max(std::abs(ix - hx), std::abs(iy - hy)) != r)
            continue;
          for (int j : bucket[static_cast<std::size_t>(iy) * gx + ix]) {
            if (static_cast<std::size_t>(j) == i)
              continue;
            const Point d = seeds[j] - si;
            if (d.squaredNorm() == 0.0)
              throw MeshError("voronoi: cell collapse, coincident " +
                              describe_seed(i, si));
            cell = clip_half_plane(cell, 0.5 * (si + seeds[j]), d);
            if (cell.size() < 3)
              throw MeshError("voronoi: cell collapse at " + describe_seed(i, si));
          }
        }
      }
      double reach = 0.0;
      for (const auto &p : cell)
        reach = std::max(reach, (p - si).norm());
      // Seeds outside ring r are at least r cell widths away; they cannot
      // cut the cell once that exceeds twice its reach.
      if (r * min_cell > 2.0 * reach)
        break;
    }
    if (!(signed_area(cell) > 0.0))
      throw MeshError("voronoi: cell collapse (zero area) at " + describe_seed(i, si));
    cells[i] = std::move(cell);
  }
  return cells;
}

PolyMesh generate_voronoi(int n, const BoundingBox &domain, std::uint64_t seed,
                          int lloyd_iters) {
  if (n < 1)
    throw MeshError("generate_voronoi: need at least one element");
  if (!(domain.width() > 0.0) || !(domain.height() > 0.0))
    throw MeshError("generate_voronoi: degenerate domain");
  if (lloyd_iters < 0)
    throw MeshError("generate_voronoi: negative Lloyd iteration count");

  std::mt19937_64 rng(seed);
  std::vector<Point> seeds(n);
  for (auto &s : seeds) {
    const double u = unit_uniform(rng);
    const double v = unit_uniform(rng);
    s = Point(domain.lo.x() + u * domain.width(), domain.lo.y() + v * domain.height());
  }

  std::vector<std::vector<Point>> cells = voronoi_cells(seeds, domain);
  for (int it = 0; it < lloyd_iters; ++it) {
    for (int i = 0; i < n; ++i)
      seeds[i] = polygon_centroid(cells[i]);
    cells = voronoi_cells(seeds, domain);
  }

  RawMesh raw;
  raw.default_tag = BoundaryTag::dirichlet;
  raw.labels.assign(n, 0);
  for (const auto &cell : cells) {
    std::vector<int> loop;
    for (const auto &p : cell) {
      loop.push_back(static_cast<int>(raw.vertices.size()));
      raw.vertices.push_back(p);
    }
    raw.polygons.push_back(std::move(loop));
  }
  return build_poly_mesh(raw);
}

PolyMesh voronoi_for_target_h(double h_target, const BoundingBox &domain,
                              std::uint64_t seed, int lloyd_iters,
                              double rel_tol, bool *found) {
  if (!(h_target > 0.0))
    throw MeshError("voronoi_for_target_h: target must be positive");
  auto rel_err = [&](const PolyMesh &m) {
    return std::abs(m.max_diameter() - h_target) / h_target;
  };

  std::set<int> tried;
  int n = std::max(1, static_cast<int>(std::lround(domain.area() / (0.5 * h_target * h_target))));
  PolyMesh best = generate_voronoi(n, domain, seed, lloyd_iters);
  tried.insert(n);
  // Secant-like updates on h ~ n^{-1/2}, then a local scan.
  for (int it = 0; it < 8 && rel_err(best) > rel_tol; ++it) {
    const double ratio = best.max_diameter() / h_target;
    const int next = std::max(1, static_cast<int>(std::lround(best.num_elements() * ratio * ratio)));
    if (tried.count(next))
      break;
    tried.insert(next);
    PolyMesh m = generate_voronoi(next, domain, seed, lloyd_iters);
    if (rel_err(m) < rel_err(best))
      best = std::move(m);
  }
  const int center = best.num_elements();
  for (int delta = 1; delta <= 6 && rel_err(best) > rel_tol; ++delta) {
    for (int cand : {center - delta, center + delta}) {
      if (cand < 1 || tried.count(cand))
        continue;
      tried.insert(cand);
      PolyMesh m = generate_voronoi(cand, domain, seed, lloyd_iters);
      if (rel_err(m) < rel_err(best))
        best = std::move(m);
    }
  }
  if (found)
    *found = rel_err(best) <= rel_tol;
  return best;
}

} // namespace polyfk
