#include "polyfk/agglomerate.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numbers>
#include <set>

namespace polyfk {

double TriMesh::triangle_area(int t) const {
  const auto &v = triangles[t];
  return 0.5 * cross(vertices[v[1]] - vertices[v[0]], vertices[v[2]] - vertices[v[0]]);
}

namespace {

using Edge = std::pair<int, int>;

struct Adjacency {
  std::vector<std::array<int, 3>> neighbor; // across edge (v_i, v_{i+1}); -1 if none
};

Adjacency triangle_adjacency(const TriMesh &tri) {
  std::map<Edge, std::vector<int>> owners;
  for (int t = 0; t < tri.num_triangles(); ++t)
    for (int i = 0; i < 3; ++i) {
      const int a = tri.triangles[t][i];
      const int b = tri.triangles[t][(i + 1) % 3];
      owners[{std::min(a, b), std::max(a, b)}].push_back(t);
    }
  Adjacency adj;
  adj.neighbor.assign(tri.num_triangles(), {-1, -1, -1});
  for (int t = 0; t < tri.num_triangles(); ++t)
    for (int i = 0; i < 3; ++i) {
      const int a = tri.triangles[t][i];
      const int b = tri.triangles[t][(i + 1) % 3];
      const auto &o = owners.at({std::min(a, b), std::max(a, b)});
      if (o.size() > 2)
        throw MeshError("agglomerate: triangle edge shared by more than two triangles");
      for (int u : o)
        if (u != t)
          adj.neighbor[t][i] = u;
    }
  return adj;
}

Point tri_centroid(const TriMesh &tri, int t) {
  const auto &v = tri.triangles[t];
  return (tri.vertices[v[0]] + tri.vertices[v[1]] + tri.vertices[v[2]]) / 3.0;
}

/// Grow `parts` edge-connected aggregates over the connected triangle set
/// `members`. Returns a part index per member (same order as `members`).
std::vector<int> grow_parts(const TriMesh &tri, const Adjacency &adj,
                            const std::vector<int> &members, int parts) {
  const int m = static_cast<int>(members.size());
  parts = std::clamp(parts, 1, m);
  std::map<int, int> local;
  for (int i = 0; i < m; ++i)
    local[members[i]] = i;

  std::vector<Point> c(m);
  Point mean = Point::Zero();
  for (int i = 0; i < m; ++i) {
    c[i] = tri_centroid(tri, members[i]);
    mean += c[i];
  }
  mean /= m;

  // Farthest-point seeds.
  std::vector<int> seeds;
  {
    int first = 0;
    double far = -1.0;
    for (int i = 0; i < m; ++i)
      if ((c[i] - mean).squaredNorm() > far) {
        far = (c[i] - mean).squaredNorm();
        first = i;
      }
    seeds.push_back(first);
    std::vector<double> dmin(m, std::numeric_limits<double>::infinity());
    while (static_cast<int>(seeds.size()) < parts) {
      const Point s = c[seeds.back()];
      int best = -1;
      double best_d = -1.0;
      for (int i = 0; i < m; ++i) {
        dmin[i] = std::min(dmin[i], (c[i] - s).squaredNorm());
        if (dmin[i] > best_d) {
          best_d = dmin[i];
          best = i;
        }
      }
      seeds.push_back(best);
    }
  }

  std::vector<int> part(m, -1);
  std::vector<double> area(parts, 0.0);
  std::vector<std::set<std::pair<double, int>>> frontier(parts);
  auto assign = [&](int i, int p) {
    part[i] = p;
    area[p] += tri.triangle_area(members[i]);
    for (int nb : adj.neighbor[members[i]]) {
      if (nb < 0)
        continue;
      auto it = local.find(nb);
      if (it == local.end() || part[it->second] >= 0)
        continue;
      frontier[p].insert({(c[it->second] - c[seeds[p]]).squaredNorm(), it->second});
    }
  };
  for (int p = 0; p < parts; ++p)
    assign(seeds[p], p);

  int assigned = parts;
  while (assigned < m) {
    // Smallest aggregate that can still grow takes its nearest free neighbor.
    int pick = -1;
    for (int p = 0; p < parts; ++p) {
      auto &f = frontier[p];
      while (!f.empty() && part[f.begin()->second] >= 0)
        f.erase(f.begin());
      if (f.empty())
        continue;
      if (pick < 0 || area[p] < area[pick])
        pick = p;
    }
    if (pick < 0)
      throw MeshError("agglomerate: region is not edge-connected");
    const int i = frontier[pick].begin()->second;
    frontier[pick].erase(frontier[pick].begin());
    assign(i, pick);
    ++assigned;
  }
  return part;
}

/// Boundary loops of the union of `members`. Empty result signals a pinch
/// vertex (the union is not a simple polygon).
std::vector<std::vector<int>> boundary_loops(const TriMesh &tri,
                                             const std::vector<int> &members) {
  std::set<Edge> directed;
  for (int t : members)
    for (int i = 0; i < 3; ++i)
      directed.insert({tri.triangles[t][i], tri.triangles[t][(i + 1) % 3]});
  std::map<int, int> next;
  for (const auto &[a, b] : directed) {
    if (directed.count({b, a}))
      continue;
    if (next.count(a))
      return {};
    next[a] = b;
  }
  std::vector<std::vector<int>> loops;
  std::set<int> seen;
  for (const auto &[start, unused] : next) {
    (void)unused;
    if (seen.count(start))
      continue;
    std::vector<int> loop;
    int v = start;
    do {
      loop.push_back(v);
      seen.insert(v);
      v = next.at(v);
    } while (v != start && loop.size() <= next.size());
    loops.push_back(std::move(loop));
  }
  return loops;
}

} // namespace

Agglomeration agglomerate(const TriMesh &tri, int target_elements) {
  const int nt = tri.num_triangles();
  if (nt == 0)
    throw MeshError("agglomerate: empty triangle mesh");
  if (static_cast<int>(tri.labels.size()) != nt)
    throw MeshError("agglomerate: labels must cover all triangles");
  const std::set<int> distinct(tri.labels.begin(), tri.labels.end());
  if (target_elements < static_cast<int>(distinct.size()))
    throw MeshError("agglomerate: target element count " +
                    std::to_string(target_elements) + " is below the number of labels (" +
                    std::to_string(distinct.size()) + ")");
  for (int t = 0; t < nt; ++t)
    if (!(tri.triangle_area(t) > 0.0))
      throw MeshError("agglomerate: triangle " + std::to_string(t) +
                      " is not positively oriented");

  const Adjacency adj = triangle_adjacency(tri);
  double total = 0.0;
  for (int t = 0; t < nt; ++t)
    total += tri.triangle_area(t);

  // Connected single-label regions.
  std::vector<int> region(nt, -1);
  std::vector<std::vector<int>> regions;
  for (int t = 0; t < nt; ++t) {
    if (region[t] >= 0)
      continue;
    const int r = static_cast<int>(regions.size());
    regions.emplace_back();
    std::deque<int> queue{t};
    region[t] = r;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      regions[r].push_back(u);
      for (int nb : adj.neighbor[u])
        if (nb >= 0 && region[nb] < 0 && tri.labels[nb] == tri.labels[u]) {
          region[nb] = r;
          queue.push_back(nb);
        }
    }
    std::sort(regions[r].begin(), regions[r].end());
  }

  // Work list of (triangle set, requested parts); split until every
  // aggregate is a simple polygon.
  std::deque<std::pair<std::vector<int>, int>> work;
  for (const auto &members : regions) {
    double a = 0.0;
    for (int t : members)
      a += tri.triangle_area(t);
    const int parts = std::max(1, static_cast<int>(std::lround(target_elements * a / total)));
    work.emplace_back(members, parts);
  }

  Agglomeration out;
  out.aggregate_of_triangle.assign(nt, -1);
  RawMesh raw;
  raw.vertices = tri.vertices;
  raw.boundary_edges = tri.boundary_edges;
  int guard = 0;
  while (!work.empty()) {
    auto [members, parts] = std::move(work.front());
    work.pop_front();
    const std::vector<int> part = grow_parts(tri, adj, members, parts);
    const int np = *std::max_element(part.begin(), part.end()) + 1;
    std::vector<std::vector<int>> groups(np);
    for (std::size_t i = 0; i < members.size(); ++i)
      groups[part[i]].push_back(members[i]);
    for (auto &g : groups) {
      auto loops = boundary_loops(tri, g);
      if (loops.size() == 1) {
        const int id = static_cast<int>(raw.polygons.size());
        for (int t : g)
          out.aggregate_of_triangle[t] = id;
        raw.polygons.push_back(std::move(loops.front()));
        raw.labels.push_back(tri.labels[g.front()]);
        continue;
      }
      if (g.size() < 2 || ++guard > 10 * nt)
        throw MeshError("agglomerate: could not form a simple aggregate");
      work.emplace_back(std::move(g), 2);
    }
  }

  out.mesh = build_poly_mesh(raw);
  return out;
}

TriMesh triangulated_disk(double radius, int rings, double inner_radius,
                          int inner_label, int outer_label, BoundaryTag tag) {
  if (!(radius > 0.0) || rings < 1)
    throw MeshError("triangulated_disk: invalid radius or ring count");
  const int inner_ring = static_cast<int>(std::lround(inner_radius / radius * rings));

  TriMesh tri;
  tri.vertices.push_back(Point::Zero());
  std::vector<std::vector<int>> ring_ids(rings + 1);
  ring_ids[0] = {0};
  for (int j = 1; j <= rings; ++j) {
    const int n = 6 * j;
    const double r = radius * j / rings;
    for (int i = 0; i < n; ++i) {
      const double th = 2.0 * std::numbers::pi * i / n;
      ring_ids[j].push_back(static_cast<int>(tri.vertices.size()));
      tri.vertices.emplace_back(r * std::cos(th), r * std::sin(th));
    }
  }
  auto add = [&](int a, int b, int c, int band) {
    tri.triangles.push_back({a, b, c});
    tri.labels.push_back(band <= inner_ring ? inner_label : outer_label);
  };
  for (int i = 0; i < 6; ++i)
    add(0, ring_ids[1][i], ring_ids[1][(i + 1) % 6], 1);
  for (int j = 2; j <= rings; ++j) {
    const auto &A = ring_ids[j - 1];
    const auto &B = ring_ids[j];
    const int na = static_cast<int>(A.size());
    const int nb = static_cast<int>(B.size());
    int ia = 0;
    int ib = 0;
    while (ia < na || ib < nb) {
      // Advance along whichever ring has the smaller next angle.
      const bool outer = ib < nb && (ia >= na || static_cast<long>(ib + 1) * na <=
                                                     static_cast<long>(ia + 1) * nb);
      if (outer) {
        add(A[ia % na], B[ib % nb], B[(ib + 1) % nb], j);
        ++ib;
      } else {
        add(A[ia % na], B[ib % nb], A[(ia + 1) % na], j);
        ++ia;
      }
    }
  }
  const auto &outer = ring_ids[rings];
  for (std::size_t i = 0; i < outer.size(); ++i)
    tri.boundary_edges.push_back({outer[i], outer[(i + 1) % outer.size()], tag});
  return tri;
}

TriMesh triangulated_rectangle(const BoundingBox &box, int nx, int ny,
                               BoundaryTag tag) {
  if (nx < 1 || ny < 1 || !(box.area() > 0.0))
    throw MeshError("triangulated_rectangle: invalid arguments");
  TriMesh tri;
  auto id = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      tri.vertices.emplace_back(box.lo.x() + box.width() * i / nx,
                                box.lo.y() + box.height() * j / ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      tri.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      tri.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  tri.labels.assign(tri.triangles.size(), 0);
  for (int i = 0; i < nx; ++i) {
    tri.boundary_edges.push_back({id(i, 0), id(i + 1, 0), tag});
    tri.boundary_edges.push_back({id(i, ny), id(i + 1, ny), tag});
  }
  for (int j = 0; j < ny; ++j) {
    tri.boundary_edges.push_back({id(0, j), id(0, j + 1), tag});
    tri.boundary_edges.push_back({id(nx, j), id(nx, j + 1), tag});
  }
  return tri;
}

PolyMesh tri_to_poly(const TriMesh &tri) {
  RawMesh raw;
  raw.vertices = tri.vertices;
  raw.labels = tri.labels;
  raw.boundary_edges = tri.boundary_edges;
  for (const auto &t : tri.triangles)
    raw.polygons.push_back({t[0], t[1], t[2]});
  return build_poly_mesh(raw);
}

} // namespace polyfk
