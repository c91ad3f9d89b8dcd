#include "polyfk/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <limits>
#include <sstream>

namespace polyfk {

std::string_view to_string(BoundaryTag tag) {
  return tag == BoundaryTag::dirichlet ? "dirichlet" : "neumann";
}

BoundaryTag parse_boundary_tag(std::string_view text) {
  if (text == "dirichlet")
    return BoundaryTag::dirichlet;
  if (text == "neumann")
    return BoundaryTag::neumann;
  throw MeshError("unknown boundary tag '" + std::string(text) +
                  "' (expected dirichlet|neumann)");
}

std::vector<Point> PolyMesh::polygon(int k) const {
  std::vector<Point> p;
  p.reserve(elements[k].size());
  for (int v : elements[k])
    p.push_back(vertices[v]);
  return p;
}

double PolyMesh::total_area() const {
  return std::accumulate(area.begin(), area.end(), 0.0);
}

double PolyMesh::max_diameter() const {
  return diameter.empty() ? 0.0
                          : *std::max_element(diameter.begin(), diameter.end());
}

int PolyMesh::count_faces(bool interior) const {
  return static_cast<int>(std::count_if(faces.begin(), faces.end(),
                                        [&](const Face &f) {
                                          return f.is_interior() == interior;
                                        }));
}

namespace {

std::string format_point(const Point &p) {
  std::ostringstream os;
  os.precision(12);
  os << "(" << p.x() << ", " << p.y() << ")";
  return os.str();
}

std::string format_edge(const Point &a, const Point &b) {
  return format_point(a) + "-" + format_point(b);
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b)
      parent[std::max(a, b)] = std::min(a, b);
  }
};

using EdgeKey = std::pair<int, int>;

EdgeKey edge_key(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

struct EdgeUse {
  int element;
  int from;
  int to;
};

/// True when segments [a,b] and [c,d] are collinear within tol and overlap
/// over a positive length.
bool collinear_overlap(const Point &a, const Point &b, const Point &c,
                       const Point &d, double tol) {
  const Point t = b - a;
  const double len = t.norm();
  const Point u = t / len;
  const Point nrm(-u.y(), u.x());
  if (std::abs((c - a).dot(nrm)) > tol || std::abs((d - a).dot(nrm)) > tol)
    return false;
  const double s0 = (c - a).dot(u);
  const double s1 = (d - a).dot(u);
  const double lo = std::max(0.0, std::min(s0, s1));
  const double hi = std::min(len, std::max(s0, s1));
  return hi - lo > tol;
}

} // namespace

PolyMesh build_poly_mesh(const RawMesh &raw) {
  const std::size_t npoly = raw.polygons.size();
  if (npoly == 0)
    throw MeshError("build_poly_mesh: no polygons");
  if (!raw.labels.empty() && raw.labels.size() != npoly)
    throw MeshError("build_poly_mesh: label count does not match polygon count");

  const std::size_t nv = raw.vertices.size();
  for (const auto &poly : raw.polygons) {
    if (poly.size() < 3)
      throw MeshError("build_poly_mesh: polygon with fewer than 3 vertices");
    for (int v : poly)
      if (v < 0 || static_cast<std::size_t>(v) >= nv)
        throw MeshError("build_poly_mesh: vertex index out of range");
  }

  // Per-vertex matching tolerance from the smallest incident polygon.
  std::vector<double> vtol(nv, std::numeric_limits<double>::infinity());
  std::vector<char> used(nv, 0);
  for (const auto &poly : raw.polygons) {
    std::vector<Point> pts;
    for (int v : poly)
      pts.push_back(raw.vertices[v]);
    const double h = polygon_diameter(pts);
    for (int v : poly) {
      vtol[v] = std::min(vtol[v], kEdgeMatchTolerance * h);
      used[v] = 1;
    }
  }

  // Weld coincident vertices with a sweep over x.
  UnionFind uf(nv);
  std::vector<int> order;
  for (std::size_t i = 0; i < nv; ++i)
    if (used[i])
      order.push_back(static_cast<int>(i));
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return raw.vertices[a].x() < raw.vertices[b].x() ||
           (raw.vertices[a].x() == raw.vertices[b].x() && a < b);
  });
  double max_tol = 0.0;
  for (int v : order)
    max_tol = std::max(max_tol, vtol[v]);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Point &pi = raw.vertices[order[i]];
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const Point &pj = raw.vertices[order[j]];
      if (pj.x() - pi.x() > max_tol)
        break;
      const double tol = std::max(vtol[order[i]], vtol[order[j]]);
      if ((pj - pi).norm() <= tol)
        uf.unite(order[i], order[j]);
    }
  }

  PolyMesh mesh;
  std::vector<int> new_index(nv, -1);
  for (std::size_t i = 0; i < nv; ++i) {
    if (!used[i])
      continue;
    const int r = uf.find(static_cast<int>(i));
    if (new_index[r] < 0) {
      new_index[r] = static_cast<int>(mesh.vertices.size());
      mesh.vertices.push_back(raw.vertices[r]);
    }
    new_index[i] = new_index[r];
  }

  // Remap polygons, drop welded duplicates, fix orientation.
  mesh.elements.reserve(npoly);
  for (std::size_t k = 0; k < npoly; ++k) {
    std::vector<int> loop;
    for (int v : raw.polygons[k]) {
      const int w = new_index[v];
      if (loop.empty() || loop.back() != w)
        loop.push_back(w);
    }
    while (loop.size() > 1 && loop.front() == loop.back())
      loop.pop_back();
    if (loop.size() < 3)
      throw MeshError("build_poly_mesh: polygon " + std::to_string(k) +
                      " collapses after vertex welding");
    std::vector<Point> pts;
    for (int v : loop)
      pts.push_back(mesh.vertices[v]);
    const double a = signed_area(pts);
    if (a == 0.0)
      throw MeshError("build_poly_mesh: polygon " + std::to_string(k) +
                      " has zero area");
    if (a < 0.0) {
      std::reverse(loop.begin(), loop.end());
      std::reverse(pts.begin(), pts.end());
    }
    if (!is_simple_polygon(pts))
      throw MeshError("build_poly_mesh: polygon " + std::to_string(k) +
                      " is not simple");
    mesh.elements.push_back(std::move(loop));
  }
  mesh.labels = raw.labels.empty() ? std::vector<int>(npoly, 0) : raw.labels;

  const int ne = mesh.num_elements();
  mesh.diameter.resize(ne);
  mesh.area.resize(ne);
  mesh.centroid.resize(ne);
  mesh.bbox.resize(ne);
  for (int k = 0; k < ne; ++k) {
    const auto pts = mesh.polygon(k);
    mesh.area[k] = signed_area(pts);
    mesh.diameter[k] = polygon_diameter(pts);
    mesh.centroid[k] = polygon_centroid(pts);
    mesh.bbox[k] = bounding_box(pts);
  }

  std::map<EdgeKey, std::vector<EdgeUse>> uses;
  for (int k = 0; k < ne; ++k) {
    const auto &loop = mesh.elements[k];
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const int a = loop[i];
      const int b = loop[(i + 1) % loop.size()];
      uses[edge_key(a, b)].push_back({k, a, b});
    }
  }

  std::map<EdgeKey, BoundaryTag> tags;
  for (const auto &be : raw.boundary_edges) {
    if (be.v0 < 0 || be.v1 < 0 || static_cast<std::size_t>(be.v0) >= nv ||
        static_cast<std::size_t>(be.v1) >= nv)
      throw MeshError("build_poly_mesh: boundary edge index out of range");
    tags[edge_key(new_index[be.v0], new_index[be.v1])] = be.tag;
  }

  // Faces in element-major order.
  std::map<EdgeKey, int> face_of;
  std::vector<int> open_faces;
  mesh.element_faces.assign(ne, {});
  for (int k = 0; k < ne; ++k) {
    const auto &loop = mesh.elements[k];
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const EdgeKey key = edge_key(loop[i], loop[(i + 1) % loop.size()]);
      if (face_of.count(key))
        continue;
      const auto &u = uses.at(key);
      Face f;
      if (u.size() > 2) {
        throw MeshError("build_poly_mesh: edge " +
                        format_edge(mesh.vertices[key.first],
                                    mesh.vertices[key.second]) +
                        " is shared by more than two elements");
      }
      if (u.size() == 2) {
        if (u[0].from != u[1].to || u[0].to != u[1].from)
          throw MeshError("build_poly_mesh: inconsistent orientation at edge " +
                          format_edge(mesh.vertices[key.first],
                                      mesh.vertices[key.second]));
        if (u[0].element == u[1].element)
          throw MeshError("build_poly_mesh: element " +
                          std::to_string(u[0].element) +
                          " touches itself along an edge");
        const EdgeUse &p = u[0].element < u[1].element ? u[0] : u[1];
        const EdgeUse &m = u[0].element < u[1].element ? u[1] : u[0];
        f.plus = p.element;
        f.minus = m.element;
        f.vertices = {p.from, p.to};
      } else {
        f.plus = u[0].element;
        f.vertices = {u[0].from, u[0].to};
      }
      f.endpoints = {mesh.vertices[f.vertices[0]], mesh.vertices[f.vertices[1]]};
      const Point t = f.endpoints[1] - f.endpoints[0];
      f.length = t.norm();
      f.normal = Point(t.y(), -t.x()) / f.length;
      const int id = mesh.num_faces();
      face_of[key] = id;
      if (f.is_boundary())
        open_faces.push_back(id);
      mesh.faces.push_back(f);
    }
  }
  for (int k = 0; k < ne; ++k) {
    const auto &loop = mesh.elements[k];
    for (std::size_t i = 0; i < loop.size(); ++i)
      mesh.element_faces[k].push_back(
          face_of.at(edge_key(loop[i], loop[(i + 1) % loop.size()])));
  }

  // Unmatched edges that overlap another unmatched edge are hanging nodes or
  // partially shared edges.
  std::sort(open_faces.begin(), open_faces.end(), [&](int a, int b) {
    const auto &fa = mesh.faces[a];
    const auto &fb = mesh.faces[b];
    return std::min(fa.endpoints[0].x(), fa.endpoints[1].x()) <
           std::min(fb.endpoints[0].x(), fb.endpoints[1].x());
  });
  for (std::size_t i = 0; i < open_faces.size(); ++i) {
    const Face &fi = mesh.faces[open_faces[i]];
    const double xi_max = std::max(fi.endpoints[0].x(), fi.endpoints[1].x());
    const double tol = kEdgeMatchTolerance * mesh.diameter[fi.plus];
    for (std::size_t j = i + 1; j < open_faces.size(); ++j) {
      const Face &fj = mesh.faces[open_faces[j]];
      if (std::min(fj.endpoints[0].x(), fj.endpoints[1].x()) > xi_max + tol)
        break;
      const double tij = std::max(tol, kEdgeMatchTolerance *
                                           mesh.diameter[fj.plus]);
      if (collinear_overlap(fi.endpoints[0], fi.endpoints[1], fj.endpoints[0],
                            fj.endpoints[1], tij))
        throw MeshError(
            "build_poly_mesh: non-matching interface between elements " +
            std::to_string(fi.plus) + " and " + std::to_string(fj.plus) +
            " at edge " + format_edge(fi.endpoints[0], fi.endpoints[1]));
    }
  }

  for (auto &f : mesh.faces) {
    const EdgeKey key = edge_key(f.vertices[0], f.vertices[1]);
    auto it = tags.find(key);
    if (f.is_interior()) {
      if (it != tags.end())
        throw MeshError("build_poly_mesh: boundary tag given for interior edge " +
                        format_edge(f.endpoints[0], f.endpoints[1]));
      continue;
    }
    if (it != tags.end())
      f.tag = it->second;
    else if (raw.default_tag)
      f.tag = *raw.default_tag;
    else
      throw MeshError("build_poly_mesh: untagged boundary edge " +
                      format_edge(f.endpoints[0], f.endpoints[1]));
  }
  return mesh;
}

void retag_boundary(PolyMesh &mesh,
                    const std::function<BoundaryTag(const Face &)> &rule) {
  for (auto &f : mesh.faces)
    if (f.is_boundary())
      f.tag = rule(f);
}

namespace {

RatioSummary summarize(const std::vector<double> &v) {
  RatioSummary s;
  if (v.empty())
    return s;
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  return s;
}

} // namespace

RegularityReport mesh_metrics(const PolyMesh &mesh,
                              const RegularityThresholds &thresholds) {
  RegularityReport r;
  r.shape_ratio.resize(mesh.num_elements());
  for (int k = 0; k < mesh.num_elements(); ++k) {
    r.shape_ratio[k] = mesh.area[k] / (mesh.diameter[k] * mesh.diameter[k]);
    if (r.shape_ratio[k] < thresholds.min_shape_ratio)
      r.flagged_elements.push_back(k);
  }
  r.contact_ratio.resize(mesh.num_faces());
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face &face = mesh.faces[f];
    double ratio = face.length / mesh.diameter[face.plus];
    if (face.is_interior())
      ratio = std::min(ratio, face.length / mesh.diameter[face.minus]);
    r.contact_ratio[f] = ratio;
    if (ratio < thresholds.min_contact_ratio)
      r.flagged_faces.push_back(f);
  }
  r.shape = summarize(r.shape_ratio);
  r.contact = summarize(r.contact_ratio);
  return r;
}

double harmonic_avg(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::invalid_argument("harmonic_avg: arguments must be positive");
  return 2.0 * a * b / (a + b);
}

double arithmetic_avg(double a, double b) { return 0.5 * (a + b); }

} // namespace polyfk
