#include "polyfk/mesh_io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

namespace polyfk {

namespace {

struct Token {
  std::string text;
  int line;
};

class TokenStream {
public:
  explicit TokenStream(std::istream &in) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto pos = line.find('#'); pos != std::string::npos)
        line.erase(pos);
      std::istringstream ls(line);
      std::string tok;
      while (ls >> tok)
        tokens_.push_back({tok, lineno});
    }
  }

  const Token &next(const char *what) {
    if (pos_ >= tokens_.size())
      throw MeshError(std::string("mesh file: unexpected end of input, expected ") +
                      what);
    return tokens_[pos_++];
  }

  void expect(std::string_view word) {
    const Token &t = next(std::string(word).c_str());
    if (t.text != word)
      throw MeshError("mesh file line " + std::to_string(t.line) + ": expected '" +
                      std::string(word) + "', found '" + t.text + "'");
  }

  long integer(const char *what) {
    const Token &t = next(what);
    long v = 0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || p != t.text.data() + t.text.size())
      throw MeshError("mesh file line " + std::to_string(t.line) + ": expected " +
                      what + ", found '" + t.text + "'");
    return v;
  }

  double real(const char *what) {
    const Token &t = next(what);
    try {
      std::size_t used = 0;
      const double v = std::stod(t.text, &used);
      if (used != t.text.size())
        throw std::invalid_argument(t.text);
      return v;
    } catch (const std::exception &) {
      throw MeshError("mesh file line " + std::to_string(t.line) + ": expected " +
                      what + ", found '" + t.text + "'");
    }
  }

  bool done() const { return pos_ >= tokens_.size(); }

private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

} // namespace

RawMesh read_raw_mesh(std::istream &in) {
  TokenStream ts(in);
  ts.expect("polyfk-mesh");
  ts.expect("v1");
  RawMesh raw;

  ts.expect("vertices");
  const long nv = ts.integer("vertex count");
  if (nv < 3)
    throw MeshError("mesh file: need at least 3 vertices");
  raw.vertices.resize(nv);
  for (long i = 0; i < nv; ++i) {
    const double x = ts.real("x coordinate");
    const double y = ts.real("y coordinate");
    raw.vertices[i] = Point(x, y);
  }

  ts.expect("elements");
  const long ne = ts.integer("element count");
  if (ne < 1)
    throw MeshError("mesh file: need at least one element");
  raw.polygons.resize(ne);
  raw.labels.resize(ne);
  for (long k = 0; k < ne; ++k) {
    const long n = ts.integer("element vertex count");
    if (n < 3)
      throw MeshError("mesh file: element " + std::to_string(k) +
                      " has fewer than 3 vertices");
    for (long i = 0; i < n; ++i) {
      const long v = ts.integer("vertex index");
      if (v < 0 || v >= nv)
        throw MeshError("mesh file: element " + std::to_string(k) +
                        " references vertex " + std::to_string(v) +
                        " out of range");
      raw.polygons[k].push_back(static_cast<int>(v));
    }
    raw.labels[k] = static_cast<int>(ts.integer("element label"));
  }

  ts.expect("boundary");
  const long nb = ts.integer("boundary edge count");
  for (long i = 0; i < nb; ++i) {
    BoundaryEdge e;
    e.v0 = static_cast<int>(ts.integer("boundary vertex"));
    e.v1 = static_cast<int>(ts.integer("boundary vertex"));
    e.tag = parse_boundary_tag(ts.next("boundary tag").text);
    raw.boundary_edges.push_back(e);
  }
  if (!ts.done())
    throw MeshError("mesh file: trailing content after boundary section");
  return raw;
}

RawMesh read_raw_mesh(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw MeshError("cannot open mesh file " + path.string());
  return read_raw_mesh(in);
}

PolyMesh read_mesh(const std::filesystem::path &path) {
  return build_poly_mesh(read_raw_mesh(path));
}

TriMesh to_tri_mesh(const RawMesh &raw) {
  TriMesh tri;
  tri.vertices = raw.vertices;
  tri.labels = raw.labels;
  tri.boundary_edges = raw.boundary_edges;
  for (std::size_t k = 0; k < raw.polygons.size(); ++k) {
    const auto &p = raw.polygons[k];
    if (p.size() != 3)
      throw MeshError("triangle mesh: element " + std::to_string(k) + " has " +
                      std::to_string(p.size()) + " vertices");
    std::array<int, 3> t{p[0], p[1], p[2]};
    const double a = cross(raw.vertices[t[1]] - raw.vertices[t[0]],
                           raw.vertices[t[2]] - raw.vertices[t[0]]);
    if (a == 0.0)
      throw MeshError("triangle mesh: element " + std::to_string(k) +
                      " is degenerate");
    if (a < 0.0)
      std::swap(t[1], t[2]);
    tri.triangles.push_back(t);
  }
  return tri;
}

TriMesh read_tri_mesh(const std::filesystem::path &path) {
  return to_tri_mesh(read_raw_mesh(path));
}

void write_mesh(std::ostream &out, const PolyMesh &mesh) {
  out << "polyfk-mesh v1\n";
  out << std::setprecision(17);
  out << "vertices " << mesh.vertices.size() << "\n";
  for (const auto &v : mesh.vertices)
    out << v.x() << " " << v.y() << "\n";
  out << "elements " << mesh.elements.size() << "\n";
  for (int k = 0; k < mesh.num_elements(); ++k) {
    out << mesh.elements[k].size();
    for (int v : mesh.elements[k])
      out << " " << v;
    out << " " << mesh.labels[k] << "\n";
  }
  out << "boundary " << mesh.count_faces(false) << "\n";
  for (const auto &f : mesh.faces)
    if (f.is_boundary())
      out << f.vertices[0] << " " << f.vertices[1] << " " << to_string(*f.tag)
          << "\n";
}

void write_mesh(const std::filesystem::path &path, const PolyMesh &mesh) {
  std::ofstream out(path);
  if (!out)
    throw MeshError("cannot write mesh file " + path.string());
  write_mesh(out, mesh);
}

void write_tri_mesh(std::ostream &out, const TriMesh &mesh) {
  out << "polyfk-mesh v1\n";
  out << std::setprecision(17);
  out << "vertices " << mesh.vertices.size() << "\n";
  for (const auto &v : mesh.vertices)
    out << v.x() << " " << v.y() << "\n";
  out << "elements " << mesh.triangles.size() << "\n";
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const auto &t = mesh.triangles[k];
    out << "3 " << t[0] << " " << t[1] << " " << t[2] << " " << mesh.labels[k]
        << "\n";
  }
  out << "boundary " << mesh.boundary_edges.size() << "\n";
  for (const auto &e : mesh.boundary_edges)
    out << e.v0 << " " << e.v1 << " " << to_string(e.tag) << "\n";
}

} // namespace polyfk
