#pragma once

#include "polyfk/geometry.hpp"

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace polyfk {

enum class BoundaryTag { dirichlet, neumann };

std::string_view to_string(BoundaryTag tag);
BoundaryTag parse_boundary_tag(std::string_view text);

class MeshError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A straight mesh facet.
///
/// Interior faces store the two owners with `plus` < `minus`; `endpoints` are
/// ordered as the plus element traverses its counter-clockwise boundary, so
/// `normal` is the outward normal of the plus element (pointing into the minus
/// element). Boundary faces have `minus == -1` and carry a tag.
struct Face {
  std::array<Point, 2> endpoints;
  std::array<int, 2> vertices{-1, -1};
  Point normal{Point::Zero()};
  double length = 0.0;
  int plus = -1;
  int minus = -1;
  std::optional<BoundaryTag> tag;

  bool is_boundary() const { return minus < 0; }
  bool is_interior() const { return minus >= 0; }
  bool is_dirichlet() const { return tag == BoundaryTag::dirichlet; }
  bool is_neumann() const { return tag == BoundaryTag::neumann; }
  Point midpoint() const { return 0.5 * (endpoints[0] + endpoints[1]); }
};

/// Immutable polygonal mesh with face connectivity.
struct PolyMesh {
  std::vector<Point> vertices;
  std::vector<std::vector<int>> elements; // counter-clockwise loops
  std::vector<int> labels;
  std::vector<Face> faces;
  std::vector<std::vector<int>> element_faces;
  std::vector<double> diameter;
  std::vector<double> area;
  std::vector<Point> centroid;
  std::vector<BoundingBox> bbox;

  int num_elements() const { return static_cast<int>(elements.size()); }
  int num_faces() const { return static_cast<int>(faces.size()); }
  std::vector<Point> polygon(int k) const;
  double total_area() const;
  double max_diameter() const;
  int count_faces(bool interior) const;
};

struct BoundaryEdge {
  int v0 = -1;
  int v1 = -1;
  BoundaryTag tag = BoundaryTag::dirichlet;
};

/// Polygon soup input for build_poly_mesh. Coincident vertices (within the
/// edge-matching tolerance) may be duplicated; they are welded.
struct RawMesh {
  std::vector<Point> vertices;
  std::vector<std::vector<int>> polygons;
  std::vector<int> labels;
  std::vector<BoundaryEdge> boundary_edges;
  /// Tag for boundary edges missing from `boundary_edges`. Without it, such
  /// edges are an error.
  std::optional<BoundaryTag> default_tag;
};

/// Relative edge-matching tolerance (scaled by the local element diameter).
inline constexpr double kEdgeMatchTolerance = 1e-9;

PolyMesh build_poly_mesh(const RawMesh &raw);

/// Reassign boundary tags, e.g. to switch some sides of a generated mesh to
/// Neumann.
void retag_boundary(PolyMesh &mesh,
                    const std::function<BoundaryTag(const Face &)> &rule);

struct RatioSummary {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

struct RegularityThresholds {
  double min_shape_ratio = 0.05;
  double min_contact_ratio = 0.0;
};

struct RegularityReport {
  std::vector<double> shape_ratio;   // |K| / h_K^2
  std::vector<double> contact_ratio; // per face: min over owners of |F| / h_K
  RatioSummary shape;
  RatioSummary contact;
  std::vector<int> flagged_elements;
  std::vector<int> flagged_faces;
};

RegularityReport mesh_metrics(const PolyMesh &mesh,
                              const RegularityThresholds &thresholds = {});

/// 2ab/(a+b); requires a, b > 0.
double harmonic_avg(double a, double b);
/// (a+b)/2.
double arithmetic_avg(double a, double b);

} // namespace polyfk
