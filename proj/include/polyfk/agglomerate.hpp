#pragma once

#include "polyfk/mesh.hpp"

#include <array>
#include <vector>

namespace polyfk {

/// Labeled triangulation; the input side of agglomeration.
struct TriMesh {
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> triangles; // positively oriented
  std::vector<int> labels;
  std::vector<BoundaryEdge> boundary_edges;

  int num_triangles() const { return static_cast<int>(triangles.size()); }
  double triangle_area(int t) const;
};

/// Result of agglomeration: the polygonal mesh plus the aggregate index of
/// every input triangle.
struct Agglomeration {
  PolyMesh mesh;
  std::vector<int> aggregate_of_triangle;
};

/// Label-segregated agglomeration by area-balanced greedy region growing on
/// the triangle adjacency graph.
///
/// Each edge-connected single-label region receives a share of
/// `target_elements` proportional to its area (at least one). Aggregates are
/// grown breadth-first from spread-out seeds; an aggregate whose union is not
/// a simple polygon is split again. Throws when `target_elements` is smaller
/// than the number of distinct labels.
Agglomeration agglomerate(const TriMesh &tri, int target_elements);

/// Structured triangulation of a disk built from concentric rings.
///
/// Triangles inside `inner_radius` (which must fall on a ring) get
/// `inner_label`, the rest `outer_label`; the outer circle is tagged `tag`.
/// Ring j carries 6j points, so the mesh has 6 rings^2 triangles.
TriMesh triangulated_disk(double radius, int rings, double inner_radius,
                          int inner_label, int outer_label, BoundaryTag tag);

/// Triangulated axis-aligned rectangle (nx by ny cells, each split in two);
/// all boundary edges receive `tag`.
TriMesh triangulated_rectangle(const BoundingBox &box, int nx, int ny,
                               BoundaryTag tag);

/// Convert a triangle mesh to a polygonal mesh without merging.
PolyMesh tri_to_poly(const TriMesh &tri);

} // namespace polyfk
