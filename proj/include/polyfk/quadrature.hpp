#pragma once

#include "polyfk/mesh.hpp"

#include <vector>

namespace polyfk {

struct QuadRule {
  std::vector<Point> points;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  double measure() const;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point rule, exact for polynomials of degree 2n - 1.
GaussRule1D gauss_legendre(int n);

/// Collapsed (Duffy) Gauss rule on a triangle, exact up to `order`.
QuadRule triangle_rule(const Triangle &tri, int order);

/// Rule on a polygon via its sub-triangulation; exact up to `order`.
QuadRule polygon_rule(std::span<const Point> polygon, int order);

QuadRule element_quadrature(const PolyMesh &mesh, int k, int order);

/// Gauss-Legendre rule on the face segment, exact up to `order`.
/// Points run from endpoints[0] to endpoints[1].
QuadRule face_quadrature(const Face &face, int order);

} // namespace polyfk
