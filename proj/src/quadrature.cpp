#include "polyfk/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace polyfk {

double QuadRule::measure() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

GaussRule1D gauss_legendre(int n) {
  if (n < 1)
    throw std::invalid_argument("gauss_legendre: need at least one point");
  GaussRule1D r;
  r.nodes.resize(n);
  r.weights.resize(n);
  // Newton iteration on P_n from the Chebyshev-like initial guess.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16)
        break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1)
    r.nodes[n / 2] = 0.0;
  return r;
}

QuadRule triangle_rule(const Triangle &tri, int order) {
  if (order < 1)
    order = 1;
  // The collapse adds one degree in the radial direction.
  const int n = (order + 2) / 2 + ((order + 2) % 2);
  const GaussRule1D g = gauss_legendre(n);
  const Point &a = tri[0];
  const Point e1 = tri[1] - a;
  const Point e2 = tri[2] - a;
  const double jac = std::abs(cross(e1, e2));
  QuadRule q;
  q.points.reserve(n * n);
  q.weights.reserve(n * n);
  for (int i = 0; i < n; ++i) {
    const double u = 0.5 * (g.nodes[i] + 1.0);
    for (int j = 0; j < n; ++j) {
      const double v = 0.5 * (g.nodes[j] + 1.0);
      // (u, v) in the unit square -> (s, t) = (u, v(1 - u)) in the reference triangle.
      const double s = u;
      const double t = v * (1.0 - u);
      q.points.push_back(a + s * e1 + t * e2);
      q.weights.push_back(0.25 * g.weights[i] * g.weights[j] * (1.0 - u) * jac);
    }
  }
  return q;
}

QuadRule polygon_rule(std::span<const Point> polygon, int order) {
  QuadRule q;
  for (const auto &t : triangulate_polygon(polygon)) {
    QuadRule qt = triangle_rule(t, order);
    q.points.insert(q.points.end(), qt.points.begin(), qt.points.end());
    q.weights.insert(q.weights.end(), qt.weights.begin(), qt.weights.end());
  }
  return q;
}

QuadRule element_quadrature(const PolyMesh &mesh, int k, int order) {
  const auto pts = mesh.polygon(k);
  return polygon_rule(pts, order);
}

QuadRule face_quadrature(const Face &face, int order) {
  if (order < 1)
    order = 1;
  const int n = (order + 2) / 2;
  const GaussRule1D g = gauss_legendre(n);
  QuadRule q;
  const Point &a = face.endpoints[0];
  const Point d = face.endpoints[1] - a;
  for (int i = 0; i < n; ++i) {
    q.points.push_back(a + 0.5 * (g.nodes[i] + 1.0) * d);
    q.weights.push_back(0.5 * g.weights[i] * face.length);
  }
  return q;
}

} // namespace polyfk
