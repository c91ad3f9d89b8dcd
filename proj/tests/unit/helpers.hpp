#pragma once

#include "polyfk/mesh.hpp"
#include "polyfk/voronoi.hpp"

#include <memory>
#include <random>

namespace polyfk::test {

inline const BoundingBox kUnitBox{Point(0, 0), Point(1, 1)};

/// nx by ny grid of axis-aligned cells on `box`.
inline RawMesh grid_raw(int nx, int ny, const BoundingBox &box = kUnitBox,
                        BoundaryTag tag = BoundaryTag::dirichlet) {
  RawMesh raw;
  const double dx = box.width() / nx, dy = box.height() / ny;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      raw.vertices.emplace_back(box.lo.x() + i * dx, box.lo.y() + j * dy);
  auto id = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      raw.polygons.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
  raw.default_tag = tag;
  return raw;
}

inline std::shared_ptr<const PolyMesh> grid_mesh(int nx, int ny,
                                                 const BoundingBox &box = kUnitBox,
                                                 BoundaryTag tag = BoundaryTag::dirichlet) {
  return std::make_shared<const PolyMesh>(build_poly_mesh(grid_raw(nx, ny, box, tag)));
}

inline std::shared_ptr<const PolyMesh> voronoi_mesh(int n, std::uint64_t seed,
                                                    BoundaryTag tag = BoundaryTag::dirichlet) {
  PolyMesh m = generate_voronoi(n, kUnitBox, seed, 30);
  if (tag != BoundaryTag::dirichlet)
    retag_boundary(m, [tag](const Face &) { return tag; });
  return std::make_shared<const PolyMesh>(std::move(m));
}

inline Eigen::VectorXd random_vector(int n, std::mt19937_64 &rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i)
    v[i] = u(rng);
  return v;
}

} // namespace polyfk::test
