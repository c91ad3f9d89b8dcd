#pragma once

#include "polyfk/mesh.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace polyfk {

/// Bounded Voronoi cells of `seeds` clipped to `domain`, in seed order.
///
/// Each cell is the domain clipped by the bisector half-planes of nearby
/// seeds (a bucket grid limits the candidates). Throws MeshError naming the
/// seed when a cell collapses to zero area.
std::vector<std::vector<Point>> voronoi_cells(std::span<const Point> seeds,
                                              const BoundingBox &domain);

/// Seeded, Lloyd-relaxed Voronoi mesh of a rectangle.
///
/// Deterministic for fixed arguments. All boundary faces are Dirichlet; use
/// retag_boundary to change that. Labels are zero.
PolyMesh generate_voronoi(int n, const BoundingBox &domain, std::uint64_t seed,
                          int lloyd_iters = 100);

/// Searches element counts for a Voronoi mesh whose max element diameter is
/// within `rel_tol` of `h_target`. Returns the closest mesh found (check its
/// max_diameter()); `found` reports whether the tolerance was met.
PolyMesh voronoi_for_target_h(double h_target, const BoundingBox &domain,
                              std::uint64_t seed, int lloyd_iters,
                              double rel_tol, bool *found = nullptr);

} // namespace polyfk
