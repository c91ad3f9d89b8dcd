#pragma once

// Run configuration files.
//
//   polyfk-config v1
//   # comment
//   [section]
//   key = value
//
// Sections and keys:
//   [mesh]    kind (voronoi | voronoi_h | disk | file), elements, h_target,
//             h_tolerance, domain (x0 y0 x1 y1), seed, lloyd_iters,
//             boundary (dirichlet | neumann | wave | file), file, degree,
//             radius, rings, inner_radius, target_elements
//   [model]   preset (manufactured | wave | disk | uniform), d, alpha, v,
//             psi0, chi0, alpha_white, alpha_grey, d_ext, d_axn_white, d_axn_grey
//   [time]    theta, dt, T                         (all mandatory)
//   [newton]  tol, max_iters, relaxation, divergence_bound,
//             jacobian (frozen_eta | exact), line_search (true | false)
//   [scheme]  name (exp_transform | baseline), eta0 (mandatory), epsilon,
//             quadrature_offset
//   [output]  every, vtk_every, c_crit
//   [initial] preset (manufactured | wave | seeded_region | constant | file),
//             c_min, center_x, center_y, radius, amplitude, value, file
//
// Unknown sections or keys are errors; messages name the key path
// ("time.theta").

#include "polyfk/dgspace.hpp"
#include "polyfk/model.hpp"
#include "polyfk/solver.hpp"
#include "polyfk/verify.hpp"

#include <cstdint>
#include <filesystem>
#include <istream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

namespace polyfk {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct MeshSpec {
  std::string kind = "voronoi";
  int elements = 100;
  double h_target = 0.0;
  double h_tolerance = 0.05;
  BoundingBox domain{Point(0, 0), Point(1, 1)};
  std::uint64_t seed = 1;
  int lloyd_iters = 100;
  std::string boundary = "dirichlet";
  std::string file;
  int degree = 1;
  double radius = 25.0;
  int rings = 18;
  double inner_radius = 12.5;
  int target_elements = 50;
};

struct ModelSpec {
  std::string preset = "uniform";
  double d = 1.0;
  double alpha = 0.0;
  WaveParams wave;
  DiskParams disk;
};

struct InitialSpec {
  std::string preset = "constant";
  double c_min = 1e-10;
  double center_x = 0.0;
  double center_y = 0.0;
  double radius = 1.0;
  double amplitude = 1.0;
  double value = 1.0;
  std::string file;
};

struct OutputSpec {
  int every = 1;     // series rows every n steps
  int vtk_every = 0; // VTK snapshot cadence in steps; 0 = initial and final only
  double c_crit = 0.95;
};

struct RunSpec {
  MeshSpec mesh;
  ModelSpec model;
  RunConfig run;
  InitialSpec initial;
  OutputSpec output;
  int quadrature_offset = 4;

  /// Canonical config text with every value resolved (provenance echo).
  std::string normalized() const;
};

RunSpec parse_config(std::istream &in, const std::string &source = "<config>");
RunSpec parse_config(const std::filesystem::path &path);

/// A problem ready to run.
struct Problem {
  std::shared_ptr<const PolyMesh> mesh;
  std::shared_ptr<const DGSpace> space;
  ModelData model;
  State initial;
  std::optional<ExactSolution> exact;
  bool mesh_tolerance_met = true; // for mesh.kind = voronoi_h
};

/// Build mesh, space, model and initial state. `seed_override`, if set,
/// replaces mesh.seed.
Problem build_problem(const RunSpec &spec,
                      std::optional<std::uint64_t> seed_override = std::nullopt);

} // namespace polyfk
