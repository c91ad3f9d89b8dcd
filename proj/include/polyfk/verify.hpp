#pragma once

#include "polyfk/agglomerate.hpp"
#include "polyfk/dgspace.hpp"
#include "polyfk/forms.hpp"
#include "polyfk/model.hpp"
#include "polyfk/solver.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace polyfk {

using VectorField = std::function<Eigen::Vector2d(const Point &, double)>;

/// An exact concentration with its gradient, used for error evaluation.
struct ExactSolution {
  SpaceTimeField c;
  VectorField grad_c;
};

// --- Manufactured solution -------------------------------------------------

/// c = (cos(pi x) cos(pi y) + 2) e^{-t} on the unit square, D = I, alpha = 0.1,
/// with the matching source and Dirichlet data lambda = log c on the whole
/// boundary.
struct ManufacturedCase {
  double alpha = 0.1;
  ExactSolution exact;
  SpaceTimeField lambda;
  SpaceTimeField forcing;

  ModelData model(const PolyMesh &mesh) const;
};

ManufacturedCase manufactured_case();

// --- Travelling wave ---------------------------------------------------------

struct WaveParams {
  double d = 1e-3;
  double alpha = 1.0;
  double v = 0.1;
  double psi0 = 1.0;
  double chi0 = -1e-2;
  double xi_max = 5.0;
  double max_step = 1e-5;
};

/// Profile of the travelling front c(x, t) = psi(x - v t), from
///   psi' = chi,  chi' = -(v/d) chi + (alpha/d) psi (psi - 1),
/// integrated by classical RK4 from xi = 0. For xi < 0 the profile is
/// continued by its left state psi = psi0.
class WaveProfile {
public:
  explicit WaveProfile(const WaveParams &params);

  const WaveParams &params() const { return params_; }
  double psi(double xi) const;
  double chi(double xi) const;
  double step() const { return h_; }
  /// Grid values (xi_i, psi_i, chi_i).
  const std::vector<double> &grid_psi() const { return psi_; }
  const std::vector<double> &grid_chi() const { return chi_; }

private:
  WaveParams params_;
  double h_ = 0.0;
  std::vector<double> psi_, chi_;
};

/// |psi_h(xi_max) - psi_{h/2}(xi_max)|: halving the RK4 step.
double wave_step_sensitivity(const WaveParams &params);

/// Travelling-wave benchmark on (0, 5) x (0, 1): Dirichlet from the profile on
/// x = 0, homogeneous Neumann elsewhere.
struct WaveCase {
  std::shared_ptr<const WaveProfile> profile;
  ModelData model(const PolyMesh &mesh) const;
  /// c(x, t) = psi(x - v t); shares ownership of the profile.
  ExactSolution exact() const;
  ScalarField initial_c() const;
};

WaveCase wave_case(const WaveParams &params = {});

/// Retag a mesh of the wave rectangle: x = 0 Dirichlet, the rest Neumann.
PolyMesh wave_boundary_tags(PolyMesh mesh);

// --- Errors and studies ------------------------------------------------------

struct ErrorNorms {
  double l2 = 0.0;
  double dg = 0.0;
  double dg_gradient = 0.0; // broken-gradient part alone
};

/// Errors of the discrete concentration (e^lambda_h or c_h) against `exact`
/// at time t. Dirichlet faces use homogeneous jumps of the error.
ErrorNorms error_norms(const DGSpace &space, const ModelData &model,
                       const PenaltyContext &ctx, const State &state,
                       const ExactSolution &exact, double t);

enum class StudyKind { h, p, dt };
std::string to_string(StudyKind k);
StudyKind parse_study_kind(const std::string &s);

struct ConvergenceRow {
  StudyKind kind = StudyKind::h;
  double param = 0.0; // max h_K, p, or dt
  int dofs = 0;
  double err_l2 = 0.0;
  double err_dg = 0.0;
  double rate_l2 = 0.0; // NaN for the first row
  double rate_dg = 0.0;
  double min_c = 0.0; // smallest concentration over all steps
  int steps = 0;
  std::string failure; // non-empty if the run failed
};

/// Rows of a sweep with observed rates between consecutive rows:
/// log(e1/e2)/log(x1/x2) for h and dt, log(e1/e2)/(p2 - p1) for p.
struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  void compute_rates();
  void write_csv(std::ostream &os) const;
};

/// Settings of a Test-case-1 sweep.
struct StudySettings {
  StudyKind kind = StudyKind::h;
  std::vector<int> elements{30, 100, 300, 1000}; // h sweep
  int degree = 2;                                 // h and dt sweeps
  std::vector<int> degrees{1, 2, 3, 4, 5};        // p sweep
  int fixed_elements = 30;                        // p and dt sweeps
  std::vector<double> dts;                        // dt sweep
  double theta = 0.5;
  double dt = 1e-6;
  double T = 2e-5;
  double eta0 = 10.0;
  NewtonOptions newton;
  std::uint64_t seed = 1;
  int lloyd_iters = 100;
  Execution exec = Execution::parallel;
};

ConvergenceTable convergence_study(const StudySettings &s);

/// Least-squares slope and R^2 of y against x.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LinearFit linear_fit(const std::vector<double> &x, const std::vector<double> &y);

// --- Post-processing ---------------------------------------------------------

/// Area-weighted mean concentration on every element.
std::vector<double> element_means(const DGSpace &space, const State &state);

/// Earliest time at which each element's mean concentration exceeds c_crit;
/// nullopt if it never does.
std::vector<std::optional<double>> activation_time(const DGSpace &space,
                                                   const std::vector<State> &states,
                                                   double c_crit = 0.95);

struct RegionMeans {
  double global = 0.0;
  std::map<int, double> by_label;
};
RegionMeans region_means(const DGSpace &space, const State &state);

/// Front speed from activation times: slope of element centroid x against
/// activation time over elements activated after t = 0.
LinearFit front_speed_fit(const PolyMesh &mesh,
                          const std::vector<std::optional<double>> &activation);

// --- Heterogeneous two-label disk -------------------------------------------

struct DiskParams {
  double radius = 25.0;       // mm
  int rings = 18;
  double inner_radius = 12.5; // white-matter core
  int target_elements = 50;
  double alpha_white = 0.9;   // 1/year
  double alpha_grey = 0.45;
  double d_ext = 8.0;         // mm^2/year
  double d_axn_white = 80.0;
  double d_axn_grey = 0.0;
  double seed_radius = 4.0;
  double seed_amplitude = 0.2;
};

inline constexpr int kWhiteLabel = 1;
inline constexpr int kGreyLabel = 0;

struct DiskCase {
  TriMesh triangulation;
  Agglomeration agglomeration;
  std::shared_ptr<const PolyMesh> mesh;
  ModelData model;
  ScalarField initial_c;
};

/// Agglomerated two-label disk with Neumann boundary, radial fibers in the
/// white core and a Gaussian seed at the centre.
DiskCase disk_case(const DiskParams &params = {});

} // namespace polyfk
