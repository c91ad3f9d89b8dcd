#include "polyfk/verify.hpp"

#include "polyfk/voronoi.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace polyfk {

namespace {
constexpr double kPi = std::numbers::pi;
const double kNaN = std::numeric_limits<double>::quiet_NaN();
} // namespace

// --- Manufactured solution -------------------------------------------------

ManufacturedCase manufactured_case() {
  ManufacturedCase mc;
  const double alpha = mc.alpha;
  mc.exact.c = [](const Point &x, double t) {
    return (std::cos(kPi * x.x()) * std::cos(kPi * x.y()) + 2.0) * std::exp(-t);
  };
  mc.exact.grad_c = [](const Point &x, double t) {
    const double e = std::exp(-t);
    return Eigen::Vector2d(-kPi * std::sin(kPi * x.x()) * std::cos(kPi * x.y()) * e,
                           -kPi * std::cos(kPi * x.x()) * std::sin(kPi * x.y()) * e);
  };
  mc.lambda = [](const Point &x, double t) {
    return std::log(std::cos(kPi * x.x()) * std::cos(kPi * x.y()) + 2.0) - t;
  };
  // f = c_t - lap c - alpha c (1 - c), with c_t = -c and
  // lap c = -2 pi^2 cos(pi x) cos(pi y) e^{-t}.
  mc.forcing = [alpha](const Point &x, double t) {
    const double cc = std::cos(kPi * x.x()) * std::cos(kPi * x.y());
    const double e = std::exp(-t);
    const double c = (cc + 2.0) * e;
    return -c + 2.0 * kPi * kPi * cc * e - alpha * c * (1.0 - c);
  };
  return mc;
}

ModelData ManufacturedCase::model(const PolyMesh &mesh) const {
  ModelData m = isotropic_model(mesh, 1.0, alpha);
  m.forcing = forcing;
  m.dirichlet = lambda;
  return m;
}

// --- Travelling wave ---------------------------------------------------------

namespace {

struct WaveRhs {
  double v_over_d, alpha_over_d;
  void operator()(double psi, double chi, double &dpsi, double &dchi) const {
    dpsi = chi;
    dchi = -v_over_d * chi + alpha_over_d * psi * (psi - 1.0);
  }
};

void integrate_wave(const WaveParams &p, double h, long n, std::vector<double> &psi,
                    std::vector<double> &chi) {
  const WaveRhs f{p.v / p.d, p.alpha / p.d};
  psi.resize(n + 1);
  chi.resize(n + 1);
  psi[0] = p.psi0;
  chi[0] = p.chi0;
  for (long i = 0; i < n; ++i) {
    const double y0 = psi[i], z0 = chi[i];
    double k1y, k1z, k2y, k2z, k3y, k3z, k4y, k4z;
    f(y0, z0, k1y, k1z);
    f(y0 + 0.5 * h * k1y, z0 + 0.5 * h * k1z, k2y, k2z);
    f(y0 + 0.5 * h * k2y, z0 + 0.5 * h * k2z, k3y, k3z);
    f(y0 + h * k3y, z0 + h * k3z, k4y, k4z);
    psi[i + 1] = y0 + h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y);
    chi[i + 1] = z0 + h / 6.0 * (k1z + 2 * k2z + 2 * k3z + k4z);
    if (!(psi[i + 1] >= -0.1 && psi[i + 1] <= 1.1))
      throw std::domain_error("wave profile left [-0.1, 1.1] at xi = " +
                              std::to_string((i + 1) * h) +
                              ": parameters do not describe a front");
  }
}

long wave_steps(const WaveParams &p) {
  if (!(p.d > 0.0) || !(p.v > 0.0) || !(p.xi_max > 0.0) || !(p.max_step > 0.0))
    throw std::invalid_argument("WaveParams: d, v, xi_max and max_step must be positive");
  return static_cast<long>(std::ceil(p.xi_max / p.max_step));
}

} // namespace

WaveProfile::WaveProfile(const WaveParams &params) : params_(params) {
  const long n = wave_steps(params);
  h_ = params.xi_max / n;
  integrate_wave(params, h_, n, psi_, chi_);
}

double WaveProfile::psi(double xi) const {
  if (xi <= 0.0)
    return params_.psi0;
  if (xi > params_.xi_max * (1.0 + 1e-14))
    throw std::out_of_range("wave profile evaluated beyond xi_max");
  const long n = static_cast<long>(psi_.size()) - 1;
  const long i = std::min(n - 1, static_cast<long>(xi / h_));
  const double s = (xi - i * h_) / h_;
  // Cubic Hermite with psi' = chi.
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
  return h00 * psi_[i] + h10 * h_ * chi_[i] + h01 * psi_[i + 1] + h11 * h_ * chi_[i + 1];
}

double WaveProfile::chi(double xi) const {
  if (xi < 0.0)
    return 0.0;
  if (xi > params_.xi_max * (1.0 + 1e-14))
    throw std::out_of_range("wave profile evaluated beyond xi_max");
  const long n = static_cast<long>(chi_.size()) - 1;
  const long i = std::min(n - 1, static_cast<long>(xi / h_));
  const double s = (xi - i * h_) / h_;
  const WaveRhs f{params_.v / params_.d, params_.alpha / params_.d};
  double dummy, d0, d1;
  f(psi_[i], chi_[i], dummy, d0);
  f(psi_[i + 1], chi_[i + 1], dummy, d1);
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
  return h00 * chi_[i] + h10 * h_ * d0 + h01 * chi_[i + 1] + h11 * h_ * d1;
}

ExactSolution WaveCase::exact() const {
  auto prof = profile;
  const double v = prof->params().v;
  return {[prof, v](const Point &x, double t) { return prof->psi(x.x() - v * t); },
          [prof, v](const Point &x, double t) {
            return Eigen::Vector2d(prof->chi(x.x() - v * t), 0.0);
          }};
}

double wave_step_sensitivity(const WaveParams &params) {
  const long n = wave_steps(params);
  std::vector<double> p1, c1, p2, c2;
  integrate_wave(params, params.xi_max / n, n, p1, c1);
  integrate_wave(params, params.xi_max / (2 * n), 2 * n, p2, c2);
  return std::abs(p1.back() - p2.back());
}

WaveCase wave_case(const WaveParams &params) {
  return WaveCase{std::make_shared<const WaveProfile>(params)};
}

ModelData WaveCase::model(const PolyMesh &mesh) const {
  const WaveParams &p = profile->params();
  ModelData m = isotropic_model(mesh, p.d, p.alpha);
  auto prof = profile;
  m.dirichlet = [prof](const Point &x, double t) {
    return std::log(prof->psi(x.x() - prof->params().v * t));
  };
  return m;
}

ScalarField WaveCase::initial_c() const {
  auto prof = profile;
  return [prof](const Point &x) { return std::max(0.0, prof->psi(x.x())); };
}

PolyMesh wave_boundary_tags(PolyMesh mesh) {
  const double x0 = [&] {
    double m = std::numeric_limits<double>::infinity();
    for (const Point &v : mesh.vertices)
      m = std::min(m, v.x());
    return m;
  }();
  const double tol = 1e-9 * std::max(1.0, mesh.max_diameter());
  retag_boundary(mesh, [&](const Face &f) {
    const bool left = std::abs(f.endpoints[0].x() - x0) < tol &&
                      std::abs(f.endpoints[1].x() - x0) < tol;
    return left ? BoundaryTag::dirichlet : BoundaryTag::neumann;
  });
  return mesh;
}

// --- Errors and studies ------------------------------------------------------

ErrorNorms error_norms(const DGSpace &space, const ModelData &model,
                       const PenaltyContext &ctx, const State &state,
                       const ExactSolution &exact, double t) {
  const bool log_var = state.variable == Variable::log_concentration;
  const Eigen::VectorXd dofs = state.dofs;
  const ElementField err = [&, dofs](int k, std::span<const Point> pts) {
    FieldValues v = space.evaluate(dofs, k, pts);
    if (log_var) {
      const Eigen::ArrayXd e = v.value.array().exp();
      v.value = e.matrix();
      v.dx = (e * v.dx.array()).matrix();
      v.dy = (e * v.dy.array()).matrix();
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      v.value[i] -= exact.c(pts[i], t);
      const Eigen::Vector2d g = exact.grad_c(pts[i], t);
      v.dx[i] -= g.x();
      v.dy[i] -= g.y();
    }
    return v;
  };
  ErrorNorms out;
  double l2 = 0.0;
  for (int k = 0; k < space.num_elements(); ++k) {
    const QuadRule &q = space.element_rule(k);
    const FieldValues v = err(k, q.points);
    for (std::size_t i = 0; i < q.size(); ++i)
      l2 += q.weights[i] * v.value[i] * v.value[i];
  }
  out.l2 = std::sqrt(l2);
  const DGNormParts parts = dg_norm_parts(space, model, ctx, err);
  out.dg = std::sqrt(parts.total());
  out.dg_gradient = std::sqrt(parts.gradient);
  return out;
}

std::string to_string(StudyKind k) {
  switch (k) {
  case StudyKind::h:
    return "h";
  case StudyKind::p:
    return "p";
  case StudyKind::dt:
    return "dt";
  }
  return "?";
}

StudyKind parse_study_kind(const std::string &s) {
  if (s == "h")
    return StudyKind::h;
  if (s == "p")
    return StudyKind::p;
  if (s == "dt")
    return StudyKind::dt;
  throw std::invalid_argument("unknown study kind '" + s + "' (expected h, p or dt)");
}

void ConvergenceTable::compute_rates() {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ConvergenceRow &r = rows[i];
    r.rate_l2 = r.rate_dg = kNaN;
    if (i == 0 || !r.failure.empty() || !rows[i - 1].failure.empty())
      continue;
    const ConvergenceRow &a = rows[i - 1];
    const double denom = r.kind == StudyKind::p ? r.param - a.param
                                                : std::log(a.param / r.param);
    r.rate_l2 = std::log(a.err_l2 / r.err_l2) / denom;
    r.rate_dg = std::log(a.err_dg / r.err_dg) / denom;
  }
}

void ConvergenceTable::write_csv(std::ostream &os) const {
  os << "kind,param,dofs,err_L2,err_DG,rate_L2,rate_DG\n";
  os << std::setprecision(10);
  for (const ConvergenceRow &r : rows) {
    os << to_string(r.kind) << ',' << r.param << ',' << r.dofs << ',';
    if (!r.failure.empty()) {
      os << "NA,NA,NA,NA\n";
      continue;
    }
    auto num = [&](double v) {
      if (std::isnan(v))
        os << "NA";
      else
        os << v;
    };
    num(r.err_l2);
    os << ',';
    num(r.err_dg);
    os << ',';
    num(r.rate_l2);
    os << ',';
    num(r.rate_dg);
    os << '\n';
  }
}

ConvergenceTable convergence_study(const StudySettings &s) {
  const ManufacturedCase mc = manufactured_case();
  const BoundingBox unit{Point(0, 0), Point(1, 1)};
  struct Point3 {
    int elements, degree;
    double dt;
  };
  std::vector<Point3> sweep;
  switch (s.kind) {
  case StudyKind::h:
    for (int n : s.elements)
      sweep.push_back({n, s.degree, s.dt});
    break;
  case StudyKind::p:
    for (int p : s.degrees)
      sweep.push_back({s.fixed_elements, p, s.dt});
    break;
  case StudyKind::dt:
    for (double dt : s.dts)
      sweep.push_back({s.fixed_elements, s.degree, dt});
    break;
  }
  if (sweep.empty())
    throw std::invalid_argument("convergence_study: empty sweep");

  ConvergenceTable table;
  std::shared_ptr<const PolyMesh> mesh;
  int mesh_n = -1;
  for (const Point3 &pt : sweep) {
    ConvergenceRow row;
    row.kind = s.kind;
    try {
      if (pt.elements != mesh_n) {
        mesh = std::make_shared<const PolyMesh>(
            generate_voronoi(pt.elements, unit, s.seed, s.lloyd_iters));
        mesh_n = pt.elements;
      }
      const DGSpace space(mesh, pt.degree);
      row.param = s.kind == StudyKind::h   ? mesh->max_diameter()
                  : s.kind == StudyKind::p ? pt.degree
                                           : pt.dt;
      row.dofs = space.num_dofs();
      const ModelData model = mc.model(*mesh);
      RunConfig cfg;
      cfg.theta = s.theta;
      cfg.dt = pt.dt;
      cfg.T = s.T;
      cfg.eta0 = s.eta0;
      cfg.newton = s.newton;
      cfg.exec = s.exec;
      cfg.output_every = std::numeric_limits<int>::max();
      const State init = initial_lambda(space, [&](const Point &x) { return mc.exact.c(x, 0.0); });
      row.min_c = min_concentration(space, init);
      const Trajectory traj = run(space, model, cfg, init, [&](const State &, const StepStats &st) {
        row.min_c = std::min(row.min_c, st.min_c);
        ++row.steps;
      });
      const PenaltyContext ctx = make_penalty_context(space, model, cfg.eta0);
      const ErrorNorms e =
          error_norms(space, model, ctx, traj.states.back(), mc.exact, traj.states.back().time);
      row.err_l2 = e.l2;
      row.err_dg = e.dg;
    } catch (const std::exception &ex) {
      row.failure = ex.what();
    }
    table.rows.push_back(row);
  }
  table.compute_rates();
  return table;
}

LinearFit linear_fit(const std::vector<double> &x, const std::vector<double> &y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("linear_fit: need at least two points of equal count");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

// --- Post-processing ---------------------------------------------------------

namespace {

/// Integral of the concentration over element k.
double element_mass(const DGSpace &space, const State &s, int k) {
  const QuadRule &q = space.element_rule(k);
  const FieldValues v = space.evaluate(s.dofs, k, q.points);
  const Eigen::Map<const Eigen::VectorXd> w(q.weights.data(), q.size());
  if (s.variable == Variable::log_concentration)
    return w.dot(v.value.array().exp().matrix());
  return w.dot(v.value);
}

} // namespace

std::vector<double> element_means(const DGSpace &space, const State &state) {
  std::vector<double> out(space.num_elements());
  for (int k = 0; k < space.num_elements(); ++k)
    out[k] = element_mass(space, state, k) / space.mesh().area[k];
  return out;
}

std::vector<std::optional<double>> activation_time(const DGSpace &space,
                                                   const std::vector<State> &states,
                                                   double c_crit) {
  if (states.empty())
    throw std::invalid_argument("activation_time: empty trajectory");
  std::vector<std::optional<double>> out(space.num_elements());
  int remaining = space.num_elements();
  for (const State &s : states) {
    const std::vector<double> m = element_means(space, s);
    for (int k = 0; k < space.num_elements(); ++k)
      if (!out[k] && m[k] > c_crit) {
        out[k] = s.time;
        --remaining;
      }
    if (remaining == 0)
      break;
  }
  return out;
}

RegionMeans region_means(const DGSpace &space, const State &state) {
  const PolyMesh &mesh = space.mesh();
  std::map<int, double> mass, area;
  double total_mass = 0.0, total_area = 0.0;
  for (int k = 0; k < space.num_elements(); ++k) {
    const double m = element_mass(space, state, k);
    mass[mesh.labels[k]] += m;
    area[mesh.labels[k]] += mesh.area[k];
    total_mass += m;
    total_area += mesh.area[k];
  }
  RegionMeans out;
  out.global = total_mass / total_area;
  for (const auto &[label, m] : mass)
    out.by_label[label] = m / area[label];
  return out;
}

LinearFit front_speed_fit(const PolyMesh &mesh,
                          const std::vector<std::optional<double>> &activation) {
  std::vector<double> t, x;
  for (int k = 0; k < mesh.num_elements(); ++k)
    if (activation[k] && *activation[k] > 0.0) {
      t.push_back(*activation[k]);
      x.push_back(mesh.centroid[k].x());
    }
  if (t.size() < 2)
    throw std::runtime_error("front_speed_fit: fewer than two elements activated after t=0");
  return linear_fit(t, x);
}

// --- Heterogeneous two-label disk -------------------------------------------

DiskCase disk_case(const DiskParams &p) {
  DiskCase dc;
  dc.triangulation = triangulated_disk(p.radius, p.rings, p.inner_radius, kWhiteLabel,
                                       kGreyLabel, BoundaryTag::neumann);
  dc.agglomeration = agglomerate(dc.triangulation, p.target_elements);
  dc.mesh = std::make_shared<const PolyMesh>(dc.agglomeration.mesh);
  const PolyMesh &mesh = *dc.mesh;
  ModelData &m = dc.model;
  for (int k = 0; k < mesh.num_elements(); ++k) {
    const bool white = mesh.labels[k] == kWhiteLabel;
    // Radial fibres; the direction is arbitrary for an element at the centre.
    Point dir = mesh.centroid[k];
    if (dir.norm() < 1e-8 * p.radius)
      dir = Point(1, 0);
    m.diffusion.push_back(axonal_tensor(p.d_ext, white ? p.d_axn_white : p.d_axn_grey, dir));
    m.alpha.push_back(white ? p.alpha_white : p.alpha_grey);
  }
  m.finalize();
  const double amp = p.seed_amplitude, r2 = 2.0 * p.seed_radius * p.seed_radius;
  dc.initial_c = [amp, r2](const Point &x) { return amp * std::exp(-x.squaredNorm() / r2); };
  return dc;
}

} // namespace polyfk
