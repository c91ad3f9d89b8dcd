// polyfk: command-line front end of the positivity-preserving PolyDG solver.

#include "polyfk/agglomerate.hpp"
#include "polyfk/config.hpp"
#include "polyfk/forms.hpp"
#include "polyfk/mesh_io.hpp"
#include "polyfk/output.hpp"
#include "polyfk/parallel.hpp"
#include "polyfk/solver.hpp"
#include "polyfk/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace polyfk;
using nlohmann::json;

namespace {

void prepare_dir(const fs::path &dir, bool force) {
  if (fs::exists(dir)) {
    if (!force)
      throw std::runtime_error("output directory '" + dir.string() +
                               "' exists; pass --force to overwrite");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

json base_metadata(const RunSpec &spec, const Problem &pb) {
  const PolyMesh &mesh = *pb.mesh;
  json m;
  m["tool"] = "polyfk";
  m["commit"] = git_commit();
  m["host"] = host_name();
  m["utc"] = utc_now();
  m["threads"] = assembly_threads();
  m["mesh"] = {{"elements", mesh.num_elements()},
               {"faces", mesh.num_faces()},
               {"h_max", mesh.max_diameter()},
               {"h_tolerance_met", pb.mesh_tolerance_met},
               {"dofs", pb.space->num_dofs()}};
  m["scheme"] = to_string(spec.run.scheme);
  m["choices"] = {
      {"quadrature_order", "2 p_K + " + std::to_string(spec.quadrature_offset) +
                               " for element and face integrals"},
      {"linf_sampling", "element quadrature points, polygon vertices, face quadrature points"},
      {"eta_trace_factor", "pointwise at face quadrature points"},
      {"jacobian", spec.run.newton.exact_penalty_jacobian
                       ? "exact: derivative of eta with the max selections held fixed"
                       : "eta frozen at the current Newton iterate"},
      {"line_search", spec.run.newton.line_search},
      {"dirichlet_jump", "[[lambda]] = (lambda - g) n, also in the epsilon term"},
      {"baseline_splitting", "implicit alpha c_new, lagged alpha c_new c_old"},
      {"wave_boundary", "Dirichlet from the profile on x = 0, Neumann elsewhere"},
      {"newton_stagnation",
       "iterate accepted when the update is at round-off level relative to lambda"}};
  return m;
}

struct RunOutcome {
  State final_state;
  std::vector<std::optional<double>> activation;
  std::optional<ErrorNorms> errors;
  int stagnated_steps = 0;
};

RunOutcome execute_run(const RunSpec &spec, const Problem &pb, const fs::path &dir,
                       bool force, bool quiet) {
  prepare_dir(dir, force);
  {
    auto os = open_output(dir / "config.cfg");
    os << spec.normalized();
  }
  const DGSpace &space = *pb.space;
  RunConfig cfg = spec.run;
  cfg.output_every = std::numeric_limits<int>::max();

  std::vector<SeriesRow> series{series_row(space, pb.initial)};
  std::vector<std::optional<double>> activation(space.num_elements());
  auto update_activation = [&](const State &s) {
    const std::vector<double> m = element_means(space, s);
    for (int k = 0; k < space.num_elements(); ++k)
      if (!activation[k] && m[k] > spec.output.c_crit)
        activation[k] = s.time;
  };
  update_activation(pb.initial);
  write_vtk(dir / "field_000000.vtk", space, pb.initial);

  const int nsteps = cfg.num_steps();
  const auto t0 = std::chrono::steady_clock::now();
  const Trajectory traj =
      run(space, pb.model, cfg, pb.initial, [&](const State &s, const StepStats &st) {
        update_activation(s);
        if (st.step % spec.output.every == 0 || st.step == nsteps)
          series.push_back(series_row(space, s));
        if (spec.output.vtk_every > 0 && st.step % spec.output.vtk_every == 0 &&
            st.step != nsteps) {
          std::ostringstream name;
          name << "field_" << std::setw(6) << std::setfill('0') << st.step << ".vtk";
          write_vtk(dir / name.str(), space, s);
        }
        if (!quiet && (st.step % std::max(1, nsteps / 10) == 0 || st.step == nsteps))
          std::cout << "step " << st.step << "/" << nsteps << "  t=" << st.time
                    << "  newton=" << st.newton_iters << "  min_c=" << st.min_c << '\n';
      });
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  RunOutcome out;
  out.final_state = traj.states.back();
  out.activation = activation;
  for (const StepStats &s : traj.stats)
    out.stagnated_steps += s.stagnated ? 1 : 0;

  std::ostringstream name;
  name << "field_" << std::setw(6) << std::setfill('0') << nsteps << ".vtk";
  write_vtk(dir / name.str(), space, out.final_state, &activation);
  write_series_csv(dir / "series.csv", series);
  write_step_stats_csv(dir / "steps.csv", traj.stats);
  write_activation_csv(dir / "activation.csv", *pb.mesh, activation);
  {
    auto os = open_output(dir / "final_state.txt");
    os << std::setprecision(17);
    for (Eigen::Index i = 0; i < out.final_state.dofs.size(); ++i)
      os << out.final_state.dofs[i] << '\n';
  }

  json meta = base_metadata(spec, pb);
  meta["steps"] = nsteps;
  meta["wall_seconds"] = wall;
  meta["stagnated_newton_steps"] = out.stagnated_steps;
  double min_c = std::numeric_limits<double>::infinity();
  for (const StepStats &s : traj.stats)
    min_c = std::min(min_c, s.min_c);
  meta["min_c_over_run"] = min_c;
  if (pb.exact) {
    const PenaltyContext ctx = make_penalty_context(space, pb.model, spec.run.eta0);
    out.errors = error_norms(space, pb.model, ctx, out.final_state, *pb.exact,
                             out.final_state.time);
    meta["errors"] = {{"t", out.final_state.time},
                      {"L2", out.errors->l2},
                      {"DG", out.errors->dg}};
  }
  auto os = open_output(dir / "metadata.json");
  os << meta.dump(2) << '\n';
  return out;
}

std::vector<double> parse_list(const std::string &s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty())
      out.push_back(std::stod(item));
  return out;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"polyfk: positivity-preserving polytopal DG solver for the "
               "Fisher-Kolmogorov equation"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Cap on assembly threads (overrides POLYFK_THREADS)")
      ->check(CLI::NonNegativeNumber);

  // run
  auto *run_cmd = app.add_subcommand("run", "Run a configured simulation");
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  bool force = false, quiet = false;
  run_cmd->add_option("--config", config_path, "Config file (polyfk-config v1)")->required();
  run_cmd->add_option("--out", out_dir, "Run directory to create")->required();
  run_cmd->add_option("--seed", seed, "Override the mesh seed");
  run_cmd->add_flag("--force", force, "Overwrite an existing run directory");
  run_cmd->add_flag("--quiet", quiet, "Suppress progress lines");

  // study
  auto *study_cmd = app.add_subcommand("study", "Manufactured-solution convergence study");
  std::string kind = "h", elements_s = "30,100,300,1000", degrees_s = "1,2,3,4,5", dts_s;
  int fixed_elements = 30;
  study_cmd->add_option("--kind", kind, "h, p or dt")
      ->check(CLI::IsMember({"h", "p", "dt"}));
  study_cmd->add_option("--config", config_path,
                        "Config supplying theta, dt, T, eta0, Newton settings, degree, seed")
      ->required();
  study_cmd->add_option("--out", out_dir, "Directory for convergence.csv")->required();
  study_cmd->add_option("--elements", elements_s, "Element counts of the h sweep");
  study_cmd->add_option("--degrees", degrees_s, "Degrees of the p sweep");
  study_cmd->add_option("--dts", dts_s, "Time steps of the dt sweep");
  study_cmd->add_option("--fixed-elements", fixed_elements, "Mesh size for p and dt sweeps");
  study_cmd->add_option("--seed", seed, "Override the mesh seed");
  study_cmd->add_flag("--force", force, "Overwrite an existing directory");

  // wave
  auto *wave_cmd = app.add_subcommand("wave", "Travelling-wave benchmark on (0,5)x(0,1)");
  double h_target = 0.41057, wave_T = 5.0, wave_dt = 1e-2, wave_eta0 = 1.0, wave_tol = 1e-6;
  int wave_p = 1;
  std::string scheme = "exp_transform";
  wave_cmd->add_option("--h-target", h_target, "Target max element diameter");
  wave_cmd->add_option("--p", wave_p, "Polynomial degree")->check(CLI::PositiveNumber);
  wave_cmd->add_option("--T", wave_T, "Final time");
  wave_cmd->add_option("--dt", wave_dt, "Time step");
  wave_cmd->add_option("--eta0", wave_eta0, "Penalty constant");
  wave_cmd->add_option("--tol", wave_tol, "Newton tolerance");
  bool wave_line_search = false;
  double wave_epsilon = 0.0;
  wave_cmd->add_option("--epsilon", wave_epsilon, "Regularization parameter epsilon")
      ->check(CLI::NonNegativeNumber);
  wave_cmd->add_flag("--line-search", wave_line_search, "Backtracking line search in Newton");
  wave_cmd->add_option("--scheme", scheme, "exp_transform or baseline")
      ->check(CLI::IsMember({"exp_transform", "baseline"}));
  wave_cmd->add_option("--seed", seed, "Mesh seed");
  wave_cmd->add_option("--out", out_dir, "Run directory (optional)");
  wave_cmd->add_flag("--force", force, "Overwrite an existing run directory");

  // agglomerate
  auto *agg_cmd = app.add_subcommand("agglomerate",
                                     "Label-segregated agglomeration of a triangle mesh");
  std::string input_mesh, output_mesh;
  int target = 50, rings = 18;
  double radius = 25.0, inner_radius = 12.5;
  agg_cmd->add_option("--input", input_mesh,
                      "Triangle mesh file; default is the synthetic two-label disk");
  agg_cmd->add_option("--target", target, "Target number of aggregates")
      ->check(CLI::PositiveNumber);
  agg_cmd->add_option("--radius", radius, "Disk radius");
  agg_cmd->add_option("--rings", rings, "Disk rings (6 rings^2 triangles)");
  agg_cmd->add_option("--inner-radius", inner_radius, "Radius of the inner label");
  agg_cmd->add_option("--output", output_mesh, "Write the polygonal mesh here");

  // mesh-info
  auto *info_cmd = app.add_subcommand("mesh-info", "Mesh statistics and regularity checks");
  std::string info_mesh;
  info_cmd->add_option("--mesh", info_mesh, "Mesh file");
  info_cmd->add_option("--config", config_path, "Build the mesh of this config instead");
  info_cmd->add_option("--seed", seed, "Override the mesh seed");

  CLI11_PARSE(app, argc, argv);
  if (threads > 0)
    set_assembly_threads(threads);

  try {
    if (*run_cmd) {
      const RunSpec spec = parse_config(fs::path(config_path));
      const Problem pb = build_problem(spec, seed);
      const RunOutcome r = execute_run(spec, pb, out_dir, force, quiet);
      if (r.errors)
        std::cout << std::scientific << std::setprecision(4) << "error at T: L2 "
                  << r.errors->l2 << "  DG " << r.errors->dg << '\n';
      std::cout << "wrote " << out_dir << '\n';
    } else if (*study_cmd) {
      const RunSpec spec = parse_config(fs::path(config_path));
      StudySettings st;
      st.kind = parse_study_kind(kind);
      st.elements.clear();
      for (double e : parse_list(elements_s))
        st.elements.push_back(static_cast<int>(e));
      st.degrees.clear();
      for (double d : parse_list(degrees_s))
        st.degrees.push_back(static_cast<int>(d));
      st.dts = parse_list(dts_s);
      if (st.kind == StudyKind::dt && st.dts.empty())
        throw std::invalid_argument("--dts is required for a dt study");
      st.fixed_elements = fixed_elements;
      st.degree = spec.mesh.degree;
      st.theta = spec.run.theta;
      st.dt = spec.run.dt;
      st.T = spec.run.T;
      st.eta0 = spec.run.eta0;
      st.newton = spec.run.newton;
      st.seed = seed.value_or(spec.mesh.seed);
      st.lloyd_iters = spec.mesh.lloyd_iters;
      prepare_dir(out_dir, force);
      const ConvergenceTable table = convergence_study(st);
      {
        auto os = open_output(fs::path(out_dir) / "config.cfg");
        os << spec.normalized();
      }
      auto os = open_output(fs::path(out_dir) / "convergence.csv");
      table.write_csv(os);
      table.write_csv(std::cout);
      json meta;
      meta["tool"] = "polyfk study";
      meta["kind"] = kind;
      meta["commit"] = git_commit();
      meta["host"] = host_name();
      meta["utc"] = utc_now();
      for (const ConvergenceRow &r : table.rows)
        if (!r.failure.empty())
          meta["failures"].push_back({{"param", r.param}, {"error", r.failure}});
      auto ms = open_output(fs::path(out_dir) / "metadata.json");
      ms << meta.dump(2) << '\n';
    } else if (*wave_cmd) {
      RunSpec spec;
      spec.mesh.kind = "voronoi_h";
      spec.mesh.h_target = h_target;
      spec.mesh.domain = BoundingBox{Point(0, 0), Point(5, 1)};
      spec.mesh.boundary = "wave";
      spec.mesh.degree = wave_p;
      spec.mesh.seed = seed.value_or(1);
      spec.model.preset = "wave";
      spec.model.d = 1e-3;
      spec.model.alpha = 1.0;
      spec.initial.preset = "wave";
      spec.initial.c_min = 1e-300; // the profile is positive; a floor would kink log c
      spec.run.theta = 1.0;
      spec.run.dt = wave_dt;
      spec.run.T = wave_T;
      spec.run.eta0 = wave_eta0;
      spec.run.newton.tol = wave_tol;
      spec.run.newton.line_search = wave_line_search;
      spec.run.epsilon = wave_epsilon;
      spec.run.scheme = parse_scheme(scheme);
      spec.run.validate();
      const Problem pb = build_problem(spec);
      std::cout << "mesh: " << pb.mesh->num_elements() << " elements, h_max "
                << pb.mesh->max_diameter()
                << (pb.mesh_tolerance_met ? "" : " (outside 5% of target)") << '\n';
      const fs::path dir = out_dir.empty() ? fs::temp_directory_path() / "polyfk_wave_run"
                                           : fs::path(out_dir);
      const RunOutcome r = execute_run(spec, pb, dir, force || out_dir.empty(), true);
      std::cout << std::scientific << std::setprecision(4) << "wave p=" << wave_p
                << " T=" << wave_T << " scheme=" << scheme << ": L2 " << r.errors->l2
                << "  DG " << r.errors->dg << '\n';
      if (out_dir.empty())
        fs::remove_all(dir);
    } else if (*agg_cmd) {
      TriMesh tri = input_mesh.empty()
                        ? triangulated_disk(radius, rings, inner_radius, kWhiteLabel,
                                            kGreyLabel, BoundaryTag::neumann)
                        : read_tri_mesh(input_mesh);
      const Agglomeration agg = agglomerate(tri, target);
      double tri_area = 0.0;
      for (int t = 0; t < tri.num_triangles(); ++t)
        tri_area += tri.triangle_area(t);
      std::cout << "triangles " << tri.num_triangles() << " -> aggregates "
                << agg.mesh.num_elements() << "; relative area change "
                << std::abs(agg.mesh.total_area() - tri_area) / tri_area << '\n';
      if (!output_mesh.empty()) {
        write_mesh(fs::path(output_mesh), agg.mesh);
        std::cout << "wrote " << output_mesh << '\n';
      }
    } else if (*info_cmd) {
      PolyMesh mesh;
      if (!info_mesh.empty())
        mesh = read_mesh(info_mesh);
      else if (!config_path.empty())
        mesh = *build_problem(parse_config(fs::path(config_path)), seed).mesh;
      else
        throw std::invalid_argument("mesh-info needs --mesh or --config");
      const RegularityReport rep = mesh_metrics(mesh);
      int nd = 0, nn = 0;
      for (const Face &f : mesh.faces) {
        nd += f.is_dirichlet();
        nn += f.is_neumann();
      }
      std::cout << "elements " << mesh.num_elements() << "\nfaces " << mesh.num_faces()
                << " (interior " << mesh.count_faces(true) << ", dirichlet " << nd
                << ", neumann " << nn << ")\narea " << mesh.total_area() << "\nh_max "
                << mesh.max_diameter() << "\nshape ratio min/mean/max " << rep.shape.min
                << " / " << rep.shape.mean << " / " << rep.shape.max
                << "\ncontact ratio min/mean/max " << rep.contact.min << " / "
                << rep.contact.mean << " / " << rep.contact.max << "\nflagged elements "
                << rep.flagged_elements.size() << ", flagged faces "
                << rep.flagged_faces.size() << '\n';
    }
  } catch (const std::exception &e) {
    std::cerr << "polyfk: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
