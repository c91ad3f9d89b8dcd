#include "helpers.hpp"

#include "polyfk/config.hpp"
#include "polyfk/mesh_io.hpp"
#include "polyfk/output.hpp"

#include <doctest.h>

#include <filesystem>
#include <sstream>

using namespace polyfk;

namespace {

const std::filesystem::path kConfigs = POLYFK_CONFIG_DIR;

RunSpec parse_text(const std::string &text) {
  std::istringstream in(text);
  return parse_config(in, "test.cfg");
}

const std::string kMinimal = R"(polyfk-config v1
[mesh]
elements = 10
[time]
theta = 1
dt = 0.1
T = 1
[scheme]
eta0 = 2
)";

// Reads the legacy-VTK section following `keyword` (e.g. "SCALARS c_mean").
std::vector<double> vtk_values(const std::string &text, const std::string &keyword, int n) {
  std::istringstream is(text.substr(text.find(keyword)));
  std::string line;
  std::getline(is, line); // SCALARS ...
  std::getline(is, line); // LOOKUP_TABLE
  std::vector<double> v(n);
  for (double &x : v)
    is >> x;
  return v;
}

} // namespace

TEST_CASE("mesh file round trip") {
  PolyMesh m = generate_voronoi(15, test::kUnitBox, 3, 10);
  retag_boundary(m, [](const Face &f) {
    return f.midpoint().y() < 1e-12 ? BoundaryTag::neumann : BoundaryTag::dirichlet;
  });
  std::ostringstream out;
  write_mesh(out, m);
  std::istringstream in(out.str());
  const PolyMesh r = build_poly_mesh(read_raw_mesh(in));
  REQUIRE(r.num_elements() == m.num_elements());
  REQUIRE(r.num_faces() == m.num_faces());
  for (int k = 0; k < m.num_elements(); ++k) {
    CHECK(r.area[k] == doctest::Approx(m.area[k]).epsilon(1e-14));
    CHECK(r.labels[k] == m.labels[k]);
  }
  int neumann = 0;
  for (const Face &f : r.faces)
    neumann += f.is_boundary() && f.is_neumann();
  CHECK(neumann > 0);
}

TEST_CASE("mesh file errors") {
  std::istringstream bad_header("polyfk-mesh v2\n");
  CHECK_THROWS_AS(read_raw_mesh(bad_header), MeshError);
  std::istringstream short_file("polyfk-mesh v1\nvertices 3\n0 0\n1 0\n");
  CHECK_THROWS_AS(read_raw_mesh(short_file), MeshError);
  std::istringstream quad(
      "polyfk-mesh v1\nvertices 4\n0 0\n1 0\n1 1\n0 1\nelements 1\n4 0 1 2 3 0\n"
      "boundary 4\n0 1 dirichlet\n1 2 dirichlet\n2 3 neumann\n3 0 dirichlet\n");
  const RawMesh raw = read_raw_mesh(quad);
  CHECK(raw.polygons.size() == 1);
  CHECK_THROWS_AS(to_tri_mesh(raw), MeshError); // 4-gon in a triangle mesh
  CHECK_THROWS_AS(read_mesh("/nonexistent/mesh.txt"), MeshError);
}

TEST_CASE("VTK output") {
  auto mesh = test::voronoi_mesh(12, 2);
  const DGSpace space(mesh, 2);
  State s;
  s.dofs = Eigen::VectorXd::Zero(space.num_dofs()); // c = 1
  std::ostringstream a;
  write_vtk(a, space, s);
  const std::string text = a.str();
  CHECK(text.rfind("# vtk DataFile Version", 0) == 0);
  CHECK(text.find("POLYGONS 12 ") != std::string::npos);
  CHECK(text.find("CELL_DATA 12") != std::string::npos);
  for (double c : vtk_values(text, "SCALARS c_mean", 12))
    CHECK(c == doctest::Approx(1.0).epsilon(1e-14));
  for (double c : vtk_values(text, "SCALARS c ", static_cast<int>(mesh->vertices.size())))
    CHECK(c == doctest::Approx(1.0).epsilon(1e-14));

  std::vector<std::optional<double>> act(12);
  act[3] = 2.5;
  std::ostringstream b, b2;
  write_vtk(b, space, s, &act);
  write_vtk(b2, space, s, &act);
  CHECK(b.str() == b2.str()); // bit-stable
  const auto t = vtk_values(b.str(), "SCALARS t_activate", 12);
  CHECK(t[3] == 2.5);
  CHECK(t[0] == -1.0);

  CHECK_THROWS(write_vtk(std::filesystem::path("/nonexistent/dir/x.vtk"), space, s));
}

TEST_CASE("CSV outputs") {
  RawMesh raw = test::grid_raw(2, 1);
  raw.labels = {0, 1};
  auto mesh = std::make_shared<const PolyMesh>(build_poly_mesh(raw));
  const DGSpace space(mesh, 1);
  State s;
  s.dofs = space.project([](const Point &) { return std::log(0.5); });
  s.time = 1.5;
  const SeriesRow row = series_row(space, s);
  CHECK(row.t == 1.5);
  CHECK(row.min_c == doctest::Approx(0.5));
  CHECK(row.mean_global == doctest::Approx(0.5));
  CHECK(row.mean_by_label.size() == 2);
  std::ostringstream os;
  write_series_csv(os, {row});
  CHECK(os.str().rfind("t,S_h,min_c,mean_c_global,mean_c_label_0,mean_c_label_1\n", 0) == 0);

  std::ostringstream act;
  write_activation_csv(act, *mesh, {std::optional<double>(0.25), std::nullopt});
  CHECK(act.str() == "element_id,label,t_activate\n0,0,0.25\n1,1,NA\n");
}

TEST_CASE("config parsing") {
  const RunSpec ok = parse_text(kMinimal);
  CHECK(ok.run.theta == 1.0);
  CHECK(ok.run.eta0 == 2.0);
  CHECK(ok.mesh.elements == 10);

  auto with = [](const std::string &from, const std::string &to) {
    std::string t = kMinimal;
    t.replace(t.find(from), from.size(), to);
    return t;
  };
  CHECK_THROWS_WITH_AS(parse_text(with("theta = 1", "theta = 1.5")),
                       doctest::Contains("theta out of range"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_text(with("dt = 0.1", "dt = 0")),
                       doctest::Contains("time.dt"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_text(with("eta0 = 2", "")),
                       doctest::Contains("scheme.eta0"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_text(with("eta0 = 2", "eta0 = 2\nname = upwind")),
                       doctest::Contains("scheme.name"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_text(with("elements = 10", "elements = 10\ncolour = red")),
                       doctest::Contains("mesh.colour"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_text(with("[time]", "[clock]")),
                       doctest::Contains("unknown section"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_text(with("elements = 10", "elements = 10\nelements = 11")),
                       doctest::Contains("duplicate"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_text(with("dt = 0.1", "dt = fast")),
                       doctest::Contains("test.cfg:6"), ConfigError);
  CHECK_THROWS_AS(parse_text("[mesh]\n"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_text(with("eta0 = 2", "eta0 = 2\n[newton]\njacobian = secant")),
                       doctest::Contains("newton.jacobian"), ConfigError);
  const RunSpec exact = parse_text(with("eta0 = 2", "eta0 = 2\n[newton]\njacobian = exact\nline_search = true"));
  CHECK(exact.run.newton.exact_penalty_jacobian);
  CHECK(exact.run.newton.line_search);

  // The normalized echo parses back to the same values.
  const RunSpec again = parse_text(ok.normalized());
  CHECK(again.normalized() == ok.normalized());
}

TEST_CASE("shipped presets") {
  const RunSpec tc1 = parse_config(kConfigs / "tc1.cfg");
  CHECK(tc1.model.preset == "manufactured");
  CHECK(tc1.run.dt == 1e-6);
  CHECK(tc1.run.T == 2e-5);
  CHECK(tc1.run.newton.tol == 1e-10);
  CHECK(tc1.run.theta == 0.5);
  const Problem p = build_problem(tc1);
  CHECK(p.mesh->num_elements() == 100);
  CHECK(p.space->num_dofs() == 600);
  CHECK(p.model.alpha[0] == 0.1);
  CHECK(p.model.D0 == 1.0);
  CHECK(p.exact.has_value());

  const RunSpec disk = parse_config(kConfigs / "disk.cfg");
  CHECK(disk.model.disk.alpha_grey == 0.45);
  CHECK(disk.model.disk.alpha_white == 0.9);
  CHECK(disk.model.disk.d_ext == 8.0);
  CHECK(disk.model.disk.d_axn_white == 80.0);
  CHECK(disk.model.disk.d_axn_grey == 0.0);
  CHECK(disk.run.dt == 0.01);
  CHECK(disk.run.eta0 == 10.0);
  CHECK(disk.run.newton.exact_penalty_jacobian);
  CHECK(disk.mesh.degree == 2);

  const RunSpec wave = parse_config(kConfigs / "wave.cfg");
  CHECK(wave.model.wave.d == 1e-3);
  CHECK(wave.model.wave.chi0 == -1e-2);
  CHECK(wave.run.dt == 1e-2);
  CHECK(wave.run.eta0 == 1.0);
  CHECK(wave.run.newton.tol == 1e-6);
  CHECK(wave.initial.c_min == 1e-300);
}
