#include "helpers.hpp"

#include "polyfk/forms.hpp"
#include "polyfk/solver.hpp"

#include <doctest.h>

#include <cmath>

using namespace polyfk;
using polyfk::test::voronoi_mesh;

namespace {

RunConfig config(double theta, double dt, double T, double eta0 = 1.0) {
  RunConfig c;
  c.theta = theta;
  c.dt = dt;
  c.T = T;
  c.eta0 = eta0;
  return c;
}

} // namespace

TEST_CASE("RunConfig validation") {
  RunConfig c = config(1.5, 0.1, 1.0);
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("theta out of range"), std::invalid_argument);
  c = config(1.0, 0.0, 1.0);
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("dt"), std::invalid_argument);
  c = config(1.0, 0.2, 0.1);
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("zero steps"), std::invalid_argument);
  c = config(1.0, 0.1, 1.0);
  c.newton.relaxation = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = config(1.0, 0.1, 1.0);
  CHECK(c.num_steps() == 10);
  c = config(1.0, 1e-6, 2e-5);
  CHECK(c.num_steps() == 20);
  c = config(1.0, 0.3, 1.0);
  CHECK(c.num_steps() == 4);
  CHECK(parse_scheme("baseline") == Scheme::baseline);
  CHECK(to_string(Scheme::exp_transform) == "exp_transform");
  CHECK_THROWS_AS(parse_scheme("upwind"), std::invalid_argument);

  auto mesh = voronoi_mesh(4, 1);
  const DGSpace space(mesh, 1);
  const ModelData model = isotropic_model(*mesh, 1.0, 0.0);
  const State s = initial_lambda(space, [](const Point &) { return 1.0; });
  CHECK_THROWS_AS(run(space, model, config(1.0, 0.5, 0.1), s), std::invalid_argument);
  // A concentration state fed to the log scheme is rejected.
  CHECK_THROWS_AS(run(space, model, config(1.0, 0.1, 0.1), initial_concentration(space, [](const Point &) { return 1.0; })),
                  std::invalid_argument);
}

TEST_CASE("initial lambda") {
  auto mesh = voronoi_mesh(6, 2);
  const DGSpace space(mesh, 2);
  const State one = initial_lambda(space, [](const Point &) { return 1.0; });
  CHECK(one.dofs.cwiseAbs().maxCoeff() < 1e-14);
  CHECK(one.variable == Variable::log_concentration);
  const State zero = initial_lambda(space, [](const Point &) { return 0.0; });
  for (int k = 0; k < space.num_elements(); ++k)
    CHECK(space.evaluate_at(zero.dofs, k, mesh->centroid[k]) ==
          doctest::Approx(std::log(1e-10)).epsilon(1e-12));
  const State floored = initial_lambda(space, [](const Point &) { return 0.0; }, 1e-4);
  CHECK(space.evaluate_at(floored.dofs, 0, mesh->centroid[0]) == doctest::Approx(std::log(1e-4)));
  CHECK_THROWS_WITH_AS(initial_lambda(space, [](const Point &x) { return x.x() - 0.5; }),
                       doctest::Contains("invalid concentration"), std::domain_error);
  CHECK_THROWS_AS(initial_lambda(space, [](const Point &) { return 1.0; }, 0.0),
                  std::invalid_argument);
}

TEST_CASE("theta step keeps steady states") {
  auto mesh = voronoi_mesh(10, 3, BoundaryTag::neumann);
  const DGSpace space(mesh, 2);
  ModelData model = isotropic_model(*mesh, 1.0, 0.0);
  model.diffusion[2] = axonal_tensor(1.0, 3.0, Point(1, 1));
  model.finalize();
  for (double theta : {0.5, 1.0}) {
    StepSolver solver(space, model, config(theta, 0.1, 1.0));
    const State s0 = initial_lambda(space, [](const Point &) { return 0.4; });
    const auto [s1, st] = solver.step(s0, 0.1);
    CHECK((s1.dofs - s0.dofs).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(st.residual <= 1e-10);
    CHECK(st.newton_iters == 0);
  }
}

TEST_CASE("theta step solves the scalar logistic update") {
  auto mesh = voronoi_mesh(6, 4, BoundaryTag::neumann);
  const DGSpace space(mesh, 1);
  const ModelData model = isotropic_model(*mesh, 1.0, 1.0);
  StepSolver solver(space, model, config(1.0, 0.1, 0.1));
  const double c0 = 0.5, dt = 0.1;
  const State s0 = initial_lambda(space, [&](const Point &) { return c0; });
  const auto [s1, st] = solver.step(s0, dt);
  // Positive root of dt c^2 + (1 - dt) c - c0 = 0.
  const double c1 = (-(1 - dt) + std::sqrt((1 - dt) * (1 - dt) + 4 * dt * c0)) / (2 * dt);
  for (int k = 0; k < space.num_elements(); ++k)
    CHECK(std::exp(space.evaluate_at(s1.dofs, k, mesh->centroid[k])) ==
          doctest::Approx(c1).epsilon(1e-10));
  CHECK(st.residual <= 1e-10);
  CHECK(st.min_c == doctest::Approx(c1).epsilon(1e-9));
  CHECK(st.newton_iters >= 1);
  // Quadratic convergence on this smooth scalar problem.
  const auto &h = st.residual_history;
  REQUIRE(h.size() >= 3);
  CHECK(h[2] <= 10.0 * h[1] * h[1] / h[0]);
}

TEST_CASE("Newton variants reach the same step solution") {
  auto mesh = voronoi_mesh(12, 14);
  const DGSpace space(mesh, 2);
  ModelData model = isotropic_model(*mesh, 0.2, 1.0);
  model.dirichlet = [](const Point &x, double) { return -0.5 * x.x(); };
  const State s0 = initial_lambda(space, [](const Point &x) { return 0.3 + 0.5 * x.y(); });
  RunConfig cfg = config(1.0, 0.05, 0.05, 4.0);
  const auto [ref, rs] = StepSolver(space, model, cfg).step(s0, 0.05);
  cfg.newton.line_search = true;
  const auto [ls, lst] = StepSolver(space, model, cfg).step(s0, 0.05);
  cfg.newton.exact_penalty_jacobian = true;
  const auto [ex, est] = StepSolver(space, model, cfg).step(s0, 0.05);
  CHECK((ls.dofs - ref.dofs).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((ex.dofs - ref.dofs).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(est.residual <= cfg.newton.tol);
  // The exact linearization converges in no more iterations than frozen eta.
  CHECK(est.newton_iters <= rs.newton_iters);
  MESSAGE("Newton iterations: frozen " << rs.newton_iters << ", line search "
                                       << lst.newton_iters << ", exact " << est.newton_iters);
}

TEST_CASE("baseline step keeps steady states") {
  auto mesh = voronoi_mesh(10, 5, BoundaryTag::neumann);
  const DGSpace space(mesh, 2);
  const ModelData model = isotropic_model(*mesh, 1.0, 0.0);
  RunConfig cfg = config(1.0, 0.1, 0.3, 10.0);
  cfg.scheme = Scheme::baseline;
  const State c0 = initial_concentration(space, [](const Point &) { return 0.8; });
  const Trajectory tr = run(space, model, cfg, c0);
  REQUIRE(tr.states.size() == 4);
  CHECK((tr.states.back().dofs - c0.dofs).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::isnan(tr.stats.back().entropy));
}

TEST_CASE("Newton failure carries the residual trace") {
  auto mesh = voronoi_mesh(6, 6, BoundaryTag::neumann);
  const DGSpace space(mesh, 1);
  const ModelData model = isotropic_model(*mesh, 1.0, 1.0);
  RunConfig cfg = config(1.0, 0.5, 0.5);
  cfg.newton.max_iters = 1;
  cfg.newton.tol = 1e-14;
  cfg.newton.accept_stagnation = false;
  StepSolver solver(space, model, cfg);
  const State s0 = initial_lambda(space, [](const Point &) { return 0.1; });
  try {
    solver.step(s0, 0.5);
    FAIL("expected NewtonError");
  } catch (const NewtonError &e) {
    CHECK(e.trace().size() == 2);
    CHECK(std::string(e.what()).find("did not converge") != std::string::npos);
  }
}

TEST_CASE("entropy decays and stays bounded for implicit Euler") {
  // Front-like data with c <= 1, Dirichlet c = 1 on the left, Neumann elsewhere.
  PolyMesh m = generate_voronoi(40, BoundingBox{Point(0, 0), Point(2, 1)}, 3, 30);
  retag_boundary(m, [](const Face &f) {
    return f.midpoint().x() < 1e-12 ? BoundaryTag::dirichlet : BoundaryTag::neumann;
  });
  auto mesh = std::make_shared<const PolyMesh>(std::move(m));
  const DGSpace space(mesh, 1);
  const ModelData model = isotropic_model(*mesh, 0.01, 1.0);
  const State s0 = initial_lambda(space, [](const Point &x) {
    return 0.5 * (1.0 - std::tanh(4.0 * (x.x() - 0.5)));
  });
  RunConfig cfg = config(1.0, 0.05, 1.0);
  cfg.epsilon = 1e-6;
  const double S0 = discrete_entropy(space, s0.dofs);
  const PenaltyContext ctx = make_penalty_context(space, model, cfg.eta0);
  double prev = S0;
  const auto one = [](const Point &) { return 1.0; };
  run(space, model, cfg, s0, [&](const State &s, const StepStats &st) {
    CHECK(st.min_c > 0.0);
    CHECK(st.entropy <= prev + 1e-10 * (1 + std::abs(prev)));
    prev = st.entropy;
    const double n = dg_norm(space, model, ctx, exp_field(space, s.dofs, 0.5), one);
    CHECK(n * n <= 2.0 * S0 / cfg.dt);
  });
  CHECK(prev < S0);
}

TEST_CASE("implicit Euler and Crank-Nicolson agree to first order") {
  auto mesh = voronoi_mesh(20, 7, BoundaryTag::neumann);
  const DGSpace space(mesh, 1);
  const ModelData model = isotropic_model(*mesh, 0.05, 1.0);
  const State s0 = initial_lambda(space, [](const Point &x) {
    return 0.2 + 0.5 * std::exp(-10 * (x - Point(0.5, 0.5)).squaredNorm());
  });
  std::vector<double> gaps;
  for (double dt : {0.1, 0.05, 0.025}) {
    const State a = run(space, model, config(1.0, dt, 0.4), s0).states.back();
    const State b = run(space, model, config(0.5, dt, 0.4), s0).states.back();
    gaps.push_back((a.dofs - b.dofs).norm());
  }
  CHECK(gaps[0] / gaps[1] == doctest::Approx(2.0).epsilon(0.15));
  CHECK(gaps[1] / gaps[2] == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("serial runs are bit-reproducible") {
  auto mesh = voronoi_mesh(30, 8);
  const DGSpace space(mesh, 2);
  ModelData model = isotropic_model(*mesh, 0.1, 1.0);
  model.dirichlet = [](const Point &x, double t) { return -x.x() - t; };
  RunConfig cfg = config(0.5, 0.02, 0.1, 5.0);
  const State s0 = initial_lambda(space, [](const Point &x) { return std::exp(-x.x()); });
  cfg.exec = Execution::serial;
  const Trajectory a = run(space, model, cfg, s0);
  const Trajectory b = run(space, model, cfg, s0);
  cfg.exec = Execution::parallel;
  const Trajectory c = run(space, model, cfg, s0);
  REQUIRE(a.states.size() == 6);
  for (std::size_t i = 0; i < a.states.size(); ++i) {
    CHECK((a.states[i].dofs.array() == b.states[i].dofs.array()).all());
    CHECK((a.states[i].dofs.array() == c.states[i].dofs.array()).all());
  }
  CHECK(a.states.back().time == doctest::Approx(0.1));
}

TEST_CASE("output cadence") {
  auto mesh = voronoi_mesh(5, 9, BoundaryTag::neumann);
  const DGSpace space(mesh, 1);
  const ModelData model = isotropic_model(*mesh, 1.0, 0.5);
  RunConfig cfg = config(1.0, 0.1, 1.0);
  cfg.output_every = 3;
  int seen = 0;
  const Trajectory tr = run(space, model, cfg,
                            initial_lambda(space, [](const Point &) { return 0.3; }),
                            [&](const State &, const StepStats &) { ++seen; });
  CHECK(seen == 10);
  CHECK(tr.stats.size() == 10);
  // initial, steps 3, 6, 9, and the final step 10
  CHECK(tr.states.size() == 5);
  CHECK(tr.states.back().time == doctest::Approx(1.0));
  CHECK(tr.stats.front().step == 1);
}
