#include "helpers.hpp"

#include "polyfk/assembly.hpp"
#include "polyfk/parallel.hpp"

#include <doctest.h>

#include <Eigen/SparseLU>

#include <cmath>
#include <random>
#include <set>

using namespace polyfk;
using polyfk::test::voronoi_mesh;

namespace {

// Anisotropic, heterogeneous data with time-dependent source and boundary
// datum, so every term of the residual is exercised.
ModelData rich_model(const PolyMesh &mesh) {
  ModelData m;
  for (int k = 0; k < mesh.num_elements(); ++k) {
    const Point c = mesh.centroid[k];
    m.diffusion.push_back(axonal_tensor(0.2 + c.x(), 0.5 * c.y(), Point(1.0, c.x() - 0.3)));
    m.alpha.push_back(0.5 + c.y());
  }
  m.forcing = [](const Point &x, double t) { return std::sin(x.x() + t) + x.y(); };
  m.dirichlet = [](const Point &x, double t) { return 0.3 * x.x() - 0.2 * t; };
  m.finalize();
  return m;
}

Eigen::VectorXd smooth_state(const DGSpace &space, double shift, std::mt19937_64 &rng) {
  Eigen::VectorXd v = space.project([shift](const Point &x) {
    return shift + 0.4 * std::cos(2 * x.x()) - 0.3 * x.y();
  });
  return v + 0.05 * test::random_vector(space.num_dofs(), rng);
}

double max_abs(const SparseMatrix &m) {
  double r = 0.0;
  for (int c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(m, c); it; ++it)
      r = std::max(r, std::abs(it.value()));
  return r;
}

bool same_bits(const SparseMatrix &a, const SparseMatrix &b) {
  if (a.nonZeros() != b.nonZeros() || a.rows() != b.rows() || a.cols() != b.cols())
    return false;
  for (int i = 0; i < a.nonZeros(); ++i)
    if (a.valuePtr()[i] != b.valuePtr()[i] || a.innerIndexPtr()[i] != b.innerIndexPtr()[i])
      return false;
  for (int i = 0; i <= a.outerSize(); ++i)
    if (a.outerIndexPtr()[i] != b.outerIndexPtr()[i])
      return false;
  return true;
}

} // namespace

TEST_CASE("residual vanishes on steady constant states") {
  auto mesh = voronoi_mesh(12, 2, BoundaryTag::neumann);
  const DGSpace space(mesh, 2);
  ModelData model = rich_model(*mesh);
  model.alpha.assign(mesh->num_elements(), 0.0);
  model.forcing = nullptr;
  const PenaltyContext ctx = make_penalty_context(space, model, 3.0);
  const FisherOperator op(space, model, ctx);
  const Eigen::VectorXd lo = space.project([](const Point &) { return -0.7; });
  for (double theta : {0.0, 0.5, 1.0}) {
    const auto step = op.begin_step(lo, 0.0, 0.1, {theta, 0.1, 0.0});
    CHECK(op.residual(step, lo).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::VectorXd l1 = space.project([](const Point &) { return -0.6; });
    CHECK(op.residual(step, l1).norm() > 1e-3);
  }
}

TEST_CASE("residual of constant states matches the scalar logistic step") {
  auto mesh = voronoi_mesh(8, 3, BoundaryTag::neumann);
  const DGSpace space(mesh, 1);
  const double alpha = 1.3, dt = 0.1, c0 = 0.5;
  const ModelData model = isotropic_model(*mesh, 1.0, alpha);
  const PenaltyContext ctx = make_penalty_context(space, model, 1.0);
  const FisherOperator op(space, model, ctx);
  // (c1 - c0)/dt = alpha c1 (1 - c1)  <=>  alpha dt c1^2 + (1 - alpha dt) c1 - c0 = 0.
  const double a = alpha * dt, b = 1.0 - alpha * dt;
  const double c1 = (-b + std::sqrt(b * b + 4 * a * c0)) / (2 * a);
  const Eigen::VectorXd lo = space.project([&](const Point &) { return std::log(c0); });
  const Eigen::VectorXd l1 = space.project([&](const Point &) { return std::log(c1); });
  const auto step = op.begin_step(lo, 0.0, dt, {1.0, dt, 0.0});
  CHECK(op.residual(step, l1).cwiseAbs().maxCoeff() < 1e-13);
  const Eigen::VectorXd off = space.project([&](const Point &) { return std::log(c1 * 1.01); });
  CHECK(op.residual(step, off).cwiseAbs().maxCoeff() > 1e-4);
}

TEST_CASE("epsilon regularization terms") {
  auto mesh = voronoi_mesh(10, 5);
  const DGSpace space(mesh, 2);
  ModelData model = rich_model(*mesh);
  model.dirichlet = nullptr; // g = 0, so [[l - g]] = [[l]]
  const PenaltyContext ctx = make_penalty_context(space, model, 2.0);
  const FisherOperator op(space, model, ctx);
  std::mt19937_64 rng(4);
  const Eigen::VectorXd lo = smooth_state(space, -0.2, rng);
  const Eigen::VectorXd l = smooth_state(space, 0.1, rng);
  const double dt = 0.05, eps = 1e-3;
  const auto s0 = op.begin_step(lo, 0.0, dt, {0.5, dt, 0.0});
  const auto s1 = op.begin_step(lo, 0.0, dt, {0.5, dt, eps});
  const Eigen::VectorXd diff = op.residual(s1, l) - op.residual(s0, l);
  const RegularizationMatrices reg = regularization_matrices(space, model, ctx);
  const Eigen::VectorXd expected = eps / dt * (reg.mass * l + reg.stiffness * l + reg.jump * l);
  CHECK((diff - expected).cwiseAbs().maxCoeff() < 1e-11 * (1 + expected.cwiseAbs().maxCoeff()));

  const SparseMatrix m = reg.mass, st = reg.stiffness, j = reg.jump;
  CHECK(max_abs(SparseMatrix(m - SparseMatrix(m.transpose()))) < 1e-14);
  CHECK(max_abs(SparseMatrix(st - SparseMatrix(st.transpose()))) < 1e-12);
  CHECK(max_abs(SparseMatrix(j - SparseMatrix(j.transpose()))) < 1e-10);

  // The Jacobian difference is the same matrix combination.
  const SparseMatrix dj = SparseMatrix(op.linearize(s1, l).matrix - op.linearize(s0, l).matrix);
  const SparseMatrix ej = SparseMatrix((eps / dt) * (m + st + j));
  CHECK(max_abs(SparseMatrix(dj - ej)) < 1e-10 * (1 + max_abs(ej)));
}

TEST_CASE("frozen-eta Jacobian against central differences") {
  auto mesh = voronoi_mesh(10, 12);
  std::mt19937_64 rng(6);
  for (int p : {1, 2})
    for (double theta : {0.5, 1.0})
      for (double eps : {0.0, 1e-3}) {
        CAPTURE(p);
        CAPTURE(theta);
        CAPTURE(eps);
        const DGSpace space(mesh, p);
        const ModelData model = rich_model(*mesh);
        const PenaltyContext ctx = make_penalty_context(space, model, 4.0);
        const FisherOperator op(space, model, ctx);
        const Eigen::VectorXd lo = smooth_state(space, -0.5, rng);
        const Eigen::VectorXd l = smooth_state(space, -0.3, rng);
        const auto step = op.begin_step(lo, 0.2, 0.25, {theta, 0.05, eps});
        const PenaltyField eta = penalty_eta(space, ctx, l);
        const Eigen::MatrixXd jac = Eigen::MatrixXd(op.linearize(step, l).matrix);
        Eigen::MatrixXd fd(jac.rows(), jac.cols());
        for (int j = 0; j < l.size(); ++j) {
          const double h = 1e-6 * (1.0 + std::abs(l[j]));
          Eigen::VectorXd lp = l, lm = l;
          lp[j] += h;
          lm[j] -= h;
          fd.col(j) = (op.residual(step, lp, &eta) - op.residual(step, lm, &eta)) / (2 * h);
        }
        const double rel = (fd - jac).cwiseAbs().maxCoeff() / jac.cwiseAbs().maxCoeff();
        CHECK(rel < 1e-6);
        // The linearization's residual equals the plain residual.
        CHECK((op.linearize(step, l).residual - op.residual(step, l)).cwiseAbs().maxCoeff() == 0.0);
      }
}

TEST_CASE("exact-eta Jacobian against central differences of the true residual") {
  // Away from switches of the max selections, eta(lambda) is smooth and the
  // exact linearization matches finite differences with eta re-evaluated.
  auto mesh = voronoi_mesh(10, 13);
  std::mt19937_64 rng(7);
  for (int p : {1, 2})
    for (double theta : {0.5, 1.0}) {
      CAPTURE(p);
      CAPTURE(theta);
      const DGSpace space(mesh, p);
      const ModelData model = rich_model(*mesh);
      const PenaltyContext ctx = make_penalty_context(space, model, 4.0);
      const FisherOperator op(space, model, ctx);
      const Eigen::VectorXd lo = smooth_state(space, -0.5, rng);
      const Eigen::VectorXd l = smooth_state(space, -0.3, rng);
      const auto step = op.begin_step(lo, 0.2, 0.25, {theta, 0.05, 1e-3});
      const LinearSystem sys = op.linearize_exact(step, l);
      const Eigen::MatrixXd jac = Eigen::MatrixXd(sys.matrix);
      Eigen::MatrixXd fd(jac.rows(), jac.cols());
      for (int j = 0; j < l.size(); ++j) {
        const double h = 1e-7;
        Eigen::VectorXd lp = l, lm = l;
        lp[j] += h;
        lm[j] -= h;
        fd.col(j) = (op.residual(step, lp) - op.residual(step, lm)) / (2 * h);
      }
      CHECK((fd - jac).cwiseAbs().maxCoeff() / jac.cwiseAbs().maxCoeff() < 1e-6);
      CHECK((sys.residual - op.residual(step, l)).cwiseAbs().maxCoeff() == 0.0);
      // Same sparsity as the frozen linearization.
      CHECK(sys.matrix.nonZeros() == op.linearize(step, l).matrix.nonZeros());
    }
}

TEST_CASE("diffusion-free Jacobian is the weighted mass matrix") {
  auto mesh = voronoi_mesh(9, 7);
  const DGSpace space(mesh, 2);
  ModelData model;
  model.diffusion.assign(mesh->num_elements(), Tensor2::Zero());
  model.alpha.assign(mesh->num_elements(), 0.0);
  PenaltyContext ctx;
  ctx.eta0 = 1.0;
  ctx.zeta.assign(mesh->num_faces(), 0.0);
  const FisherOperator op(space, model, ctx);
  std::mt19937_64 rng(7);
  const Eigen::VectorXd lo = smooth_state(space, 0.0, rng);
  const Eigen::VectorXd l = smooth_state(space, 0.2, rng);
  const double dt = 0.01;
  for (double theta : {0.5, 1.0}) {
    const auto step = op.begin_step(lo, 0.0, dt, {theta, dt, 0.0});
    const Eigen::MatrixXd jac = Eigen::MatrixXd(op.linearize(step, l).matrix);
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(jac.rows(), jac.cols());
    for (int k = 0; k < space.num_elements(); ++k) {
      const QuadRule &q = space.element_rule(k);
      const BasisValues b = space.eval_basis(k, q.points);
      const FieldValues v = space.evaluate(l, k, q.points);
      Eigen::VectorXd w(q.size());
      for (std::size_t i = 0; i < q.size(); ++i)
        w[i] = q.weights[i] * std::exp(v.value[i]) / dt;
      expected.block(space.offset(k), space.offset(k), space.local_dim(k), space.local_dim(k)) =
          b.value.transpose() * w.asDiagonal() * b.value;
    }
    CHECK((jac - expected).cwiseAbs().maxCoeff() < 1e-12 * expected.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("block sparsity follows the face graph") {
  auto mesh = voronoi_mesh(25, 9);
  const DGSpace space(mesh, 2);
  const ModelData model = rich_model(*mesh);
  const PenaltyContext ctx = make_penalty_context(space, model, 2.0);
  const FisherOperator op(space, model, ctx);
  std::mt19937_64 rng(8);
  const Eigen::VectorXd l = smooth_state(space, 0.0, rng);
  const auto step = op.begin_step(l, 0.0, 0.1, {0.5, 0.1, 0.0});
  const SparseMatrix j = op.linearize(step, l).matrix;

  std::set<std::pair<int, int>> allowed;
  for (int k = 0; k < mesh->num_elements(); ++k)
    allowed.insert({k, k});
  for (const Face &f : mesh->faces)
    if (f.is_interior()) {
      allowed.insert({f.plus, f.minus});
      allowed.insert({f.minus, f.plus});
    }
  std::vector<int> owner(space.num_dofs());
  for (int k = 0; k < space.num_elements(); ++k)
    for (int i = 0; i < space.local_dim(k); ++i)
      owner[space.offset(k) + i] = k;
  std::set<std::pair<int, int>> seen;
  for (int c = 0; c < j.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(j, c); it; ++it)
      if (it.value() != 0.0) {
        const std::pair<int, int> blk{owner[it.row()], owner[it.col()]};
        CHECK(allowed.count(blk) == 1);
        seen.insert(blk);
      }
  CHECK(seen == allowed); // the stencil is also fully used
  // Symmetric pattern.
  CHECK(j.nonZeros() == op.pattern().zero_matrix().nonZeros());

  SparseMatrix z = op.pattern().zero_matrix();
  int far = -1;
  for (int k = 1; k < mesh->num_elements(); ++k)
    if (!allowed.count({0, k})) {
      far = k;
      break;
    }
  REQUIRE(far > 0);
  CHECK_THROWS_AS(op.pattern().add_block(z, 0, far, Eigen::MatrixXd::Ones(6, 6)), std::logic_error);
}

TEST_CASE("optimized assembly agrees with the reference implementation") {
  auto mesh = voronoi_mesh(14, 10);
  std::mt19937_64 rng(9);
  for (int p : {1, 3}) {
    const DGSpace space(mesh, p);
    const ModelData model = rich_model(*mesh);
    const PenaltyContext ctx = make_penalty_context(space, model, 5.0);
    const FisherOperator op(space, model, ctx);
    const Eigen::VectorXd lo = smooth_state(space, -1.0, rng);
    const Eigen::VectorXd l = smooth_state(space, -0.8, rng);
    for (double theta : {0.0, 0.5, 1.0}) {
      const ThetaParams params{theta, 0.02, 1e-3};
      const auto step = op.begin_step(lo, 0.1, 0.12, params);
      const LinearSystem fast = op.linearize(step, l);
      const LinearSystem ref = reference_linearize(space, model, ctx, lo, l, 0.1, 0.12, params);
      const double rscale = ref.residual.cwiseAbs().maxCoeff();
      CHECK((fast.residual - ref.residual).cwiseAbs().maxCoeff() < 1e-11 * rscale);
      CHECK(max_abs(SparseMatrix(fast.matrix - ref.matrix)) < 1e-11 * max_abs(ref.matrix));
    }
  }
}

TEST_CASE("serial and parallel assembly are bit-identical") {
  set_assembly_threads(4);
  auto mesh = voronoi_mesh(60, 11);
  const DGSpace space(mesh, 2);
  const ModelData model = rich_model(*mesh);
  const PenaltyContext ctx = make_penalty_context(space, model, 5.0);
  const FisherOperator op(space, model, ctx);
  std::mt19937_64 rng(10);
  const Eigen::VectorXd lo = smooth_state(space, 0.0, rng);
  const Eigen::VectorXd l = smooth_state(space, 0.1, rng);
  const ThetaParams params{0.5, 0.01, 1e-4};
  const auto ss = op.begin_step(lo, 0.0, 0.01, params, Execution::serial);
  const auto sp = op.begin_step(lo, 0.0, 0.01, params, Execution::parallel);
  CHECK((ss.explicit_part.array() == sp.explicit_part.array()).all());
  const LinearSystem a = op.linearize(ss, l, nullptr, Execution::serial);
  for (int rep = 0; rep < 3; ++rep) {
    const LinearSystem b = op.linearize(sp, l, nullptr, Execution::parallel);
    CHECK((a.residual.array() == b.residual.array()).all());
    CHECK(same_bits(a.matrix, b.matrix));
  }
  const Eigen::VectorXd r = op.residual(sp, l, nullptr, Execution::parallel);
  CHECK((r.array() == a.residual.array()).all());

  const BaselineOperator base(space, model, ctx);
  const Eigen::VectorXd c = space.project([](const Point &x) { return 0.5 + 0.2 * x.x(); });
  const LinearSystem b1 = base.assemble(c, 0.01, 0.01, Execution::serial);
  const LinearSystem b2 = base.assemble(c, 0.01, 0.01, Execution::parallel);
  CHECK((b1.residual.array() == b2.residual.array()).all());
  CHECK(same_bits(b1.matrix, b2.matrix));
  set_assembly_threads(0);
}

TEST_CASE("overflow is reported, not clamped") {
  auto mesh = voronoi_mesh(6, 1);
  const DGSpace space(mesh, 1);
  const ModelData model = isotropic_model(*mesh, 1.0, 1.0);
  const PenaltyContext ctx = make_penalty_context(space, model, 1.0);
  const FisherOperator op(space, model, ctx);
  const Eigen::VectorXd lo = Eigen::VectorXd::Zero(space.num_dofs());
  const auto step = op.begin_step(lo, 0.0, 0.1, {1.0, 0.1, 0.0});
  Eigen::VectorXd l = lo;
  l[space.offset(3)] = 800.0 * std::sqrt(mesh->bbox[3].area()); // lambda = 800 on element 3
  try {
    op.residual(step, l);
    FAIL("expected overflow");
  } catch (const std::overflow_error &e) {
    const std::string msg = e.what();
    CHECK(msg.find("element 3") != std::string::npos);
    CHECK(msg.find("800") != std::string::npos);
  }
  CHECK_THROWS_AS(op.begin_step(lo, 0.0, 0.1, {1.5, 0.1, 0.0}), std::invalid_argument);
}

TEST_CASE("baseline operator keeps constant states") {
  auto mesh = voronoi_mesh(15, 2, BoundaryTag::neumann);
  const DGSpace space(mesh, 2);
  const ModelData model = isotropic_model(*mesh, 0.7, 0.0);
  const PenaltyContext ctx = make_penalty_context(space, model, 10.0);
  const BaselineOperator base(space, model, ctx);
  const Eigen::VectorXd c = space.project([](const Point &) { return 0.37; });
  const LinearSystem sys = base.assemble(c, 0.1, 0.1);
  Eigen::SparseLU<SparseMatrix> lu(sys.matrix);
  const Eigen::VectorXd cn = lu.solve(sys.residual);
  CHECK((cn - c).cwiseAbs().maxCoeff() < 1e-12);
}
