#include "polyfk/forms.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace polyfk {

namespace {

void check_size(const DGSpace &space, const Eigen::VectorXd &v, const char *what) {
  if (v.size() != space.num_dofs())
    throw std::invalid_argument(std::string(what) + ": dof vector has length " +
                                std::to_string(v.size()) + ", space has " +
                                std::to_string(space.num_dofs()));
}

double normal_flux(const Tensor2 &d, double gx, double gy, const Point &n) {
  return (d(0, 0) * gx + d(0, 1) * gy) * n.x() + (d(1, 0) * gx + d(1, 1) * gy) * n.y();
}

} // namespace

double penalty_zeta(const DGSpace &space, const ModelData &model, int f, double eta0) {
  const PolyMesh &mesh = space.mesh();
  const Face &face = mesh.faces[f];
  if (face.is_neumann())
    throw std::invalid_argument("penalty_zeta: face " + std::to_string(f) +
                                " is a Neumann face");
  const int a = face.plus;
  const double pa = space.degree(a);
  if (face.is_boundary())
    return eta0 * model.spectral_bound(a) * pa * pa / mesh.diameter[a];
  const int b = face.minus;
  const double pb = space.degree(b);
  return eta0 * arithmetic_avg(model.spectral_bound(a), model.spectral_bound(b)) *
         arithmetic_avg(pa * pa, pb * pb) /
         harmonic_avg(mesh.diameter[a], mesh.diameter[b]);
}

PenaltyContext make_penalty_context(const DGSpace &space, const ModelData &model,
                                    double eta0) {
  if (!(eta0 > 0.0))
    throw std::invalid_argument("penalty constant eta0 must be positive");
  PenaltyContext ctx;
  ctx.eta0 = eta0;
  ctx.zeta.assign(space.mesh().num_faces(), 0.0);
  for (int f = 0; f < space.mesh().num_faces(); ++f)
    if (!space.mesh().faces[f].is_neumann())
      ctx.zeta[f] = penalty_zeta(space, model, f, eta0);
  return ctx;
}

std::vector<double> element_linf(const DGSpace &space, const Eigen::VectorXd &lambda) {
  check_size(space, lambda, "element_linf");
  std::vector<double> out(space.num_elements());
  for (int k = 0; k < space.num_elements(); ++k) {
    const std::vector<Point> pts = space.linf_sample_points(k);
    const BasisValues b = space.eval_basis(k, pts);
    out[k] = (b.value * lambda.segment(space.offset(k), space.local_dim(k)))
                 .cwiseAbs()
                 .maxCoeff();
  }
  return out;
}

std::vector<LinfSensitivity> element_linf_sensitivity(const DGSpace &space,
                                                      const Eigen::VectorXd &lambda) {
  check_size(space, lambda, "element_linf_sensitivity");
  std::vector<LinfSensitivity> out(space.num_elements());
  for (int k = 0; k < space.num_elements(); ++k) {
    const std::vector<Point> pts = space.linf_sample_points(k);
    const BasisValues b = space.eval_basis(k, pts);
    const Eigen::VectorXd v = b.value * lambda.segment(space.offset(k), space.local_dim(k));
    Eigen::Index i = 0;
    out[k].value = v.cwiseAbs().maxCoeff(&i);
    out[k].grad = (v[i] < 0.0 ? -1.0 : 1.0) * b.value.row(i).transpose();
  }
  return out;
}

namespace {

Eigen::VectorXd eta_on_face(const DGSpace &space, const PenaltyContext &ctx,
                            const Eigen::VectorXd &lambda,
                            const std::vector<double> &linf, int f) {
  const Face &face = space.mesh().faces[f];
  const QuadRule &q = space.face_rule(f);
  Eigen::VectorXd trace = space.evaluate(lambda, face.plus, q.points).value;
  double lmax = linf[face.plus];
  if (face.is_interior()) {
    trace = trace.cwiseMax(space.evaluate(lambda, face.minus, q.points).value);
    lmax = std::max(lmax, linf[face.minus]);
  }
  return (trace.array().exp() * (std::exp(lmax) * ctx.zeta[f])).matrix();
}

} // namespace

PenaltyField penalty_eta(const DGSpace &space, const PenaltyContext &ctx,
                         const Eigen::VectorXd &lambda) {
  const std::vector<double> linf = element_linf(space, lambda);
  PenaltyField out;
  out.eta.resize(space.mesh().num_faces());
  for (int f = 0; f < space.mesh().num_faces(); ++f)
    if (!space.mesh().faces[f].is_neumann())
      out.eta[f] = eta_on_face(space, ctx, lambda, linf, f);
  return out;
}

Eigen::VectorXd penalty_eta(const DGSpace &space, const PenaltyContext &ctx,
                            const Eigen::VectorXd &lambda, int f) {
  if (space.mesh().faces[f].is_neumann())
    throw std::invalid_argument("penalty_eta: face " + std::to_string(f) +
                                " is a Neumann face");
  return eta_on_face(space, ctx, lambda, element_linf(space, lambda), f);
}

ElementField discrete_field(const DGSpace &space, const Eigen::VectorXd &dofs) {
  check_size(space, dofs, "discrete_field");
  return [&space, dofs](int k, std::span<const Point> pts) {
    return space.evaluate(dofs, k, pts);
  };
}

ElementField exp_field(const DGSpace &space, const Eigen::VectorXd &dofs, double scale) {
  check_size(space, dofs, "exp_field");
  return [&space, dofs, scale](int k, std::span<const Point> pts) {
    FieldValues v = space.evaluate(dofs, k, pts);
    const Eigen::VectorXd e = (scale * v.value).array().exp().matrix();
    return FieldValues{e, (scale * e.array() * v.dx.array()).matrix(),
                       (scale * e.array() * v.dy.array()).matrix()};
  };
}

double form_A(const DGSpace &space, const ModelData &model, const PenaltyContext &ctx,
              const Eigen::VectorXd &u, const Eigen::VectorXd &v,
              const Eigen::VectorXd &w) {
  check_size(space, u, "form_A");
  check_size(space, v, "form_A");
  check_size(space, w, "form_A");
  const PolyMesh &mesh = space.mesh();
  double sum = 0.0;
  for (int k = 0; k < space.num_elements(); ++k) {
    const QuadRule &q = space.element_rule(k);
    const FieldValues uu = space.evaluate(u, k, q.points);
    const FieldValues vv = space.evaluate(v, k, q.points);
    const FieldValues ww = space.evaluate(w, k, q.points);
    const Tensor2 &d = model.diffusion[k];
    for (std::size_t i = 0; i < q.size(); ++i) {
      const Eigen::Vector2d gv(vv.dx[i], vv.dy[i]);
      const Eigen::Vector2d gw(ww.dx[i], ww.dy[i]);
      sum += q.weights[i] * std::exp(uu.value[i]) * gw.dot(d * gv);
    }
  }
  const PenaltyField eta = penalty_eta(space, ctx, u);
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face &face = mesh.faces[f];
    if (face.is_neumann())
      continue;
    const QuadRule &q = space.face_rule(f);
    const int a = face.plus;
    const FieldValues ua = space.evaluate(u, a, q.points);
    const FieldValues va = space.evaluate(v, a, q.points);
    const FieldValues wa = space.evaluate(w, a, q.points);
    const Tensor2 &da = model.diffusion[a];
    const Point &n = face.normal;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double ea = std::exp(ua.value[i]);
      double avg_v = ea * normal_flux(da, va.dx[i], va.dy[i], n);
      double avg_w = ea * normal_flux(da, wa.dx[i], wa.dy[i], n);
      double jv = va.value[i];
      double jw = wa.value[i];
      if (face.is_interior()) {
        const int b = face.minus;
        const Point pt[1] = {q.points[i]};
        const FieldValues ub = space.evaluate(u, b, pt);
        const FieldValues vb = space.evaluate(v, b, pt);
        const FieldValues wb = space.evaluate(w, b, pt);
        const Tensor2 &db = model.diffusion[b];
        const double eb = std::exp(ub.value[0]);
        avg_v = 0.5 * (avg_v + eb * normal_flux(db, vb.dx[0], vb.dy[0], n));
        avg_w = 0.5 * (avg_w + eb * normal_flux(db, wb.dx[0], wb.dy[0], n));
        jv -= vb.value[0];
        jw -= wb.value[0];
      }
      sum += q.weights[i] * (-avg_v * jw - jv * avg_w + eta.eta[f][i] * jv * jw);
    }
  }
  return sum;
}

DGNormParts dg_norm_parts(const DGSpace &space, const ModelData &model,
                          const PenaltyContext &ctx, const ElementField &v,
                          const ScalarField &dirichlet_datum) {
  const PolyMesh &mesh = space.mesh();
  DGNormParts out;
  for (int k = 0; k < space.num_elements(); ++k) {
    const QuadRule &q = space.element_rule(k);
    const FieldValues vv = v(k, q.points);
    const Tensor2 &d = model.diffusion[k];
    for (std::size_t i = 0; i < q.size(); ++i) {
      const Eigen::Vector2d g(vv.dx[i], vv.dy[i]);
      out.gradient += q.weights[i] * g.dot(d * g);
    }
  }
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face &face = mesh.faces[f];
    if (face.is_neumann())
      continue;
    const QuadRule &q = space.face_rule(f);
    Eigen::VectorXd jump = v(face.plus, q.points).value;
    if (face.is_interior()) {
      jump -= v(face.minus, q.points).value;
    } else if (dirichlet_datum) {
      for (std::size_t i = 0; i < q.size(); ++i)
        jump[i] -= dirichlet_datum(q.points[i]);
    }
    const Eigen::Map<const Eigen::VectorXd> w(q.weights.data(), q.size());
    out.jump += ctx.zeta[f] * w.dot(jump.cwiseAbs2());
  }
  return out;
}

double dg_norm(const DGSpace &space, const ModelData &model, const PenaltyContext &ctx,
               const ElementField &v, const ScalarField &dirichlet_datum) {
  return std::sqrt(dg_norm_parts(space, model, ctx, v, dirichlet_datum).total());
}

double dg_norm(const DGSpace &space, const ModelData &model, const PenaltyContext &ctx,
               const Eigen::VectorXd &v) {
  return dg_norm(space, model, ctx, discrete_field(space, v));
}

double entropy_density(double c) {
  if (c <= 0.0)
    return 1.0;
  return c * (std::log(c) - 1.0) + 1.0;
}

double discrete_entropy(const DGSpace &space, const Eigen::VectorXd &lambda) {
  check_size(space, lambda, "discrete_entropy");
  double s = 0.0;
  for (int k = 0; k < space.num_elements(); ++k) {
    const QuadRule &q = space.element_rule(k);
    const FieldValues l = space.evaluate(lambda, k, q.points);
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double lam = l.value[i];
      s += q.weights[i] * (std::exp(lam) * (lam - 1.0) + 1.0);
    }
  }
  return s;
}

double inverse_trace_constant(const DGSpace &space, int k) {
  const PolyMesh &mesh = space.mesh();
  const int n = space.local_dim(k);
  Eigen::MatrixXd boundary = Eigen::MatrixXd::Zero(n, n);
  for (int f : mesh.element_faces[k]) {
    // A face rule of order 2p+offset integrates phi_i phi_j exactly.
    const QuadRule &q = space.face_rule(f);
    const BasisValues b = space.eval_basis(k, q.points);
    const Eigen::Map<const Eigen::VectorXd> w(q.weights.data(), q.size());
    boundary += b.value.transpose() * w.asDiagonal() * b.value;
  }
  const double p = space.degree(k);
  const Eigen::MatrixXd volume = space.mass_matrix(k) * (p * p / mesh.diameter[k]);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(boundary, volume,
                                                               Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("inverse_trace_constant: eigensolve failed on element " +
                             std::to_string(k));
  return es.eigenvalues().maxCoeff();
}

double estimate_CI(const DGSpace &space) {
  double c = 0.0;
  for (int k = 0; k < space.num_elements(); ++k)
    c = std::max(c, inverse_trace_constant(space, k));
  return c;
}

double coercive_eta0(const DGSpace &space, const ModelData &model) {
  const double ci = estimate_CI(space);
  return 16.0 * ci * ci * model.D0;
}

} // namespace polyfk
