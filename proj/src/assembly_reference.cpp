// Scalar-loop assembly of the exponential-transform scheme. Deliberately
// written pointwise and without the blocked kernels so it can serve as an
// oracle for FisherOperator.

#include "polyfk/assembly.hpp"

#include <cmath>
#include <vector>

namespace polyfk {

namespace {

struct PointBasis {
  std::vector<double> v, gx, gy;
};

PointBasis basis_at(const DGSpace &space, int k, const Point &x) {
  const Point pts[1] = {x};
  const BasisValues b = space.eval_basis(k, pts);
  PointBasis out;
  for (int m = 0; m < space.local_dim(k); ++m) {
    out.v.push_back(b.value(0, m));
    out.gx.push_back(b.dx(0, m));
    out.gy.push_back(b.dy(0, m));
  }
  return out;
}

struct PointState {
  double val = 0.0, gx = 0.0, gy = 0.0;
};

PointState state_at(const DGSpace &space, const Eigen::VectorXd &dofs, int k,
                    const PointBasis &b) {
  PointState s;
  const int off = space.offset(k);
  for (int m = 0; m < space.local_dim(k); ++m) {
    s.val += dofs[off + m] * b.v[m];
    s.gx += dofs[off + m] * b.gx[m];
    s.gy += dofs[off + m] * b.gy[m];
  }
  return s;
}

double flux_n(const Tensor2 &d, double gx, double gy, const Point &n) {
  return (d(0, 0) * gx + d(0, 1) * gy) * n.x() + (d(1, 0) * gx + d(1, 1) * gy) * n.y();
}

} // namespace

LinearSystem reference_linearize(const DGSpace &space, const ModelData &model,
                                 const PenaltyContext &ctx,
                                 const Eigen::VectorXd &lambda_old,
                                 const Eigen::VectorXd &lambda, double t_old,
                                 double t_new, const ThetaParams &params) {
  const PolyMesh &mesh = space.mesh();
  const int ndof = space.num_dofs();
  const double th = params.theta;
  const double dt = params.dt;
  const double eps = params.epsilon;
  Eigen::VectorXd res = Eigen::VectorXd::Zero(ndof);
  std::vector<Eigen::Triplet<double>> trip;

  for (int k = 0; k < space.num_elements(); ++k) {
    const QuadRule &q = space.element_rule(k);
    const Tensor2 &d = model.diffusion[k];
    const double alpha = model.alpha[k];
    const int off = space.offset(k);
    const int n = space.local_dim(k);
    for (std::size_t p = 0; p < q.size(); ++p) {
      const double w = q.weights[p];
      const PointBasis b = basis_at(space, k, q.points[p]);
      const PointState l = state_at(space, lambda, k, b);
      const PointState lo = state_at(space, lambda_old, k, b);
      const double e = std::exp(l.val), eo = std::exp(lo.val);
      const double c = th * e + (1 - th) * eo;
      const double fnew = model.forcing_at(q.points[p], t_new);
      const double fold = model.forcing_at(q.points[p], t_old);
      const double dlx = d(0, 0) * l.gx + d(0, 1) * l.gy;
      const double dly = d(1, 0) * l.gx + d(1, 1) * l.gy;
      const double dlox = d(0, 0) * lo.gx + d(0, 1) * lo.gy;
      const double dloy = d(1, 0) * lo.gx + d(1, 1) * lo.gy;
      for (int i = 0; i < n; ++i) {
        const double phi = b.v[i], px = b.gx[i], py = b.gy[i];
        double r = (e - eo) / dt * phi - alpha * c * (1 - c) * phi;
        r += eps / dt * (l.val * phi + dlx * px + dly * py);
        r += th * e * (dlx * px + dly * py) + (1 - th) * eo * (dlox * px + dloy * py);
        r -= (th * fnew + (1 - th) * fold) * phi;
        res[off + i] += w * r;
        for (int j = 0; j < n; ++j) {
          const double pj = b.v[j];
          const double djx = d(0, 0) * b.gx[j] + d(0, 1) * b.gy[j];
          const double djy = d(1, 0) * b.gx[j] + d(1, 1) * b.gy[j];
          double jac = e / dt * pj * phi - alpha * th * e * pj * (1 - 2 * c) * phi;
          jac += eps / dt * (pj * phi + djx * px + djy * py);
          jac += th * e * pj * (dlx * px + dly * py) + th * e * (djx * px + djy * py);
          trip.emplace_back(off + i, off + j, w * jac);
        }
      }
    }
  }

  const PenaltyField eta = penalty_eta(space, ctx, lambda);
  const PenaltyField eta_old = penalty_eta(space, ctx, lambda_old);
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face &face = mesh.faces[f];
    if (face.is_neumann())
      continue;
    const QuadRule &q = space.face_rule(f);
    const Point &nrm = face.normal;
    const bool interior = face.is_interior();
    const double avg = interior ? 0.5 : 1.0;
    const int nside = interior ? 2 : 1;
    const int elem[2] = {face.plus, face.minus};
    const double sign[2] = {1.0, -1.0};
    for (std::size_t p = 0; p < q.size(); ++p) {
      const double w = q.weights[p];
      const Point &x = q.points[p];
      PointBasis b[2];
      PointState l[2], lo[2];
      double e[2] = {0, 0}, eo[2] = {0, 0}, g[2] = {0, 0}, go[2] = {0, 0};
      double jump = 0, jump_old = 0, q_avg = 0, q_avg_old = 0;
      for (int s = 0; s < nside; ++s) {
        const int k = elem[s];
        const Tensor2 &d = model.diffusion[k];
        b[s] = basis_at(space, k, x);
        l[s] = state_at(space, lambda, k, b[s]);
        lo[s] = state_at(space, lambda_old, k, b[s]);
        e[s] = std::exp(l[s].val);
        eo[s] = std::exp(lo[s].val);
        g[s] = flux_n(d, l[s].gx, l[s].gy, nrm);
        go[s] = flux_n(d, lo[s].gx, lo[s].gy, nrm);
        jump += sign[s] * l[s].val;
        jump_old += sign[s] * lo[s].val;
        q_avg += avg * e[s] * g[s];
        q_avg_old += avg * eo[s] * go[s];
      }
      if (!interior) {
        jump -= model.dirichlet_at(x, t_new);
        jump_old -= model.dirichlet_at(x, t_old);
      }
      const double pen = th * eta.eta[f][p] + eps / dt * ctx.zeta[f];
      for (int si = 0; si < nside; ++si) {
        const int ki = elem[si];
        const Tensor2 &di = model.diffusion[ki];
        for (int i = 0; i < space.local_dim(ki); ++i) {
          const double ji = sign[si] * b[si].v[i];
          const double fi = flux_n(di, b[si].gx[i], b[si].gy[i], nrm);
          const double afi = avg * e[si] * fi;
          const double afi_old = avg * eo[si] * fi;
          double r = -th * q_avg * ji - th * jump * afi + pen * jump * ji;
          r += (1 - th) * (-q_avg_old * ji - jump_old * afi_old +
                           eta_old.eta[f][p] * jump_old * ji);
          res[space.offset(ki) + i] += w * r;
          for (int sj = 0; sj < nside; ++sj) {
            const int kj = elem[sj];
            const Tensor2 &dj = model.diffusion[kj];
            for (int j = 0; j < space.local_dim(kj); ++j) {
              const double jj = sign[sj] * b[sj].v[j];
              const double fj = flux_n(dj, b[sj].gx[j], b[sj].gy[j], nrm);
              const double dq = avg * e[sj] * (b[sj].v[j] * g[sj] + fj);
              double jac = -th * dq * ji - th * jj * afi + pen * jj * ji;
              if (si == sj)
                jac -= th * jump * avg * e[si] * b[si].v[j] * fi;
              trip.emplace_back(space.offset(ki) + i, space.offset(kj) + j, w * jac);
            }
          }
        }
      }
    }
  }

  LinearSystem out;
  out.residual = res;
  out.matrix.resize(ndof, ndof);
  out.matrix.setFromTriplets(trip.begin(), trip.end());
  return out;
}

} // namespace polyfk
