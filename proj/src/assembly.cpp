#include "polyfk/assembly.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace polyfk {

namespace {

/// Runs body(i) for i in [0, n). Exceptions are collected and the one from the
/// lowest index is rethrown, so failures are reported deterministically.
template <class Body> void for_each_index(int n, Execution exec, Body &&body) {
  std::exception_ptr error;
  int first = std::numeric_limits<int>::max();
  const bool par = exec == Execution::parallel;
  const int nt = par ? assembly_threads() : 1;
#pragma omp parallel for schedule(dynamic, 8) num_threads(nt) if (par && nt > 1)
  for (int i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical(polyfk_assembly_error)
      if (i < first) {
        first = i;
        error = std::current_exception();
      }
    }
  }
  if (error)
    std::rethrow_exception(error);
}

Eigen::Map<const Eigen::ArrayXd> weights_of(const QuadRule &q) {
  return {q.weights.data(), static_cast<Eigen::Index>(q.size())};
}

/// (D grad phi) . n for every basis function, rows = points.
Eigen::MatrixXd normal_flux_table(const BasisValues &b, const Tensor2 &d, const Point &n) {
  const Eigen::Vector2d m = d * n;
  return m.x() * b.dx + m.y() * b.dy;
}

[[noreturn]] void overflow_error(const DGSpace &space, const Eigen::VectorXd &lambda, int k) {
  const FieldValues v = space.evaluate(lambda, k, space.element_rule(k).points);
  std::ostringstream os;
  os.precision(6);
  os << "non-finite exp(lambda) on element " << k << " (max lambda "
     << v.value.maxCoeff() << ", global max dof " << lambda.maxCoeff() << ")";
  throw std::overflow_error(os.str());
}

} // namespace

// ---------------------------------------------------------------------------

BlockPattern::BlockPattern(const DGSpace &space) : space_(&space) {
  const PolyMesh &mesh = space.mesh();
  const int ne = space.num_elements();
  neighbors_.assign(ne, {});
  for (int k = 0; k < ne; ++k)
    neighbors_[k].push_back(k);
  for (const Face &f : mesh.faces)
    if (f.is_interior()) {
      neighbors_[f.plus].push_back(f.minus);
      neighbors_[f.minus].push_back(f.plus);
    }
  row_start_.resize(ne);
  Eigen::VectorXi col_nnz(space.num_dofs());
  for (int k = 0; k < ne; ++k) {
    auto &nb = neighbors_[k];
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    int acc = 0;
    for (int r : nb) {
      row_start_[k].push_back(acc);
      acc += space.local_dim(r);
    }
    col_nnz.segment(space.offset(k), space.local_dim(k)).setConstant(acc);
  }
  zero_.resize(space.num_dofs(), space.num_dofs());
  zero_.reserve(col_nnz);
  for (int c = 0; c < ne; ++c)
    for (int jj = 0; jj < space.local_dim(c); ++jj) {
      const int j = space.offset(c) + jj;
      for (int r : neighbors_[c])
        for (int ii = 0; ii < space.local_dim(r); ++ii)
          zero_.insert(space.offset(r) + ii, j) = 0.0;
    }
  zero_.makeCompressed();
}

void BlockPattern::add_block(SparseMatrix &m, int r, int c,
                             const Eigen::MatrixXd &block) const {
  const auto &nb = neighbors_[c];
  const auto it = std::lower_bound(nb.begin(), nb.end(), r);
  if (it == nb.end() || *it != r)
    throw std::logic_error("BlockPattern: block outside the DG stencil");
  const int start = row_start_[c][it - nb.begin()];
  const int off = space_->offset(c);
  const int *outer = m.outerIndexPtr();
  double *val = m.valuePtr();
  for (int jj = 0; jj < block.cols(); ++jj) {
    double *col = val + outer[off + jj] + start;
    for (int ii = 0; ii < block.rows(); ++ii)
      col[ii] += block(ii, jj);
  }
}

BasisCache::BasisCache(const DGSpace &space) {
  const PolyMesh &mesh = space.mesh();
  element.resize(space.num_elements());
  face_plus.resize(mesh.num_faces());
  face_minus.resize(mesh.num_faces());
  for_each_index(space.num_elements(), Execution::parallel, [&](int k) {
    element[k] = space.eval_basis(k, space.element_rule(k).points);
  });
  for_each_index(mesh.num_faces(), Execution::parallel, [&](int f) {
    const Face &face = mesh.faces[f];
    face_plus[f] = space.eval_basis(face.plus, space.face_rule(f).points);
    if (face.is_interior())
      face_minus[f] = space.eval_basis(face.minus, space.face_rule(f).points);
  });
}

// ---------------------------------------------------------------------------

FisherOperator::FisherOperator(const DGSpace &space, const ModelData &model,
                               const PenaltyContext &ctx)
    : space_(&space), model_(&model), ctx_(&ctx), pattern_(space), cache_(space) {
  if (static_cast<int>(model.diffusion.size()) != space.num_elements())
    throw std::invalid_argument("FisherOperator: model and mesh sizes differ");
  if (static_cast<int>(ctx.zeta.size()) != space.mesh().num_faces())
    throw std::invalid_argument("FisherOperator: penalty context does not match mesh");
}

FisherOperator::Step FisherOperator::begin_step(const Eigen::VectorXd &lambda_old,
                                                double t_old, double t_new,
                                                const ThetaParams &params,
                                                Execution exec) const {
  const DGSpace &space = *space_;
  const PolyMesh &mesh = space.mesh();
  if (lambda_old.size() != space.num_dofs())
    throw std::invalid_argument("begin_step: state does not match space");
  if (!(params.dt > 0.0))
    throw std::invalid_argument("begin_step: dt must be positive");
  if (!(params.theta >= 0.0 && params.theta <= 1.0))
    throw std::invalid_argument("begin_step: theta out of range");
  if (!(params.epsilon >= 0.0))
    throw std::invalid_argument("begin_step: epsilon must be non-negative");

  Step s;
  s.lambda_old = lambda_old;
  s.t_old = t_old;
  s.t_new = t_new;
  s.params = params;
  const int ne = space.num_elements();
  s.exp_old.resize(ne);
  s.f_new.resize(ne);
  s.g_new.resize(mesh.num_faces());
  std::vector<Eigen::VectorXd> elem_old(ne);
  const double w_old = 1.0 - params.theta;

  for_each_index(ne, exec, [&](int k) {
    const QuadRule &q = space.element_rule(k);
    const BasisValues &b = cache_.element[k];
    const auto lo = lambda_old.segment(space.offset(k), space.local_dim(k));
    const Eigen::ArrayXd lam = (b.value * lo).array();
    s.exp_old[k] = lam.exp();
    if (!s.exp_old[k].allFinite())
      overflow_error(space, lambda_old, k);
    s.f_new[k].resize(q.size());
    for (std::size_t i = 0; i < q.size(); ++i)
      s.f_new[k][i] = model_->forcing_at(q.points[i], t_new);
    if (w_old > 0.0) {
      const auto w = weights_of(q);
      const Tensor2 &d = model_->diffusion[k];
      const Eigen::ArrayXd lx = (b.dx * lo).array(), ly = (b.dy * lo).array();
      const Eigen::ArrayXd fx = d(0, 0) * lx + d(0, 1) * ly;
      const Eigen::ArrayXd fy = d(1, 0) * lx + d(1, 1) * ly;
      Eigen::ArrayXd f_old(q.size());
      for (std::size_t i = 0; i < q.size(); ++i)
        f_old[i] = model_->forcing_at(q.points[i], t_old);
      const Eigen::ArrayXd we = w * s.exp_old[k];
      elem_old[k] = w_old * (b.dx.transpose() * (we * fx).matrix() +
                             b.dy.transpose() * (we * fy).matrix() -
                             b.value.transpose() * (w * f_old).matrix());
    }
  });

  std::vector<Eigen::VectorXd> face_old(mesh.num_faces());
  PenaltyField eta_old;
  if (w_old > 0.0)
    eta_old = penalty_eta(space, *ctx_, lambda_old);
  for_each_index(mesh.num_faces(), exec, [&](int f) {
    const Face &face = mesh.faces[f];
    if (face.is_dirichlet()) {
      const QuadRule &q = space.face_rule(f);
      s.g_new[f].resize(q.size());
      for (std::size_t i = 0; i < q.size(); ++i)
        s.g_new[f][i] = model_->dirichlet_at(q.points[i], t_new);
    }
    if (w_old > 0.0 && !face.is_neumann())
      face_old[f] = w_old * old_face_part(lambda_old, eta_old.eta[f], t_old, f);
  });

  s.explicit_part = Eigen::VectorXd::Zero(space.num_dofs());
  if (w_old > 0.0) {
    for (int k = 0; k < ne; ++k)
      s.explicit_part.segment(space.offset(k), space.local_dim(k)) += elem_old[k];
    for (int f = 0; f < mesh.num_faces(); ++f) {
      const Face &face = mesh.faces[f];
      if (face.is_neumann())
        continue;
      const int na = space.local_dim(face.plus);
      s.explicit_part.segment(space.offset(face.plus), na) += face_old[f].head(na);
      if (face.is_interior())
        s.explicit_part.segment(space.offset(face.minus), space.local_dim(face.minus)) +=
            face_old[f].tail(space.local_dim(face.minus));
    }
  }
  return s;
}

Eigen::VectorXd FisherOperator::old_face_part(const Eigen::VectorXd &lambda_old,
                                              const Eigen::VectorXd &eta_old,
                                              double t_old, int f) const {
  // A(lo; lo, phi) restricted to face f, with [[lo]] = (lo - g(t_old)) n on
  // Dirichlet faces.
  const DGSpace &space = *space_;
  const Face &face = space.mesh().faces[f];
  const QuadRule &q = space.face_rule(f);
  const auto w = weights_of(q);
  const bool interior = face.is_interior();
  const double avg = interior ? 0.5 : 1.0;
  const int a = face.plus;
  const int na = space.local_dim(a);
  const int nb = interior ? space.local_dim(face.minus) : 0;

  const BasisValues &ba = cache_.face_plus[f];
  const auto la = lambda_old.segment(space.offset(a), na);
  const Eigen::ArrayXd lam_a = (ba.value * la).array();
  const Eigen::ArrayXd ea = lam_a.exp();
  const Eigen::MatrixXd fna = normal_flux_table(ba, model_->diffusion[a], face.normal);
  Eigen::ArrayXd q_avg = avg * ea * (fna * la).array();
  Eigen::ArrayXd jump = lam_a;

  Eigen::VectorXd r(na + nb);
  if (interior) {
    const int b = face.minus;
    const BasisValues &bb = cache_.face_minus[f];
    const auto lb = lambda_old.segment(space.offset(b), nb);
    const Eigen::ArrayXd lam_b = (bb.value * lb).array();
    const Eigen::ArrayXd eb = lam_b.exp();
    const Eigen::MatrixXd fnb = normal_flux_table(bb, model_->diffusion[b], face.normal);
    q_avg += avg * eb * (fnb * lb).array();
    jump -= lam_b;
    const Eigen::ArrayXd c = w * (-q_avg + eta_old.array() * jump);
    const Eigen::ArrayXd cj = w * jump * avg;
    r.head(na) = ba.value.transpose() * c.matrix() -
                 fna.transpose() * (cj * ea).matrix();
    r.tail(nb) = -(bb.value.transpose() * c.matrix()) -
                 fnb.transpose() * (cj * eb).matrix();
  } else {
    for (std::size_t i = 0; i < q.size(); ++i)
      jump[i] -= model_->dirichlet_at(q.points[i], t_old);
    const Eigen::ArrayXd c = w * (-q_avg + eta_old.array() * jump);
    r = ba.value.transpose() * c.matrix() - fna.transpose() * (w * jump * ea).matrix();
  }
  return r;
}

FisherOperator::Local FisherOperator::element_kernel(const Step &step,
                                                     const Eigen::VectorXd &lambda, int k,
                                                     bool jac) const {
  const DGSpace &space = *space_;
  const QuadRule &q = space.element_rule(k);
  const BasisValues &b = cache_.element[k];
  const auto w = weights_of(q);
  const auto lk = lambda.segment(space.offset(k), space.local_dim(k));
  const double theta = step.params.theta;
  const double inv_dt = 1.0 / step.params.dt;
  const double eps_dt = step.params.epsilon * inv_dt;
  const double alpha = model_->alpha[k];
  const Tensor2 &d = model_->diffusion[k];

  const Eigen::ArrayXd lam = (b.value * lk).array();
  const Eigen::ArrayXd lx = (b.dx * lk).array(), ly = (b.dy * lk).array();
  const Eigen::ArrayXd el = lam.exp();
  if (!el.allFinite())
    overflow_error(space, lambda, k);
  const Eigen::ArrayXd &elo = step.exp_old[k];
  const Eigen::ArrayXd conc = theta * el + (1.0 - theta) * elo;
  const Eigen::ArrayXd fx = d(0, 0) * lx + d(0, 1) * ly;
  const Eigen::ArrayXd fy = d(1, 0) * lx + d(1, 1) * ly;
  const Eigen::ArrayXd kappa = w * (theta * el + eps_dt);

  const Eigen::ArrayXd src = w * ((el - elo) * inv_dt - alpha * conc * (1.0 - conc) +
                                  eps_dt * lam - theta * step.f_new[k]);
  Local out;
  out.r = b.value.transpose() * src.matrix() + b.dx.transpose() * (kappa * fx).matrix() +
          b.dy.transpose() * (kappa * fy).matrix();
  if (!jac)
    return out;

  const Eigen::ArrayXd m =
      w * (el * inv_dt - alpha * theta * el * (1.0 - 2.0 * conc) + eps_dt);
  const Eigen::ArrayXd a = w * theta * el;
  const Eigen::MatrixXd gx = d(0, 0) * b.dx + d(0, 1) * b.dy; // (D grad phi)_x
  const Eigen::MatrixXd gy = d(1, 0) * b.dx + d(1, 1) * b.dy;
  out.J = b.value.transpose() * m.matrix().asDiagonal() * b.value;
  out.J.noalias() += b.dx.transpose() * ((a * fx).matrix().asDiagonal() * b.value);
  out.J.noalias() += b.dy.transpose() * ((a * fy).matrix().asDiagonal() * b.value);
  out.J.noalias() += b.dx.transpose() * (kappa.matrix().asDiagonal() * gx);
  out.J.noalias() += b.dy.transpose() * (kappa.matrix().asDiagonal() * gy);
  return out;
}

FisherOperator::Local FisherOperator::face_kernel(const Step &step,
                                                  const Eigen::VectorXd &lambda,
                                                  const Eigen::VectorXd &eta, int f,
                                                  bool jac,
                                                  const std::vector<LinfSensitivity> *linf) const {
  const DGSpace &space = *space_;
  const Face &face = space.mesh().faces[f];
  const QuadRule &q = space.face_rule(f);
  const auto w = weights_of(q);
  const int nq = static_cast<int>(q.size());
  const bool interior = face.is_interior();
  const double avg = interior ? 0.5 : 1.0;
  const double theta = step.params.theta;
  const double eps_dt = step.params.epsilon / step.params.dt;
  const int a = face.plus;
  const int na = space.local_dim(a);
  const int nb = interior ? space.local_dim(face.minus) : 0;
  const int n = na + nb;

  // Concatenated tables over [a | b]: jump of phi, average flux of phi
  // (with the e^lambda weight), and d(average flux of lambda)/d(e^lambda).
  Eigen::MatrixXd jv(nq, n), af(nq, n), pf(nq, n);
  const BasisValues &ba = cache_.face_plus[f];
  const auto la = lambda.segment(space.offset(a), na);
  const Eigen::ArrayXd lam_a = (ba.value * la).array();
  const Eigen::ArrayXd ea = lam_a.exp();
  const Eigen::MatrixXd fna = normal_flux_table(ba, model_->diffusion[a], face.normal);
  const Eigen::ArrayXd ga = (fna * la).array();
  jv.leftCols(na) = ba.value;
  af.leftCols(na) = (avg * ea).matrix().asDiagonal() * fna;
  pf.leftCols(na) = (avg * ea * ga).matrix().asDiagonal() * ba.value;
  Eigen::ArrayXd q_avg = avg * ea * ga;
  Eigen::ArrayXd jump = lam_a;

  Eigen::ArrayXd eb, lam_b;
  Eigen::MatrixXd fnb;
  if (interior) {
    const int b = face.minus;
    const BasisValues &bb = cache_.face_minus[f];
    const auto lb = lambda.segment(space.offset(b), nb);
    lam_b = (bb.value * lb).array();
    eb = lam_b.exp();
    fnb = normal_flux_table(bb, model_->diffusion[b], face.normal);
    const Eigen::ArrayXd gb = (fnb * lb).array();
    jv.rightCols(nb) = -bb.value;
    af.rightCols(nb) = (avg * eb).matrix().asDiagonal() * fnb;
    pf.rightCols(nb) = (avg * eb * gb).matrix().asDiagonal() * bb.value;
    q_avg += avg * eb * gb;
    jump -= lam_b;
  } else {
    jump -= step.g_new[f];
  }
  if (!ea.allFinite())
    overflow_error(space, lambda, a);
  if (interior && !eb.allFinite())
    overflow_error(space, lambda, face.minus);

  const Eigen::ArrayXd pen = theta * eta.array() + eps_dt * ctx_->zeta[f];
  Local out;
  out.r = jv.transpose() * (w * (-theta * q_avg + pen * jump)).matrix() -
          theta * (af.transpose() * (w * jump).matrix());
  if (!jac)
    return out;

  const Eigen::VectorXd wv = w.matrix();
  out.J = -theta * (jv.transpose() * (wv.asDiagonal() * (af + pf)));
  out.J.noalias() -= theta * (af.transpose() * (wv.asDiagonal() * jv));
  out.J.noalias() += jv.transpose() * ((w * pen).matrix().asDiagonal() * jv);
  // d(average flux of phi_I)/d lambda_J, same side only.
  const Eigen::ArrayXd cj = -theta * w * jump * avg;
  out.J.topLeftCorner(na, na).noalias() +=
      fna.transpose() * ((cj * ea).matrix().asDiagonal() * ba.value);
  if (interior)
    out.J.bottomRightCorner(nb, nb).noalias() +=
        fnb.transpose() * ((cj * eb).matrix().asDiagonal() * cache_.face_minus[f].value);
  if (linf) {
    // d eta_q = eta_q (d lambda_s(x_q) + d |lambda|_inf,K*), s the side with
    // the larger trace at x_q and K* the element with the larger norm.
    const Eigen::ArrayXd v = theta * w * eta.array() * jump;
    Eigen::MatrixXd side = Eigen::MatrixXd::Zero(nq, n);
    for (int i = 0; i < nq; ++i) {
      if (interior && lam_b[i] > lam_a[i])
        side.row(i).tail(nb) = cache_.face_minus[f].value.row(i);
      else
        side.row(i).head(na) = ba.value.row(i);
    }
    const Eigen::VectorXd jvv = jv.transpose() * v.matrix();
    out.J.noalias() += jv.transpose() * (v.matrix().asDiagonal() * side);
    if (interior && (*linf)[face.minus].value > (*linf)[a].value)
      out.J.rightCols(nb).noalias() += jvv * (*linf)[face.minus].grad.transpose();
    else
      out.J.leftCols(na).noalias() += jvv * (*linf)[a].grad.transpose();
  }
  return out;
}

LinearSystem FisherOperator::assemble(const Step &step, const Eigen::VectorXd &lambda,
                                      const PenaltyField *eta, Execution exec,
                                      bool jac, bool exact_eta) const {
  const DGSpace &space = *space_;
  const PolyMesh &mesh = space.mesh();
  if (lambda.size() != space.num_dofs())
    throw std::invalid_argument("FisherOperator: state does not match space");
  PenaltyField own;
  if (!eta) {
    own = penalty_eta(space, *ctx_, lambda);
    eta = &own;
  }
  std::vector<LinfSensitivity> linf;
  if (exact_eta)
    linf = element_linf_sensitivity(space, lambda);
  const int ne = space.num_elements();
  const int nf = mesh.num_faces();
  std::vector<Local> elem(ne), face(nf);
  for_each_index(ne, exec, [&](int k) { elem[k] = element_kernel(step, lambda, k, jac); });
  for_each_index(nf, exec, [&](int f) {
    if (!mesh.faces[f].is_neumann())
      face[f] = face_kernel(step, lambda, eta->eta[f], f, jac, exact_eta ? &linf : nullptr);
  });

  LinearSystem out;
  out.residual = step.explicit_part;
  if (jac)
    out.matrix = pattern_.zero_matrix();
  for (int k = 0; k < ne; ++k) {
    out.residual.segment(space.offset(k), space.local_dim(k)) += elem[k].r;
    if (jac)
      pattern_.add_block(out.matrix, k, k, elem[k].J);
  }
  for (int f = 0; f < nf; ++f) {
    const Face &fc = mesh.faces[f];
    if (fc.is_neumann())
      continue;
    const int a = fc.plus;
    const int na = space.local_dim(a);
    out.residual.segment(space.offset(a), na) += face[f].r.head(na);
    if (jac)
      pattern_.add_block(out.matrix, a, a, face[f].J.topLeftCorner(na, na));
    if (fc.is_interior()) {
      const int b = fc.minus;
      const int nb = space.local_dim(b);
      out.residual.segment(space.offset(b), nb) += face[f].r.tail(nb);
      if (jac) {
        pattern_.add_block(out.matrix, a, b, face[f].J.topRightCorner(na, nb));
        pattern_.add_block(out.matrix, b, a, face[f].J.bottomLeftCorner(nb, na));
        pattern_.add_block(out.matrix, b, b, face[f].J.bottomRightCorner(nb, nb));
      }
    }
  }
  if (!out.residual.allFinite())
    throw std::overflow_error("non-finite residual (max lambda " +
                              std::to_string(lambda.maxCoeff()) + ")");
  return out;
}

Eigen::VectorXd FisherOperator::residual(const Step &step, const Eigen::VectorXd &lambda,
                                         const PenaltyField *eta, Execution exec) const {
  return assemble(step, lambda, eta, exec, false).residual;
}

LinearSystem FisherOperator::linearize(const Step &step, const Eigen::VectorXd &lambda,
                                       const PenaltyField *eta, Execution exec) const {
  return assemble(step, lambda, eta, exec, true);
}

LinearSystem FisherOperator::linearize_exact(const Step &step, const Eigen::VectorXd &lambda,
                                             Execution exec) const {
  return assemble(step, lambda, nullptr, exec, true, true);
}

// ---------------------------------------------------------------------------

RegularizationMatrices regularization_matrices(const DGSpace &space,
                                               const ModelData &model,
                                               const PenaltyContext &ctx) {
  const PolyMesh &mesh = space.mesh();
  const BlockPattern pattern(space);
  RegularizationMatrices out{pattern.zero_matrix(), pattern.zero_matrix(),
                             pattern.zero_matrix()};
  for (int k = 0; k < space.num_elements(); ++k) {
    const QuadRule &q = space.element_rule(k);
    const BasisValues b = space.eval_basis(k, q.points);
    const Eigen::VectorXd w = weights_of(q).matrix();
    const Tensor2 &d = model.diffusion[k];
    pattern.add_block(out.mass, k, k, b.value.transpose() * w.asDiagonal() * b.value);
    const Eigen::MatrixXd gx = d(0, 0) * b.dx + d(0, 1) * b.dy;
    const Eigen::MatrixXd gy = d(1, 0) * b.dx + d(1, 1) * b.dy;
    pattern.add_block(out.stiffness, k, k,
                      b.dx.transpose() * w.asDiagonal() * gx +
                          b.dy.transpose() * w.asDiagonal() * gy);
  }
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face &face = mesh.faces[f];
    if (face.is_neumann())
      continue;
    const QuadRule &q = space.face_rule(f);
    const Eigen::VectorXd wz = weights_of(q).matrix() * ctx.zeta[f];
    const BasisValues ba = space.eval_basis(face.plus, q.points);
    pattern.add_block(out.jump, face.plus, face.plus,
                      ba.value.transpose() * wz.asDiagonal() * ba.value);
    if (face.is_interior()) {
      const BasisValues bb = space.eval_basis(face.minus, q.points);
      const Eigen::MatrixXd ab = ba.value.transpose() * wz.asDiagonal() * bb.value;
      pattern.add_block(out.jump, face.plus, face.minus, -ab);
      pattern.add_block(out.jump, face.minus, face.plus, -ab.transpose());
      pattern.add_block(out.jump, face.minus, face.minus,
                        bb.value.transpose() * wz.asDiagonal() * bb.value);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

BaselineOperator::BaselineOperator(const DGSpace &space, const ModelData &model,
                                   const PenaltyContext &ctx)
    : space_(&space), model_(&model), ctx_(&ctx), pattern_(space), cache_(space) {}

LinearSystem BaselineOperator::assemble(const Eigen::VectorXd &c_old, double t_new,
                                        double dt, Execution exec) const {
  const DGSpace &space = *space_;
  const PolyMesh &mesh = space.mesh();
  if (c_old.size() != space.num_dofs())
    throw std::invalid_argument("BaselineOperator: state does not match space");
  if (!(dt > 0.0))
    throw std::invalid_argument("BaselineOperator: dt must be positive");
  const int ne = space.num_elements();
  const int nf = mesh.num_faces();
  struct Local {
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
  };
  std::vector<Local> elem(ne), face(nf);

  for_each_index(ne, exec, [&](int k) {
    const QuadRule &q = space.element_rule(k);
    const BasisValues &b = cache_.element[k];
    const auto w = weights_of(q);
    const Tensor2 &d = model_->diffusion[k];
    const double alpha = model_->alpha[k];
    const Eigen::ArrayXd co =
        (b.value * c_old.segment(space.offset(k), space.local_dim(k))).array();
    Eigen::ArrayXd f(q.size());
    for (std::size_t i = 0; i < q.size(); ++i)
      f[i] = model_->forcing_at(q.points[i], t_new);
    const Eigen::ArrayXd m = w * (1.0 / dt - alpha + alpha * co);
    const Eigen::MatrixXd gx = d(0, 0) * b.dx + d(0, 1) * b.dy;
    const Eigen::MatrixXd gy = d(1, 0) * b.dx + d(1, 1) * b.dy;
    const Eigen::VectorXd wv = w.matrix();
    elem[k].J = b.value.transpose() * m.matrix().asDiagonal() * b.value +
                b.dx.transpose() * wv.asDiagonal() * gx +
                b.dy.transpose() * wv.asDiagonal() * gy;
    elem[k].r = b.value.transpose() * (w * (co / dt + f)).matrix();
  });

  for_each_index(nf, exec, [&](int f) {
    const Face &fc = mesh.faces[f];
    if (fc.is_neumann())
      return;
    const QuadRule &q = space.face_rule(f);
    const auto w = weights_of(q);
    const int nq = static_cast<int>(q.size());
    const bool interior = fc.is_interior();
    const double avg = interior ? 0.5 : 1.0;
    const int na = space.local_dim(fc.plus);
    const int nb = interior ? space.local_dim(fc.minus) : 0;
    Eigen::MatrixXd jv(nq, na + nb), af(nq, na + nb);
    const BasisValues &ba = cache_.face_plus[f];
    jv.leftCols(na) = ba.value;
    af.leftCols(na) = avg * normal_flux_table(ba, model_->diffusion[fc.plus], fc.normal);
    if (interior) {
      const BasisValues &bb = cache_.face_minus[f];
      jv.rightCols(nb) = -bb.value;
      af.rightCols(nb) =
          avg * normal_flux_table(bb, model_->diffusion[fc.minus], fc.normal);
    }
    const Eigen::VectorXd wv = w.matrix();
    const Eigen::VectorXd wz = wv * ctx_->zeta[f];
    face[f].J = jv.transpose() * wz.asDiagonal() * jv -
                jv.transpose() * wv.asDiagonal() * af -
                af.transpose() * wv.asDiagonal() * jv;
    face[f].r = Eigen::VectorXd::Zero(na + nb);
    if (!interior) {
      Eigen::ArrayXd g(nq);
      for (int i = 0; i < nq; ++i)
        g[i] = std::exp(model_->dirichlet_at(q.points[i], t_new));
      face[f].r = jv.transpose() * (w * g * ctx_->zeta[f]).matrix() -
                  af.transpose() * (w * g).matrix();
    }
  });

  LinearSystem out;
  out.residual = Eigen::VectorXd::Zero(space.num_dofs());
  out.matrix = pattern_.zero_matrix();
  for (int k = 0; k < ne; ++k) {
    out.residual.segment(space.offset(k), space.local_dim(k)) += elem[k].r;
    pattern_.add_block(out.matrix, k, k, elem[k].J);
  }
  for (int f = 0; f < nf; ++f) {
    const Face &fc = mesh.faces[f];
    if (fc.is_neumann())
      continue;
    const int a = fc.plus;
    const int na = space.local_dim(a);
    out.residual.segment(space.offset(a), na) += face[f].r.head(na);
    pattern_.add_block(out.matrix, a, a, face[f].J.topLeftCorner(na, na));
    if (fc.is_interior()) {
      const int b = fc.minus;
      const int nb = space.local_dim(b);
      out.residual.segment(space.offset(b), nb) += face[f].r.tail(nb);
      pattern_.add_block(out.matrix, a, b, face[f].J.topRightCorner(na, nb));
      pattern_.add_block(out.matrix, b, a, face[f].J.bottomLeftCorner(nb, na));
      pattern_.add_block(out.matrix, b, b, face[f].J.bottomRightCorner(nb, nb));
    }
  }
  return out;
}

} // namespace polyfk
