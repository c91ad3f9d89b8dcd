#pragma once

#include "polyfk/dgspace.hpp"
#include "polyfk/model.hpp"

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <vector>

namespace polyfk {

/// Face penalty data shared by the scheme, the DG norm and the forms.
struct PenaltyContext {
  double eta0 = 1.0;
  /// zeta per face; 0 on Neumann faces, where it is undefined.
  std::vector<double> zeta;
};

/// zeta on face f: eta0 {D_K}_A {p^2}_A / {h}_H on interior faces,
/// eta0 D_K p^2 / h on Dirichlet faces. Throws on Neumann faces.
double penalty_zeta(const DGSpace &space, const ModelData &model, int f, double eta0);

PenaltyContext make_penalty_context(const DGSpace &space, const ModelData &model,
                                    double eta0);

/// Approximate ||lambda||_{L^inf(K)} per element, sampled at
/// DGSpace::linf_sample_points.
std::vector<double> element_linf(const DGSpace &space, const Eigen::VectorXd &lambda);

/// |lambda|_inf,K with its derivative sign(lambda(x*)) phi(x*) with respect to
/// the element's coefficients, x* being the maximizing sample point.
struct LinfSensitivity {
  double value = 0.0;
  Eigen::VectorXd grad;
};
std::vector<LinfSensitivity> element_linf_sensitivity(const DGSpace &space,
                                                      const Eigen::VectorXd &lambda);

/// The state-dependent penalty eta(lambda) at the quadrature points of every
/// face. Entries for Neumann faces are empty.
struct PenaltyField {
  std::vector<Eigen::VectorXd> eta;
};

/// eta = max(e^lambda_+, e^lambda_-) max(e^{|lambda|_inf,K+}, e^{|lambda|_inf,K-}) zeta,
/// with the trace factor taken pointwise at the face quadrature points.
PenaltyField penalty_eta(const DGSpace &space, const PenaltyContext &ctx,
                         const Eigen::VectorXd &lambda);
/// Same, for a single face. Throws on Neumann faces.
Eigen::VectorXd penalty_eta(const DGSpace &space, const PenaltyContext &ctx,
                            const Eigen::VectorXd &lambda, int f);

/// A field that is smooth on each element, queried by element.
using ElementField = std::function<FieldValues(int k, std::span<const Point> pts)>;

ElementField discrete_field(const DGSpace &space, const Eigen::VectorXd &dofs);
/// exp(scale * v_h), with its gradient.
ElementField exp_field(const DGSpace &space, const Eigen::VectorXd &dofs,
                       double scale = 1.0);

/// A(u; v, w): the exponential-transform SIP form with homogeneous jumps on
/// Dirichlet faces ([[v]] = v n there).
double form_A(const DGSpace &space, const ModelData &model, const PenaltyContext &ctx,
              const Eigen::VectorXd &u, const Eigen::VectorXd &v,
              const Eigen::VectorXd &w);

/// Parts of the squared DG norm.
struct DGNormParts {
  double gradient = 0.0; // ||sqrt(D) grad_h v||^2
  double jump = 0.0;     // ||sqrt(zeta) [[v]]||^2 over interior and Dirichlet faces
  double total() const { return gradient + jump; }
};

/// DG norm of an elementwise field. On Dirichlet faces the jump is
/// v - g(x), with g = 0 when `dirichlet_datum` is empty.
DGNormParts dg_norm_parts(const DGSpace &space, const ModelData &model,
                          const PenaltyContext &ctx, const ElementField &v,
                          const ScalarField &dirichlet_datum = {});
double dg_norm(const DGSpace &space, const ModelData &model, const PenaltyContext &ctx,
               const ElementField &v, const ScalarField &dirichlet_datum = {});
double dg_norm(const DGSpace &space, const ModelData &model, const PenaltyContext &ctx,
               const Eigen::VectorXd &v);

/// s(x) = x (log x - 1) + 1, with s(0) = 1.
double entropy_density(double c);

/// S_h = int_Omega s(e^lambda) = int e^lambda (lambda - 1) + 1.
double discrete_entropy(const DGSpace &space, const Eigen::VectorXd &lambda);

/// Smallest C with ||v||^2_{dK} <= C (p^2/h) ||v||^2_K on element k, from the
/// generalized eigenproblem (boundary mass, p^2/h volume mass).
double inverse_trace_constant(const DGSpace &space, int k);
/// Maximum of inverse_trace_constant over elements.
double estimate_CI(const DGSpace &space);

/// eta0 = 16 C_I^2 D0, the penalty constant of the coercivity result.
double coercive_eta0(const DGSpace &space, const ModelData &model);

} // namespace polyfk
