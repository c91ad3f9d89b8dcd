#pragma once

#include "polyfk/dgspace.hpp"
#include "polyfk/forms.hpp"
#include "polyfk/model.hpp"
#include "polyfk/parallel.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <vector>

namespace polyfk {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// theta-method parameters of one step.
struct ThetaParams {
  double theta = 1.0;
  double dt = 0.0;
  double epsilon = 0.0;
};

struct LinearSystem {
  Eigen::VectorXd residual; // or right-hand side for linear schemes
  SparseMatrix matrix;
};

/// DG block sparsity: block (K, K') is present iff K = K' or K and K' share a
/// face. All matrices assembled on a space share this pattern, so a sparse
/// factorization can reuse its symbolic analysis.
class BlockPattern {
public:
  explicit BlockPattern(const DGSpace &space);

  /// Compressed matrix with every pattern entry stored as an explicit zero.
  const SparseMatrix &zero_matrix() const { return zero_; }
  /// m(rows of r, cols of c) += block. `m` must have this pattern.
  void add_block(SparseMatrix &m, int r, int c, const Eigen::MatrixXd &block) const;
  /// Sorted element neighbors of k, including k itself.
  const std::vector<int> &neighbors(int k) const { return neighbors_[k]; }

private:
  const DGSpace *space_;
  std::vector<std::vector<int>> neighbors_;
  // row_start_[c][i]: offset of neighbor i's rows inside each column of c.
  std::vector<std::vector<int>> row_start_;
  SparseMatrix zero_;
};

/// Basis tables at the quadrature points of every element and face, built
/// once per space.
struct BasisCache {
  explicit BasisCache(const DGSpace &space);
  std::vector<BasisValues> element;
  std::vector<BasisValues> face_plus;
  std::vector<BasisValues> face_minus; // empty for boundary faces
};

/// Residual and Jacobian of the fully discrete exponential-transform scheme
///
///   (e^l - e^lo)/dt - (alpha C (1 - C), phi) + eps/dt [(l, phi) + (D grad l, grad phi)
///   + sum zeta [[l - g]][[phi]]] + theta A(l; l, phi) + (1 - theta) A(lo; lo, phi)
///   - theta (f^new, phi) - (1 - theta) (f^old, phi),    C = theta e^l + (1 - theta) e^lo,
///
/// with Dirichlet data entering through [[l]] = (l - g) n. The Jacobian
/// freezes eta(l) at the linearization point.
class FisherOperator {
public:
  FisherOperator(const DGSpace &space, const ModelData &model, const PenaltyContext &ctx);

  /// Everything that depends only on the old state and the step times.
  struct Step {
    Eigen::VectorXd lambda_old;
    double t_old = 0.0;
    double t_new = 0.0;
    ThetaParams params;
    Eigen::VectorXd explicit_part; // (1-theta)[A(lo;lo,phi) - (f^old,phi)]
    std::vector<Eigen::ArrayXd> exp_old;  // e^lo at element quadrature points
    std::vector<Eigen::ArrayXd> f_new;    // f(t_new) at element quadrature points
    std::vector<Eigen::ArrayXd> g_new;    // lambda_D(t_new) at Dirichlet face points
  };

  Step begin_step(const Eigen::VectorXd &lambda_old, double t_old, double t_new,
                  const ThetaParams &params, Execution exec = Execution::parallel) const;

  /// Residual; eta is evaluated at `lambda` unless a frozen field is given.
  Eigen::VectorXd residual(const Step &step, const Eigen::VectorXd &lambda,
                           const PenaltyField *eta = nullptr,
                           Execution exec = Execution::parallel) const;

  /// Residual and Jacobian with eta frozen at `lambda` (or at `eta`).
  LinearSystem linearize(const Step &step, const Eigen::VectorXd &lambda,
                         const PenaltyField *eta = nullptr,
                         Execution exec = Execution::parallel) const;

  /// Residual and Jacobian including the derivative of eta(lambda): the
  /// pointwise larger trace and the maximizing L-infinity sample are held
  /// fixed, so the result is exact wherever eta is differentiable.
  LinearSystem linearize_exact(const Step &step, const Eigen::VectorXd &lambda,
                               Execution exec = Execution::parallel) const;

  const DGSpace &space() const { return *space_; }
  const ModelData &model() const { return *model_; }
  const PenaltyContext &penalty() const { return *ctx_; }
  const BlockPattern &pattern() const { return pattern_; }

private:
  struct Local {
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
  };
  Local element_kernel(const Step &step, const Eigen::VectorXd &lambda, int k,
                       bool jac) const;
  Local face_kernel(const Step &step, const Eigen::VectorXd &lambda,
                    const Eigen::VectorXd &eta, int f, bool jac,
                    const std::vector<LinfSensitivity> *linf = nullptr) const;
  Eigen::VectorXd old_face_part(const Eigen::VectorXd &lambda_old,
                                const Eigen::VectorXd &eta_old, double t_old, int f) const;
  LinearSystem assemble(const Step &step, const Eigen::VectorXd &lambda,
                        const PenaltyField *eta, Execution exec, bool jac,
                        bool exact_eta = false) const;

  const DGSpace *space_;
  const ModelData *model_;
  const PenaltyContext *ctx_;
  BlockPattern pattern_;
  BasisCache cache_;
};

/// Independent scalar-loop implementation of FisherOperator::linearize, kept
/// as a testing oracle and benchmark baseline. Serial and slow.
LinearSystem reference_linearize(const DGSpace &space, const ModelData &model,
                                 const PenaltyContext &ctx,
                                 const Eigen::VectorXd &lambda_old,
                                 const Eigen::VectorXd &lambda, double t_old,
                                 double t_new, const ThetaParams &params);

/// Matrices of the eps/dt regularization: (u, v), (D grad u, grad v) and
/// sum_F zeta [[u]][[v]] (homogeneous jumps on Dirichlet faces).
struct RegularizationMatrices {
  SparseMatrix mass;
  SparseMatrix stiffness;
  SparseMatrix jump;
};
RegularizationMatrices regularization_matrices(const DGSpace &space,
                                               const ModelData &model,
                                               const PenaltyContext &ctx);

/// Linear system of one step of the baseline scheme in the concentration
/// variable:
///
///   (c - c_old)/dt + a_SIP(c, phi) - (alpha c, phi) + (alpha c c_old, phi) = (f^new, phi)
///
/// with Dirichlet value exp(lambda_D) imposed weakly through the SIP face terms.
class BaselineOperator {
public:
  BaselineOperator(const DGSpace &space, const ModelData &model, const PenaltyContext &ctx);

  /// Matrix and right-hand side for the new concentration.
  LinearSystem assemble(const Eigen::VectorXd &c_old, double t_new, double dt,
                        Execution exec = Execution::parallel) const;

  const BlockPattern &pattern() const { return pattern_; }

private:
  const DGSpace *space_;
  const ModelData *model_;
  const PenaltyContext *ctx_;
  BlockPattern pattern_;
  BasisCache cache_;
};

} // namespace polyfk
