#pragma once

#include "polyfk/dgspace.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace polyfk {

using Tensor2 = Eigen::Matrix2d;
using SpaceTimeField = std::function<double(const Point &, double)>;

/// Which variable a dof vector represents.
enum class Variable {
  log_concentration, // lambda, with c = exp(lambda)
  concentration,     // c directly (baseline scheme)
};

struct State {
  Eigen::VectorXd dofs;
  double time = 0.0;
  Variable variable = Variable::log_concentration;
};

/// Physical data of the Fisher-Kolmogorov problem, elementwise constant
/// tensors and reaction rates.
///
/// `forcing` is the source f of the concentration equation and
/// `dirichlet` the boundary datum lambda_D of the log variable (so
/// c_D = exp(lambda_D)); empty callables mean zero.
struct ModelData {
  std::vector<Tensor2> diffusion;
  std::vector<double> alpha;
  SpaceTimeField forcing;
  SpaceTimeField dirichlet;
  double d0 = 0.0; // min eigenvalue of D over elements
  double D0 = 0.0; // max eigenvalue of D over elements

  /// Validates symmetry and positive definiteness, sets d0/D0.
  void finalize();
  double forcing_at(const Point &x, double t) const {
    return forcing ? forcing(x, t) : 0.0;
  }
  double dirichlet_at(const Point &x, double t) const {
    return dirichlet ? dirichlet(x, t) : 0.0;
  }
  /// D_K, the largest eigenvalue of the tensor on element k.
  double spectral_bound(int k) const;
};

/// D = d_ext I + d_axn n n^T with n normalized.
Tensor2 axonal_tensor(double d_ext, double d_axn, const Point &direction);

double max_eigenvalue(const Tensor2 &t);
double min_eigenvalue(const Tensor2 &t);

/// Uniform isotropic data: D = d I and constant alpha on every element.
ModelData isotropic_model(const PolyMesh &mesh, double d, double alpha);

} // namespace polyfk
