#include "polyfk/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace polyfk {

double max_eigenvalue(const Tensor2 &t) {
  const double m = 0.5 * (t(0, 0) + t(1, 1));
  const double r = std::hypot(0.5 * (t(0, 0) - t(1, 1)), t(0, 1));
  return m + r;
}

double min_eigenvalue(const Tensor2 &t) {
  const double m = 0.5 * (t(0, 0) + t(1, 1));
  const double r = std::hypot(0.5 * (t(0, 0) - t(1, 1)), t(0, 1));
  return m - r;
}

Tensor2 axonal_tensor(double d_ext, double d_axn, const Point &direction) {
  const double n = direction.norm();
  if (!(n > 0.0))
    throw std::invalid_argument("axonal_tensor: zero fiber direction");
  const Point u = direction / n;
  return d_ext * Tensor2::Identity() + d_axn * u * u.transpose();
}

void ModelData::finalize() {
  if (diffusion.empty())
    throw std::invalid_argument("ModelData: no diffusion tensors");
  if (alpha.size() != diffusion.size())
    throw std::invalid_argument("ModelData: alpha and diffusion sizes differ");
  d0 = std::numeric_limits<double>::infinity();
  D0 = 0.0;
  for (std::size_t k = 0; k < diffusion.size(); ++k) {
    const Tensor2 &t = diffusion[k];
    if (std::abs(t(0, 1) - t(1, 0)) > 1e-12 * std::max(1.0, t.norm()))
      throw std::invalid_argument("ModelData: diffusion tensor on element " +
                                  std::to_string(k) + " is not symmetric");
    const double lo = min_eigenvalue(t);
    if (!(lo > 0.0))
      throw std::invalid_argument("ModelData: diffusion tensor on element " +
                                  std::to_string(k) + " is not positive definite");
    if (!std::isfinite(alpha[k]))
      throw std::invalid_argument("ModelData: reaction rate on element " +
                                  std::to_string(k) + " is not finite");
    d0 = std::min(d0, lo);
    D0 = std::max(D0, max_eigenvalue(t));
  }
}

double ModelData::spectral_bound(int k) const { return max_eigenvalue(diffusion[k]); }

ModelData isotropic_model(const PolyMesh &mesh, double d, double alpha) {
  ModelData m;
  m.diffusion.assign(mesh.num_elements(), d * Tensor2::Identity());
  m.alpha.assign(mesh.num_elements(), alpha);
  m.finalize();
  return m;
}

} // namespace polyfk
