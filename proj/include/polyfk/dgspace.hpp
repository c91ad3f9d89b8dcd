#pragma once

#include "polyfk/mesh.hpp"
#include "polyfk/quadrature.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace polyfk {

using ScalarField = std::function<double(const Point &)>;

/// Basis values at a set of points: rows are points, columns are modes.
struct BasisValues {
  Eigen::MatrixXd value;
  Eigen::MatrixXd dx;
  Eigen::MatrixXd dy;
};

/// A discrete field evaluated at points: value and gradient per point.
struct FieldValues {
  Eigen::VectorXd value;
  Eigen::VectorXd dx;
  Eigen::VectorXd dy;
};

/// Quadrature orders as offsets from 2 p_K.
struct QuadratureOptions {
  /// Order used for every integral with e^lambda factors (and, for
  /// simplicity, for all element and face integrals): 2 p_K + offset.
  int nonlinear_offset = 4;
};

/// Number of modes of total degree <= p in two variables.
constexpr int modal_dimension(int p) { return (p + 1) * (p + 2) / 2; }

/// Legendre tensor modes of total degree <= p on a box, orthonormal in
/// L2(box). Mode 0 is the constant 1/sqrt(|box|).
class ModalBasis {
public:
  ModalBasis(const BoundingBox &box, int degree);

  int degree() const { return degree_; }
  int dimension() const { return modal_dimension(degree_); }
  BasisValues evaluate(std::span<const Point> points) const;
  /// Exponents (i, j) of mode m: L_i(x) L_j(y).
  std::pair<int, int> exponents(int m) const { return modes_[m]; }

private:
  BoundingBox box_;
  int degree_;
  std::vector<std::pair<int, int>> modes_;
};

/// Discontinuous piecewise polynomial space with elementwise degree.
///
/// Dofs are element-major; element K owns [offset(K), offset(K)+dim(K)).
/// Element and face quadrature rules are built once at construction.
class DGSpace {
public:
  DGSpace(std::shared_ptr<const PolyMesh> mesh, std::vector<int> degrees,
          QuadratureOptions quad = {});
  DGSpace(std::shared_ptr<const PolyMesh> mesh, int degree,
          QuadratureOptions quad = {});

  const PolyMesh &mesh() const { return *mesh_; }
  std::shared_ptr<const PolyMesh> mesh_ptr() const { return mesh_; }
  int num_elements() const { return mesh_->num_elements(); }
  int num_dofs() const { return offsets_.back(); }
  int degree(int k) const { return degrees_[k]; }
  int max_degree() const;
  int local_dim(int k) const { return offsets_[k + 1] - offsets_[k]; }
  int offset(int k) const { return offsets_[k]; }
  const ModalBasis &basis(int k) const { return bases_[k]; }
  const QuadratureOptions &quadrature_options() const { return quad_; }

  const QuadRule &element_rule(int k) const { return element_rules_[k]; }
  const QuadRule &face_rule(int f) const { return face_rules_[f]; }
  int element_order(int k) const;
  int face_order(int f) const;

  BasisValues eval_basis(int k, std::span<const Point> points) const {
    return bases_[k].evaluate(points);
  }

  /// Values and gradients of the discrete field `dofs` on element k.
  FieldValues evaluate(const Eigen::VectorXd &dofs, int k,
                       std::span<const Point> points) const;
  double evaluate_at(const Eigen::VectorXd &dofs, int k, const Point &p) const;

  /// Elementwise L2 projection. Throws when f is not finite at a quadrature
  /// point.
  Eigen::VectorXd project(const ScalarField &f) const;

  /// Element mass matrix under the element rule.
  Eigen::MatrixXd mass_matrix(int k) const;

  /// Sample points of element k used for L-infinity estimates: element
  /// quadrature points, polygon vertices and the quadrature points of its
  /// faces.
  std::vector<Point> linf_sample_points(int k) const;

private:
  std::shared_ptr<const PolyMesh> mesh_;
  std::vector<int> degrees_;
  std::vector<int> offsets_;
  std::vector<ModalBasis> bases_;
  QuadratureOptions quad_;
  std::vector<QuadRule> element_rules_;
  std::vector<QuadRule> face_rules_;
};

} // namespace polyfk
