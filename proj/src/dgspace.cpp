#include "polyfk/dgspace.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace polyfk {

namespace {

/// Legendre polynomials and derivatives up to degree p at x.
void legendre(int p, double x, double *val, double *der) {
  val[0] = 1.0;
  der[0] = 0.0;
  if (p == 0)
    return;
  val[1] = x;
  der[1] = 1.0;
  for (int n = 1; n < p; ++n) {
    val[n + 1] = ((2.0 * n + 1.0) * x * val[n] - n * val[n - 1]) / (n + 1.0);
    der[n + 1] = der[n - 1] + (2.0 * n + 1.0) * val[n];
  }
}

} // namespace

ModalBasis::ModalBasis(const BoundingBox &box, int degree)
    : box_(box), degree_(degree) {
  if (degree < 0)
    throw std::invalid_argument("ModalBasis: negative degree");
  if (!(box.width() > 0.0) || !(box.height() > 0.0))
    throw std::invalid_argument("ModalBasis: degenerate bounding box");
  for (int d = 0; d <= degree; ++d)
    for (int j = 0; j <= d; ++j)
      modes_.emplace_back(d - j, j);
}

BasisValues ModalBasis::evaluate(std::span<const Point> points) const {
  const int np = static_cast<int>(points.size());
  const int dim = dimension();
  BasisValues b;
  b.value.resize(np, dim);
  b.dx.resize(np, dim);
  b.dy.resize(np, dim);
  const Point c = box_.center();
  const double sx = 2.0 / box_.width();
  const double sy = 2.0 / box_.height();
  const double inv_sqrt_area = 1.0 / std::sqrt(box_.area());
  std::vector<double> lx(degree_ + 1), dlx(degree_ + 1), ly(degree_ + 1),
      dly(degree_ + 1), norm(degree_ + 1);
  for (int i = 0; i <= degree_; ++i)
    norm[i] = std::sqrt(2.0 * i + 1.0);
  for (int q = 0; q < np; ++q) {
    const double xi = (points[q].x() - c.x()) * sx;
    const double eta = (points[q].y() - c.y()) * sy;
    legendre(degree_, xi, lx.data(), dlx.data());
    legendre(degree_, eta, ly.data(), dly.data());
    for (int m = 0; m < dim; ++m) {
      const auto [i, j] = modes_[m];
      const double s = norm[i] * norm[j] * inv_sqrt_area;
      b.value(q, m) = s * lx[i] * ly[j];
      b.dx(q, m) = s * dlx[i] * sx * ly[j];
      b.dy(q, m) = s * lx[i] * dly[j] * sy;
    }
  }
  return b;
}

DGSpace::DGSpace(std::shared_ptr<const PolyMesh> mesh, std::vector<int> degrees,
                 QuadratureOptions quad)
    : mesh_(std::move(mesh)), degrees_(std::move(degrees)), quad_(quad) {
  if (!mesh_)
    throw std::invalid_argument("DGSpace: null mesh");
  const int ne = mesh_->num_elements();
  if (static_cast<int>(degrees_.size()) != ne)
    throw std::invalid_argument("DGSpace: degree list does not match element count");
  offsets_.resize(ne + 1);
  offsets_[0] = 0;
  bases_.reserve(ne);
  for (int k = 0; k < ne; ++k) {
    if (degrees_[k] < 1)
      throw std::invalid_argument("DGSpace: polynomial degree must be >= 1 (element " +
                                  std::to_string(k) + " has " +
                                  std::to_string(degrees_[k]) + ")");
    offsets_[k + 1] = offsets_[k] + modal_dimension(degrees_[k]);
    bases_.emplace_back(mesh_->bbox[k], degrees_[k]);
  }
  element_rules_.reserve(ne);
  for (int k = 0; k < ne; ++k)
    element_rules_.push_back(element_quadrature(*mesh_, k, element_order(k)));
  face_rules_.reserve(mesh_->num_faces());
  for (int f = 0; f < mesh_->num_faces(); ++f)
    face_rules_.push_back(face_quadrature(mesh_->faces[f], face_order(f)));
}

DGSpace::DGSpace(std::shared_ptr<const PolyMesh> mesh, int degree,
                 QuadratureOptions quad)
    : DGSpace(mesh, std::vector<int>(mesh ? mesh->num_elements() : 0, degree), quad) {}

int DGSpace::max_degree() const {
  return *std::max_element(degrees_.begin(), degrees_.end());
}

int DGSpace::element_order(int k) const {
  return 2 * degrees_[k] + quad_.nonlinear_offset;
}

int DGSpace::face_order(int f) const {
  const Face &face = mesh_->faces[f];
  int p = degrees_[face.plus];
  if (face.is_interior())
    p = std::max(p, degrees_[face.minus]);
  return 2 * p + quad_.nonlinear_offset;
}

FieldValues DGSpace::evaluate(const Eigen::VectorXd &dofs, int k,
                              std::span<const Point> points) const {
  const BasisValues b = eval_basis(k, points);
  const auto local = dofs.segment(offset(k), local_dim(k));
  return {b.value * local, b.dx * local, b.dy * local};
}

double DGSpace::evaluate_at(const Eigen::VectorXd &dofs, int k, const Point &p) const {
  const Point pts[1] = {p};
  return evaluate(dofs, k, pts).value(0);
}

Eigen::MatrixXd DGSpace::mass_matrix(int k) const {
  const QuadRule &q = element_rules_[k];
  const BasisValues b = eval_basis(k, q.points);
  const Eigen::Map<const Eigen::VectorXd> w(q.weights.data(), q.size());
  return b.value.transpose() * w.asDiagonal() * b.value;
}

Eigen::VectorXd DGSpace::project(const ScalarField &f) const {
  Eigen::VectorXd out(num_dofs());
  for (int k = 0; k < num_elements(); ++k) {
    const QuadRule &q = element_rules_[k];
    const BasisValues b = eval_basis(k, q.points);
    Eigen::VectorXd fw(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double v = f(q.points[i]);
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os.precision(17);
        os << "project: field is not finite at (" << q.points[i].x() << ", "
           << q.points[i].y() << ") in element " << k;
        throw std::domain_error(os.str());
      }
      fw[i] = v * q.weights[i];
    }
    const Eigen::Map<const Eigen::VectorXd> w(q.weights.data(), q.size());
    const Eigen::MatrixXd m = b.value.transpose() * w.asDiagonal() * b.value;
    out.segment(offset(k), local_dim(k)) = m.llt().solve(b.value.transpose() * fw);
  }
  return out;
}

std::vector<Point> DGSpace::linf_sample_points(int k) const {
  std::vector<Point> pts = element_rules_[k].points;
  for (int v : mesh_->elements[k])
    pts.push_back(mesh_->vertices[v]);
  for (int f : mesh_->element_faces[k]) {
    const auto &fp = face_rules_[f].points;
    pts.insert(pts.end(), fp.begin(), fp.end());
  }
  return pts;
}

} // namespace polyfk
