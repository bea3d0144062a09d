#include "bdmec/manifold.hpp"

#include <Eigen/SVD>
#include <stdexcept>

namespace bdmec {

CMatrix riemannian_gradient(const CMatrix& grad_euclid, const CMatrix& u) {
  if (grad_euclid.rows() != u.rows() || grad_euclid.cols() != u.cols()) {
    throw std::invalid_argument("riemannian_gradient: dimension mismatch");
  }
  return grad_euclid * u.adjoint() - u * grad_euclid.adjoint();
}

CMatrix taylor_rotation(const CMatrix& xi, double kappa) {
  const CMatrix m = kappa * xi;
  const CMatrix m2 = m * m;
  return CMatrix::Identity(xi.rows(), xi.cols()) - m + 0.5 * m2 - (m2 * m) / 6.0;
}

CMatrix polar_project(const CMatrix& a) {
  Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

CMatrix rotate(const CMatrix& u, const CMatrix& xi, double kappa) {
  return polar_project(taylor_rotation(xi, kappa) * u);
}

}  // namespace bdmec
