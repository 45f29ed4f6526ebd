#include <limits>
#include "qdyn/linalg.hpp"

#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace qdyn {

namespace {

void require_square(const ComplexMatrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw LinalgError(std::string(what) + ": expected a non-empty square matrix, got " +
                      std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
}

void require_finite(const ComplexMatrix& a, const char* what) {
  if (!all_finite(a)) throw LinalgError(std::string(what) + ": non-finite entries");
}

constexpr double kHermitianTolerance = 1e-10;
constexpr double kPsdTolerance = 1e-10;

}  // namespace

bool all_finite(const ComplexMatrix& a) {
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (!std::isfinite(a(i, j).real()) || !std::isfinite(a(i, j).imag())) return false;
  return true;
}

double hermiticity_defect(const ComplexMatrix& a) {
  if (a.rows() != a.cols()) return INFINITY;
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

ComplexMatrix mat_exp(const ComplexMatrix& a) {
  require_square(a, "mat_exp");
  require_finite(a, "mat_exp");
  if (a.isZero(0.0)) return ComplexMatrix::Identity(a.rows(), a.cols());
  return a.exp();
}

HermitianEigen herm_eig(const ComplexMatrix& a) {
  require_square(a, "herm_eig");
  require_finite(a, "herm_eig");
  const double defect = hermiticity_defect(a);
  if (defect > kHermitianTolerance) {
    throw LinalgError("herm_eig: matrix is not Hermitian (max |A - A^dag| = " +
                      std::to_string(defect) + ")");
  }
  // Symmetrize so the solver sees an exactly Hermitian matrix.
  const ComplexMatrix h = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h);
  if (solver.info() != Eigen::Success) throw LinalgError("herm_eig: eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

ComplexMatrix psd_sqrt(const ComplexMatrix& a) {
  HermitianEigen eig = herm_eig(a);
  const double scale = std::max(1.0, eig.values.cwiseAbs().maxCoeff());
  const double largest = eig.values.cwiseAbs().maxCoeff();
  // Eigenvalues at the roundoff level of the decomposition are treated as exact zeros.
  const double noise = 16.0 * static_cast<double>(eig.values.size()) *
                       std::numeric_limits<double>::epsilon() * largest;
  RealVector roots(eig.values.size());
  for (Eigen::Index k = 0; k < eig.values.size(); ++k) {
    const double lambda = eig.values(k);
    if (lambda < -kPsdTolerance * scale) {
      throw LinalgError("psd_sqrt: matrix is not positive semidefinite (eigenvalue " +
                        std::to_string(lambda) + ")");
    }
    roots(k) = lambda <= noise ? 0.0 : std::sqrt(lambda);
  }
  return eig.vectors * roots.asDiagonal() * eig.vectors.adjoint();
}

ComplexVector vec(const ComplexMatrix& x) {
  return Eigen::Map<const ComplexVector>(x.data(), x.size());
}

ComplexMatrix unvec(const ComplexVector& v, int dim) {
  if (v.size() != static_cast<Eigen::Index>(dim) * dim) {
    throw LinalgError("unvec: vector length " + std::to_string(v.size()) +
                      " does not match dimension " + std::to_string(dim));
  }
  return Eigen::Map<const ComplexMatrix>(v.data(), dim, dim);
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

Complex trace_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  return (a.transpose().array() * b.array()).sum();
}

ComplexVector trace_functional(const ComplexMatrix& observable) {
  return vec(observable.transpose());
}

namespace pauli {

ComplexMatrix sigma_x() {
  ComplexMatrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

ComplexMatrix sigma_y() {
  ComplexMatrix m(2, 2);
  m << 0.0, -kI, kI, 0.0;
  return m;
}

ComplexMatrix sigma_z() {
  ComplexMatrix m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

ComplexMatrix sigma_minus() {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(1, 0) = 1.0;
  return m;
}

}  // namespace pauli

}  // namespace qdyn
