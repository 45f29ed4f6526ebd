#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qdyn {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

/// Largest Hilbert-space dimension accepted anywhere in the library.
inline constexpr int kMaxDimension = 32;

/// Raised for malformed numerical input (shape, finiteness, hermiticity, positivity).
class LinalgError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// e^A by Pade scaling and squaring.
ComplexMatrix mat_exp(const ComplexMatrix& a);

struct HermitianEigen {
  RealVector values;     // ascending
  ComplexMatrix vectors; // columns, orthonormal
};

/// Eigendecomposition of a Hermitian matrix (hermiticity checked to 1e-10).
HermitianEigen herm_eig(const ComplexMatrix& a);

/// Hermitian square root of a positive semidefinite matrix. Eigenvalues in
/// [-1e-10, 0) are clamped to zero; anything more negative is rejected.
ComplexMatrix psd_sqrt(const ComplexMatrix& a);

/// max_ij |A_ij - conj(A_ji)|
double hermiticity_defect(const ComplexMatrix& a);

bool all_finite(const ComplexMatrix& a);

/// Column-stacking vectorization: vec(AXB) = (B^T kron A) vec(X).
ComplexVector vec(const ComplexMatrix& x);
ComplexMatrix unvec(const ComplexVector& v, int dim);

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

/// Tr[AB] without forming the product.
Complex trace_product(const ComplexMatrix& a, const ComplexMatrix& b);

/// Row vector r with r . vec(X) = Tr[O X].
ComplexVector trace_functional(const ComplexMatrix& observable);

namespace pauli {
// Basis convention: index 0 = excited |e>, index 1 = ground |g>.
ComplexMatrix sigma_x();
ComplexMatrix sigma_y();
ComplexMatrix sigma_z();
ComplexMatrix sigma_minus();  // |g><e|
}  // namespace pauli

}  // namespace qdyn
