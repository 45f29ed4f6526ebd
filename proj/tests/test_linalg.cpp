#include <doctest.h>

#include <numbers>

#include "support.hpp"

using namespace qdyn;
using namespace qdyn::testing;

TEST_CASE("mat_exp of small fixed matrices") {
  CHECK((mat_exp(ComplexMatrix::Zero(2, 2)) - ComplexMatrix::Identity(2, 2)).norm() == 0.0);

  ComplexMatrix n(2, 2);
  n << 0, 1, 0, 0;
  ComplexMatrix expected(2, 2);
  expected << 1, 1, 0, 1;
  CHECK((mat_exp(n) - expected).norm() < 1e-15);

  const ComplexMatrix a = -kI * (std::numbers::pi / 2) * pauli::sigma_x();
  CHECK((mat_exp(a) - (-kI * pauli::sigma_x())).norm() < 1e-14);
  CHECK((mat_exp(a) - taylor_exp(a)).norm() < 1e-14);
}

TEST_CASE("mat_exp agrees with a Taylor oracle up to norm 50") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = rng.integer(2, 6);
    ComplexMatrix a = random_matrix(rng, d);
    a *= rng.uniform(0.1, 50.0) / spectral_norm(a);
    // Anti-Hermitian part keeps the exponential well conditioned for the comparison.
    a = 0.5 * (a - a.adjoint()) + 0.05 * random_hermitian(rng, d);
    const ComplexMatrix e = mat_exp(a);
    CHECK(spectral_norm(e - taylor_exp(a)) / spectral_norm(e) < 1e-11);
  }
}

TEST_CASE("mat_exp input checks") {
  CHECK_THROWS_AS(mat_exp(ComplexMatrix::Zero(2, 3)), LinalgError);
  ComplexMatrix bad = ComplexMatrix::Zero(2, 2);
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(mat_exp(bad), LinalgError);
}

TEST_CASE("exp(A) exp(-A) = I and exp(-iH) is unitary") {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = rng.integer(1, 5);
    ComplexMatrix a = random_matrix(rng, d);
    a *= rng.uniform(0.0, 5.0) / spectral_norm(a);
    const ComplexMatrix id = ComplexMatrix::Identity(d, d);
    CHECK((mat_exp(a) * mat_exp(-a) - id).cwiseAbs().maxCoeff() < 1e-10);
    const ComplexMatrix u = mat_exp(-kI * random_hermitian(rng, d));
    CHECK((u.adjoint() * u - id).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("herm_eig on Pauli matrices") {
  HermitianEigen z = herm_eig(pauli::sigma_z());
  CHECK(z.values(0) == doctest::Approx(-1.0));
  CHECK(z.values(1) == doctest::Approx(1.0));

  HermitianEigen i3 = herm_eig(ComplexMatrix::Identity(3, 3));
  for (int k = 0; k < 3; ++k) CHECK(i3.values(k) == doctest::Approx(1.0));

  HermitianEigen x = herm_eig(pauli::sigma_x());
  CHECK(x.values(0) == doctest::Approx(-1.0));
  const ComplexVector v0 = x.vectors.col(0);
  // (1, -1)/sqrt(2) up to a phase
  CHECK(std::abs(std::abs(v0(0)) - 1 / std::sqrt(2.0)) < 1e-12);
  CHECK(std::abs(v0(0) + v0(1)) < 1e-12);
  CHECK_THROWS_AS(herm_eig(pauli::sigma_minus()), LinalgError);
}

TEST_CASE("herm_eig reconstructs random Hermitian matrices") {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = rng.integer(1, 8);
    const ComplexMatrix h = random_hermitian(rng, d);
    const HermitianEigen e = herm_eig(h);
    for (int k = 1; k < d; ++k) CHECK(e.values(k - 1) <= e.values(k));
    const ComplexMatrix rec = e.vectors * e.values.cast<Complex>().asDiagonal() * e.vectors.adjoint();
    CHECK((rec - h).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((e.vectors.adjoint() * e.vectors - ComplexMatrix::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-10);
    for (int k = 0; k < d; ++k)
      CHECK((h * e.vectors.col(k) - e.values(k) * e.vectors.col(k)).norm() < 1e-10);
  }
}

TEST_CASE("psd_sqrt") {
  ComplexMatrix d = ComplexMatrix::Zero(2, 2);
  d(0, 0) = 4;
  d(1, 1) = 9;
  ComplexMatrix s = psd_sqrt(d);
  CHECK(std::abs(s(0, 0) - 2.0) < 1e-14);
  CHECK(std::abs(s(1, 1) - 3.0) < 1e-14);
  CHECK((psd_sqrt(ComplexMatrix::Identity(3, 3)) - ComplexMatrix::Identity(3, 3)).norm() < 1e-14);

  Rng rng(14);
  const ComplexVector psi = random_unit_vector(rng, 3);
  const ComplexMatrix p = psi * psi.adjoint();
  CHECK((psd_sqrt(0.36 * p) - 0.6 * p).cwiseAbs().maxCoeff() < 1e-12);

  for (int trial = 0; trial < 50; ++trial) {
    const int n = rng.integer(1, 6);
    const ComplexMatrix b = random_matrix(rng, n);
    const ComplexMatrix a = b.adjoint() * b;
    const ComplexMatrix r = psd_sqrt(a);
    CHECK(hermiticity_defect(r) < 1e-12);
    CHECK((r * r - a).cwiseAbs().maxCoeff() < 1e-9);
  }

  ComplexMatrix neg = ComplexMatrix::Identity(2, 2);
  neg(1, 1) = -1e-6;
  CHECK_THROWS_AS(psd_sqrt(neg), LinalgError);
  neg(1, 1) = -1e-12;
  CHECK(psd_sqrt(neg)(1, 1) == Complex(0.0, 0.0));
}

TEST_CASE("column-stacking vectorization identity") {
  Rng rng(15);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = rng.integer(1, 4);
    const ComplexMatrix a = random_matrix(rng, d), x = random_matrix(rng, d), b = random_matrix(rng, d);
    CHECK((vec(a * x * b) - kron(b.transpose(), a) * vec(x)).norm() < 1e-12);
    CHECK((unvec(vec(x), d) - x).norm() == 0.0);
    CHECK(std::abs((trace_functional(a).transpose() * vec(x)).value() - (a * x).trace()) < 1e-12);
    CHECK(std::abs(trace_product(a, x) - (a * x).trace()) < 1e-12);
  }
}
