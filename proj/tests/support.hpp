#pragma once

#include <cmath>
#include <random>

#include "qdyn/model.hpp"
#include "qdyn/propagate.hpp"

namespace qdyn::testing {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double normal() { return normal_(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

inline ComplexMatrix random_matrix(Rng& rng, int d) {
  ComplexMatrix a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = Complex(rng.normal(), rng.normal());
  return a;
}

inline ComplexMatrix random_hermitian(Rng& rng, int d) {
  const ComplexMatrix a = random_matrix(rng, d);
  return 0.5 * (a + a.adjoint());
}

inline ComplexVector random_unit_vector(Rng& rng, int d) {
  ComplexVector v(d);
  for (int i = 0; i < d; ++i) v(i) = Complex(rng.normal(), rng.normal());
  return v / v.norm();
}

inline double spectral_norm(const ComplexMatrix& a) {
  Eigen::JacobiSVD<ComplexMatrix> svd(a);
  return svd.singularValues()(0);
}

inline ComplexMatrix random_density(Rng& rng, int d) {
  const ComplexMatrix b = random_matrix(rng, d);
  const ComplexMatrix r = b.adjoint() * b;
  return r / r.trace().real();
}

struct RandomModelOptions {
  double h_norm = 2.0;
  double l_norm = 1.5;
  int min_jumps = 1;
  int max_jumps = 2;
  bool mixed_weights = true;
};

/// Random valid model: Hermitian H with ||H|| <= h_norm, jumps with ||L|| <= l_norm,
/// pure initial state and an orthogonal partner.
inline LindbladModel random_model(Rng& rng, int d, const RandomModelOptions& opt = {}) {
  LindbladModel m;
  m.dim = d;
  ComplexMatrix h = random_hermitian(rng, d);
  m.hamiltonian = h * (opt.h_norm * rng.uniform(0.2, 1.0) / spectral_norm(h));
  const int nj = rng.integer(opt.min_jumps, opt.max_jumps);
  const double weights[] = {1.0, -1.0, 0.5};
  for (int k = 0; k < nj; ++k) {
    ComplexMatrix l = random_matrix(rng, d);
    l *= opt.l_norm * rng.uniform(0.2, 1.0) / spectral_norm(l);
    const double w = opt.mixed_weights ? weights[rng.integer(0, 2)] : 1.0;
    m.jumps.push_back({l, w});
  }
  const ComplexVector psi = random_unit_vector(rng, d);
  ComplexVector bar = random_unit_vector(rng, d);
  bar -= psi * psi.dot(bar);
  bar /= bar.norm();
  m.initial = InitialState::pure(psi);
  m.orthogonal = bar;
  return m;
}

inline ComplexVector basis(int d, int k) {
  ComplexVector v = ComplexVector::Zero(d);
  v(k) = 1.0;
  return v;
}

inline LindbladModel amplitude_damping() {
  LindbladModel m;
  m.dim = 2;
  m.hamiltonian = ComplexMatrix::Zero(2, 2);
  m.jumps.push_back({pauli::sigma_minus(), 1.0});
  m.initial = InitialState::pure(basis(2, 0));
  m.orthogonal = basis(2, 1);
  return m;
}

inline LindbladModel closed_qubit() {
  LindbladModel m;
  m.dim = 2;
  m.hamiltonian = 0.5 * pauli::sigma_x();
  m.initial = InitialState::pure(basis(2, 0));
  m.orthogonal = basis(2, 1);
  return m;
}

inline LindbladModel driven_dissipative() {
  LindbladModel m = closed_qubit();
  m.jumps.push_back({std::sqrt(0.5) * pauli::sigma_minus(), 1.0});
  return m;
}

inline LindbladModel classical_two_state() {
  LindbladModel m;
  m.dim = 2;
  m.hamiltonian = ComplexMatrix::Zero(2, 2);
  m.jumps.push_back({std::sqrt(1.0) * outer(basis(2, 0), basis(2, 1)), 1.0});
  m.jumps.push_back({std::sqrt(0.5) * outer(basis(2, 1), basis(2, 0)), 1.0});
  m.initial = InitialState::pure(basis(2, 0));
  m.orthogonal = basis(2, 1);
  return m;
}

/// Truncated Taylor series of e^A, summed with scaling and squaring by hand.
inline ComplexMatrix taylor_exp(const ComplexMatrix& a) {
  int squarings = 0;
  double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  while (norm > 0.5) {
    norm *= 0.5;
    ++squarings;
  }
  const ComplexMatrix s = a / std::pow(2.0, squarings);
  ComplexMatrix term = ComplexMatrix::Identity(a.rows(), a.cols());
  ComplexMatrix sum = term;
  for (int k = 1; k < 40; ++k) {
    term = term * s / static_cast<double>(k);
    sum += term;
  }
  for (int k = 0; k < squarings; ++k) sum = sum * sum;
  return sum;
}

inline double rel_err(double a, double b) {
  const double scale = std::max(std::abs(b), 1e-300);
  return std::abs(a - b) / scale;
}

}  // namespace qdyn::testing
