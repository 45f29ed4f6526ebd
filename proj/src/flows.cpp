#include "qdyn/detail/flows.hpp"

#include <cmath>

namespace qdyn::detail {

namespace {

Eigen::RowVectorXcd trace_row(const ComplexMatrix& o) { return trace_functional(o).transpose(); }

}  // namespace

std::vector<double> model_weights(const LindbladModel& m) {
  std::vector<double> w;
  w.reserve(m.jumps.size());
  for (const JumpChannel& j : m.jumps) w.push_back(j.weight);
  return w;
}

ComplexMatrix activity_generator(const LindbladModel& m, const ActivityLayout& lay) {
  const int D = lay.D;
  const ComplexMatrix id = ComplexMatrix::Identity(lay.d, lay.d);
  const ComplexMatrix l = build_superoperator(m, SuperoperatorKind::lindblad).matrix;
  const ComplexMatrix heff = effective_hamiltonian(m);
  ComplexMatrix g = ComplexMatrix::Zero(lay.size(), lay.size());
  g.block(lay.rho(), lay.rho(), D, D) = l;
  g.block(lay.n(), lay.n(), D, D) = l;
  g.block(lay.n(), lay.rho(), D, D) = kron(heff.conjugate(), id);
  g.block(lay.a(), lay.rho(), 1, D) = trace_row(decay_operator(m));
  g.block(lay.c1(), lay.n(), 1, D) = trace_row(m.hamiltonian);
  g.block(lay.m(), lay.rho(), 1, D) = trace_row(m.hamiltonian);
  return g;
}

ComplexVector activity_initial(const LindbladModel& m, const ActivityLayout& lay) {
  ComplexVector x0 = ComplexVector::Zero(lay.size());
  x0.segment(lay.rho(), lay.D) = vec(m.initial.density_matrix());
  return x0;
}

ActivityValues activity_values(const ComplexVector& x, const ActivityLayout& lay) {
  ActivityValues v;
  v.A = x(lay.a()).real();
  v.energy_integral = x(lay.m()).real();
  v.Bq = 8.0 * x(lay.c1()).real() - 4.0 * v.energy_integral * v.energy_integral;
  v.B = v.A + v.Bq;
  return v;
}

LinearFlow activity_flow(const LindbladModel& m, const TimeGrid& grid, ActivityLayout* lay) {
  ActivityLayout l{m.dim, m.dim * m.dim};
  if (lay) *lay = l;
  return LinearFlow(activity_generator(m, l), activity_initial(m, l), grid);
}

ComplexMatrix jump_superoperator(const LindbladModel& m, const std::vector<double>& weights,
                                 int power) {
  const int D = m.dim * m.dim;
  ComplexMatrix j = ComplexMatrix::Zero(D, D);
  for (std::size_t k = 0; k < m.jumps.size(); ++k) {
    const ComplexMatrix& op = m.jumps[k].op;
    j += std::pow(weights.at(k), power) * kron(op.conjugate(), op);
  }
  return j;
}

ComplexMatrix counting_generator(const LindbladModel& m, const std::vector<double>& weights,
                                 const CountingLayout& lay) {
  const int D = lay.D;
  const ComplexMatrix l = build_superoperator(m, SuperoperatorKind::lindblad).matrix;
  const ComplexMatrix j1 = jump_superoperator(m, weights, 1);
  const ComplexMatrix j2 = jump_superoperator(m, weights, 2);
  ComplexMatrix g = ComplexMatrix::Zero(lay.size(), lay.size());
  g.block(lay.phi(), lay.phi(), D, D) = l;
  g.block(lay.m1(), lay.m1(), D, D) = l;
  g.block(lay.m2(), lay.m2(), D, D) = l;
  g.block(lay.m1(), lay.phi(), D, D) = j1;
  g.block(lay.m2(), lay.m1(), D, D) = 2.0 * j1;
  g.block(lay.m2(), lay.phi(), D, D) = j2;
  g.block(lay.w(), lay.m1(), 1, D) = trace_row(m.hamiltonian);
  return g;
}

LinearFlow counting_flow(const LindbladModel& m, const std::vector<double>& weights,
                         const ComplexMatrix& phi0, const TimeGrid& grid, CountingLayout* lay) {
  CountingLayout l{m.dim, m.dim * m.dim};
  if (lay) *lay = l;
  ComplexVector x0 = ComplexVector::Zero(l.size());
  x0.segment(l.phi(), l.D) = vec(phi0);
  return LinearFlow(counting_generator(m, weights, l), x0, grid);
}

LinearFlow convolution_flow(const LindbladModel& m, const std::vector<double>& weights,
                            const TimeGrid& grid, ConvolutionLayout* lay) {
  ConvolutionLayout l{m.dim, m.dim * m.dim};
  if (lay) *lay = l;
  const int D = l.D;
  const ComplexMatrix id = ComplexMatrix::Identity(m.dim, m.dim);
  const ComplexMatrix lind = build_superoperator(m, SuperoperatorKind::lindblad).matrix;
  ComplexMatrix lw = ComplexMatrix::Zero(m.dim, m.dim);
  for (std::size_t k = 0; k < m.jumps.size(); ++k)
    lw += weights.at(k) * (m.jumps[k].op.adjoint() * m.jumps[k].op);
  ComplexMatrix g = ComplexMatrix::Zero(l.size(), l.size());
  g.block(l.rho(), l.rho(), D, D) = lind;
  g.block(l.p(), l.p(), D, D) = lind;
  g.block(l.p(), l.rho(), D, D) = kron(id, effective_hamiltonian(m));
  g.block(l.v(), l.p(), 1, D) = trace_row(lw);
  ComplexVector x0 = ComplexVector::Zero(l.size());
  x0.segment(l.rho(), D) = vec(m.initial.density_matrix());
  return LinearFlow(std::move(g), x0, grid);
}

LinearFlow coherence_flow(const LindbladModel& m, const TimeGrid& grid, CoherenceLayout* lay) {
  CoherenceLayout l{m.dim, m.dim * m.dim};
  if (lay) *lay = l;
  const ComplexVector& bar = require_orthogonal(m, "coherence");
  const ComplexVector psi = require_pure_initial(m, "coherence");
  const int D = l.D;
  ComplexMatrix g = ComplexMatrix::Zero(l.size(), l.size());
  g.block(l.chi(), l.chi(), D, D) = build_superoperator(m, SuperoperatorKind::lindblad).matrix;
  g.block(l.y(), l.chi(), 1, D) = trace_row(m.hamiltonian);
  ComplexVector x0 = ComplexVector::Zero(l.size());
  x0.segment(l.chi(), D) = vec(outer(bar, psi));
  return LinearFlow(std::move(g), x0, grid);
}

}  // namespace qdyn::detail
