#include "qdyn/propagate.hpp"

#include <cmath>
#include <stdexcept>

namespace qdyn {

TimeGrid TimeGrid::make(double t_max, int steps) {
  TimeGrid g{t_max, steps};
  g.check();
  return g;
}

void TimeGrid::check() const {
  if (!(t_max > 0.0) || !std::isfinite(t_max))
    throw std::invalid_argument("TimeGrid: t_max must be positive and finite");
  if (steps < kMinSteps)
    throw std::invalid_argument("TimeGrid: steps must be at least " + std::to_string(kMinSteps));
}

std::vector<double> TimeGrid::points() const {
  std::vector<double> t(size());
  for (int k = 0; k < size(); ++k) t[k] = at(k);
  return t;
}

LinearFlow::LinearFlow(ComplexMatrix generator, const ComplexVector& x0, const TimeGrid& grid)
    : generator_(std::move(generator)), grid_(grid) {
  grid_.check();
  if (generator_.rows() != generator_.cols() || generator_.rows() != x0.size())
    throw std::invalid_argument("LinearFlow: generator and initial vector disagree in size");
  const ComplexMatrix step = propagator(grid_.step());
  points_.reserve(grid_.size());
  points_.push_back(x0);
  for (int k = 1; k < grid_.size(); ++k) points_.push_back(step * points_.back());
}

ComplexMatrix LinearFlow::propagator(double dt) const {
  return mat_exp(generator_ * Complex(dt, 0.0));
}

std::vector<ComplexVector> LinearFlow::offset_samples(double frac) const {
  const ComplexMatrix p = propagator(frac * grid_.step());
  std::vector<ComplexVector> out;
  out.reserve(grid_.steps);
  for (int k = 0; k < grid_.steps; ++k) out.push_back(p * points_[k]);
  return out;
}

namespace {

void check_dimension(const LindbladModel& m) {
  if (m.dim > kMaxDimension)
    throw ModelError("dimension " + std::to_string(m.dim) + " exceeds the ceiling of " +
                     std::to_string(kMaxDimension));
}

TimeSeries<ComplexMatrix> evolve_operator(const ComplexMatrix& generator, const ComplexMatrix& x0,
                                          const TimeGrid& grid) {
  grid.check();
  const int d = static_cast<int>(x0.rows());
  const ComplexMatrix step = mat_exp(generator * Complex(grid.step(), 0.0));
  TimeSeries<ComplexMatrix> out{grid, {}};
  out.values.reserve(grid.size());
  ComplexVector v = vec(x0);
  out.values.push_back(x0);
  for (int k = 1; k < grid.size(); ++k) {
    v = step * v;
    out.values.push_back(unvec(v, d));
  }
  return out;
}

}  // namespace

TimeSeries<ComplexMatrix> evolve_density(const LindbladModel& m, const TimeGrid& grid) {
  check_dimension(m);
  require_valid(m);
  const Superoperator l = build_superoperator(m, SuperoperatorKind::lindblad);
  return evolve_operator(l.matrix, m.initial.density_matrix(), grid);
}

TimeSeries<ComplexMatrix> evolve_density_rk4(const LindbladModel& m, const TimeGrid& grid,
                                             int substeps) {
  check_dimension(m);
  require_valid(m);
  grid.check();
  if (substeps < 1) throw std::invalid_argument("evolve_density_rk4: substeps must be >= 1");
  const ComplexMatrix l = build_superoperator(m, SuperoperatorKind::lindblad).matrix;
  const double h = grid.step() / substeps;
  TimeSeries<ComplexMatrix> out{grid, {}};
  ComplexVector v = vec(m.initial.density_matrix());
  out.values.push_back(m.initial.density_matrix());
  for (int k = 1; k < grid.size(); ++k) {
    for (int s = 0; s < substeps; ++s) {
      const ComplexVector k1 = l * v;
      const ComplexVector k2 = l * (v + 0.5 * h * k1);
      const ComplexVector k3 = l * (v + 0.5 * h * k2);
      const ComplexVector k4 = l * (v + h * k3);
      v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    out.values.push_back(unvec(v, m.dim));
  }
  return out;
}

TimeSeries<ComplexMatrix> evolve_coherence(const LindbladModel& m, const TimeGrid& grid) {
  check_dimension(m);
  require_valid(m);
  const ComplexVector& bar = require_orthogonal(m, "evolve_coherence");
  const ComplexVector psi = require_pure_initial(m, "evolve_coherence");
  const Superoperator l = build_superoperator(m, SuperoperatorKind::lindblad);
  return evolve_operator(l.matrix, outer(bar, psi), grid);
}

TimeSeries<ComplexMatrix> heisenberg_evolve(const LindbladModel& m, const ComplexMatrix& o,
                                            const TimeGrid& grid) {
  check_dimension(m);
  require_valid(m);
  if (o.rows() != m.dim || o.cols() != m.dim)
    throw ModelError("heisenberg_evolve: observable shape does not match the model");
  if (hermiticity_defect(o) > 1e-10) throw ModelError("heisenberg_evolve: observable is not Hermitian");
  const Superoperator adj = build_superoperator(m, SuperoperatorKind::adjoint);
  return evolve_operator(adj.matrix, o, grid);
}

SurvivalAmplitudes survival_amplitudes_at(const LindbladModel& m, double t) {
  const ComplexMatrix heff = effective_hamiltonian(m);
  const ComplexMatrix u = mat_exp(-kI * t * heff);
  const ComplexMatrix rho0 = m.initial.density_matrix();
  SurvivalAmplitudes a;
  a.gamma = std::conj(trace_product(u, rho0));
  a.beta = trace_product(heff * u, rho0);
  if (m.orthogonal) {
    const ComplexVector psi = require_pure_initial(m, "survival_amplitudes");
    a.chi_overlap = psi.dot(u * *m.orthogonal);
  }
  return a;
}

TimeSeries<SurvivalAmplitudes> survival_amplitudes(const LindbladModel& m, const TimeGrid& grid) {
  check_dimension(m);
  require_valid(m);
  grid.check();
  TimeSeries<SurvivalAmplitudes> out{grid, {}};
  out.values.reserve(grid.size());
  for (int k = 0; k < grid.size(); ++k) out.values.push_back(survival_amplitudes_at(m, grid.at(k)));
  return out;
}

Complex two_sided_overlap(const LindbladModel& m, double tau, double theta1, double theta2) {
  check_dimension(m);
  if (!std::isfinite(tau)) throw ModelError("two_sided_overlap: tau must be finite");
  SuperoperatorParams p;
  p.theta1 = theta1;
  p.theta2 = theta2;
  const Superoperator l = build_superoperator(m, SuperoperatorKind::two_sided, p);
  const ComplexVector phi = mat_exp(l.matrix * Complex(tau, 0.0)) * vec(m.initial.density_matrix());
  return unvec(phi, m.dim).trace();
}

}  // namespace qdyn
