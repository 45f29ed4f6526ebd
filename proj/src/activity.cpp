#include "qdyn/activity.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "qdyn/detail/flows.hpp"

namespace qdyn {

namespace {

struct QuadratureResult {
  std::vector<double> double_integral;  // 8 * int int Re Tr[H_eff^dag H(s1-s2) rho(s2)]
  std::vector<double> energy_integral;  // int Tr[H_S rho]
};

// Plain trapezoid on one grid; values at every grid point.
QuadratureResult trapezoid_bq(const LindbladModel& m, const TimeGrid& grid) {
  const TimeSeries<ComplexMatrix> rho = evolve_density(m, grid);
  const TimeSeries<ComplexMatrix> hh = heisenberg_evolve(m, m.hamiltonian, grid);
  const ComplexMatrix heff_dag = effective_hamiltonian(m).adjoint();
  const int n = grid.size();
  const double h = grid.step();

  std::vector<ComplexMatrix> q(n);
  for (int l = 0; l < n; ++l) q[l] = heff_dag * hh[l];

  std::vector<double> inner(n, 0.0);
  for (int i = 1; i < n; ++i) {
    double s = 0.5 * (trace_product(q[i], rho[0]).real() + trace_product(q[0], rho[i]).real());
    for (int j = 1; j < i; ++j) s += trace_product(q[i - j], rho[j]).real();
    inner[i] = h * s;
  }

  QuadratureResult r;
  r.double_integral.assign(n, 0.0);
  r.energy_integral.assign(n, 0.0);
  double prev_energy = trace_product(m.hamiltonian, rho[0]).real();
  for (int i = 1; i < n; ++i) {
    r.double_integral[i] = r.double_integral[i - 1] + 0.5 * h * (inner[i - 1] + inner[i]);
    const double e = trace_product(m.hamiltonian, rho[i]).real();
    r.energy_integral[i] = r.energy_integral[i - 1] + 0.5 * h * (prev_energy + e);
    prev_energy = e;
  }
  for (double& v : r.double_integral) v *= 8.0;
  return r;
}

}  // namespace

TimeSeries<double> classical_activity(const LindbladModel& m, const TimeGrid& grid) {
  require_valid(m);
  detail::ActivityLayout lay;
  const LinearFlow flow = detail::activity_flow(m, grid, &lay);
  TimeSeries<double> out{grid, std::vector<double>(grid.size())};
  for (int k = 0; k < grid.size(); ++k) out[k] = detail::activity_values(flow.point(k), lay).A;
  return out;
}

TimeSeries<double> quantum_correction(const LindbladModel& m, const TimeGrid& grid,
                                      CorrectionMethod method) {
  require_valid(m);
  TimeSeries<double> out{grid, std::vector<double>(grid.size())};
  if (method == CorrectionMethod::aux_ode) {
    detail::ActivityLayout lay;
    const LinearFlow flow = detail::activity_flow(m, grid, &lay);
    for (int k = 0; k < grid.size(); ++k) out[k] = detail::activity_values(flow.point(k), lay).Bq;
    return out;
  }
  const QuadratureResult coarse = trapezoid_bq(m, grid);
  const QuadratureResult fine = trapezoid_bq(m, TimeGrid{grid.t_max, 2 * grid.steps});
  for (int k = 0; k < grid.size(); ++k) {
    const double dbl = (4.0 * fine.double_integral[2 * k] - coarse.double_integral[k]) / 3.0;
    const double en = (4.0 * fine.energy_integral[2 * k] - coarse.energy_integral[k]) / 3.0;
    out[k] = dbl - 4.0 * en * en;
  }
  return out;
}

ActivityBundle dynamical_activity(const LindbladModel& m, const TimeGrid& grid) {
  require_valid(m);
  detail::ActivityLayout lay;
  const LinearFlow flow = detail::activity_flow(m, grid, &lay);
  const int n = grid.size();
  ActivityBundle b{grid,
                   {grid, std::vector<double>(n)},
                   {grid, std::vector<double>(n)},
                   {grid, std::vector<double>(n)},
                   {grid, std::vector<double>(n)}};
  for (int k = 0; k < n; ++k) {
    const detail::ActivityValues v = detail::activity_values(flow.point(k), lay);
    b.A[k] = v.A;
    b.Bq[k] = v.Bq;
    b.B[k] = v.A + v.Bq;
    const double t = grid.at(k);
    b.J[k] = k == 0 ? std::numeric_limits<double>::quiet_NaN() : b.B[k] / (t * t);
  }
  return b;
}

double qfi_oracle(const LindbladModel& m, double t, double h) {
  if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("qfi_oracle: t must be positive");
  if (!(h > 0.0 && h <= 0.1)) throw std::invalid_argument("qfi_oracle: h must lie in (0, 0.1]");
  require_valid(m);
  // The generator is homogeneous in (theta1, theta2), so derivatives at theta = 1
  // over time t equal theta0 times those at theta0 over time t / theta0. Working
  // around theta0 = 1/2 keeps every stencil point inside [0, 1].
  const double theta0 = 0.5;
  const double tau = t / theta0;
  const double dl = h * theta0;
  auto f = [&](double a, double b) { return two_sided_overlap(m, tau, theta0 + a, theta0 + b); };
  const Complex d1 = (f(dl, 0) - f(-dl, 0)) / (2 * dl);
  const Complex d2 = (f(0, dl) - f(0, -dl)) / (2 * dl);
  const Complex d12 = (f(dl, dl) - f(dl, -dl) - f(-dl, dl) + f(-dl, -dl)) / (4 * dl * dl);
  const double b = (theta0 * theta0 * 4.0 * (d12 - d1 * d2)).real();
  return b / (t * t);
}

}  // namespace qdyn
