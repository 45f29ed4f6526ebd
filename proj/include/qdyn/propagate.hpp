#pragma once

#include <vector>

#include "qdyn/model.hpp"

namespace qdyn {

/// Uniform grid t_k = k * t_max / steps, k = 0..steps.
struct TimeGrid {
  double t_max = 1.0;
  int steps = 16;

  static constexpr int kMinSteps = 16;

  /// Checked constructor; throws std::invalid_argument for steps < 16 or t_max <= 0.
  static TimeGrid make(double t_max, int steps);

  double step() const { return t_max / steps; }
  double at(int k) const { return k * t_max / steps; }
  int size() const { return steps + 1; }
  std::vector<double> points() const;
  void check() const;
};

template <class T>
struct TimeSeries {
  TimeGrid grid;
  std::vector<T> values;

  const T& operator[](int k) const { return values[k]; }
  T& operator[](int k) { return values[k]; }
  int size() const { return static_cast<int>(values.size()); }
};

/// Solution of dx/dt = G x sampled on a grid, with the one-step propagator
/// e^{G h} computed once. Intermediate times are reached from the nearest
/// earlier grid point.
class LinearFlow {
 public:
  LinearFlow(ComplexMatrix generator, const ComplexVector& x0, const TimeGrid& grid);

  const TimeGrid& grid() const { return grid_; }
  const ComplexVector& point(int k) const { return points_[k]; }
  const std::vector<ComplexVector>& points() const { return points_; }
  const ComplexMatrix& generator() const { return generator_; }

  /// e^{G dt}
  ComplexMatrix propagator(double dt) const;

  /// x(t_k + frac * h) for every interval k = 0..steps-1.
  std::vector<ComplexVector> offset_samples(double frac) const;

 private:
  ComplexMatrix generator_;
  TimeGrid grid_;
  std::vector<ComplexVector> points_;
};

TimeSeries<ComplexMatrix> evolve_density(const LindbladModel& m, const TimeGrid& grid);

/// Classic RK4 on the vectorized generator with `substeps` per grid step.
/// Cross-check path only.
TimeSeries<ComplexMatrix> evolve_density_rk4(const LindbladModel& m, const TimeGrid& grid,
                                             int substeps = 8);

/// chi_S(t) = e^{L t}(|psi_bar><psi|). Requires an orthogonal state and a pure initial state.
TimeSeries<ComplexMatrix> evolve_coherence(const LindbladModel& m, const TimeGrid& grid);

/// O(t) = e^{L^dag t} O for Hermitian O.
TimeSeries<ComplexMatrix> heisenberg_evolve(const LindbladModel& m, const ComplexMatrix& o,
                                            const TimeGrid& grid);

struct SurvivalAmplitudes {
  Complex gamma;                     // Tr[e^{i H_eff^dag t} rho0]
  Complex beta;                      // Tr[H_eff e^{-i H_eff t} rho0]
  std::optional<Complex> chi_overlap;  // Tr[e^{-i H_eff t} chi0]
};

/// Amplitudes at every grid point; chi_overlap is filled only when an orthogonal
/// state is present (and then the initial state must be pure).
TimeSeries<SurvivalAmplitudes> survival_amplitudes(const LindbladModel& m, const TimeGrid& grid);

/// The same amplitudes at a single time.
SurvivalAmplitudes survival_amplitudes_at(const LindbladModel& m, double t);

/// Tr[e^{tau L[theta1, theta2]} rho0].
Complex two_sided_overlap(const LindbladModel& m, double tau, double theta1, double theta2);

}  // namespace qdyn
