#pragma once

#include "qdyn/propagate.hpp"

namespace qdyn {

struct ActivityBundle {
  TimeGrid grid;
  TimeSeries<double> A;   // classical dynamical activity
  TimeSeries<double> Bq;  // quantum correction
  TimeSeries<double> B;   // A + Bq
  TimeSeries<double> J;   // B / t^2, starting at t_1 (J.values[0] is NaN)
};

enum class CorrectionMethod { aux_ode, quadrature };

TimeSeries<double> classical_activity(const LindbladModel& m, const TimeGrid& grid);

/// aux_ode integrates the auxiliary operator N(s) exactly alongside rho.
/// quadrature evaluates the double integral directly with the trapezoidal rule
/// (plus one Richardson step on a 2x refined grid); it is O(N^2) and meant as an oracle.
TimeSeries<double> quantum_correction(const LindbladModel& m, const TimeGrid& grid,
                                      CorrectionMethod method = CorrectionMethod::aux_ode);

ActivityBundle dynamical_activity(const LindbladModel& m, const TimeGrid& grid);

/// J(t) from central differences of the two-sided overlap, with step h in the
/// scaling parameters. Throws std::invalid_argument for t <= 0 or h outside (0, 0.1].
double qfi_oracle(const LindbladModel& m, double t, double h = 1e-3);

}  // namespace qdyn
