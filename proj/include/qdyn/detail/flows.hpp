#pragma once

// Augmented block-triangular generators. Each flow carries one or more
// vectorized operator blocks plus scalar running integrals, so that a single
// exponential per grid step yields the integrals without quadrature error.

#include <vector>

#include "qdyn/propagate.hpp"

namespace qdyn::detail {

/// x = [rho, N, A, c1, m]
///   rho' = L rho
///   N'   = L N + rho H_eff^dag
///   A'   = sum_m Tr[L_m rho L_m^dag]
///   c1'  = Tr[H_S N]
///   m'   = Tr[H_S rho]
struct ActivityLayout {
  int d = 0;
  int D = 0;
  int rho() const { return 0; }
  int n() const { return D; }
  int a() const { return 2 * D; }
  int c1() const { return 2 * D + 1; }
  int m() const { return 2 * D + 2; }
  int size() const { return 2 * D + 3; }
};

struct ActivityValues {
  double A = 0.0;
  double Bq = 0.0;
  double B = 0.0;
  double energy_integral = 0.0;  // int_0^t Tr[H_S rho(s)] ds
};

ComplexMatrix activity_generator(const LindbladModel& m, const ActivityLayout& lay);
ComplexVector activity_initial(const LindbladModel& m, const ActivityLayout& lay);
ActivityValues activity_values(const ComplexVector& x, const ActivityLayout& lay);
LinearFlow activity_flow(const LindbladModel& m, const TimeGrid& grid, ActivityLayout* lay);

/// x = [phi, M1, M2, W]
///   phi' = L phi,  M1' = L M1 + J1 phi,  M2' = L M2 + 2 J1 M1 + J2 phi
///   W'   = Tr[H_S M1]
/// with J_k X = sum_m alpha_m^k L_m X L_m^dag.
struct CountingLayout {
  int d = 0;
  int D = 0;
  int phi() const { return 0; }
  int m1() const { return D; }
  int m2() const { return 2 * D; }
  int w() const { return 3 * D; }
  int size() const { return 3 * D + 1; }
};

ComplexMatrix counting_generator(const LindbladModel& m, const std::vector<double>& weights,
                                 const CountingLayout& lay);
LinearFlow counting_flow(const LindbladModel& m, const std::vector<double>& weights,
                         const ComplexMatrix& phi0, const TimeGrid& grid, CountingLayout* lay);

/// Jump superoperator sum_m alpha_m^power L_m . L_m^dag as a D x D matrix.
ComplexMatrix jump_superoperator(const LindbladModel& m, const std::vector<double>& weights,
                                 int power);

/// x = [rho, P, V]
///   P' = L P + H_eff rho,   V' = Tr[Lw P],  Lw = sum_m alpha_m L_m^dag L_m.
/// Tr[C P(t)] = int_0^t Tr[C(t-s) H_eff rho(s)] ds.
struct ConvolutionLayout {
  int d = 0;
  int D = 0;
  int rho() const { return 0; }
  int p() const { return D; }
  int v() const { return 2 * D; }
  int size() const { return 2 * D + 1; }
};

LinearFlow convolution_flow(const LindbladModel& m, const std::vector<double>& weights,
                            const TimeGrid& grid, ConvolutionLayout* lay);

/// x = [chi, Y], Y' = Tr[H_S chi], chi(0) = |psi_bar><psi|.
struct CoherenceLayout {
  int d = 0;
  int D = 0;
  int chi() const { return 0; }
  int y() const { return D; }
  int size() const { return D + 1; }
};

LinearFlow coherence_flow(const LindbladModel& m, const TimeGrid& grid, CoherenceLayout* lay);

/// Counting weights of the model's jump channels.
std::vector<double> model_weights(const LindbladModel& m);

}  // namespace qdyn::detail
