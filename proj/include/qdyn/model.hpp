#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qdyn/linalg.hpp"

namespace qdyn {

/// Raised when an operation receives a model that violates its preconditions.
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct JumpChannel {
  ComplexMatrix op;
  double weight = 1.0;  // counting weight alpha_m
};

/// Initial condition: either a state vector or a density matrix.
class InitialState {
 public:
  enum class Kind { pure, density };

  InitialState() = default;
  static InitialState pure(ComplexVector psi);
  static InitialState density(ComplexMatrix rho);

  Kind kind() const { return kind_; }
  const ComplexVector& vector() const { return vector_; }
  const ComplexMatrix& matrix() const { return matrix_; }

  /// rho_S(0); |psi><psi| for the pure kind.
  ComplexMatrix density_matrix() const;

  /// The state vector when the state is pure: stored vector for the pure kind,
  /// dominant eigenvector for a rank-1 density matrix (purity within 1e-10).
  std::optional<ComplexVector> pure_vector() const;

 private:
  Kind kind_ = Kind::pure;
  ComplexVector vector_;
  ComplexMatrix matrix_;
};

struct LindbladModel {
  int dim = 0;
  ComplexMatrix hamiltonian;
  std::vector<JumpChannel> jumps;
  InitialState initial;
  std::optional<ComplexVector> orthogonal;  // |psi_bar>, orthogonal to the initial state
};

struct Violation {
  std::string invariant;
  double deviation = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

ValidationReport validate_model(const LindbladModel& m);

/// Throws ModelError carrying the validation summary when the model is invalid.
void require_valid(const LindbladModel& m);

ComplexMatrix effective_hamiltonian(const LindbladModel& m);

/// Sum_m L_m^dag L_m (unweighted).
ComplexMatrix decay_operator(const LindbladModel& m);

/// Sum_m alpha_m L_m^dag L_m.
ComplexMatrix weighted_decay_operator(const LindbladModel& m);

/// Pure initial state vector; throws ModelError for mixed initial states.
ComplexVector require_pure_initial(const LindbladModel& m, const char* operation);

/// The orthogonal state; throws ModelError when it is absent.
const ComplexVector& require_orthogonal(const LindbladModel& m, const char* operation);

/// Outer product |a><b|.
ComplexMatrix outer(const ComplexVector& a, const ComplexVector& b);

enum class SuperoperatorKind { lindblad, adjoint, tilted, two_sided, two_sided_tilted };

std::string to_string(SuperoperatorKind kind);

struct SuperoperatorParams {
  double xi = 0.0;
  double theta1 = 1.0;
  double theta2 = 1.0;
};

/// d^2 x d^2 generator acting on column-stacked operators.
struct Superoperator {
  SuperoperatorKind kind = SuperoperatorKind::lindblad;
  SuperoperatorParams params;
  int system_dim = 0;
  ComplexMatrix matrix;

  ComplexMatrix apply(const ComplexMatrix& x) const;
};

/// Builds one of the generators
///   lindblad          -i[H,X] + sum D[L]X
///   adjoint           i[H,X] + sum (L^dag X L - {L^dag L, X}/2)
///   tilted           xi: jump terms weighted by e^{i xi alpha_m}
///   two_sided         theta1 on the left factor, theta2 on the right, sqrt(theta1 theta2) on jumps
///   two_sided_tilted  both of the above.
/// theta must lie in [0, 1]; xi must be finite.
Superoperator build_superoperator(const LindbladModel& m, SuperoperatorKind kind,
                                  const SuperoperatorParams& params = {});

}  // namespace qdyn
