#include "qdyn/model.hpp"

#include <cmath>
#include <sstream>

namespace qdyn {

namespace {

constexpr double kHermitianTolerance = 1e-10;
constexpr double kTraceTolerance = 1e-12;
constexpr double kPsdTolerance = 1e-10;
constexpr double kOrthogonalityTolerance = 1e-10;
constexpr double kPurityTolerance = 1e-10;

bool finite_vector(const ComplexVector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!std::isfinite(v(i).real()) || !std::isfinite(v(i).imag())) return false;
  return true;
}

std::string shape(const ComplexMatrix& a) {
  return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

void check_theta(double theta, const char* name) {
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw ModelError(std::string("build_superoperator: ") + name + " = " + std::to_string(theta) +
                     " outside [0, 1]");
  }
}

}  // namespace

InitialState InitialState::pure(ComplexVector psi) {
  InitialState s;
  s.kind_ = Kind::pure;
  s.vector_ = std::move(psi);
  return s;
}

InitialState InitialState::density(ComplexMatrix rho) {
  InitialState s;
  s.kind_ = Kind::density;
  s.matrix_ = std::move(rho);
  return s;
}

ComplexMatrix InitialState::density_matrix() const {
  if (kind_ == Kind::pure) return vector_ * vector_.adjoint();
  return matrix_;
}

std::optional<ComplexVector> InitialState::pure_vector() const {
  if (kind_ == Kind::pure) return vector_;
  if (matrix_.size() == 0) return std::nullopt;
  const double purity = trace_product(matrix_, matrix_).real();
  if (std::abs(purity - 1.0) > kPurityTolerance) return std::nullopt;
  HermitianEigen eig = herm_eig(matrix_);
  const Eigen::Index top = eig.values.size() - 1;
  return ComplexVector(eig.vectors.col(top));
}

std::string ValidationReport::summary() const {
  if (ok()) return "OK";
  std::ostringstream out;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    const Violation& v = violations[i];
    if (i) out << "; ";
    out << v.invariant;
    if (!v.detail.empty()) out << " (" << v.detail << ")";
    if (v.deviation != 0.0) out << " deviation=" << v.deviation;
  }
  return out.str();
}

ValidationReport validate_model(const LindbladModel& m) {
  ValidationReport report;
  auto fail = [&](std::string invariant, double deviation, std::string detail) {
    report.violations.push_back({std::move(invariant), deviation, std::move(detail)});
  };

  const int d = m.dim;
  if (d < 1 || d > kMaxDimension) {
    fail("dimension", d, "dim must lie in [1, " + std::to_string(kMaxDimension) + "]");
    return report;
  }

  const ComplexMatrix& h = m.hamiltonian;
  if (h.rows() != d || h.cols() != d) {
    fail("hamiltonian_shape", 0.0, "expected " + std::to_string(d) + "x" + std::to_string(d) +
                                       ", got " + shape(h));
  } else if (!all_finite(h)) {
    fail("hamiltonian_finite", 0.0, "non-finite entries");
  } else if (double defect = hermiticity_defect(h); defect > kHermitianTolerance) {
    fail("hermiticity", defect, "hamiltonian is not Hermitian");
  }

  for (std::size_t k = 0; k < m.jumps.size(); ++k) {
    const JumpChannel& jump = m.jumps[k];
    const std::string tag = "jumps[" + std::to_string(k) + "]";
    if (jump.op.rows() != d || jump.op.cols() != d) {
      fail("jump_shape", 0.0, tag + " has shape " + shape(jump.op));
    } else if (!all_finite(jump.op)) {
      fail("jump_finite", 0.0, tag + " has non-finite entries");
    }
    if (!std::isfinite(jump.weight)) fail("jump_weight", 0.0, tag + " weight is not finite");
  }

  bool initial_ok = false;
  if (m.initial.kind() == InitialState::Kind::pure) {
    const ComplexVector& psi = m.initial.vector();
    if (psi.size() != d) {
      fail("initial_shape", 0.0, "state vector has length " + std::to_string(psi.size()));
    } else if (!finite_vector(psi)) {
      fail("initial_finite", 0.0, "non-finite entries");
    } else if (double dev = std::abs(psi.squaredNorm() - 1.0); dev > kTraceTolerance) {
      fail("trace", dev, "initial state is not normalized");
    } else {
      initial_ok = true;
    }
  } else {
    const ComplexMatrix& rho = m.initial.matrix();
    if (rho.rows() != d || rho.cols() != d) {
      fail("initial_shape", 0.0, "density matrix has shape " + shape(rho));
    } else if (!all_finite(rho)) {
      fail("initial_finite", 0.0, "non-finite entries");
    } else {
      initial_ok = true;
      if (double defect = hermiticity_defect(rho); defect > kHermitianTolerance) {
        fail("initial_hermiticity", defect, "density matrix is not Hermitian");
        initial_ok = false;
      }
      if (double dev = std::abs(rho.trace() - 1.0); dev > kTraceTolerance) {
        fail("trace", dev, "Tr rho(0) != 1");
        initial_ok = false;
      }
      if (initial_ok) {
        const double lowest = herm_eig(rho).values(0);
        if (lowest < -kPsdTolerance) {
          fail("positivity", -lowest, "rho(0) has a negative eigenvalue");
          initial_ok = false;
        }
      }
    }
  }

  if (m.orthogonal) {
    const ComplexVector& bar = *m.orthogonal;
    if (bar.size() != d) {
      fail("orthogonal_shape", 0.0, "orthogonal state has length " + std::to_string(bar.size()));
    } else if (!finite_vector(bar)) {
      fail("orthogonal_finite", 0.0, "non-finite entries");
    } else {
      if (double dev = std::abs(bar.norm() - 1.0); dev > kOrthogonalityTolerance)
        fail("orthogonal_norm", dev, "orthogonal state is not unit-norm");
      if (initial_ok) {
        std::optional<ComplexVector> psi = m.initial.pure_vector();
        if (!psi) {
          fail("orthogonality", 0.0, "orthogonal state requires a pure initial state");
        } else if (double overlap = std::abs(psi->dot(bar)); overlap > kOrthogonalityTolerance) {
          fail("orthogonality", overlap, "<psi|psi_bar> != 0");
        }
      }
    }
  }
  return report;
}

void require_valid(const LindbladModel& m) {
  ValidationReport report = validate_model(m);
  if (!report.ok()) throw ModelError("invalid model: " + report.summary());
}

ComplexMatrix decay_operator(const LindbladModel& m) {
  ComplexMatrix gamma = ComplexMatrix::Zero(m.dim, m.dim);
  for (const JumpChannel& jump : m.jumps) gamma += jump.op.adjoint() * jump.op;
  return gamma;
}

ComplexMatrix weighted_decay_operator(const LindbladModel& m) {
  ComplexMatrix gamma = ComplexMatrix::Zero(m.dim, m.dim);
  for (const JumpChannel& jump : m.jumps) gamma += jump.weight * (jump.op.adjoint() * jump.op);
  return gamma;
}

ComplexMatrix effective_hamiltonian(const LindbladModel& m) {
  return m.hamiltonian - 0.5 * kI * decay_operator(m);
}

ComplexVector require_pure_initial(const LindbladModel& m, const char* operation) {
  std::optional<ComplexVector> psi = m.initial.pure_vector();
  if (!psi) throw ModelError(std::string(operation) + ": requires a pure initial state");
  return *psi;
}

const ComplexVector& require_orthogonal(const LindbladModel& m, const char* operation) {
  if (!m.orthogonal) throw ModelError(std::string(operation) + ": model has no orthogonal_state");
  return *m.orthogonal;
}

ComplexMatrix outer(const ComplexVector& a, const ComplexVector& b) { return a * b.adjoint(); }

std::string to_string(SuperoperatorKind kind) {
  switch (kind) {
    case SuperoperatorKind::lindblad: return "lindblad";
    case SuperoperatorKind::adjoint: return "adjoint";
    case SuperoperatorKind::tilted: return "tilted";
    case SuperoperatorKind::two_sided: return "two_sided";
    case SuperoperatorKind::two_sided_tilted: return "two_sided_tilted";
  }
  return "unknown";
}

ComplexMatrix Superoperator::apply(const ComplexMatrix& x) const {
  return unvec(matrix * vec(x), system_dim);
}

Superoperator build_superoperator(const LindbladModel& m, SuperoperatorKind kind,
                                  const SuperoperatorParams& params) {
  const int d = m.dim;
  if (!std::isfinite(params.xi)) throw ModelError("build_superoperator: xi must be finite");

  double theta1 = 1.0;
  double theta2 = 1.0;
  double xi = 0.0;
  switch (kind) {
    case SuperoperatorKind::lindblad:
    case SuperoperatorKind::adjoint:
      break;
    case SuperoperatorKind::tilted:
      xi = params.xi;
      break;
    case SuperoperatorKind::two_sided:
      check_theta(params.theta1, "theta1");
      check_theta(params.theta2, "theta2");
      theta1 = params.theta1;
      theta2 = params.theta2;
      break;
    case SuperoperatorKind::two_sided_tilted:
      check_theta(params.theta1, "theta1");
      check_theta(params.theta2, "theta2");
      theta1 = params.theta1;
      theta2 = params.theta2;
      xi = params.xi;
      break;
    default:
      throw ModelError("build_superoperator: unknown kind");
  }

  const ComplexMatrix id = ComplexMatrix::Identity(d, d);
  const ComplexMatrix& h = m.hamiltonian;
  Superoperator out;
  out.kind = kind;
  out.params = params;
  out.system_dim = d;

  if (kind == SuperoperatorKind::adjoint) {
    ComplexMatrix s = kI * kron(id, h) - kI * kron(h.transpose(), id);
    for (const JumpChannel& jump : m.jumps) {
      const ComplexMatrix& l = jump.op;
      const ComplexMatrix ldl = l.adjoint() * l;
      s += kron(l.transpose(), l.adjoint()) - 0.5 * kron(id, ldl) - 0.5 * kron(ldl.transpose(), id);
    }
    out.matrix = std::move(s);
    return out;
  }

  ComplexMatrix s = -kI * theta1 * kron(id, h) + kI * theta2 * kron(h.transpose(), id);
  const double jump_scale = std::sqrt(theta1 * theta2);
  for (const JumpChannel& jump : m.jumps) {
    const ComplexMatrix& l = jump.op;
    const ComplexMatrix ldl = l.adjoint() * l;
    const Complex tilt = std::exp(kI * (xi * jump.weight));
    s += (tilt * jump_scale) * kron(l.conjugate(), l) - (0.5 * theta1) * kron(id, ldl) -
         (0.5 * theta2) * kron(ldl.transpose(), id);
  }
  out.matrix = std::move(s);
  return out;
}

}  // namespace qdyn
