#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qdyn/propagate.hpp"

namespace qdyn {

enum class Relation {
  robertson_tur,
  robertson_qsl,
  mp_sum_tur,
  mp_product_tur,
  mp_qsl,
  rs_system_tur,
  rs_field_tur,
  rs_qsl,
};

std::string to_string(Relation r);
std::optional<Relation> relation_from_string(const std::string& name);
const std::vector<Relation>& all_relations();

enum class PointStatus { satisfied, violated, inapplicable };

/// A pointwise side condition (ordering or chain inequality), margin >= -tolerance.
/// NaN margins mark points where the check does not apply.
struct OrderingCheck {
  std::string name;
  std::vector<double> margin;
  int evaluated = 0;
  int violations = 0;
  double worst = 0.0;  // smallest evaluated margin (0 if none)
};

/// Observable entering a TUR: a Hermitian system operator C_S, or the
/// weighted field count sum_m alpha_m n_m (weights default to the model's).
struct Observable {
  enum class Kind { system, field };
  Kind kind = Kind::field;
  ComplexMatrix matrix;
  std::optional<std::vector<double>> weights;
  std::string tag = "field";

  static Observable system(ComplexMatrix c, std::string tag = "system");
  static Observable field(std::optional<std::vector<double>> weights = std::nullopt,
                          std::string tag = "field");
};

struct BoundOptions {
  double tolerance = 1e-9;
};

struct BoundReport {
  Relation relation = Relation::robertson_tur;
  TimeGrid grid;
  TimeSeries<double> lhs;
  TimeSeries<double> rhs;
  TimeSeries<double> slack;  // lhs - rhs
  std::vector<PointStatus> status;
  std::vector<int> signs;          // per-point sign used for the primary rhs (0: none)
  std::optional<int> sign_choice;  // set when every applicable point used the same sign
  std::string observable_tag;
  double tolerance = 1e-9;
  std::map<std::string, std::vector<double>> series;  // auxiliary per-point values
  std::vector<OrderingCheck> checks;
  std::map<std::string, int> counters;

  int count(PointStatus s) const;
  /// Smallest slack over applicable points; NaN when none applies.
  double min_slack() const;
  bool inapplicable_only() const { return count(PointStatus::inapplicable) == grid.size(); }
  int check_violations() const;
  /// No violated point and no violated side condition.
  bool ok() const { return count(PointStatus::violated) == 0 && check_violations() == 0; }
};

/// arccos sqrt(F) with F the Uhlmann fidelity; pure-state shortcut when either input is rank-1.
double bures_angle(const ComplexMatrix& rho1, const ComplexMatrix& rho2);

BoundReport robertson_tur(const LindbladModel& m, const TimeGrid& grid,
                          const Observable& obs = Observable::field(), const BoundOptions& opt = {});
BoundReport robertson_qsl(const LindbladModel& m, const TimeGrid& grid, const BoundOptions& opt = {});
BoundReport mp_sum_tur(const LindbladModel& m, const TimeGrid& grid,
                       const Observable& obs = Observable::field(), const BoundOptions& opt = {});
BoundReport mp_product_tur(const LindbladModel& m, const TimeGrid& grid,
                           const Observable& obs = Observable::field(), const BoundOptions& opt = {});
BoundReport mp_qsl(const LindbladModel& m, const TimeGrid& grid, const BoundOptions& opt = {});
BoundReport rs_system_tur(const LindbladModel& m, const TimeGrid& grid, const ComplexMatrix& c,
                          const BoundOptions& opt = {});
BoundReport rs_field_tur(const LindbladModel& m, const TimeGrid& grid,
                         const std::optional<std::vector<double>>& weights = std::nullopt,
                         const BoundOptions& opt = {});
BoundReport rs_qsl(const LindbladModel& m, const TimeGrid& grid, const BoundOptions& opt = {});

/// Dispatch by relation. `system_obs` feeds rs_system_tur; `obs` feeds the other TURs
/// (rs_field_tur takes its weights when obs is a field observable).
BoundReport evaluate(Relation r, const LindbladModel& m, const TimeGrid& grid, const Observable& obs,
                     const Observable& system_obs, const BoundOptions& opt = {});

enum class ConvolutionMethod { aux_ode, quadrature };

/// K(t) = int_0^t Tr[C(t-s) H_eff rho(s)] ds, C(u) the Heisenberg-evolved observable.
TimeSeries<Complex> system_convolution(const LindbladModel& m, const TimeGrid& grid,
                                       const ComplexMatrix& c, ConvolutionMethod method);

/// V(t) = int_0^t ds1 int_0^s1 ds2 Tr[Lw(s1-s2) H_eff rho(s2)], Lw = sum_m alpha_m L_m^dag L_m.
TimeSeries<Complex> field_convolution(const LindbladModel& m, const TimeGrid& grid,
                                      const std::optional<std::vector<double>>& weights,
                                      ConvolutionMethod method);

}  // namespace qdyn
