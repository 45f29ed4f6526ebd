#include "qdyn/bounds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

#include "qdyn/activity.hpp"
#include "qdyn/counting.hpp"
#include "qdyn/detail/flows.hpp"

namespace qdyn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Activities, rates and variances at or below this are treated as zero.
constexpr double kFloor = 1e-13;
// R(t) and S(t) divide by |gamma| (1 - |gamma|^2).
constexpr double kDegenerate = 1e-12;
constexpr int kNodes = 10;

int sign_of(double x) { return x >= 0.0 ? 1 : -1; }

BoundReport make_report(Relation r, const TimeGrid& grid, std::string tag, const BoundOptions& opt) {
  if (!(opt.tolerance >= 0.0) || !std::isfinite(opt.tolerance))
    throw std::invalid_argument("bounds: tolerance must be a non-negative finite number");
  const int n = grid.size();
  BoundReport rep;
  rep.relation = r;
  rep.grid = grid;
  rep.lhs = {grid, std::vector<double>(n, kNaN)};
  rep.rhs = {grid, std::vector<double>(n, kNaN)};
  rep.slack = {grid, std::vector<double>(n, kNaN)};
  rep.status.assign(n, PointStatus::inapplicable);
  rep.signs.assign(n, 0);
  rep.observable_tag = std::move(tag);
  rep.tolerance = opt.tolerance;
  return rep;
}

void set_point(BoundReport& rep, int k, double lhs, double rhs) {
  rep.lhs[k] = lhs;
  rep.rhs[k] = rhs;
  rep.slack[k] = lhs - rhs;
  rep.status[k] = rep.slack[k] >= -rep.tolerance ? PointStatus::satisfied : PointStatus::violated;
}

void set_inapplicable(BoundReport& rep, int k, double lhs, double rhs) {
  rep.lhs[k] = lhs;
  rep.rhs[k] = rhs;
  rep.slack[k] = lhs - rhs;
  rep.status[k] = PointStatus::inapplicable;
}

void add_check(BoundReport& rep, std::string name, std::vector<double> margin) {
  OrderingCheck c;
  c.name = std::move(name);
  bool first = true;
  for (double v : margin) {
    if (std::isnan(v)) continue;
    ++c.evaluated;
    if (v < -rep.tolerance) ++c.violations;
    c.worst = first ? v : std::min(c.worst, v);
    first = false;
  }
  c.margin = std::move(margin);
  rep.checks.push_back(std::move(c));
}

void finish_signs(BoundReport& rep) {
  std::optional<int> common;
  bool mixed = false;
  for (int k = 0; k < rep.grid.size(); ++k) {
    if (rep.status[k] == PointStatus::inapplicable || rep.signs[k] == 0) continue;
    if (!common) common = rep.signs[k];
    else if (*common != rep.signs[k]) mixed = true;
  }
  rep.sign_choice = mixed ? std::nullopt : common;
}

std::vector<double> weights_for(const LindbladModel& m, const std::optional<std::vector<double>>& w) {
  std::vector<double> out = w ? *w : detail::model_weights(m);
  if (out.size() != m.jumps.size())
    throw ModelError("observable weights: expected " + std::to_string(m.jumps.size()) + " entries, got " +
                     std::to_string(out.size()));
  return out;
}

void check_system_observable(const LindbladModel& m, const ComplexMatrix& c) {
  if (c.rows() != m.dim || c.cols() != m.dim)
    throw ModelError("system observable shape does not match the model dimension");
  if (!all_finite(c)) throw ModelError("system observable has non-finite entries");
  if (hermiticity_defect(c) > 1e-10) throw ModelError("system observable is not Hermitian");
}

struct Moments {
  std::vector<double> mean, variance, deriv;
  std::vector<Complex> chi;  // <Psi|C|Psi_bar>; filled on request
};

Moments observable_moments(const LindbladModel& m, const TimeGrid& grid, const Observable& obs,
                           bool need_chi) {
  const int n = grid.size();
  Moments mo;
  mo.mean.resize(n);
  mo.variance.resize(n);
  mo.deriv.resize(n);
  if (obs.kind == Observable::Kind::field) {
    const CountingMoments c = counting_moments(m, grid, need_chi ? CountingTarget::chi : CountingTarget::rho,
                                               weights_for(m, obs.weights));
    mo.mean = c.mean.values;
    mo.variance = c.variance.values;
    mo.deriv = c.rate.values;
    if (need_chi) mo.chi = c.chi_mean->values;
    return mo;
  }
  check_system_observable(m, obs.matrix);
  const ComplexMatrix& c = obs.matrix;
  const ComplexMatrix c2 = c * c;
  const Superoperator l = build_superoperator(m, SuperoperatorKind::lindblad);
  const TimeSeries<ComplexMatrix> rho = evolve_density(m, grid);
  for (int k = 0; k < n; ++k) {
    mo.mean[k] = trace_product(c, rho[k]).real();
    mo.variance[k] = trace_product(c2, rho[k]).real() - mo.mean[k] * mo.mean[k];
    mo.deriv[k] = trace_product(c, l.apply(rho[k])).real();
  }
  if (need_chi) {
    const TimeSeries<ComplexMatrix> chi = evolve_coherence(m, grid);
    mo.chi.resize(n);
    for (int k = 0; k < n; ++k) mo.chi[k] = trace_product(c, chi[k]);
  }
  return mo;
}

struct ActivityOnGrid {
  std::vector<double> B, energy;
  std::vector<ComplexMatrix> rho;
};

ActivityOnGrid activity_on_grid(const LindbladModel& m, const TimeGrid& grid) {
  detail::ActivityLayout lay;
  const LinearFlow flow = detail::activity_flow(m, grid, &lay);
  ActivityOnGrid a;
  for (int k = 0; k < grid.size(); ++k) {
    const detail::ActivityValues v = detail::activity_values(flow.point(k), lay);
    a.B.push_back(v.B);
    a.energy.push_back(v.energy_integral);
    a.rho.push_back(unvec(flow.point(k).segment(lay.rho(), lay.D), m.dim));
  }
  return a;
}

std::vector<Complex> coherence_integral(const LindbladModel& m, const TimeGrid& grid) {
  detail::CoherenceLayout lay;
  const LinearFlow flow = detail::coherence_flow(m, grid, &lay);
  std::vector<Complex> y;
  for (int k = 0; k < grid.size(); ++k) y.push_back(flow.point(k)(lay.y()));
  return y;
}

// ---------------------------------------------------------------------------
// Quantum speed limits: integrands sampled at Gauss-Legendre nodes of every
// grid interval. On [0, t_1] the substitution s = t_1 w^2 absorbs the
// t^{-1/2} behaviour of sqrt(B)/t in dissipative models.

struct NodeState {
  double t = 0.0;
  double B = 0.0;
  double energy = 0.0;  // int Tr[H_S rho]
  Complex Y;            // int Tr[H_S chi]
  Complex gamma, beta, X;
};

struct QslSamples {
  std::vector<std::array<NodeState, kNodes>> nodes;  // per interval
  std::vector<std::array<double, kNodes>> weights;   // quadrature weights incl. Jacobian
  std::vector<NodeState> grid_states;
  std::vector<ComplexMatrix> rho;
};

std::array<double, kNodes> gl_unit_nodes(std::array<double, kNodes>* weights) {
  using Gauss = boost::math::quadrature::gauss<double, kNodes>;
  const auto& x = Gauss::abscissa();
  const auto& w = Gauss::weights();
  std::array<double, kNodes> u{};
  int i = 0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    u[i] = 0.5 * (1.0 - x[j]);
    (*weights)[i++] = 0.5 * w[j];
    u[i] = 0.5 * (1.0 + x[j]);
    (*weights)[i++] = 0.5 * w[j];
  }
  return u;
}

QslSamples sample_qsl(const LindbladModel& m, const TimeGrid& grid, bool with_coherence) {
  const ComplexVector psi = require_pure_initial(m, "quantum speed limit");
  const ComplexVector* bar = with_coherence ? &require_orthogonal(m, "quantum speed limit") : nullptr;
  const ComplexMatrix heff = effective_hamiltonian(m);
  const double h = grid.step();
  const int n = grid.size();

  detail::ActivityLayout alay;
  const LinearFlow act = detail::activity_flow(m, grid, &alay);
  detail::CoherenceLayout clay;
  std::optional<LinearFlow> coh;
  if (with_coherence) coh.emplace(detail::coherence_flow(m, grid, &clay));

  std::vector<ComplexMatrix> u(n);
  for (int k = 0; k < n; ++k) u[k] = mat_exp(-kI * grid.at(k) * heff);

  auto state = [&](double t, const ComplexVector& xa, const ComplexVector* xc, const ComplexMatrix& uk) {
    NodeState s;
    s.t = t;
    const detail::ActivityValues v = detail::activity_values(xa, alay);
    s.B = v.B;
    s.energy = v.energy_integral;
    const ComplexVector upsi = uk * psi;
    s.gamma = std::conj(psi.dot(upsi));
    s.beta = psi.dot(heff * upsi);
    if (xc) {
      s.Y = (*xc)(clay.y());
      s.X = psi.dot(uk * *bar);
    }
    return s;
  };

  QslSamples out;
  for (int k = 0; k < n; ++k) {
    const ComplexVector* xc = coh ? &coh->point(k) : nullptr;
    out.grid_states.push_back(state(grid.at(k), act.point(k), xc, u[k]));
    out.rho.push_back(unvec(act.point(k).segment(alay.rho(), alay.D), m.dim));
  }

  std::array<double, kNodes> gw{};
  const std::array<double, kNodes> gu = gl_unit_nodes(&gw);
  out.nodes.resize(grid.steps);
  out.weights.resize(grid.steps);
  for (int j = 0; j < kNodes; ++j) {
    // first interval: s = t_1 w^2, ds = 2 t_1 w dw
    {
      const double frac = gu[j] * gu[j];
      const ComplexVector xa = act.propagator(frac * h) * act.point(0);
      std::optional<ComplexVector> xc;
      if (coh) xc = coh->propagator(frac * h) * coh->point(0);
      const ComplexMatrix uf = mat_exp(-kI * (frac * h) * heff);
      out.nodes[0][j] = state(frac * h, xa, xc ? &*xc : nullptr, uf);
      out.weights[0][j] = gw[j] * 2.0 * h * gu[j];
    }
    const double frac = gu[j];
    const ComplexMatrix pa = act.propagator(frac * h);
    std::optional<ComplexMatrix> pc;
    if (coh) pc = coh->propagator(frac * h);
    const ComplexMatrix uf = mat_exp(-kI * (frac * h) * heff);
    for (int k = 1; k < grid.steps; ++k) {
      const ComplexVector xa = pa * act.point(k);
      std::optional<ComplexVector> xc;
      if (coh) xc = *pc * coh->point(k);
      out.nodes[k][j] = state(grid.at(k) + frac * h, xa, xc ? &*xc : nullptr, uf * u[k]);
      out.weights[k][j] = gw[j] * h;
    }
  }
  return out;
}

template <class F>
std::vector<double> cumulative_integral(const QslSamples& s, F&& integrand) {
  std::vector<double> out(s.nodes.size() + 1, 0.0);
  for (std::size_t k = 0; k < s.nodes.size(); ++k) {
    double acc = 0.0;
    for (int j = 0; j < kNodes; ++j) acc += s.weights[k][j] * integrand(s.nodes[k][j]);
    out[k + 1] = out[k] + acc;
  }
  return out;
}

double robertson_integrand(const NodeState& s) { return std::sqrt(std::max(s.B, 0.0)) / (2.0 * s.t); }

bool degenerate(const NodeState& s) {
  const double g = std::abs(s.gamma);
  return !(s.B > kFloor) || g * (1.0 - g * g) <= kDegenerate;
}

double r_value(const NodeState& s) {
  const double g = std::abs(s.gamma);
  const Complex z = s.gamma * s.X / (g * std::sqrt(1.0 - g * g)) + kI * 2.0 * s.Y / std::sqrt(s.B);
  return 0.5 * std::norm(z);
}

double s_value(const NodeState& s) {
  const double g2 = std::norm(s.gamma);
  const double num = (s.gamma * s.beta).real() - g2 * s.energy / s.t;
  return num * num / (g2 * (1.0 - g2));
}

std::vector<double> bures_series(const QslSamples& s) {
  std::vector<double> out;
  for (const ComplexMatrix& r : s.rho) out.push_back(bures_angle(r, s.rho[0]));
  return out;
}

double arccos_abs(Complex z, int k) {
  return k == 0 ? 0.0 : std::acos(std::clamp(std::abs(z), 0.0, 1.0));
}

// ---------------------------------------------------------------------------
// Quadrature oracles for the convolution integrals (trapezoid + Richardson).

std::vector<Complex> trapezoid_single_convolution(const LindbladModel& m, const TimeGrid& grid,
                                                  const ComplexMatrix& c) {
  const TimeSeries<ComplexMatrix> rho = evolve_density(m, grid);
  const TimeSeries<ComplexMatrix> ch = heisenberg_evolve(m, c, grid);
  const ComplexMatrix heff = effective_hamiltonian(m);
  const int n = grid.size();
  std::vector<ComplexMatrix> q(n);
  for (int l = 0; l < n; ++l) q[l] = ch[l] * heff;
  std::vector<Complex> out(n, 0.0);
  for (int i = 1; i < n; ++i) {
    Complex s = 0.5 * (trace_product(q[i], rho[0]) + trace_product(q[0], rho[i]));
    for (int j = 1; j < i; ++j) s += trace_product(q[i - j], rho[j]);
    out[i] = grid.step() * s;
  }
  return out;
}

std::vector<Complex> trapezoid_double_convolution(const LindbladModel& m, const TimeGrid& grid,
                                                  const ComplexMatrix& c) {
  const std::vector<Complex> inner = trapezoid_single_convolution(m, grid, c);
  std::vector<Complex> out(grid.size(), 0.0);
  for (int i = 1; i < grid.size(); ++i) out[i] = out[i - 1] + 0.5 * grid.step() * (inner[i - 1] + inner[i]);
  return out;
}

template <class F>
TimeSeries<Complex> richardson(const TimeGrid& grid, F&& rule) {
  const std::vector<Complex> coarse = rule(grid);
  const std::vector<Complex> fine = rule(TimeGrid{grid.t_max, 2 * grid.steps});
  TimeSeries<Complex> out{grid, std::vector<Complex>(grid.size())};
  for (int k = 0; k < grid.size(); ++k) out[k] = (4.0 * fine[2 * k] - coarse[k]) / 3.0;
  return out;
}

ComplexMatrix weighted_lw(const LindbladModel& m, const std::vector<double>& w) {
  ComplexMatrix lw = ComplexMatrix::Zero(m.dim, m.dim);
  for (std::size_t k = 0; k < m.jumps.size(); ++k) lw += w[k] * (m.jumps[k].op.adjoint() * m.jumps[k].op);
  return lw;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(Relation r) {
  switch (r) {
    case Relation::robertson_tur: return "robertson_tur";
    case Relation::robertson_qsl: return "robertson_qsl";
    case Relation::mp_sum_tur: return "mp_sum_tur";
    case Relation::mp_product_tur: return "mp_product_tur";
    case Relation::mp_qsl: return "mp_qsl";
    case Relation::rs_system_tur: return "rs_system_tur";
    case Relation::rs_field_tur: return "rs_field_tur";
    case Relation::rs_qsl: return "rs_qsl";
  }
  return "unknown";
}

const std::vector<Relation>& all_relations() {
  static const std::vector<Relation> all = {Relation::robertson_tur, Relation::robertson_qsl,
                                            Relation::mp_sum_tur,    Relation::mp_product_tur,
                                            Relation::mp_qsl,        Relation::rs_system_tur,
                                            Relation::rs_field_tur,  Relation::rs_qsl};
  return all;
}

std::optional<Relation> relation_from_string(const std::string& name) {
  for (Relation r : all_relations())
    if (to_string(r) == name) return r;
  return std::nullopt;
}

Observable Observable::system(ComplexMatrix c, std::string tag) {
  Observable o;
  o.kind = Kind::system;
  o.matrix = std::move(c);
  o.tag = std::move(tag);
  return o;
}

Observable Observable::field(std::optional<std::vector<double>> weights, std::string tag) {
  Observable o;
  o.kind = Kind::field;
  o.weights = std::move(weights);
  o.tag = std::move(tag);
  return o;
}

int BoundReport::count(PointStatus s) const {
  return static_cast<int>(std::count(status.begin(), status.end(), s));
}

double BoundReport::min_slack() const {
  double best = kNaN;
  for (int k = 0; k < grid.size(); ++k) {
    if (status[k] == PointStatus::inapplicable) continue;
    if (std::isnan(best) || slack[k] < best) best = slack[k];
  }
  return best;
}

int BoundReport::check_violations() const {
  int v = 0;
  for (const OrderingCheck& c : checks) v += c.violations;
  return v;
}

double bures_angle(const ComplexMatrix& rho1, const ComplexMatrix& rho2) {
  auto check = [](const ComplexMatrix& r, const char* name) {
    if (r.rows() != r.cols() || r.rows() == 0) throw LinalgError(std::string("bures_angle: ") + name + " is not square");
    if (!all_finite(r)) throw LinalgError(std::string("bures_angle: ") + name + " has non-finite entries");
    if (hermiticity_defect(r) > 1e-10) throw LinalgError(std::string("bures_angle: ") + name + " is not Hermitian");
    if (std::abs(r.trace() - 1.0) > 1e-9) throw LinalgError(std::string("bures_angle: ") + name + " does not have unit trace");
  };
  check(rho1, "rho1");
  check(rho2, "rho2");
  if (rho1.rows() != rho2.rows()) throw LinalgError("bures_angle: dimension mismatch");

  auto rank_one = [](const ComplexMatrix& r) -> std::optional<ComplexVector> {
    if (std::abs(trace_product(r, r).real() - 1.0) > 1e-10) return std::nullopt;
    const HermitianEigen e = herm_eig(r);
    return ComplexVector(e.vectors.col(e.values.size() - 1));
  };

  std::optional<ComplexVector> psi = rank_one(rho1);
  const ComplexMatrix* other = &rho2;
  if (!psi) {
    psi = rank_one(rho2);
    other = &rho1;
  }
  if (psi) {
    const ComplexMatrix s = psd_sqrt(0.5 * (*other + other->adjoint()));
    const ComplexVector sp = s * *psi;                      // |S psi|^2 = F
    const ComplexMatrix qs = s - *psi * (psi->adjoint() * s);  // |Q S|^2 = 1 - F
    return std::atan2(qs.norm(), sp.norm());
  }
  const ComplexMatrix s1 = psd_sqrt(0.5 * (rho1 + rho1.adjoint()));
  const ComplexMatrix inner = s1 * rho2 * s1;
  const HermitianEigen e = herm_eig(0.5 * (inner + inner.adjoint()));
  double root_fid = 0.0;
  for (Eigen::Index k = 0; k < e.values.size(); ++k) root_fid += std::sqrt(std::max(e.values(k), 0.0));
  return std::acos(std::clamp(root_fid, 0.0, 1.0));
}

BoundReport robertson_tur(const LindbladModel& m, const TimeGrid& grid, const Observable& obs,
                          const BoundOptions& opt) {
  require_valid(m);
  BoundReport rep = make_report(Relation::robertson_tur, grid, obs.tag, opt);
  const ActivityOnGrid act = activity_on_grid(m, grid);
  const Moments mo = observable_moments(m, grid, obs, false);
  for (int k = 0; k < grid.size(); ++k) {
    const double t = grid.at(k);
    const double d = mo.deriv[k];
    const double lhs = k == 0 || d == 0.0 ? kNaN : mo.variance[k] / (t * t * d * d);
    const double rhs = act.B[k] > 0.0 ? 1.0 / act.B[k] : kNaN;
    if (k == 0 || std::abs(d) <= kFloor || act.B[k] <= kFloor) set_inapplicable(rep, k, lhs, rhs);
    else set_point(rep, k, lhs, rhs);
  }
  finish_signs(rep);
  return rep;
}

BoundReport mp_sum_tur(const LindbladModel& m, const TimeGrid& grid, const Observable& obs,
                       const BoundOptions& opt) {
  require_valid(m);
  require_orthogonal(m, "mp_sum_tur");
  BoundReport rep = make_report(Relation::mp_sum_tur, grid, obs.tag, opt);
  const ActivityOnGrid act = activity_on_grid(m, grid);
  const Moments mo = observable_moments(m, grid, obs, true);
  const std::vector<Complex> y = coherence_integral(m, grid);
  const int n = grid.size();
  std::vector<double> alt_rhs(n), alt_margin(n), coherence_term(n);
  for (int k = 0; k < n; ++k) {
    const double t = grid.at(k);
    const double lhs = act.B[k] / 4.0 + t * t * mo.variance[k];
    auto rhs_for = [&](int s) { return s * t * t * mo.deriv[k] + std::norm(y[k] + double(s) * kI * t * mo.chi[k]); };
    const int s = sign_of(mo.deriv[k]);
    rep.signs[k] = s;
    set_point(rep, k, lhs, rhs_for(s));
    coherence_term[k] = std::norm(y[k] + double(s) * kI * t * mo.chi[k]);
    alt_rhs[k] = rhs_for(-s);
    alt_margin[k] = lhs - alt_rhs[k];
  }
  rep.series["coherence_term"] = std::move(coherence_term);
  rep.series["rhs_alternate"] = std::move(alt_rhs);
  add_check(rep, "alternate_sign", std::move(alt_margin));
  finish_signs(rep);
  return rep;
}

BoundReport mp_product_tur(const LindbladModel& m, const TimeGrid& grid, const Observable& obs,
                           const BoundOptions& opt) {
  require_valid(m);
  require_orthogonal(m, "mp_product_tur");
  BoundReport rep = make_report(Relation::mp_product_tur, grid, obs.tag, opt);
  const ActivityOnGrid act = activity_on_grid(m, grid);
  const Moments mo = observable_moments(m, grid, obs, true);
  const std::vector<Complex> y = coherence_integral(m, grid);
  const int n = grid.size();
  std::vector<double> denom(n, kNaN), rob(n, kNaN), refine(n, kNaN), alt_margin(n, kNaN);
  int nonpositive = 0;
  for (int k = 0; k < n; ++k) {
    const double t = grid.at(k);
    const double var = mo.variance[k];
    const double b = act.B[k];
    if (k == 0 || !(b > kFloor) || !(var > kFloor)) {
      set_inapplicable(rep, k, std::sqrt(std::max(b, 0.0) * std::max(var, 0.0)), kNaN);
      continue;
    }
    const double sb = std::sqrt(b);
    const double sd = std::sqrt(var);
    const double lhs = sb * sd;
    const double tdc = t * mo.deriv[k];
    auto denominator = [&](int s) { return 1.0 - 0.5 * std::norm(2.0 * y[k] / sb + double(s) * kI * mo.chi[k] / sd); };
    const int s = sign_of(mo.deriv[k]);
    rep.signs[k] = s;
    const double dp = denominator(s);
    const double da = denominator(-s);
    denom[k] = dp;
    rob[k] = std::abs(tdc);
    alt_margin[k] = da * lhs + s * tdc;
    if (dp <= kDegenerate) {
      ++nonpositive;
      set_inapplicable(rep, k, lhs, kNaN);
      continue;
    }
    const double rhs = s * tdc / dp;
    set_point(rep, k, lhs, rhs);
    if (dp <= 1.0) refine[k] = rhs - rob[k];
  }
  rep.series["denominator"] = std::move(denom);
  rep.series["robertson_rhs"] = std::move(rob);
  rep.counters["nonpositive_denominator"] = nonpositive;
  add_check(rep, "rhs>=robertson_rhs", std::move(refine));
  add_check(rep, "alternate_sign", std::move(alt_margin));
  finish_signs(rep);
  return rep;
}

BoundReport rs_system_tur(const LindbladModel& m, const TimeGrid& grid, const ComplexMatrix& c,
                          const BoundOptions& opt) {
  require_valid(m);
  check_system_observable(m, c);
  BoundReport rep = make_report(Relation::rs_system_tur, grid, "system", opt);
  const ActivityOnGrid act = activity_on_grid(m, grid);
  const Moments mo = observable_moments(m, grid, Observable::system(c), false);
  const TimeSeries<Complex> kc = system_convolution(m, grid, c, ConvolutionMethod::aux_ode);
  const int n = grid.size();
  std::vector<double> anti(n), rob(n), margin(n);
  for (int k = 0; k < n; ++k) {
    const double t = grid.at(k);
    const double centred = kc[k].real() - mo.mean[k] * act.energy[k];
    anti[k] = 4.0 * centred * centred;
    rob[k] = t * t * mo.deriv[k] * mo.deriv[k];
    set_point(rep, k, act.B[k] * mo.variance[k], anti[k] + rob[k]);
    margin[k] = rep.rhs[k] - rob[k];
  }
  rep.series["anticommutator_term"] = std::move(anti);
  rep.series["robertson_rhs"] = std::move(rob);
  add_check(rep, "rhs>=robertson_rhs", std::move(margin));
  return rep;
}

BoundReport rs_field_tur(const LindbladModel& m, const TimeGrid& grid,
                         const std::optional<std::vector<double>>& weights, const BoundOptions& opt) {
  require_valid(m);
  BoundReport rep = make_report(Relation::rs_field_tur, grid, weights ? "field(custom)" : "field", opt);
  const int n = grid.size();
  if (m.jumps.empty()) return rep;
  const std::vector<double> w = weights_for(m, weights);
  const ActivityOnGrid act = activity_on_grid(m, grid);

  detail::CountingLayout cl;
  const LinearFlow cf = detail::counting_flow(m, w, m.initial.density_matrix(), grid, &cl);
  const ComplexMatrix j1 = detail::jump_superoperator(m, w, 1);
  const TimeSeries<Complex> v = field_convolution(m, grid, w, ConvolutionMethod::aux_ode);

  std::vector<double> anti(n), rob(n), margin(n);
  for (int k = 0; k < n; ++k) {
    const ComplexVector& x = cf.point(k);
    const double t = grid.at(k);
    const double mean = unvec(x.segment(cl.m1(), cl.D), m.dim).trace().real();
    const double var = unvec(x.segment(cl.m2(), cl.D), m.dim).trace().real() - mean * mean;
    const double rate = unvec(j1 * x.segment(cl.phi(), cl.D), m.dim).trace().real();
    const double centred = x(cl.w()).real() + v[k].real() - mean * act.energy[k];
    anti[k] = 4.0 * centred * centred;
    rob[k] = t * t * rate * rate;
    set_point(rep, k, act.B[k] * var, anti[k] + rob[k]);
    margin[k] = rep.rhs[k] - rob[k];
  }
  rep.series["anticommutator_term"] = std::move(anti);
  rep.series["robertson_rhs"] = std::move(rob);
  add_check(rep, "rhs>=robertson_rhs", std::move(margin));
  return rep;
}

BoundReport robertson_qsl(const LindbladModel& m, const TimeGrid& grid, const BoundOptions& opt) {
  require_valid(m);
  BoundReport rep = make_report(Relation::robertson_qsl, grid, "", opt);
  const QslSamples s = sample_qsl(m, grid, false);
  const std::vector<double> lhs = cumulative_integral(s, robertson_integrand);
  const std::vector<double> rhs = bures_series(s);
  const int n = grid.size();
  std::vector<double> ac(n), upper(n), lower(n);
  for (int k = 0; k < n; ++k) {
    set_point(rep, k, lhs[k], rhs[k]);
    ac[k] = arccos_abs(s.grid_states[k].gamma, k);
    upper[k] = lhs[k] - ac[k];
    lower[k] = ac[k] - rhs[k];
  }
  rep.series["arccos_gamma"] = std::move(ac);
  add_check(rep, "lhs>=arccos_gamma", std::move(upper));
  add_check(rep, "arccos_gamma>=rhs", std::move(lower));
  return rep;
}

BoundReport mp_qsl(const LindbladModel& m, const TimeGrid& grid, const BoundOptions& opt) {
  require_valid(m);
  BoundReport rep = make_report(Relation::mp_qsl, grid, "", opt);
  const QslSamples s = sample_qsl(m, grid, true);
  int fallback = 0;
  const std::vector<double> lhs = cumulative_integral(s, [&](const NodeState& x) {
    if (degenerate(x)) {
      ++fallback;
      return robertson_integrand(x);
    }
    return (1.0 - r_value(x)) * robertson_integrand(x);
  });
  const std::vector<double> rob = cumulative_integral(s, robertson_integrand);
  const std::vector<double> rhs = bures_series(s);
  const int n = grid.size();
  std::vector<double> r(n, kNaN), margin(n);
  for (int k = 0; k < n; ++k) {
    set_point(rep, k, lhs[k], rhs[k]);
    rep.signs[k] = 1;
    if (k > 0 && !degenerate(s.grid_states[k])) r[k] = r_value(s.grid_states[k]);
    margin[k] = rob[k] - lhs[k];
  }
  rep.series["R"] = std::move(r);
  rep.series["robertson_lhs"] = rob;
  rep.counters["fallback"] = fallback;
  add_check(rep, "lhs<=robertson_lhs", std::move(margin));
  finish_signs(rep);
  return rep;
}

BoundReport rs_qsl(const LindbladModel& m, const TimeGrid& grid, const BoundOptions& opt) {
  require_valid(m);
  BoundReport rep = make_report(Relation::rs_qsl, grid, "", opt);
  const QslSamples s = sample_qsl(m, grid, false);
  int fallback = 0;
  int clamped = 0;
  double worst_s = 0.0;
  const std::vector<double> lhs = cumulative_integral(s, [&](const NodeState& x) {
    if (degenerate(x)) {
      ++fallback;
      return robertson_integrand(x);
    }
    const double sv = s_value(x);
    worst_s = std::min(worst_s, sv);
    const double radicand = x.B / (4.0 * x.t * x.t) - sv;
    if (radicand < 0.0) {
      ++clamped;
      return 0.0;
    }
    return std::sqrt(radicand);
  });
  const std::vector<double> rob = cumulative_integral(s, robertson_integrand);
  const std::vector<double> rhs = bures_series(s);
  const int n = grid.size();
  std::vector<double> sv(n, kNaN), margin(n), s_margin(n, kNaN);
  for (int k = 0; k < n; ++k) {
    set_point(rep, k, lhs[k], rhs[k]);
    if (k > 0 && !degenerate(s.grid_states[k])) sv[k] = s_margin[k] = s_value(s.grid_states[k]);
    margin[k] = rob[k] - lhs[k];
  }
  rep.series["S"] = std::move(sv);
  rep.series["robertson_lhs"] = rob;
  rep.counters["fallback"] = fallback;
  rep.counters["clamped"] = clamped;
  add_check(rep, "lhs<=robertson_lhs", std::move(margin));
  add_check(rep, "S>=0", std::move(s_margin));
  return rep;
}

BoundReport evaluate(Relation r, const LindbladModel& m, const TimeGrid& grid, const Observable& obs,
                     const Observable& system_obs, const BoundOptions& opt) {
  switch (r) {
    case Relation::robertson_tur: return robertson_tur(m, grid, obs, opt);
    case Relation::robertson_qsl: return robertson_qsl(m, grid, opt);
    case Relation::mp_sum_tur: return mp_sum_tur(m, grid, obs, opt);
    case Relation::mp_product_tur: return mp_product_tur(m, grid, obs, opt);
    case Relation::mp_qsl: return mp_qsl(m, grid, opt);
    case Relation::rs_system_tur: {
      if (system_obs.kind != Observable::Kind::system)
        throw std::invalid_argument("rs_system_tur needs a system observable");
      BoundReport rep = rs_system_tur(m, grid, system_obs.matrix, opt);
      rep.observable_tag = system_obs.tag;
      return rep;
    }
    case Relation::rs_field_tur: {
      const std::optional<std::vector<double>> w =
          obs.kind == Observable::Kind::field ? obs.weights : std::nullopt;
      BoundReport rep = rs_field_tur(m, grid, w, opt);
      if (obs.kind == Observable::Kind::field) rep.observable_tag = obs.tag;
      return rep;
    }
    case Relation::rs_qsl: return rs_qsl(m, grid, opt);
  }
  throw std::invalid_argument("evaluate: unknown relation");
}

TimeSeries<Complex> system_convolution(const LindbladModel& m, const TimeGrid& grid,
                                       const ComplexMatrix& c, ConvolutionMethod method) {
  require_valid(m);
  check_system_observable(m, c);
  if (method == ConvolutionMethod::quadrature)
    return richardson(grid, [&](const TimeGrid& g) { return trapezoid_single_convolution(m, g, c); });
  detail::ConvolutionLayout lay;
  const LinearFlow flow = detail::convolution_flow(m, detail::model_weights(m), grid, &lay);
  TimeSeries<Complex> out{grid, std::vector<Complex>(grid.size())};
  for (int k = 0; k < grid.size(); ++k)
    out[k] = trace_product(c, unvec(flow.point(k).segment(lay.p(), lay.D), m.dim));
  return out;
}

TimeSeries<Complex> field_convolution(const LindbladModel& m, const TimeGrid& grid,
                                      const std::optional<std::vector<double>>& weights,
                                      ConvolutionMethod method) {
  require_valid(m);
  const std::vector<double> w = weights_for(m, weights);
  if (method == ConvolutionMethod::quadrature) {
    const ComplexMatrix lw = weighted_lw(m, w);
    return richardson(grid, [&](const TimeGrid& g) { return trapezoid_double_convolution(m, g, lw); });
  }
  detail::ConvolutionLayout lay;
  const LinearFlow flow = detail::convolution_flow(m, w, grid, &lay);
  TimeSeries<Complex> out{grid, std::vector<Complex>(grid.size())};
  for (int k = 0; k < grid.size(); ++k) out[k] = flow.point(k)(lay.v());
  return out;
}

}  // namespace qdyn
