#include "qdyn/counting.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

#include "qdyn/detail/flows.hpp"

namespace qdyn {

CountingMoments counting_moments(const LindbladModel& m, const TimeGrid& grid,
                                 CountingTarget target,
                                 const std::optional<std::vector<double>>& weights) {
  require_valid(m);
  const std::vector<double> w = weights ? *weights : detail::model_weights(m);
  if (w.size() != m.jumps.size())
    throw ModelError("counting_moments: expected " + std::to_string(m.jumps.size()) + " weights");

  detail::CountingLayout lay;
  const LinearFlow flow = detail::counting_flow(m, w, m.initial.density_matrix(), grid, &lay);
  const ComplexMatrix j1 = detail::jump_superoperator(m, w, 1);
  const int n = grid.size();
  CountingMoments out{grid,
                      {grid, std::vector<double>(n)},
                      {grid, std::vector<double>(n)},
                      {grid, std::vector<double>(n)},
                      std::nullopt};
  for (int k = 0; k < n; ++k) {
    const ComplexVector& x = flow.point(k);
    const double mean = unvec(x.segment(lay.m1(), lay.D), m.dim).trace().real();
    const double second = unvec(x.segment(lay.m2(), lay.D), m.dim).trace().real();
    out.mean[k] = mean;
    out.variance[k] = second - mean * mean;
    out.rate[k] = unvec(j1 * x.segment(lay.phi(), lay.D), m.dim).trace().real();
  }

  if (target == CountingTarget::chi) {
    const ComplexVector& bar = require_orthogonal(m, "counting_moments(chi)");
    const ComplexVector psi = require_pure_initial(m, "counting_moments(chi)");
    const LinearFlow chi_flow = detail::counting_flow(m, w, outer(bar, psi), grid, &lay);
    TimeSeries<Complex> chi{grid, std::vector<Complex>(n)};
    for (int k = 0; k < n; ++k)
      chi[k] = unvec(chi_flow.point(k).segment(lay.m1(), lay.D), m.dim).trace();
    out.chi_mean = std::move(chi);
  }
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

int default_thread_count() {
  if (const char* env = std::getenv("QDYN_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(std::min(v, 256L));
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {

// Uniform in [0, 1) from the top 53 bits; independent of the standard library's
// distribution implementation.
inline double uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Waiting-time unraveling. Between jumps the unnormalized state follows
// e^{-i H_eff t}; its squared norm is non-increasing, so the next jump happens
// where it first drops to a uniform draw r. Coarse intervals of length h are
// propagated exactly; the crossing inside an interval is found by bisection on
// a Taylor expansion, which is exact to roundoff because ||H_eff|| h <= 1/4.
template <int Dim>
class Unraveling {
 public:
  using Mat = Eigen::Matrix<Complex, Dim, Dim>;
  using Vec = Eigen::Matrix<Complex, Dim, 1>;
  static constexpr int kOrder = 24;

  Unraveling(const LindbladModel& m, double t_max, int intervals) : t_max_(t_max) {
    const ComplexMatrix heff = effective_hamiltonian(m);
    const double norm = heff.cwiseAbs().rowwise().sum().maxCoeff();
    int n = std::max(intervals, 1);
    if (norm > 0) n = std::max(n, static_cast<int>(std::ceil(4.0 * norm * t_max)));
    h_ = t_max / n;
    gen_ = Mat(-kI * heff);
    step_ = Mat(mat_exp(ComplexMatrix(-kI * h_ * heff)));
    for (const JumpChannel& j : m.jumps) {
      ops_.push_back(Mat(j.op));
      weights_.push_back(j.weight);
    }
    if (m.initial.kind() == InitialState::Kind::pure) {
      probs_.push_back(1.0);
      starts_.push_back(Vec(m.initial.vector()));
    } else {
      const HermitianEigen eig = herm_eig(m.initial.density_matrix());
      for (Eigen::Index k = 0; k < eig.values.size(); ++k) {
        if (eig.values(k) <= 0.0) continue;
        probs_.push_back(eig.values(k));
        starts_.push_back(Vec(eig.vectors.col(k)));
      }
    }
  }

  double run(std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    Vec psi = starts_[0];
    if (starts_.size() > 1) psi = starts_[pick(probs_, uniform(rng))];
    psi /= psi.norm();
    double total = 0.0;
    double t = 0.0;
    double r = 1.0 - uniform(rng);  // (0, 1]
    std::vector<double> channel(ops_.size());
    std::array<Vec, kOrder + 1> series;
    while (t < t_max_) {
      const double len = std::min(h_, t_max_ - t);
      const Vec next = len == h_ ? Vec(step_ * psi) : taylor(psi, len, series);
      if (next.squaredNorm() > r) {
        psi = next;
        t += len;
        continue;
      }
      // Crossing inside (t, t + len]: bisect on the expanded propagator.
      expand(psi, series);
      double lo = 0.0, hi = len;
      for (int it = 0; it < 200 && hi - lo > 4e-16 * (t + hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (evaluate(series, mid).squaredNorm() > r) lo = mid;
        else hi = mid;
      }
      const Vec at = evaluate(series, hi);
      for (std::size_t c = 0; c < ops_.size(); ++c) channel[c] = (ops_[c] * at).squaredNorm();
      const std::size_t c = pick(channel, uniform(rng));
      psi = ops_[c] * at;
      psi /= psi.norm();
      total += weights_[c];
      t += hi;
      r = 1.0 - uniform(rng);
    }
    return total;
  }

 private:
  void expand(const Vec& psi, std::array<Vec, kOrder + 1>& series) const {
    series[0] = psi;
    for (int k = 1; k <= kOrder; ++k) series[k] = gen_ * series[k - 1] / static_cast<double>(k);
  }

  static Vec evaluate(const std::array<Vec, kOrder + 1>& series, double x) {
    Vec acc = series[kOrder];
    for (int k = kOrder - 1; k >= 0; --k) acc = series[k] + x * acc;
    return acc;
  }

  Vec taylor(const Vec& psi, double x, std::array<Vec, kOrder + 1>& series) const {
    expand(psi, series);
    return evaluate(series, x);
  }

  static std::size_t pick(const std::vector<double>& w, double u) {
    double sum = 0.0;
    for (double x : w) sum += x;
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < w.size(); ++k) {
      acc += w[k];
      if (u * sum < acc) return k;
    }
    return w.size() - 1;
  }

  double t_max_;
  double h_ = 0.0;
  Mat gen_;
  Mat step_;
  std::vector<Mat> ops_;
  std::vector<double> weights_;
  std::vector<double> probs_;
  std::vector<Vec> starts_;
};

template <int Dim>
void run_all(const LindbladModel& m, double t_max, int intervals, std::uint64_t seed, int threads,
             std::vector<double>& totals) {
  const Unraveling<Dim> engine(m, t_max, intervals);
  const std::int64_t n = static_cast<std::int64_t>(totals.size());
  auto work = [&](int worker) {
    for (std::int64_t i = worker; i < n; i += threads)
      totals[i] = engine.run(splitmix64(seed ^ static_cast<std::uint64_t>(i)));
  };
  if (threads <= 1) {
    work(0);
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) pool.emplace_back(work, w);
  for (std::thread& t : pool) t.join();
}

}  // namespace

TrajectoryEnsemble simulate_trajectories(const LindbladModel& m, double t_max, std::int64_t n_traj,
                                         std::uint64_t seed, const TrajectoryOptions& options) {
  require_valid(m);
  if (n_traj < 1) throw std::invalid_argument("simulate_trajectories: n_traj must be >= 1");
  if (!(t_max > 0.0) || !std::isfinite(t_max))
    throw std::invalid_argument("simulate_trajectories: t_max must be positive");
  if (options.steps < 1) throw std::invalid_argument("simulate_trajectories: steps must be >= 1");

  TrajectoryEnsemble e;
  e.n_traj = n_traj;
  e.seed = seed;
  e.t_max = t_max;
  e.steps = options.steps;
  e.totals.assign(static_cast<std::size_t>(n_traj), 0.0);
  if (m.jumps.empty()) return e;

  const int threads = std::max(1, options.threads > 0 ? options.threads : default_thread_count());
  switch (m.dim) {
    case 1: run_all<1>(m, t_max, options.steps, seed, threads, e.totals); break;
    case 2: run_all<2>(m, t_max, options.steps, seed, threads, e.totals); break;
    case 3: run_all<3>(m, t_max, options.steps, seed, threads, e.totals); break;
    case 4: run_all<4>(m, t_max, options.steps, seed, threads, e.totals); break;
    default: run_all<Eigen::Dynamic>(m, t_max, options.steps, seed, threads, e.totals); break;
  }

  const double n = static_cast<double>(n_traj);
  double sum = 0.0;
  for (double x : e.totals) sum += x;
  e.mean = sum / n;
  double m2 = 0.0;
  double m4 = 0.0;
  for (double x : e.totals) {
    const double dx = x - e.mean;
    m2 += dx * dx;
    m4 += dx * dx * dx * dx;
  }
  if (n_traj > 1) {
    e.variance = m2 / (n - 1.0);
    e.mean_se = std::sqrt(e.variance / n);
    const double fourth = m4 / n;
    const double v2 = e.variance * e.variance;
    e.variance_se = std::sqrt(std::max(0.0, fourth - v2 * (n - 3.0) / (n - 1.0)) / n);
  }
  return e;
}

}  // namespace qdyn
