#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qdyn/propagate.hpp"

namespace qdyn {

enum class CountingTarget { rho, chi };

struct CountingMoments {
  TimeGrid grid;
  TimeSeries<double> mean;
  TimeSeries<double> variance;
  TimeSeries<double> rate;
  std::optional<TimeSeries<Complex>> chi_mean;  // Tr M1 for phi(0) = chi_S(0); chi target only
};

/// Moments of the weighted jump count sum_m alpha_m n_m from the first and second
/// xi-derivatives of the tilted generator. `weights` overrides the model's alpha_m.
CountingMoments counting_moments(const LindbladModel& m, const TimeGrid& grid,
                                 CountingTarget target = CountingTarget::rho,
                                 const std::optional<std::vector<double>>& weights = std::nullopt);

struct TrajectoryEnsemble {
  std::int64_t n_traj = 0;
  std::uint64_t seed = 0;
  double t_max = 0.0;
  int steps = 0;
  std::vector<double> totals;  // sum_m alpha_m n_m per trajectory
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double mean_se = 0.0;
  double variance_se = 0.0;
};

struct TrajectoryOptions {
  int steps = 200;    // coarse propagation intervals (raised so that ||H_eff|| h <= 1/4)
  int threads = 0;    // 0: QDYN_THREADS, else hardware concurrency
};

/// Jump unraveling sampled by waiting times: jump instants are where the no-jump
/// norm crosses a uniform draw, so there is no time-step bias.
TrajectoryEnsemble simulate_trajectories(const LindbladModel& m, double t_max, std::int64_t n_traj,
                                         std::uint64_t seed, const TrajectoryOptions& options = {});

/// Worker count from QDYN_THREADS, falling back to the available parallelism.
int default_thread_count();

/// splitmix64 finalizer, used to derive per-trajectory seeds.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace qdyn
