#include <doctest.h>

#include "qdyn/counting.hpp"
#include "support.hpp"

using namespace qdyn;
using namespace qdyn::testing;

TEST_CASE("counting moments closed forms") {
  const TimeGrid g = TimeGrid::make(5.0, 500);
  const auto none = counting_moments(closed_qubit(), g);
  for (int k = 0; k < g.size(); ++k) {
    CHECK(none.mean[k] == 0.0);
    CHECK(none.variance[k] == 0.0);
    CHECK(none.rate[k] == 0.0);
  }

  const auto ad = counting_moments(amplitude_damping(), g);
  CHECK(std::abs(ad.rate[0] - 1.0) < 1e-15);
  CHECK(std::abs(ad.mean[100] - 0.6321205588285577) < 1e-12);
  CHECK(std::abs(ad.variance[100] - 0.2325441579348509) < 1e-12);
  for (int k = 0; k < g.size(); ++k) {
    const double p = 1 - std::exp(-g.at(k));
    CHECK(std::abs(ad.mean[k] - p) < 1e-12);
    CHECK(std::abs(ad.variance[k] - p * (1 - p)) < 1e-12);
  }
}

TEST_CASE("counting hierarchy consistency on random models") {
  Rng rng(51);
  const TimeGrid g = TimeGrid::make(5.0, 500);
  for (int trial = 0; trial < 20; ++trial) {
    const LindbladModel m = random_model(rng, rng.integer(2, 3));
    const auto c = counting_moments(m, g, CountingTarget::chi);
    CHECK(c.mean[0] == 0.0);
    CHECK(c.variance[0] == 0.0);
    REQUIRE(c.chi_mean.has_value());
    CHECK(std::abs((*c.chi_mean)[0]) == 0.0);
    // mean = int rate, checked with Simpson on the grid
    double integral = 0.0;
    const double h = g.step();
    for (int k = 0; k + 2 < g.size(); k += 2) {
      integral += h / 3 * (c.rate[k] + 4 * c.rate[k + 1] + c.rate[k + 2]);
      CHECK(rel_err(c.mean[k + 2], integral) < 1e-8 + 1e-9 / std::max(std::abs(integral), 1e-3));
    }
    for (int k = 0; k < g.size(); ++k) CHECK(c.variance[k] >= -1e-9);
  }
}

TEST_CASE("unit-weight counts are non-decreasing") {
  Rng rng(52);
  RandomModelOptions opt;
  opt.mixed_weights = false;
  const TimeGrid g = TimeGrid::make(5.0, 200);
  for (int trial = 0; trial < 10; ++trial) {
    const auto c = counting_moments(random_model(rng, 3, opt), g);
    for (int k = 1; k < g.size(); ++k) CHECK(c.mean[k] >= c.mean[k - 1] - 1e-14);
  }
}

TEST_CASE("chi target requires an orthogonal state") {
  LindbladModel m = amplitude_damping();
  m.orthogonal.reset();
  CHECK_THROWS_AS(counting_moments(m, TimeGrid::make(1.0, 20), CountingTarget::chi), ModelError);
}

TEST_CASE("trajectories: trivial and deterministic") {
  const auto none = simulate_trajectories(closed_qubit(), 1.0, 50, 7);
  for (double x : none.totals) CHECK(x == 0.0);

  const LindbladModel dd = driven_dissipative();
  TrajectoryOptions one;
  one.steps = 2000;
  one.threads = 1;
  TrajectoryOptions four = one;
  four.threads = 4;
  const auto a = simulate_trajectories(dd, 2.0, 400, 99, one);
  const auto b = simulate_trajectories(dd, 2.0, 400, 99, four);
  const auto c = simulate_trajectories(dd, 2.0, 400, 99, one);
  CHECK(a.totals == b.totals);
  CHECK(a.totals == c.totals);
  CHECK(a.mean == b.mean);
  CHECK(a.variance == b.variance);
  const auto d = simulate_trajectories(dd, 2.0, 400, 100, one);
  CHECK(a.totals != d.totals);
}

TEST_CASE("trajectories agree with moment equations on small ensembles") {
  Rng rng(53);
  TrajectoryOptions opt;
  opt.steps = 4000;
  for (int trial = 0; trial < 3; ++trial) {
    LindbladModel m = random_model(rng, rng.integer(2, 3));
    if (trial == 2) {
      m.initial = InitialState::density(random_density(rng, m.dim));
      m.orthogonal.reset();
    }
    const auto e = simulate_trajectories(m, 2.0, 20000, 1234 + trial, opt);
    const auto c = counting_moments(m, TimeGrid::make(2.0, 100));
    CHECK(std::abs(e.mean - c.mean[100]) < 4.5 * e.mean_se);
    CHECK(std::abs(e.variance - c.variance[100]) < 4.5 * e.variance_se);
  }
}
