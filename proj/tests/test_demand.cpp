#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "tariff/demand_model.hpp"

using namespace tariff::demand;

namespace {

/// Best utility on a uniform grid of the budget line, share s of the budget spent on peak.
double grid_best_utility(double alpha, double budget, double pp, double po, int points) {
  double best = 0.0;
  for (int k = 0; k < points; ++k) {
    const double s = static_cast<double>(k) / (points - 1);
    best = std::max(best, cobb_douglas_utility(s * budget / pp, (1.0 - s) * budget / po, alpha));
  }
  return best;
}

}  // namespace

TEST_CASE("demand_split examples") {
  auto a = demand_split(0.5, 100.0, 10.0, 10.0);
  CHECK(a.d_peak == doctest::Approx(5.0));
  CHECK(a.d_offpeak == doctest::Approx(5.0));
  auto b = demand_split(1.0, 80.0, 40.0, 20.0);
  CHECK(b.d_peak == doctest::Approx(2.0));
  CHECK(b.d_offpeak == 0.0);
  auto c = demand_split(0.3, 200.0, 50.0, 20.0);
  CHECK(c.d_peak == doctest::Approx(1.2).epsilon(1e-14));
  CHECK(c.d_offpeak == doctest::Approx(7.0).epsilon(1e-14));
  CHECK(c.d_peak * 50.0 + c.d_offpeak * 20.0 == doctest::Approx(200.0).epsilon(1e-14));
  CHECK(c.budget == 200.0);
}

TEST_CASE("demand_split rejects non-positive prices and bad inputs") {
  CHECK_THROWS_AS(demand_split(0.5, 100.0, 0.0, 10.0), std::domain_error);
  CHECK_THROWS_AS(demand_split(0.5, 100.0, 10.0, -1.0), std::domain_error);
  CHECK_THROWS_AS(demand_split(1.5, 100.0, 10.0, 10.0), std::domain_error);
  CHECK_THROWS_AS(demand_split(0.5, -1.0, 10.0, 10.0), std::domain_error);
}

TEST_CASE("closed form matches a grid maximization of utility on the budget line") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ua(0.05, 0.95), ub(1.0, 1e4), up(5.0, 200.0);
  for (int k = 0; k < 50; ++k) {
    const double alpha = ua(rng), budget = ub(rng), pp = up(rng), po = up(rng);
    const auto s = demand_split(alpha, budget, pp, po);
    const double u = cobb_douglas_utility(s.d_peak, s.d_offpeak, alpha);
    const double g = grid_best_utility(alpha, budget, pp, po, 10000);
    CHECK(u >= g * (1.0 - 1e-8));
    CHECK(u - g <= 1e-6 * u);
  }
}

TEST_CASE("budget identity holds for random inputs") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ua(0.0, 1.0), ub(0.0, 1e6), up(1e-2, 1e3);
  for (int k = 0; k < 1000; ++k) {
    const double pp = up(rng), po = up(rng), budget = ub(rng);
    const auto s = demand_split(ua(rng), budget, pp, po);
    CHECK(std::abs(s.d_peak * pp + s.d_offpeak * po - budget) <= 1e-9 * std::max(1.0, budget));
    CHECK(s.d_peak >= 0.0);
    CHECK(s.d_offpeak >= 0.0);
  }
}

TEST_CASE("demand_split is homogeneous in budget and prices") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ua(0.0, 1.0), ub(1.0, 1e4), up(5.0, 200.0), uc(0.1, 10.0);
  for (int k = 0; k < 100; ++k) {
    const double alpha = ua(rng), budget = ub(rng), pp = up(rng), po = up(rng), c = uc(rng);
    const auto base = demand_split(alpha, budget, pp, po);
    const auto scaled_b = demand_split(alpha, c * budget, pp, po);
    CHECK(scaled_b.d_peak == doctest::Approx(c * base.d_peak).epsilon(1e-13));
    CHECK(scaled_b.d_offpeak == doctest::Approx(c * base.d_offpeak).epsilon(1e-13));
    const auto scaled_p = demand_split(alpha, budget, c * pp, c * po);
    CHECK(scaled_p.d_peak == doctest::Approx(base.d_peak / c).epsilon(1e-13));
    CHECK(scaled_p.d_offpeak == doctest::Approx(base.d_offpeak / c).epsilon(1e-13));
  }
}

TEST_CASE("allocate_intervals examples") {
  {
    const std::vector<double> ref{1, 1, 1, 1};
    const bool mask[] = {true, true, false, false};
    const auto p = allocate_intervals({4.0, 6.0, 0.0}, ref, mask);
    CHECK(p.values == std::vector<double>{2, 2, 3, 3});
  }
  {
    const std::vector<double> ref{0.3, 2.0, 1.0, 5.0};
    const bool mask[] = {true, true, false, false};
    const auto p = allocate_intervals({0.0, 6.0, 0.0}, ref, mask);
    CHECK(p.values[0] == 0.0);
    CHECK(p.values[1] == 0.0);
  }
  {
    const std::vector<double> ref{2, 1, 3, 4};
    const bool mask[] = {true, true, false, false};
    const auto p = allocate_intervals({1.2, 7.0, 0.0}, ref, mask);
    CHECK(p.values[0] == doctest::Approx(0.8).epsilon(1e-14));
    CHECK(p.values[1] == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(p.values[2] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(p.values[3] == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(p.values[0] + p.values[1] == doctest::Approx(1.2).epsilon(1e-14));
  }
}

TEST_CASE("allocate_intervals rejects a zero-sum window that must carry energy") {
  const std::vector<double> ref{0, 0, 1, 1};
  const bool mask[] = {true, true, false, false};
  CHECK_THROWS_AS(allocate_intervals({1.0, 1.0, 0.0}, ref, mask), DegenerateShapeError);
  const auto p = allocate_intervals({0.0, 1.0, 0.0}, ref, mask);
  CHECK(p.values[2] == doctest::Approx(0.5));
}

TEST_CASE("allocate_intervals preserves window sums") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ur(0.01, 100.0), ud(0.0, 1e3);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> ref(24);
    bool mask[24];
    for (int t = 0; t < 24; ++t) {
      ref[t] = ur(rng);
      mask[t] = t >= 8;
    }
    const DemandSplit s{ud(rng), ud(rng), 0.0};
    const auto p = allocate_intervals(s, ref, mask);
    double peak = 0.0, off = 0.0;
    for (int t = 0; t < 24; ++t) {
      CHECK(p.values[t] >= 0.0);
      (mask[t] ? peak : off) += p.values[t];
    }
    CHECK(std::abs(peak - s.d_peak) <= 1e-12 * std::max(1.0, s.d_peak));
    CHECK(std::abs(off - s.d_offpeak) <= 1e-12 * std::max(1.0, s.d_offpeak));
  }
}

TEST_CASE("cobb_douglas_utility examples") {
  CHECK(cobb_douglas_utility(4.0, 4.0, 0.5) == doctest::Approx(4.0));
  CHECK(cobb_douglas_utility(9.0, 1.0, 0.5) == doctest::Approx(3.0));
  CHECK(cobb_douglas_utility(0.0, 5.0, 0.3) == 0.0);
  CHECK(cobb_douglas_utility(0.0, 5.0, 0.0) == doctest::Approx(5.0));
  CHECK(cobb_douglas_utility(7.0, 0.0, 1.0) == doctest::Approx(7.0));
}

TEST_CASE("consumer_surplus examples") {
  CHECK(consumer_surplus(4.0, 4.0, 0.5, 0.0, 0.0) == doctest::Approx(4.0));
  CHECK(consumer_surplus(9.0, 1.0, 0.5, 0.1, 0.1) == doctest::Approx(2.0));
  CHECK(consumer_surplus(0.0, 0.0, 0.5, 10.0, 5.0) == 0.0);
}

TEST_CASE("household budget is the income share per day times households") {
  CHECK(household_budget(0.09, 36500.0, 250.0, 2.5) == doctest::Approx(0.09 * 100.0 * 100.0));
}
