#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "tariff/oracle.hpp"
#include "tariff/solver.hpp"

using namespace tariff;
using namespace tariff::solver;

namespace {

/// Best value of min (x-a)^2 + (y-b)^2, a, b > 0, over the branches x = 0 (y = b) and y = 0 (x = a).
double branch_enumeration(double a, double b) {
  const double x_zero = a * a;
  const double y_zero = b * b;
  return std::min(x_zero, y_zero);
}

std::array<mopec::Objective, 3> constant_objectives(double neg_f_ew, double f_h, double f_en) {
  std::array<mopec::Objective, 3> o;
  o[0].poly.add_constant(neg_f_ew);
  o[1].poly.add_constant(f_h);
  o[2].poly.add_constant(f_en);
  return o;
}

}  // namespace

TEST_CASE("scalarize examples") {
  const std::vector<double> x{0.0};
  const auto o = constant_objectives(1.0e9, 0.2e9, 0.054e9);
  const double v = scalarize(o, {1, 1, 1}).value(x);
  CHECK(v == doctest::Approx(1.254e9).epsilon(1e-15));
  CHECK(scalarize(o, {2, 2, 2}).value(x) == 2.0 * v);
  const auto inactive = constant_objectives(7.5e8, 0.0, 0.0);
  CHECK(scalarize(inactive, {1, 5, 5}).value(x) == scalarize(inactive, {1, 1, 1}).value(x));
  CHECK_THROWS_AS(scalarize(o, {1, 0, 1}), WeightError);
  CHECK_THROWS_AS(scalarize(o, {1, -2, 1}), WeightError);
}

TEST_CASE("scalarization is positively homogeneous on the full system") {
  const auto& sys = fixtures::manhattan();
  const auto ncp = mopec::assemble_kkt(sys, dispatch::Structure::Tou, 0.09);
  const auto x = mopec::initial_point(ncp, sys, dispatch::TariffSchedule::tou(sys, 51.0, 29.0));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> uw(0.1, 10.0), uc(0.1, 8.0);
  for (int k = 0; k < 20; ++k) {
    const std::array<double, 3> w{uw(rng), uw(rng), uw(rng)};
    const double c = uc(rng);
    const double base = scalarize(ncp.objectives, w).value(x);
    const double scaled = scalarize(ncp.objectives, {c * w[0], c * w[1], c * w[2]}).value(x);
    CHECK(scaled == doctest::Approx(c * base).epsilon(1e-14));
  }
}

TEST_CASE("schedule values and validation") {
  ScholtesSchedule s;
  const auto v = s.values();
  REQUIRE(v.size() == 9);
  CHECK(v.front() == 1.0);
  CHECK(v.back() == 1e-8);
  for (size_t k = 1; k < v.size(); ++k) CHECK(v[k] < v[k - 1]);
  CHECK_THROWS_AS((ScholtesSchedule{1.0, 1.5, 1e-8, 30}.validate()), ScheduleError);
  CHECK_THROWS_AS((ScholtesSchedule{1.0, 0.1, 0.0, 30}.validate()), ScheduleError);
  CHECK_THROWS_AS((ScholtesSchedule{1e-9, 0.1, 1e-8, 30}.validate()), ScheduleError);
  CHECK((ScholtesSchedule{1.0, 0.1, 1e-8, 3}.values().size()) == 3);
}

TEST_CASE("toy MPEC with the default schedule reaches a branch optimum in 9 outer iterations") {
  const auto toy = fixtures::toy_mpec();
  const std::vector<double> start{1.0, 0.5};
  const auto rep = scholtes_solve(toy, {1, 1, 1}, ScholtesSchedule{}, start);
  REQUIRE(rep.converged());
  CHECK(rep.iterates.size() == 9);
  CHECK(rep.scalarized == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(rep.final_point[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(std::abs(rep.final_point[1]) <= 1e-6);
  for (size_t k = 0; k < rep.iterates.size(); ++k) {
    CAPTURE(k);
    CHECK(rep.iterates[k].complementarity <= rep.iterates[k].rho + 1e-8);
    if (k) CHECK(rep.iterates[k].rho < rep.iterates[k - 1].rho);
  }
  CHECK(rep.stationarity.cls == mopec::Stationarity::Strong);
}

TEST_CASE("loose relaxation leaves the unconstrained minimum") {
  const auto toy = fixtures::toy_mpec();
  const std::vector<double> start{0.5, 0.5};
  const auto r = solve_relaxed_nlp(toy, {1, 1, 1}, 10.0, start);
  REQUIRE(r.inner.ok());
  CHECK(r.inner.x[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(r.inner.x[1] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(std::abs(r.inner.objective) <= 1e-10);
}

TEST_CASE("already complementary start with rho_init at rho_final runs one outer iteration") {
  const auto toy = fixtures::toy_mpec();
  const std::vector<double> start{1.0, 0.0};
  const auto rep = scholtes_solve(toy, {1, 1, 1}, ScholtesSchedule{1e-8, 0.1, 1e-8, 30}, start);
  REQUIRE(rep.converged());
  CHECK(rep.iterates.size() == 1);
  CHECK(rep.scalarized == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("toy MPEC family matches two-branch enumeration") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int k = 0; k < 50; ++k) {
    const double a = u(rng), b = u(rng);
    CAPTURE(a);
    CAPTURE(b);
    const auto toy = fixtures::toy_mpec(a, b);
    const std::vector<double> start{a, b};
    const auto rep = scholtes_solve(toy, {1, 1, 1}, ScholtesSchedule{}, start);
    REQUIRE(rep.converged());
    CHECK(rep.scalarized == doctest::Approx(branch_enumeration(a, b)).epsilon(1e-6).scale(1.0));
    for (const auto& it : rep.iterates) CHECK(it.complementarity <= it.rho + 1e-8);
  }
}

TEST_CASE("relaxation parameter must be positive") {
  const auto toy = fixtures::toy_mpec();
  const std::vector<double> start{0.5, 0.5};
  CHECK_THROWS_AS(solve_relaxed_nlp(toy, {1, 1, 1}, 0.0, start), ScheduleError);
  CHECK_THROWS_AS(scholtes_solve(toy, {0, 1, 1}, ScholtesSchedule{}, start), WeightError);
  const std::vector<double> short_start{0.5};
  CHECK_THROWS_AS(scholtes_solve(toy, {1, 1, 1}, ScholtesSchedule{}, short_start), std::invalid_argument);
}

TEST_CASE("pair multipliers of the relaxed toy match MPEC stationarity") {
  const auto toy = fixtures::toy_mpec();
  const std::vector<double> start{1.0, 0.5};
  const auto rep = scholtes_solve(toy, {1, 1, 1}, ScholtesSchedule{}, start);
  REQUIRE(rep.pair_multipliers.size() == 1);
  // At (1, 0) only y >= 0 is active, so grad f = nu_g grad x + nu_h grad y gives
  // nu_g = df/dx = 0 and nu_h = df/dy = -2 (sign-free away from bi-activity).
  CHECK(std::abs(rep.pair_multipliers[0].nu_g) <= 1e-4);
  CHECK(rep.pair_multipliers[0].nu_h == doctest::Approx(-2.0).epsilon(1e-4));
}

TEST_CASE("pareto_sweep over three weight vectors on a toy trade-off") {
  auto toy = fixtures::toy_mpec(1.0, 0.6);
  toy.objectives[1].poly.add(0, 0, 1.0);        // x^2
  toy.objectives[2].poly.add(1, -1.0).add_constant(1.0);  // 1 - y
  const std::vector<double> start{1.0, 0.3};
  const auto entries = pareto_sweep(toy, {{1, 5, 5}, {1, 1, 1}, {1, 2, 2}}, ScholtesSchedule{}, start);
  REQUIRE(entries.size() == 3);
  CHECK(entries[0].weights == std::array<double, 3>{1, 1, 1});
  CHECK(entries[1].weights == std::array<double, 3>{1, 2, 2});
  CHECK(entries[2].weights == std::array<double, 3>{1, 5, 5});
  for (const auto& e : entries) {
    CHECK(e.error.empty());
    CHECK(e.report.converged());
    CHECK_FALSE(e.dominated);
  }
}

TEST_CASE("proportional weights give identical points and a single weight reduces to scholtes_solve") {
  auto toy = fixtures::toy_mpec(1.0, 0.6);
  toy.objectives[1].poly.add(0, 0, 1.0);
  const std::vector<double> start{1.0, 0.3};
  const auto entries = pareto_sweep(toy, {{1, 2, 2}, {2, 4, 4}}, ScholtesSchedule{}, start);
  REQUIRE(entries.size() == 2);
  for (size_t j = 0; j < entries[0].report.final_point.size(); ++j)
    CHECK(entries[0].report.final_point[j] ==
          doctest::Approx(entries[1].report.final_point[j]).epsilon(1e-8).scale(1.0));
  const auto single = pareto_sweep(toy, {{1, 2, 2}}, ScholtesSchedule{}, start);
  const auto direct = scholtes_solve(toy, {1, 2, 2}, ScholtesSchedule{}, start);
  REQUIRE(single.size() == 1);
  CHECK(single[0].report.final_point == direct.final_point);
  CHECK(single[0].report.scalarized == direct.scalarized);
}

TEST_CASE("manhattan7 flat at 10 percent converges with revenue adequacy and is deterministic") {
  const auto& sys = fixtures::manhattan();
  const auto ncp = mopec::assemble_kkt(sys, dispatch::Structure::Flat, 0.10);
  const double pi0 = oracle::flat_revenue_adequate_tariff(sys);
  const auto start = mopec::initial_point(ncp, sys, dispatch::TariffSchedule::flat(sys, pi0));
  const auto rep = scholtes_solve(ncp, {1, 1, 1}, ScholtesSchedule{}, start);
  REQUIRE(rep.converged());
  const auto tariff = mopec::extract_tariff(ncp, rep.final_point);
  const auto demand = mopec::extract_demand(ncp, rep.final_point);
  const auto d = mopec::extract_dispatch(ncp, sys, rep.final_point);
  const double ra = dispatch::revenue_adequacy_residual(sys, tariff, demand, d);
  CHECK(std::abs(ra) <= 1e-6 * dispatch::capital_charge(sys));
  for (const auto& it : rep.iterates) CHECK(it.complementarity <= it.rho + 1e-8);
  CHECK(rep.iterates.back().complementarity <= 1e-8 + 1e-8);
  CHECK(rep.stationarity.cls != mopec::Stationarity::None);

  const auto again = scholtes_solve(ncp, {1, 1, 1}, ScholtesSchedule{}, start);
  REQUIRE(again.iterates.size() == rep.iterates.size());
  for (size_t k = 0; k < rep.iterates.size(); ++k) {
    CHECK(again.iterates[k].inner_iterations == rep.iterates[k].inner_iterations);
    CHECK(again.iterates[k].objective == rep.iterates[k].objective);
  }
  CHECK(again.final_point == rep.final_point);
}
