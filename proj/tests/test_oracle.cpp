#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "tariff/oracle.hpp"

using namespace tariff;
using namespace tariff::oracle;
using dispatch::Structure;
using dispatch::TariffSchedule;

namespace {

struct FlatRun {
  mopec::NcpSystem ncp;
  solver::SolverReport report;
};

const FlatRun& flat_run() {
  static const FlatRun run = [] {
    const auto& sys = fixtures::manhattan();
    FlatRun r{mopec::assemble_kkt(sys, Structure::Flat, 0.10), {}};
    const auto start =
        mopec::initial_point(r.ncp, sys, TariffSchedule::flat(sys, flat_revenue_adequate_tariff(sys)));
    r.report = solver::scholtes_solve(r.ncp, {1, 1, 1}, solver::ScholtesSchedule{}, start);
    return r;
  }();
  return run;
}

/// Smallest kappa at which the revenue-adequate flat tariff meets every bus's burden bound.
double flat_threshold(const SystemModel& sys) {
  const double pi = flat_revenue_adequate_tariff(sys);
  const auto tariff = TariffSchedule::flat(sys, pi);
  const auto demand = dispatch::flexible_demand(sys, tariff);
  double k = 0.0;
  for (int b = 0; b < static_cast<int>(sys.buses.size()); ++b) {
    const auto eb = dispatch::energy_burden(sys, tariff, demand, b, 1.0);
    for (double v : eb.per_day) k = std::max(k, v / eb.bound);
  }
  return k;
}

bool has_failure(const AuditRecord& rec, const std::string& prefix, const std::string& kind = "") {
  for (const auto& f : rec.failures)
    if (f.name.rfind(prefix, 0) == 0 && (kind.empty() || f.kind == kind)) return true;
  return false;
}

}  // namespace

TEST_CASE("flat grid below the revenue-adequacy threshold is empty") {
  const auto& sys = fixtures::manhattan();
  const auto res = grid_search(sys, Structure::Flat, 0.07, GridSpec::uniform(sys, Structure::Flat, 120), {1, 1, 1});
  CHECK(res.empty());
  CHECK(res.map.size() == 120);
  CHECK_THROWS(res.best_candidate());
}

TEST_CASE("flat grid at the threshold has a minimizer with the burden bound binding") {
  const auto& sys = fixtures::manhattan();
  const double kstar = flat_threshold(sys);
  CHECK(kstar > 0.06);
  CHECK(kstar < 0.12);
  const auto grid = GridSpec::uniform(sys, Structure::Flat, 120);
  // The grid refines revenue adequacy to 1e-6 of the capital charge, so the
  // threshold is approached to the same relative accuracy.
  const auto at = grid_search(sys, Structure::Flat, kstar * (1.0 + 1e-6), grid, {1, 1, 1});
  REQUIRE_FALSE(at.empty());
  const auto& best = at.best_candidate();
  CHECK(best.feasible);
  CHECK(std::abs(best.point.eb_slack) <= 1e-5);
  CHECK(std::abs(best.point.ra_residual) <= 1e-6 * dispatch::capital_charge(sys));
  const auto below = grid_search(sys, Structure::Flat, kstar * (1.0 - 1e-4), grid, {1, 1, 1});
  CHECK(below.empty());
}

TEST_CASE("flat revenue-adequate tariff on the two-bus toy matches the analytic root") {
  // All load is imported at the LMP, so with total inflexible energy D, total flexible
  // budget W and capital charge C, revenue adequacy reads
  //   pi D + W = (1 + u) C + lmp (D + W / pi),
  // a quadratic in pi.
  SystemModel sys = fixtures::two_bus({.lmp = 30.0, .gen_cost = 50.0, .root_load = 1.0, .flow_limit = 1000.0});
  sys.policy.eb_household = 0.005;
  sys.policy.capital_cost_daily = 170.0;
  const double D = 2.0 * (10.0 + 1.0);
  double W = 0.0;
  for (const auto& b : sys.buses)
    W += demand::household_budget(sys.policy.eb_household, b.income, b.population, b.household_size);
  const double C = (1.0 + sys.policy.rate_of_return) * sys.policy.capital_cost_daily;
  const double lmp = 30.0;
  const double qb = W - C - lmp * D, qc = -lmp * W;
  const double analytic = (-qb + std::sqrt(qb * qb - 4.0 * D * qc)) / (2.0 * D);
  REQUIRE(analytic > 10.0);
  REQUIRE(analytic < 45.0);

  CHECK(flat_revenue_adequate_tariff(sys) == doctest::Approx(analytic).epsilon(1e-8));
  const int points = 141;
  const auto grid = GridSpec::uniform(sys, Structure::Flat, points);
  const auto res = grid_search(sys, Structure::Flat, 0.5, grid, {1, 1, 1});
  REQUIRE_FALSE(res.empty());
  const double step = (grid.axes[0].max - grid.axes[0].min) / (points - 1);
  CHECK(std::abs(res.best_candidate().point.coords[0] - analytic) <= step);
}

TEST_CASE("tou grid candidates satisfy the coupling and revenue adequacy") {
  const auto& sys = fixtures::manhattan();
  const auto res = grid_search(sys, Structure::Tou, 0.10, GridSpec::uniform(sys, Structure::Tou, 12), {1, 1, 1});
  CHECK(res.map.size() == 144);
  REQUIRE_FALSE(res.empty());
  for (const auto& c : res.candidates) {
    if (!c.feasible) continue;
    CHECK(c.point.coupling_slack >= -1e-9);
    CHECK(c.point.average_slack >= -1e-9);
    CHECK(c.point.eb_slack >= -1e-9);
    CHECK(std::abs(c.point.ra_residual) <= 1e-6 * dispatch::capital_charge(sys));
  }
  const auto& best = res.best_candidate();
  for (const auto& c : res.candidates)
    if (c.feasible) CHECK(best.point.scalarized <= c.point.scalarized);
}

TEST_CASE("grid dimensionality and bounds are enforced") {
  const auto& sys = fixtures::manhattan();
  CHECK_THROWS_AS(GridSpec::uniform(sys, Structure::LocationalTou, 10).validate(sys), DimensionalityError);
  CHECK_THROWS_AS(GridSpec::uniform(sys, Structure::LocationalHourly, 10).validate(sys), DimensionalityError);
  GridSpec four{Structure::Tou, {{20, 40, 3}, {20, 40, 3}, {20, 40, 3}, {20, 40, 3}}};
  CHECK_THROWS_AS(four.validate(sys), DimensionalityError);
  CHECK_THROWS_AS(grid_search(sys, Structure::Tou, 0.1, four, {1, 1, 1}), DimensionalityError);
  GridSpec one_point{Structure::Flat, {{20, 40, 1}}};
  CHECK_THROWS_AS(one_point.validate(sys), std::invalid_argument);
  GridSpec wide{Structure::Flat, {{1.0, 40, 5}}};
  CHECK_THROWS_AS(wide.validate(sys), std::invalid_argument);
  CHECK_NOTHROW(GridSpec::uniform(sys, Structure::Tou, 3).validate(sys));
}

TEST_CASE("audit passes on a converged manhattan7 run") {
  const auto& run = flat_run();
  REQUIRE(run.report.converged());
  const auto rec = audit_solution(fixtures::manhattan(), run.ncp, run.report, 1e-6);
  CHECK(rec.pass);
  CHECK(rec.failures.empty());
  CHECK(rec.checks > static_cast<int>(run.ncp.pairs.size()));
  CHECK(rec.max_violation <= 1e-6);
}

TEST_CASE("audit fails on a perturbed dual and names the stationarity row") {
  const auto& run = flat_run();
  auto point = run.report.final_point;
  point[run.ncp.layout.lambda_d(3, 12, 0)] += 0.1;
  const auto rec = audit_point(fixtures::manhattan(), run.ncp, point, 1e-6);
  CHECK_FALSE(rec.pass);
  REQUIRE_FALSE(rec.failures.empty());
  CHECK(rec.failures.front().kind == "stationarity");
  CHECK(rec.failures.front().name.rfind("stat_", 0) == 0);
  CHECK(rec.failures.front().violation == doctest::Approx(0.1).epsilon(1e-3));
}

TEST_CASE("audit fails on a peak tariff below the coupling bound and names the TOU coupling row") {
  const auto& sys = fixtures::manhattan();
  const auto ncp = mopec::assemble_kkt(sys, Structure::Tou, 0.10);
  const auto point = mopec::initial_point(ncp, sys, TariffSchedule::tou(sys, 30.0, 45.0));
  const auto rec = audit_point(sys, ncp, point, 1e-6);
  CHECK_FALSE(rec.pass);
  CHECK(has_failure(rec, "tou_coupling", "ul-inequality"));
}

TEST_CASE("audit of a non-converged report fails with the solver status") {
  const auto& run = flat_run();
  solver::SolverReport rep = run.report;
  rep.status = solver::SolveStatus::MaxIter;
  const auto rec = audit_solution(fixtures::manhattan(), run.ncp, rep, 1e-6);
  CHECK_FALSE(rec.pass);
  CHECK(rec.note.find("max_iter") != std::string::npos);
  solver::SolverReport empty;
  CHECK_FALSE(audit_solution(fixtures::manhattan(), run.ncp, empty, 1e-6).pass);
}

TEST_CASE("audit failures are sorted by violation") {
  const auto& run = flat_run();
  auto point = run.report.final_point;
  point[run.ncp.layout.lambda_d(2, 5, 0)] += 0.5;
  point[run.ncp.layout.pi(0, 0, 0)] += 1.0;
  const auto rec = audit_point(fixtures::manhattan(), run.ncp, point, 1e-6);
  REQUIRE(rec.failures.size() >= 2);
  for (size_t k = 1; k < rec.failures.size(); ++k) CHECK(rec.failures[k - 1].violation >= rec.failures[k].violation);
  CHECK(rec.worst == rec.failures.front().name);
}

TEST_CASE("tou MOPEC solve is no worse than the tou grid best plus one percent") {
  const auto& sys = fixtures::manhattan();
  const double kappa = 0.10;
  const auto grid = grid_search(sys, Structure::Tou, kappa, GridSpec::uniform(sys, Structure::Tou, 24), {1, 1, 1});
  REQUIRE_FALSE(grid.empty());
  const auto ncp = mopec::assemble_kkt(sys, Structure::Tou, kappa);
  const auto start = mopec::initial_point(ncp, sys, TariffSchedule::flat(sys, flat_revenue_adequate_tariff(sys)));
  const auto rep = solver::scholtes_solve(ncp, {1, 1, 1}, solver::ScholtesSchedule{}, start);
  REQUIRE(rep.converged());
  const double best = grid.best_candidate().point.scalarized;
  CHECK(rep.scalarized <= best + 0.01 * std::abs(best));
}
