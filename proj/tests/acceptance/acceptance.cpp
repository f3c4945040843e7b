// Acceptance checks on the bundled manhattan7 dataset and the two-bus toy family.
// Prints one PASS/FAIL line per criterion; exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "json.hpp"
#include "tariff/demand_model.hpp"
#include "tariff/experiments.hpp"
#include "tariff/oracle.hpp"
#include "tariff/solver.hpp"

using namespace tariff;
using dispatch::Structure;
using dispatch::TariffSchedule;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(const char* f, double v) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// 1. Closed-form demand split against a grid maximization of utility on the budget line.
Outcome demand_oracle() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ua(0.05, 0.95), ub(1.0, 1e5), up(5.0, 200.0);
  double worst_gap = 0.0, worst_budget = 0.0;
  const int points = 10000;
  for (int k = 0; k < 1000; ++k) {
    const double alpha = ua(rng), budget = ub(rng), pp = up(rng), po = up(rng);
    const auto s = demand::demand_split(alpha, budget, pp, po);
    const double u = demand::cobb_douglas_utility(s.d_peak, s.d_offpeak, alpha);
    double g = 0.0;
    for (int i = 0; i < points; ++i) {
      const double share = static_cast<double>(i) / (points - 1);
      g = std::max(g, demand::cobb_douglas_utility(share * budget / pp, (1.0 - share) * budget / po, alpha));
    }
    worst_gap = std::max(worst_gap, (g - u) / u);
    worst_budget = std::max(worst_budget, std::abs(s.d_peak * pp + s.d_offpeak * po - budget) / budget);
  }
  const double t = since(t0);
  o.require(worst_gap <= 1e-6, "utility gap " + fmt("%.3g", worst_gap));
  o.require(worst_budget <= 1e-9, "budget identity " + fmt("%.3g", worst_budget));
  o.require(t < 10.0, "runtime " + fmt("%.2f s", t));
  o.detail = "1000 cases, max utility gap " + fmt("%.2e", worst_gap) + ", max budget residual " +
             fmt("%.2e", worst_budget) + ", " + fmt("%.2f s", t) + (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

// Vertex enumeration of min lmp g0 + c g1, g0 + g1 = load, 0 <= g0 <= F, 0 <= g1 <= cap.
double enumerate_hour(double lmp, double c, double load, double cap, double F) {
  double best = std::numeric_limits<double>::infinity();
  for (double g1 : {0.0, cap, load - F, load}) {
    const double g0 = load - g1;
    if (g1 < -1e-12 || g1 > cap + 1e-12 || g0 < -1e-12 || g0 > F + 1e-12) continue;
    best = std::min(best, lmp * g0 + c * g1);
  }
  return best;
}

// 2. Lower-level solver against LP vertex enumeration; duality gap on manhattan7.
Outcome ll_enumeration() {
  Outcome o;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> price(10.0, 90.0), cap(0.5, 20.0), load(0.5, 30.0), tax(0.0, 40.0),
      factor(0.0, 0.8);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    fixtures::TwoBus p;
    p.lmp = price(rng);
    p.gen_cost = price(rng);
    p.gen_cap = cap(rng);
    p.load = load(rng);
    p.flow_limit = p.load * (k % 3 == 0 ? 0.8 : 2.0);
    if (p.flow_limit + p.gen_cap < p.load) p.gen_cap = p.load;
    p.carbon_tax = tax(rng);
    p.scc = p.carbon_tax + 10.0;
    p.co2_factor = factor(rng);
    const SystemModel sys = fixtures::two_bus(p);
    const auto sol = dispatch::solve_ll(
        dispatch::build_ll(sys, TariffSchedule::flat(sys, 40.0), dispatch::zero_demand(sys)), sys);
    if (sol.status != nlp::Status::Success) {
      o.require(false, "toy " + std::to_string(k) + " did not solve");
      continue;
    }
    const double obj = 2.0 * enumerate_hour(p.lmp, p.gen_cost + p.carbon_tax * p.co2_factor, p.load, p.gen_cap,
                                            p.flow_limit);
    worst = std::max(worst, rel(sol.objective, obj));
  }
  o.require(worst <= 1e-9, "toy objective " + fmt("%.3g", worst));

  const auto& sys = fixtures::manhattan();
  std::vector<TariffSchedule> tariffs;
  for (double pi : {20.0, 36.0, 45.0, 80.0, 140.0}) tariffs.push_back(TariffSchedule::flat(sys, pi));
  tariffs.push_back(TariffSchedule::tou(sys, 55.0, 25.0));
  tariffs.push_back(TariffSchedule::tou(sys, 40.0, 40.0));
  double gap = 0.0;
  int solves = 0;
  for (const auto& t : tariffs) {
    const auto sol = dispatch::solve_ll_at(sys, t);
    ++solves;
    if (sol.status != nlp::Status::Success) {
      o.require(false, "manhattan7 LL did not solve");
      continue;
    }
    gap = std::max(gap, sol.duality_gap);
  }
  o.require(gap <= 1e-6, "duality gap " + fmt("%.3g", gap));
  o.detail = "20 toys, max objective rel. error " + fmt("%.2e", worst) + "; " + std::to_string(solves) +
             " manhattan7 solves, max duality gap " + fmt("%.2e", gap) + (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

// 3. solve_ll (primal, dual) satisfies every assembled lower-level row.
Outcome kkt_cross_check() {
  Outcome o;
  const auto& sys = fixtures::manhattan();
  const auto ncp = mopec::assemble_kkt(sys, Structure::LocationalHourly, 0.09);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(25.0, 120.0);
  double worst = 0.0;
  std::string worst_row;
  for (int k = 0; k < 10; ++k) {
    TariffSchedule t(Structure::LocationalHourly, static_cast<int>(sys.buses.size()), sys.hours, sys.days);
    for (int r = 0; r < sys.days; ++r)
      for (int b = 0; b < t.buses(); ++b)
        for (int h = 0; h < sys.hours; ++h) t(b, h, r) = u(rng);
    const auto x = mopec::initial_point(ncp, sys, t);
    for (auto kind : {mopec::RowKind::Stationarity, mopec::RowKind::LlEquality, mopec::RowKind::ConeSlack,
                      mopec::RowKind::Demand})
      for (int i : ncp.rows_of(kind)) {
        const double v = ncp.row_violation(i, x);
        if (v > worst) worst = v, worst_row = ncp.row_names[i];
      }
    const auto cm = mopec::complementarity_violation(ncp, x);
    if (cm.max_product > worst) worst = cm.max_product, worst_row = "complementarity";
    o.require(cm.min_component >= -1e-9, "negative pair component");
  }
  o.require(worst <= 1e-6, "row " + worst_row);
  o.detail = "10 tariffs, max LL residual " + fmt("%.2e", worst) + (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

// 4. Relaxation method on min (x-1)^2 + (y-1)^2, 0 <= x perp y >= 0.
Outcome toy_mpec() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto toy = fixtures::toy_mpec();
  const std::vector<double> start{1.0, 0.5};
  const auto rep = solver::scholtes_solve(toy, {1, 1, 1}, solver::ScholtesSchedule{1.0, 0.1, 1e-8, 30}, start);
  const double t = since(t0);
  o.require(rep.converged(), "not converged");
  o.require(std::abs(rep.scalarized - 1.0) <= 1e-6, "objective " + fmt("%.10g", rep.scalarized));
  double excess = 0.0;
  for (const auto& it : rep.iterates) excess = std::max(excess, it.complementarity - it.rho);
  o.require(excess <= 0.0, "complementarity above rho by " + fmt("%.3g", excess));
  o.require(t < 1.0, "runtime " + fmt("%.3f s", t));
  o.detail = "objective " + fmt("%.9f", rep.scalarized) + ", " + std::to_string(rep.iterates.size()) +
             " outer iterations, " + fmt("%.3f s", t) + (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

// 5. Flat MOPEC solve against a 500-point grid.
Outcome oracle_dominance() {
  Outcome o;
  const auto& sys = fixtures::manhattan();
  const double pi0 = oracle::flat_revenue_adequate_tariff(sys);
  const auto grid = oracle::GridSpec::uniform(sys, Structure::Flat, 500);
  std::string summary;
  for (double kappa : {0.09, 0.10}) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto ncp = mopec::assemble_kkt(sys, Structure::Flat, kappa);
    const auto start = mopec::initial_point(ncp, sys, TariffSchedule::flat(sys, pi0));
    const auto rep = solver::scholtes_solve(ncp, {1, 1, 1}, solver::ScholtesSchedule{}, start);
    const double t = since(t0);
    const auto g = oracle::grid_search(sys, Structure::Flat, kappa, grid, {1, 1, 1});
    const std::string k = fmt("kappa %.2f", kappa);
    o.require(rep.converged(), k + " not converged");
    o.require(!g.empty(), k + " grid empty");
    o.require(t < 60.0, k + " runtime " + fmt("%.1f s", t));
    if (!rep.converged() || g.empty()) continue;
    const double best = g.best_candidate().point.scalarized;
    o.require(rep.scalarized <= best + 0.01 * std::abs(best), k + " above grid best + 1%");
    if (!summary.empty()) summary += "; ";
    summary += k + ": solver " + fmt("%.6e", rep.scalarized) + " vs grid " + fmt("%.6e", best) + ", " +
               fmt("%.1f s", t);
  }
  o.detail = summary + (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

std::optional<double> first_published(const std::vector<experiments::RunReport>& rs) {
  for (const auto& r : rs)
    if (r.published) return r.kappa;
  return std::nullopt;
}

// Results from separate solves agree to solver accuracy, not bit for bit.
constexpr double kSame = 1e-9;

// 6. Qualitative trends across the burden sweep and the tariff structures.
Outcome trend_suite() {
  Outcome o;
  const auto& sys = fixtures::manhattan();
  const double lo = 0.06, hi = 0.12, step = 0.005;
  const auto flat = experiments::eb_sweep(sys, 1, lo, hi, step, {1, 1, 1});
  const auto tou = experiments::eb_sweep(sys, 2, lo, hi, step, {1, 1, 1});

  // (a) infeasible below a threshold and published at and above it.
  const auto kf = first_published(flat.reports);
  bool band = kf.has_value() && *kf > lo;
  if (kf)
    for (const auto& r : flat.reports) band = band && (r.published == (r.kappa >= *kf));
  o.require(band, "(a) no single infeasible band");

  // Grid oracle finds an empty flat set exactly where the solver does not publish, within one step.
  std::optional<double> kg;
  for (double k : experiments::kappa_grid(lo, hi, step)) {
    if (!oracle::grid_search(sys, Structure::Flat, k, oracle::GridSpec::uniform(sys, Structure::Flat, 60), {1, 1, 1})
             .empty()) {
      kg = k;
      break;
    }
  }
  o.require(kg && kf && std::abs(*kg - *kf) <= step + 1e-12, "(a) grid and solver thresholds disagree");

  // (b) nondecreasing flat tariff up to a saturation kappa, constant after.
  bool mono = true, constant = flat.saturation.has_value();
  std::optional<double> last, sat_tariff;
  for (const auto& r : flat.reports) {
    if (!r.published) continue;
    if (last && *r.flat_tariff < *last - 1e-8 * std::abs(*last)) mono = false;
    last = r.flat_tariff;
    if (flat.saturation && r.kappa >= *flat.saturation) {
      if (!sat_tariff) sat_tariff = r.flat_tariff;
      if (std::abs(*r.flat_tariff - *sat_tariff) > kSame * *sat_tariff) constant = false;
    }
  }
  o.require(mono, "(b) flat tariff decreases");
  o.require(constant, "(b) no constant band");

  // (c) tou threshold at or below flat.
  const auto kt = first_published(tou.reports);
  o.require(kt && kf && *kt <= *kf, "(c) tou threshold above flat");

  // (d) locational structures feasible at the sweep minimum.
  const auto r3 = experiments::run_case(sys, 3, lo, {1, 1, 1});
  const auto r4 = experiments::run_case(sys, 4, lo, {1, 1, 1});
  o.require(r3.published, "(d) case 3 at kappa 0.06: " + r3.status);
  o.require(r4.published, "(d) case 4 at kappa 0.06: " + r4.status);

  // (e) case ordering of the scalarized objective where all cases publish.
  int compared = 0;
  for (double kappa : {0.10, 0.12}) {
    std::vector<experiments::RunReport> rs;
    for (int c = 1; c <= 4; ++c) rs.push_back(experiments::run_case(sys, c, kappa, {1, 1, 1}));
    if (!std::all_of(rs.begin(), rs.end(), [](const auto& r) { return r.published; })) {
      o.require(false, "(e) some case unpublished at " + fmt("%.2f", kappa));
      continue;
    }
    ++compared;
    for (int c = 1; c < 4; ++c) {
      const double coarse = rs[c - 1].breakdown.scalarized, fine = rs[c].breakdown.scalarized;
      o.require(fine <= coarse + 1e-6 * std::abs(coarse),
                "(e) case " + std::to_string(c + 1) + " above case " + std::to_string(c) + fmt(" at %.2f", kappa));
    }
  }

  std::string d = "flat threshold " + (kf ? fmt("%.3f", *kf) : std::string("none")) + ", grid threshold " +
                  (kg ? fmt("%.3f", *kg) : std::string("none")) + ", tou threshold " +
                  (kt ? fmt("%.3f", *kt) : std::string("none")) + ", flat saturation " +
                  (flat.saturation ? fmt("%.3f", *flat.saturation) : std::string("none")) + ", case ordering at " +
                  std::to_string(compared) + " kappa";
  o.detail = d + (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

// 7. Derivatives against central differences; externality and emissions identities.
Outcome numerical_hygiene() {
  Outcome o;
  const auto& sys = fixtures::manhattan();
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> up(0.9, 1.1);
  double worst_j = 0.0, worst_g = 0.0;
  int points = 0;
  for (Structure s : {Structure::Flat, Structure::LocationalTou}) {
    const auto ncp = mopec::assemble_kkt(sys, s, 0.09);
    const solver::RelaxedNlp relaxed(ncp, {1, 2, 5}, 1e-3);
    const auto& p = relaxed.problem();
    const auto& js = p.jacobian_structure();
    const auto base = mopec::initial_point(ncp, sys, TariffSchedule::flat(sys, 45.0));
    const int n = p.num_variables(), m = p.num_constraints();
    for (int k = 0; k < 50; ++k, ++points) {
      std::vector<double> x = base, v(n), jv(m, 0.0), vals(js.nnz());
      for (double& e : x) e *= up(rng);
      for (double& e : v) e = nd(rng);
      p.jacobian_values(x, vals);
      for (size_t e = 0; e < js.nnz(); ++e) jv[js.rows[e]] += vals[e] * v[js.cols[e]];
      const double h = 1e-4;
      std::vector<double> xp = x, xm = x, cp(m), cm(m), g(n);
      for (int j = 0; j < n; ++j) xp[j] += h * v[j], xm[j] -= h * v[j];
      p.constraints(xp, cp);
      p.constraints(xm, cm);
      for (int i = 0; i < m; ++i)
        worst_j = std::max(worst_j, std::abs((cp[i] - cm[i]) / (2 * h) - jv[i]) / std::max(1.0, std::abs(jv[i])));
      p.gradient(x, g);
      double gv = 0.0;
      for (int j = 0; j < n; ++j) gv += g[j] * v[j];
      const double fd = (p.objective(xp) - p.objective(xm)) / (2 * h);
      worst_g = std::max(worst_g, std::abs(fd - gv) / std::max(1.0, std::abs(gv)));
    }
  }
  o.require(worst_j <= 1e-5, "Jacobian " + fmt("%.3g", worst_j));
  o.require(worst_g <= 1e-5, "gradient " + fmt("%.3g", worst_g));

  SystemModel priced = sys;
  priced.external_costs.carbon_tax = priced.external_costs.scc;
  const auto tariff = TariffSchedule::flat(priced, 40.0);
  const auto demand = dispatch::flexible_demand(priced, tariff);
  const auto sol = dispatch::solve_ll(dispatch::build_ll(priced, tariff, demand), priced);
  o.require(sol.status == nlp::Status::Success, "LL at gamma = scc did not solve");
  const auto br = dispatch::eval_objectives(priced, tariff, demand, sol.dispatch, {1, 1, 1});
  o.require(br.f_en == 0.0, "f_EN " + fmt("%.3g", br.f_en));

  bool exact = true;
  for (size_t y = 0; y < sol.dispatch.emissions_total.size(); ++y) {
    double sum = 0.0;
    for (double e : sol.dispatch.emissions_bus[y]) sum += e;
    exact = exact && sum == sol.dispatch.emissions_total[y];
  }
  o.require(exact, "emission totals differ from bus sums");
  o.detail = std::to_string(points) + " points, max Jacobian rel. error " + fmt("%.2e", worst_j) +
             ", max gradient rel. error " + fmt("%.2e", worst_g) + ", f_EN " + fmt("%g", br.f_en) +
             (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void drop_timings(nlohmann::ordered_json& j) {
  if (j.is_object()) {
    j.erase("timings");
    for (auto& [k, v] : j.items()) drop_timings(v);
  } else if (j.is_array()) {
    for (auto& v : j) drop_timings(v);
  }
}

// 8. Two identical CLI runs write the same report apart from timings.
Outcome determinism() {
  Outcome o;
  const std::string dir = std::string(TARIFF_BINARY_DIR) + "/acceptance_runs";
  std::filesystem::create_directories(dir);
  std::vector<std::string> docs;
  for (int k = 0; k < 2; ++k) {
    const std::string out = dir + "/report" + std::to_string(k) + ".json";
    const std::string cmd = std::string("'") + TARIFF_CLI + "' run --data '" + fixtures::dataset_dir() +
                            "' --case tou --eb 0.10 --weights 1,1,1 --out '" + out + "' > /dev/null";
    const int rc = std::system(cmd.c_str());
    o.require(rc == 0, "cli exit status " + std::to_string(rc));
    docs.push_back(read_file(out));
  }
  if (docs[0].empty() || docs[1].empty()) {
    o.require(false, "missing report");
    return o;
  }
  auto a = nlohmann::ordered_json::parse(docs[0]), b = nlohmann::ordered_json::parse(docs[1]);
  drop_timings(a);
  drop_timings(b);
  const std::string sa = a.dump(2), sb = b.dump(2);
  o.require(sa == sb, "reports differ");
  o.detail = "two `run` invocations, " + std::to_string(sa.size()) + " bytes without timings, " +
             (sa == sb ? "identical" : "different") + (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 demand closed form vs grid oracle", demand_oracle},
      {"2 LL solver vs enumeration", ll_enumeration},
      {"3 KKT cross-check", kkt_cross_check},
      {"4 toy MPEC", toy_mpec},
      {"5 oracle dominance", oracle_dominance},
      {"6 trend suite", trend_suite},
      {"7 numerical hygiene", numerical_hygiene},
      {"8 determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failed;
    std::printf("%s  criterion %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
