#include "tariff/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>

#include "tariff/demand_model.hpp"
#include "tariff/parallel.hpp"

namespace tariff::oracle {

using dispatch::Structure;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double day_weight(const SystemModel& sys, int r) {
  return sys.policy.day_weights.empty() ? 1.0 : sys.policy.day_weights[r];
}

struct Evaluation {
  GridPoint point;
  dispatch::TariffSchedule tariff;
  dispatch::ObjectiveBreakdown breakdown;
};

Evaluation evaluate(const SystemModel& sys, Structure s, double kappa, std::span<const double> coords,
                    const std::array<double, 3>& weights, const GridOptions& opt) {
  Evaluation ev;
  GridPoint& p = ev.point;
  p.coords.assign(coords.begin(), coords.end());
  ev.tariff = grid_tariff(sys, s, coords);
  try {
    const auto demand = dispatch::flexible_demand(sys, ev.tariff);
    const auto ll = dispatch::solve_ll(dispatch::build_ll(sys, ev.tariff, demand), sys, opt.ll);
    p.ll_ok = true;
    p.ra_residual = dispatch::revenue_adequacy_residual(sys, ev.tariff, demand, ll.dispatch);
    p.eb_slack = kInf;
    for (int b = 0; b < static_cast<int>(sys.buses.size()); ++b) {
      const auto eb = dispatch::energy_burden(sys, ev.tariff, demand, b, kappa);
      for (double v : eb.per_day)
        if (eb.bound - v < p.eb_slack) {
          p.eb_slack = eb.bound - v;
          p.eb_bus = b;
        }
    }
    p.coupling_slack = 0.0;
    if (s == Structure::Tou)
      p.coupling_slack = ev.tariff.peak_value(sys, 0, 0) - sys.policy.tou_ratio * ev.tariff.offpeak_value(sys, 0, 0);
    p.average_slack = sys.policy.avg_tariff_cap > 0.0
                          ? 2.0 * sys.policy.avg_tariff_cap - dispatch::average_tariff(sys, ev.tariff)
                          : kInf;
    p.inequality_feasible = p.eb_slack >= -opt.eb_tol && p.coupling_slack >= -1e-12 && p.average_slack >= -1e-12;
    ev.breakdown = dispatch::eval_objectives(sys, ev.tariff, demand, ll.dispatch,
                                             std::vector<double>(weights.begin(), weights.end()));
    p.scalarized = ev.breakdown.scalarized;
  } catch (const std::exception& e) {
    p.ll_ok = false;
    p.note = e.what();
  }
  return ev;
}

/// Illinois regula falsi on f over [a, b] with f(a), f(b) of opposite sign.
/// f returns nullopt where it cannot be evaluated; the step then bisects.
std::optional<double> bracket_root(const std::function<std::optional<double>(double)>& f, double a, double fa,
                                   double b, double fb, double ftol, int max_iter) {
  int side = 0;
  for (int k = 0; k < max_iter; ++k) {
    double c = (a * fb - b * fa) / (fb - fa);
    if (!(c > std::min(a, b) && c < std::max(a, b))) c = 0.5 * (a + b);
    std::optional<double> fc = f(c);
    if (!fc) {
      c = 0.5 * (a + b);
      fc = f(c);
      if (!fc) return std::nullopt;
    }
    if (std::abs(*fc) <= ftol || std::abs(b - a) <= 1e-13 * std::max(1.0, std::abs(c))) return c;
    if ((*fc > 0) == (fb > 0)) {
      b = c;
      fb = *fc;
      if (side == -1) fa *= 0.5;
      side = -1;
    } else {
      a = c;
      fa = *fc;
      if (side == 1) fb *= 0.5;
      side = 1;
    }
  }
  return std::nullopt;
}

}  // namespace

double Axis::value(int k) const {
  if (points == 1) return min;
  return min + (max - min) * static_cast<double>(k) / static_cast<double>(points - 1);
}

GridSpec GridSpec::uniform(const SystemModel& sys, Structure structure, int points) {
  double lo = -kInf, hi = kInf;
  for (const auto& b : sys.buses) {
    lo = std::max(lo, b.tariff_min);
    hi = std::min(hi, b.tariff_max);
  }
  GridSpec g;
  g.structure = structure;
  const int dims = structure == Structure::Flat ? 1 : structure == Structure::Tou ? 2 : 0;
  if (dims == 0) throw DimensionalityError("grid search supports the flat and tou structures only");
  g.axes.assign(dims, Axis{lo, hi, points});
  return g;
}

void GridSpec::validate(const SystemModel& sys) const {
  if (axes.size() > 3) throw DimensionalityError("grid has " + std::to_string(axes.size()) + " axes; at most 3 allowed");
  const size_t dims = structure == Structure::Flat ? 1 : structure == Structure::Tou ? 2 : 0;
  if (dims == 0)
    throw DimensionalityError(std::string("structure ") + dispatch::to_string(structure) +
                              " has more than 3 tariff degrees of freedom");
  if (axes.size() != dims)
    throw DimensionalityError(std::string("structure ") + dispatch::to_string(structure) + " needs " +
                              std::to_string(dims) + " axes");
  double lo = -kInf, hi = kInf;
  for (const auto& b : sys.buses) {
    lo = std::max(lo, b.tariff_min);
    hi = std::min(hi, b.tariff_max);
  }
  for (size_t k = 0; k < axes.size(); ++k) {
    const Axis& a = axes[k];
    if (a.points < 2) throw std::invalid_argument("axis " + std::to_string(k) + " needs at least 2 points");
    if (!(a.min < a.max)) throw std::invalid_argument("axis " + std::to_string(k) + " has an empty range");
    if (a.min < lo - 1e-12 || a.max > hi + 1e-12)
      throw std::invalid_argument("axis " + std::to_string(k) + " leaves the tariff bounds [" + std::to_string(lo) +
                                  ", " + std::to_string(hi) + "]");
  }
}

dispatch::TariffSchedule grid_tariff(const SystemModel& sys, Structure s, std::span<const double> coords) {
  if (s == Structure::Flat && coords.size() == 1) return dispatch::TariffSchedule::flat(sys, coords[0]);
  if (s == Structure::Tou && coords.size() == 2) return dispatch::TariffSchedule::tou(sys, coords[0], coords[1]);
  throw DimensionalityError("coordinates do not match a flat or tou grid");
}

GridResult grid_search(const SystemModel& sys, Structure structure, double kappa, const GridSpec& grid,
                       const std::array<double, 3>& weights, const GridOptions& options) {
  if (grid.structure != structure) throw std::invalid_argument("grid structure does not match the requested structure");
  grid.validate(sys);
  const int dims = static_cast<int>(grid.axes.size());
  int n = 1;
  for (const auto& a : grid.axes) n *= a.points;
  const int last = grid.axes.back().points;

  auto coords_of = [&](int idx) {
    std::vector<double> c(dims);
    for (int k = dims - 1; k >= 0; --k) {
      c[k] = grid.axes[k].value(idx % grid.axes[k].points);
      idx /= grid.axes[k].points;
    }
    return c;
  };

  GridResult res;
  res.structure = structure;
  res.kappa = kappa;
  res.map.resize(n);
  parallel_for(n, options.threads, [&](int i) {
    res.map[i] = evaluate(sys, structure, kappa, coords_of(i), weights, options).point;
  });

  // Revenue adequacy holds between adjacent nodes of opposite residual sign.
  std::vector<int> cells;
  for (int i = 0; i < n; ++i) {
    if (i % last == last - 1) continue;
    const GridPoint& a = res.map[i];
    const GridPoint& b = res.map[i + 1];
    if (!a.ll_ok || !b.ll_ok) continue;
    if (a.ra_residual == 0.0 || (a.ra_residual < 0.0) != (b.ra_residual < 0.0)) cells.push_back(i);
  }
  const double ftol = options.ra_tol * std::max(1.0, dispatch::capital_charge(sys));
  std::vector<std::optional<GridCandidate>> found(cells.size());
  parallel_for(static_cast<int>(cells.size()), options.threads, [&](int c) {
    const int i = cells[c];
    std::vector<double> base = res.map[i].coords;
    auto ra = [&](double v) -> std::optional<double> {
      std::vector<double> x = base;
      x.back() = v;
      const auto ev = evaluate(sys, structure, kappa, x, weights, options);
      if (!ev.point.ll_ok) return std::nullopt;
      return ev.point.ra_residual;
    };
    const double a = res.map[i].coords.back(), b = res.map[i + 1].coords.back();
    std::optional<double> root;
    if (std::abs(res.map[i].ra_residual) <= ftol) {
      root = a;
    } else {
      root = bracket_root(ra, a, res.map[i].ra_residual, b, res.map[i + 1].ra_residual, ftol, options.refine_iter);
    }
    if (!root) return;
    std::vector<double> x = base;
    x.back() = *root;
    Evaluation ev = evaluate(sys, structure, kappa, x, weights, options);
    if (!ev.point.ll_ok) return;
    GridCandidate cand;
    cand.feasible = ev.point.inequality_feasible && std::abs(ev.point.ra_residual) <= ftol;
    cand.point = std::move(ev.point);
    cand.tariff = std::move(ev.tariff);
    cand.breakdown = ev.breakdown;
    found[c] = std::move(cand);
  });
  for (auto& f : found)
    if (f) res.candidates.push_back(std::move(*f));
  for (int k = 0; k < static_cast<int>(res.candidates.size()); ++k) {
    const auto& c = res.candidates[k];
    if (!c.feasible) continue;
    if (res.best < 0 || c.point.scalarized < res.candidates[res.best].point.scalarized) res.best = k;
  }
  return res;
}

double flat_revenue_adequate_tariff(const SystemModel& sys, const nlp::Options& ll, double rel_tol) {
  double lo = -kInf, hi = kInf;
  for (const auto& b : sys.buses) {
    lo = std::max(lo, b.tariff_min);
    hi = std::min(hi, b.tariff_max);
  }
  auto ra = [&](double v) -> std::optional<double> {
    try {
      const auto tar = dispatch::TariffSchedule::flat(sys, v);
      const auto d = dispatch::flexible_demand(sys, tar);
      const auto s = dispatch::solve_ll(dispatch::build_ll(sys, tar, d), sys, ll);
      return dispatch::revenue_adequacy_residual(sys, tar, d, s.dispatch);
    } catch (const std::exception&) {
      return std::nullopt;
    }
  };
  const double ftol = rel_tol * std::max(1.0, dispatch::capital_charge(sys));
  constexpr int kScan = 64;
  bool have_prev = false;
  double prev_f = 0.0, prev_x = lo;
  for (int k = 0; k <= kScan; ++k) {
    const double x = lo + (hi - lo) * k / kScan;
    const auto f = ra(x);
    if (!f) {
      have_prev = false;
      continue;
    }
    if (std::abs(*f) <= ftol) return x;
    if (have_prev && (prev_f < 0.0) != (*f < 0.0)) {
      const auto root = bracket_root(ra, prev_x, prev_f, x, *f, ftol, 200);
      if (root) return *root;
    }
    have_prev = true;
    prev_f = *f;
    prev_x = x;
  }
  throw std::runtime_error("no flat tariff within the bounds balances revenue adequacy");
}

// ------------------------------------------------------------------ audit

namespace {

struct Auditor {
  const SystemModel& sys;
  const mopec::NcpSystem& ncp;
  std::span<const double> x;
  double tol;
  AuditRecord rec;

  double v(int i) const { return x[i]; }
  void check(const std::string& name, const char* kind, double violation) {
    ++rec.checks;
    if (!std::isfinite(violation)) violation = kInf;
    if (violation > rec.max_violation || rec.worst.empty()) {
      rec.max_violation = violation;
      rec.worst = name;
    }
    if (violation > tol) rec.failures.push_back({name, kind, violation});
  }
  void equal(const std::string& name, const char* kind, double residual) { check(name, kind, std::abs(residual)); }
  void at_least(const std::string& name, const char* kind, double value, double lo) {
    check(name, kind, std::max(0.0, lo - value));
  }
  void at_most(const std::string& name, const char* kind, double value, double up) {
    check(name, kind, std::max(0.0, value - up));
  }
  const std::string& var(int i) const { return ncp.variable_names[i]; }
};

}  // namespace

AuditRecord audit_point(const SystemModel& sys, const mopec::NcpSystem& ncp, std::span<const double> point,
                        double tol) {
  Auditor a{sys, ncp, point, tol, {}};
  a.rec.tol = tol;
  const auto& lay = ncp.layout;
  const auto& ll = lay.ll;
  const int H = sys.hours, R = sys.days;
  const int B = static_cast<int>(sys.buses.size());
  const int L = static_cast<int>(sys.lines.size());
  const int G = static_cast<int>(sys.generators.size());
  const auto& ec = sys.external_costs;
  const int Y = static_cast<int>(ec.pollutants.size());
  int co2 = -1;
  for (int y = 0; y < Y; ++y)
    if (ec.pollutants[y] == "CO2") co2 = y;
  if (static_cast<int>(point.size()) != lay.size || lay.B != B || lay.H != H || lay.R != R) {
    a.rec.note = "point does not match the system dimensions";
    a.rec.pass = false;
    return a.rec;
  }
  const double flo = sys.policy.allow_export ? -sys.interface.flow_limit : 0.0;
  const double fup = sys.interface.flow_limit;
  auto tagged = [&](const std::string& base, const std::vector<std::pair<char, int>>& idx) {
    std::string s = base + "[";
    for (size_t k = 0; k < idx.size(); ++k) {
      if (k) s += ",";
      s += idx[k].first;
      s += std::to_string(idx[k].second);
    }
    return s + "]";
  };

  for (int r = 0; r < R; ++r) {
    const double w = day_weight(sys, r);
    for (int t = 0; t < H; ++t) {
      const double lmp = sys.interface.lmp(r, t);
      // Stationarity and bounds of the transmission import.
      {
        const int g0 = ll.g0(t, r), q0 = ll.q0(t, r);
        const int root = sys.root;
        a.equal("stat_" + a.var(g0), "stationarity",
                w * lmp - a.v(lay.lambda_d(root, t, r)) - a.v(lay.tau_lo(t, r)) + a.v(lay.tau_up(t, r)));
        a.equal("stat_" + a.var(q0), "stationarity", -a.v(lay.lambda_dq(root, t, r)));
        a.at_least(a.var(g0) + ">=lo", "bound", a.v(g0), flo);
        a.at_most(a.var(g0) + "<=up", "bound", a.v(g0), fup);
        a.at_least(a.var(lay.tau_lo(t, r)) + ">=0", "sign", a.v(lay.tau_lo(t, r)), 0.0);
        a.at_least(a.var(lay.tau_up(t, r)) + ">=0", "sign", a.v(lay.tau_up(t, r)), 0.0);
        a.check(a.var(g0) + ">=lo", "complementarity",
                std::abs((a.v(g0) - flo) * a.v(lay.tau_lo(t, r))));
        a.check(a.var(g0) + "<=up", "complementarity",
                std::abs((fup - a.v(g0)) * a.v(lay.tau_up(t, r))));
      }
      // Generators.
      for (int i = 0; i < G; ++i) {
        const Generator& gen = sys.generators[i];
        const int g = ll.g(i, t, r), q = ll.q(i, t, r);
        double st = w * gen.cost - a.v(lay.lambda_d(gen.bus, t, r)) - a.v(lay.delta_lo(i, t, r)) +
                    a.v(lay.delta_up(i, t, r));
        for (int y = 0; y < Y; ++y) st -= w * gen.emission_factors[y] * a.v(lay.psi(y, gen.bus));
        a.equal("stat_" + a.var(g), "stationarity", st);
        a.equal("stat_" + a.var(q), "stationarity",
                -a.v(lay.lambda_dq(gen.bus, t, r)) - a.v(lay.theta_lo(i, t, r)) + a.v(lay.theta_up(i, t, r)));
        const std::pair<int, std::pair<double, double>> boxes[2] = {{g, {gen.p_min, gen.p_max}},
                                                                     {q, {gen.q_min, gen.q_max}}};
        const int lo_d[2] = {lay.delta_lo(i, t, r), lay.theta_lo(i, t, r)};
        const int up_d[2] = {lay.delta_up(i, t, r), lay.theta_up(i, t, r)};
        for (int k = 0; k < 2; ++k) {
          const int var = boxes[k].first;
          const double lo = boxes[k].second.first, up = boxes[k].second.second;
          a.at_least(a.var(var) + ">=lo", "bound", a.v(var), lo);
          a.at_most(a.var(var) + "<=up", "bound", a.v(var), up);
          a.at_least(a.var(lo_d[k]) + ">=0", "sign", a.v(lo_d[k]), 0.0);
          a.at_least(a.var(up_d[k]) + ">=0", "sign", a.v(up_d[k]), 0.0);
          a.check(a.var(var) + ">=lo", "complementarity", std::abs((a.v(var) - lo) * a.v(lo_d[k])));
          a.check(a.var(var) + "<=up", "complementarity", std::abs((up - a.v(var)) * a.v(up_d[k])));
        }
      }
      // Lines: flow stationarity, voltage drop, cone slack and its pair.
      for (int l = 0; l < L; ++l) {
        const Line& ln = sys.lines[l];
        const int fp = ll.fp(l, t, r), fq = ll.fq(l, t, r);
        const double S = ln.apparent_limit;
        const double eta = a.v(lay.eta(l, t, r)), beta = a.v(lay.beta(l, t, r));
        a.equal("stat_" + a.var(fp), "stationarity",
                -a.v(lay.lambda_d(ln.to, t, r)) + a.v(lay.lambda_d(ln.from, t, r)) -
                    2.0 * ln.resistance / sys.base_mva * beta + a.v(fp) / S * eta);
        a.equal("stat_" + a.var(fq), "stationarity",
                -a.v(lay.lambda_dq(ln.to, t, r)) + a.v(lay.lambda_dq(ln.from, t, r)) -
                    2.0 * ln.reactance / sys.base_mva * beta + a.v(fq) / S * eta);
        a.equal(tagged("vdrop", {{'l', l}, {'t', t}, {'r', r}}), "ll-equality",
                a.v(ll.u(ln.to, t, r)) - a.v(ll.u(ln.from, t, r)) +
                    2.0 * (ln.resistance * a.v(fp) + ln.reactance * a.v(fq)) / sys.base_mva);
        const double sigma = a.v(lay.sigma(l, t, r));
        const double cone = 0.5 * S - (a.v(fp) * a.v(fp) + a.v(fq) * a.v(fq)) / (2.0 * S);
        const std::string cname = tagged("cone", {{'l', l}, {'t', t}, {'r', r}});
        a.equal(cname, "cone-slack", sigma - cone);
        a.at_least(a.var(lay.sigma(l, t, r)) + ">=0", "sign", sigma, 0.0);
        a.at_least(a.var(lay.eta(l, t, r)) + ">=0", "sign", eta, 0.0);
        a.check(cname, "complementarity", std::abs(sigma * eta));
      }
      // Buses: voltage stationarity and bounds, balances.
      for (int b = 0; b < B; ++b) {
        const Bus& bus = sys.buses[b];
        const int u = ll.u(b, t, r);
        double st = -a.v(lay.mu_lo(b, t, r)) + a.v(lay.mu_up(b, t, r));
        double bp = 0.0, bq = 0.0;
        if (b == sys.root) {
          bp += a.v(ll.g0(t, r));
          bq += a.v(ll.q0(t, r));
        }
        for (int i = 0; i < G; ++i)
          if (sys.generators[i].bus == b) {
            bp += a.v(ll.g(i, t, r));
            bq += a.v(ll.q(i, t, r));
          }
        for (int l = 0; l < L; ++l) {
          if (sys.lines[l].to == b) {
            st -= a.v(lay.beta(l, t, r));
            bp += a.v(ll.fp(l, t, r));
            bq += a.v(ll.fq(l, t, r));
          }
          if (sys.lines[l].from == b) {
            st += a.v(lay.beta(l, t, r));
            bp -= a.v(ll.fp(l, t, r));
            bq -= a.v(ll.fq(l, t, r));
          }
        }
        bp -= a.v(lay.d(b, t, r)) + bus.inflexible_p(r, t);
        bq -= bus.inflexible_q(r, t);
        a.equal("stat_" + a.var(u), "stationarity", st);
        a.equal(tagged("balance_p", {{'b', bus.id}, {'t', t}, {'r', r}}), "ll-equality", bp);
        a.equal(tagged("balance_q", {{'b', bus.id}, {'t', t}, {'r', r}}), "ll-equality", bq);
        a.at_least(a.var(u) + ">=lo", "bound", a.v(u), bus.v_min2);
        a.at_most(a.var(u) + "<=up", "bound", a.v(u), bus.v_max2);
        a.at_least(a.var(lay.mu_lo(b, t, r)) + ">=0", "sign", a.v(lay.mu_lo(b, t, r)), 0.0);
        a.at_least(a.var(lay.mu_up(b, t, r)) + ">=0", "sign", a.v(lay.mu_up(b, t, r)), 0.0);
        a.check(a.var(u) + ">=lo", "complementarity", std::abs((a.v(u) - bus.v_min2) * a.v(lay.mu_lo(b, t, r))));
        a.check(a.var(u) + "<=up", "complementarity", std::abs((bus.v_max2 - a.v(u)) * a.v(lay.mu_up(b, t, r))));
      }
    }
  }
  // Emission accounting and its multipliers.
  for (int y = 0; y < Y; ++y) {
    double tot = 0.0;
    for (int b = 0; b < B; ++b) {
      double e = 0.0;
      for (int i = 0; i < G; ++i) {
        if (sys.generators[i].bus != b) continue;
        for (int r = 0; r < R; ++r)
          for (int t = 0; t < H; ++t) e += day_weight(sys, r) * sys.generators[i].emission_factors[y] * a.v(ll.g(i, t, r));
      }
      const int eb = ll.e_bus(y, b);
      a.equal("emis_" + ec.pollutants[y] + tagged("", {{'b', sys.buses[b].id}}), "ll-equality", e - a.v(eb));
      a.equal("stat_" + a.var(eb), "stationarity", a.v(lay.psi(y, b)) - a.v(lay.chi(y)));
      tot += a.v(eb);
    }
    const int et = ll.e_tot(y);
    a.equal("emis_" + ec.pollutants[y] + "_total", "ll-equality", tot - a.v(et));
    a.equal("stat_" + a.var(et), "stationarity", (y == co2 ? ec.carbon_tax : 0.0) + a.v(lay.chi(y)));
  }

  // Closed-form demand.
  const auto& pw = sys.policy.peak_window;
  const auto& ow = sys.policy.offpeak_window;
  for (int r = 0; r < R; ++r)
    for (int b = 0; b < B; ++b) {
      const Bus& bus = sys.buses[b];
      const double budget =
          demand::household_budget(sys.policy.eb_household, bus.income, bus.population, bus.household_size);
      for (int win = 0; win < 2; ++win) {
        const auto& hours = win == 0 ? pw : ow;
        double ref = 0.0;
        for (int h : hours) ref += bus.inflexible_p(r, h);
        double price = 0.0;
        for (int h : hours) price += bus.inflexible_p(r, h) / ref * a.v(lay.pi(b, h, r));
        const double dw = a.v(lay.dw(b, win, r));
        const double share = win == 0 ? bus.elasticity : 1.0 - bus.elasticity;
        a.equal(tagged(win == 0 ? "budget_peak" : "budget_off", {{'b', bus.id}, {'r', r}}), "demand",
                dw * price - share * budget);
        for (int h : hours)
          a.equal(tagged("alloc", {{'b', bus.id}, {'t', h}, {'r', r}}), "demand",
                  a.v(lay.d(b, h, r)) - bus.inflexible_p(r, h) / ref * dw);
      }
    }

  // Revenue adequacy and system CO2.
  {
    double total_w = 0.0, rev = 0.0, op = 0.0, iface = 0.0;
    for (int r = 0; r < R; ++r) {
      const double w = day_weight(sys, r);
      total_w += w;
      for (int t = 0; t < H; ++t) {
        for (int b = 0; b < B; ++b)
          rev += w * a.v(lay.pi(b, t, r)) * (sys.buses[b].inflexible_p(r, t) + a.v(lay.d(b, t, r)));
        op += w * sys.interface.lmp(r, t) * a.v(ll.g0(t, r));
        for (int i = 0; i < G; ++i) op += w * sys.generators[i].cost * a.v(ll.g(i, t, r));
        if (co2 >= 0) iface += w * sys.interface.transmission_emissions[co2](r, t);
      }
    }
    const double capital = sys.policy.capital_cost_daily * total_w;
    a.equal("revenue_adequacy", "ul-equality", rev - op - (1.0 + sys.policy.rate_of_return) * capital);
    a.equal("co2_system", "ul-equality", a.v(lay.etotal) - (co2 >= 0 ? a.v(ll.e_tot(co2)) : 0.0) - iface);
  }

  // Tariff structure, bounds and upper-level inequalities.
  for (int r = 0; r < R; ++r)
    for (int b = 0; b < B; ++b)
      for (int t = 0; t < H; ++t) {
        const bool peak = std::find(pw.begin(), pw.end(), t) != pw.end();
        const int first = peak ? pw.front() : ow.front();
        int ref = lay.pi(b, t, 0);
        switch (ncp.structure) {
          case Structure::Flat: ref = lay.pi(0, pw.front(), 0); break;
          case Structure::Tou: ref = lay.pi(0, first, 0); break;
          case Structure::LocationalTou: ref = lay.pi(b, first, 0); break;
          case Structure::LocationalHourly: break;
        }
        const int k = lay.pi(b, t, r);
        if (k != ref) a.equal(tagged("tie", {{'b', sys.buses[b].id}, {'t', t}, {'r', r}}), "structure-tie", a.v(k) - a.v(ref));
        a.at_least(a.var(k) + ">=lo", "bound", a.v(k), sys.buses[b].tariff_min);
        a.at_most(a.var(k) + "<=up", "bound", a.v(k), sys.buses[b].tariff_max);
      }
  for (int r = 0; r < R; ++r)
    for (int b = 0; b < B; ++b) {
      const Bus& bus = sys.buses[b];
      double spend = 0.0;
      for (int t = 0; t < H; ++t) spend += a.v(lay.pi(b, t, r)) * (bus.inflexible_p(r, t) + a.v(lay.d(b, t, r)));
      a.at_most(tagged("energy_burden", {{'b', bus.id}, {'r', r}}), "ul-inequality",
                spend * bus.household_size / bus.population, ncp.kappa * bus.income / 365.0);
    }
  if (ncp.structure != Structure::Flat) {
    const int nb = ncp.structure == Structure::Tou ? 1 : B;
    for (int b = 0; b < nb; ++b) {
      double p = 0.0, o = 0.0;
      for (int h : pw) p += a.v(lay.pi(b, h, 0));
      for (int h : ow) o += a.v(lay.pi(b, h, 0));
      p /= static_cast<double>(pw.size());
      o /= static_cast<double>(ow.size());
      a.at_least(ncp.structure == Structure::Tou ? std::string("tou_coupling")
                                                 : tagged("tou_coupling", {{'b', sys.buses[b].id}}),
                 "ul-inequality", p - sys.policy.tou_ratio * o, 0.0);
    }
  }
  if (sys.policy.avg_tariff_cap > 0.0) {
    double p = 0.0, o = 0.0;
    for (int r = 0; r < R; ++r)
      for (int b = 0; b < B; ++b) {
        for (int h : pw) p += a.v(lay.pi(b, h, r));
        for (int h : ow) o += a.v(lay.pi(b, h, r));
      }
    p /= static_cast<double>(pw.size() * B * R);
    o /= static_cast<double>(ow.size() * B * R);
    a.at_most("average_tariff", "ul-inequality", p + o, 2.0 * sys.policy.avg_tariff_cap);
  }

  std::stable_sort(a.rec.failures.begin(), a.rec.failures.end(),
                   [](const AuditCheck& l, const AuditCheck& r) { return l.violation > r.violation; });
  a.rec.pass = a.rec.failures.empty();
  return a.rec;
}

AuditRecord audit_solution(const SystemModel& sys, const mopec::NcpSystem& ncp, const solver::SolverReport& report,
                           double tol) {
  if (report.final_point.empty()) {
    AuditRecord rec;
    rec.tol = tol;
    rec.note = "report carries no point";
    return rec;
  }
  AuditRecord rec = audit_point(sys, ncp, report.final_point, tol);
  if (!report.converged()) {
    rec.pass = false;
    rec.note = std::string("solver status ") + solver::to_string(report.status);
  }
  return rec;
}

}  // namespace tariff::oracle
