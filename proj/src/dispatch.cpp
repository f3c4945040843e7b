#include "tariff/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "tariff/demand_model.hpp"

namespace tariff::dispatch {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double day_weight(const SystemModel& sys, int r) {
  return sys.policy.day_weights.empty() ? 1.0 : sys.policy.day_weights[r];
}
}  // namespace

const char* to_string(Structure s) {
  switch (s) {
    case Structure::Flat: return "flat";
    case Structure::Tou: return "tou";
    case Structure::LocationalTou: return "loc-tou";
    case Structure::LocationalHourly: return "loc-hourly";
  }
  return "?";
}

Structure parse_structure(const std::string& name) {
  if (name == "flat") return Structure::Flat;
  if (name == "tou") return Structure::Tou;
  if (name == "loc-tou" || name == "locational-tou") return Structure::LocationalTou;
  if (name == "loc-hourly" || name == "locational-hourly") return Structure::LocationalHourly;
  throw std::invalid_argument("unknown tariff structure '" + name + "'");
}

TariffSchedule::TariffSchedule(Structure s, int buses, int hours, int days, double fill)
    : structure_(s), buses_(buses), hours_(hours), days_(days),
      values_(static_cast<size_t>(buses) * hours * days, fill) {}

TariffSchedule TariffSchedule::flat(const SystemModel& sys, double value) {
  return TariffSchedule(Structure::Flat, static_cast<int>(sys.buses.size()), sys.hours, sys.days, value);
}

TariffSchedule TariffSchedule::tou(const SystemModel& sys, double peak, double offpeak) {
  TariffSchedule t(Structure::Tou, static_cast<int>(sys.buses.size()), sys.hours, sys.days);
  for (int r = 0; r < sys.days; ++r)
    for (int b = 0; b < t.buses_; ++b)
      for (int h = 0; h < sys.hours; ++h) t(b, h, r) = sys.in_peak(h) ? peak : offpeak;
  return t;
}

double TariffSchedule::peak_value(const SystemModel& sys, int bus, int day) const {
  double s = 0.0;
  for (int h : sys.policy.peak_window) s += (*this)(bus, h, day);
  return s / static_cast<double>(sys.policy.peak_window.size());
}

double TariffSchedule::offpeak_value(const SystemModel& sys, int bus, int day) const {
  double s = 0.0;
  for (int h : sys.policy.offpeak_window) s += (*this)(bus, h, day);
  return s / static_cast<double>(sys.policy.offpeak_window.size());
}

void TariffSchedule::check(const SystemModel& sys, double tol) const {
  const int B = static_cast<int>(sys.buses.size());
  if (buses_ != B || hours_ != sys.hours || days_ != sys.days)
    throw std::invalid_argument("tariff dimensions do not match the system");
  auto fail = [&](int b, int t, int r, const char* what) {
    std::ostringstream os;
    os << "tariff (bus " << sys.buses[b].id << ", hour " << t << ", day " << r << ") " << what;
    throw std::invalid_argument(os.str());
  };
  auto close = [tol](double a, double b) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); };
  for (int r = 0; r < days_; ++r)
    for (int b = 0; b < B; ++b)
      for (int t = 0; t < hours_; ++t) {
        const double v = (*this)(b, t, r);
        const Bus& bus = sys.buses[b];
        if (v < bus.tariff_min * (1 - tol) - tol || v > bus.tariff_max * (1 + tol) + tol) fail(b, t, r, "outside bounds");
        const bool pk = sys.in_peak(t);
        // first hour of the same window
        const auto& win = pk ? sys.policy.peak_window : sys.policy.offpeak_window;
        const int t0 = *std::min_element(win.begin(), win.end());
        switch (structure_) {
          case Structure::Flat:
            if (!close(v, (*this)(0, 0, 0))) fail(b, t, r, "breaks the flat tie");
            break;
          case Structure::Tou:
            if (!close(v, (*this)(0, t0, 0))) fail(b, t, r, "breaks the window tie");
            break;
          case Structure::LocationalTou:
            if (!close(v, (*this)(b, t0, 0))) fail(b, t, r, "breaks the bus-window tie");
            break;
          case Structure::LocationalHourly:
            if (!close(v, (*this)(b, t, 0))) fail(b, t, r, "breaks the bus-hour tie");
            break;
        }
      }
}

double window_share(const SystemModel& sys, int bus, int hour, int day) {
  const bool pk = sys.in_peak(hour);
  const auto& win = pk ? sys.policy.peak_window : sys.policy.offpeak_window;
  double den = 0.0;
  for (int h : win) den += sys.buses[bus].inflexible_p(day, h);
  if (den <= 0.0)
    throw demand::DegenerateShapeError("bus " + std::to_string(sys.buses[bus].id) +
                                       " has no reference load in a window");
  return sys.buses[bus].inflexible_p(day, hour) / den;
}

double effective_window_price(const SystemModel& sys, const TariffSchedule& tariff, int bus, int day, bool peak) {
  const auto& win = peak ? sys.policy.peak_window : sys.policy.offpeak_window;
  double p = 0.0;
  for (int h : win) p += window_share(sys, bus, h, day) * tariff(bus, h, day);
  return p;
}

DemandProfiles flexible_demand(const SystemModel& sys, const TariffSchedule& tariff) {
  DemandProfiles out;
  std::vector<bool> mask(sys.hours);
  for (int h = 0; h < sys.hours; ++h) mask[h] = sys.in_peak(h);
  std::unique_ptr<bool[]> mask_arr(new bool[sys.hours]);
  for (int h = 0; h < sys.hours; ++h) mask_arr[h] = mask[h];
  for (size_t b = 0; b < sys.buses.size(); ++b) {
    const Bus& bus = sys.buses[b];
    HourlySeries d(sys.days, sys.hours);
    const double budget =
        demand::household_budget(sys.policy.eb_household, bus.income, bus.population, bus.household_size);
    for (int r = 0; r < sys.days; ++r) {
      const double pp = effective_window_price(sys, tariff, static_cast<int>(b), r, true);
      const double pop = effective_window_price(sys, tariff, static_cast<int>(b), r, false);
      const auto split = demand::demand_split(bus.elasticity, budget, pp, pop);
      std::vector<double> ref(sys.hours);
      for (int h = 0; h < sys.hours; ++h) ref[h] = bus.inflexible_p(r, h);
      const auto prof = demand::allocate_intervals(split, ref, std::span<const bool>(mask_arr.get(), sys.hours));
      for (int h = 0; h < sys.hours; ++h) d(r, h) = prof.values[h];
    }
    out.push_back(std::move(d));
  }
  return out;
}

DemandProfiles zero_demand(const SystemModel& sys) {
  return DemandProfiles(sys.buses.size(), HourlySeries(sys.days, sys.hours, 0.0));
}

LlLayout::LlLayout(const SystemModel& sys, int base_offset)
    : base(base_offset),
      H(sys.hours),
      R(sys.days),
      B(static_cast<int>(sys.buses.size())),
      L(static_cast<int>(sys.lines.size())),
      G(static_cast<int>(sys.generators.size())),
      Y(static_cast<int>(sys.external_costs.pollutants.size())) {}

double capital_charge(const SystemModel& sys) {
  return sys.policy.capital_cost_daily * sys.policy.total_day_weight();
}

LlProgram build_ll(const SystemModel& sys, const TariffSchedule& tariff, const DemandProfiles& demand) {
  for (const auto& g : sys.generators)
    if (g.p_min > g.p_max || g.q_min > g.q_max)
      throw InfeasibleBoundsError("generator " + std::to_string(g.id) + " has inverted bounds");
  if (demand.size() != sys.buses.size()) throw std::invalid_argument("demand profiles do not cover every bus");

  LlProgram prog;
  LlLayout& lay = prog.layout;
  lay = LlLayout(sys, 0);
  prog.rows = LlRows{lay.H, lay.R, lay.B, lay.L, lay.Y};
  nlp::ExprModel& m = prog.model;
  m.x_l.assign(lay.size(), -kInf);
  m.x_u.assign(lay.size(), kInf);
  m.rows.resize(prog.rows.size());
  m.row_l.assign(prog.rows.size(), 0.0);
  m.row_u.assign(prog.rows.size(), 0.0);

  const double flo = sys.policy.allow_export ? -sys.interface.flow_limit : 0.0;
  const int co2 = sys.external_costs.co2_index();
  prog.lmp_weighted.assign(lay.H * lay.R, 0.0);
  prog.revenue = total_revenue(sys, tariff, demand);

  for (int r = 0; r < lay.R; ++r) {
    const double w = day_weight(sys, r);
    for (int t = 0; t < lay.H; ++t) {
      const double lmp = sys.interface.lmp(r, t);
      prog.lmp_weighted[r * lay.H + t] = w * lmp;
      m.x_l[lay.g0(t, r)] = flo;
      m.x_u[lay.g0(t, r)] = sys.interface.flow_limit;
      m.objective.add(lay.g0(t, r), w * lmp);
      for (int i = 0; i < lay.G; ++i) {
        const Generator& gen = sys.generators[i];
        m.x_l[lay.g(i, t, r)] = gen.p_min;
        m.x_u[lay.g(i, t, r)] = gen.p_max;
        m.x_l[lay.q(i, t, r)] = gen.q_min;
        m.x_u[lay.q(i, t, r)] = gen.q_max;
        m.objective.add(lay.g(i, t, r), w * gen.cost);
      }
      for (int b = 0; b < lay.B; ++b) {
        m.x_l[lay.u(b, t, r)] = sys.buses[b].v_min2;
        m.x_u[lay.u(b, t, r)] = sys.buses[b].v_max2;
      }
      // Active and reactive balances.
      for (int b = 0; b < lay.B; ++b) {
        nlp::QuadExpr& hp = m.rows[prog.rows.balance_p(b, t, r)];
        nlp::QuadExpr& hq = m.rows[prog.rows.balance_q(b, t, r)];
        if (b == sys.root) {
          hp.add(lay.g0(t, r), 1.0);
          hq.add(lay.q0(t, r), 1.0);
        }
        for (int i : sys.generators_at(b)) {
          hp.add(lay.g(i, t, r), 1.0);
          hq.add(lay.q(i, t, r), 1.0);
        }
        const int pl = sys.parent_line(b);
        if (pl >= 0) {
          hp.add(lay.fp(pl, t, r), 1.0);
          hq.add(lay.fq(pl, t, r), 1.0);
        }
        for (int cl : sys.child_lines(b)) {
          hp.add(lay.fp(cl, t, r), -1.0);
          hq.add(lay.fq(cl, t, r), -1.0);
        }
        hp.add_constant(-(demand[b](r, t) + sys.buses[b].inflexible_p(r, t)));
        hq.add_constant(-sys.buses[b].inflexible_q(r, t));
      }
      // Voltage drop and cone limit per line.
      for (int l = 0; l < lay.L; ++l) {
        const Line& ln = sys.lines[l];
        nlp::QuadExpr& hv = m.rows[prog.rows.vdrop(l, t, r)];
        hv.add(lay.u(ln.to, t, r), 1.0);
        hv.add(lay.u(ln.from, t, r), -1.0);
        hv.add(lay.fp(l, t, r), 2.0 * ln.resistance / sys.base_mva);
        hv.add(lay.fq(l, t, r), 2.0 * ln.reactance / sys.base_mva);
        const double S = ln.apparent_limit;
        nlp::QuadExpr& hc = m.rows[prog.rows.conic(l, t, r)];
        hc.add_constant(0.5 * S);
        hc.add(lay.fp(l, t, r), lay.fp(l, t, r), -0.5 / S);
        hc.add(lay.fq(l, t, r), lay.fq(l, t, r), -0.5 / S);
        m.row_l[prog.rows.conic(l, t, r)] = 0.0;
        m.row_u[prog.rows.conic(l, t, r)] = kInf;
      }
    }
  }
  // Emission accounting.
  for (int y = 0; y < lay.Y; ++y) {
    for (int b = 0; b < lay.B; ++b) {
      nlp::QuadExpr& he = m.rows[prog.rows.e_bus(y, b)];
      for (int i : sys.generators_at(b)) {
        const double R = sys.generators[i].emission_factors[y];
        for (int r = 0; r < lay.R; ++r)
          for (int t = 0; t < lay.H; ++t) he.add(lay.g(i, t, r), day_weight(sys, r) * R);
      }
      he.add(lay.e_bus(y, b), -1.0);
    }
    nlp::QuadExpr& ht = m.rows[prog.rows.e_tot(y)];
    for (int b = 0; b < lay.B; ++b) ht.add(lay.e_bus(y, b), 1.0);
    ht.add(lay.e_tot(y), -1.0);
  }
  if (co2 >= 0) m.objective.add(lay.e_tot(co2), sys.external_costs.carbon_tax);
  return prog;
}

Census census(const LlProgram& p) {
  Census c;
  c.variables = p.model.num_variables();
  for (int i = 0; i < p.model.num_rows(); ++i) {
    if (p.model.row_l[i] == p.model.row_u[i])
      ++c.equality_rows;
    else
      ++c.cone_rows;
  }
  for (int j = 0; j < c.variables; ++j)
    if (std::isfinite(p.model.x_l[j]) || std::isfinite(p.model.x_u[j])) ++c.bounded_variables;
  c.balance_p_rows = p.rows.B * p.rows.H * p.rows.R;
  c.balance_q_rows = c.balance_p_rows;
  return c;
}

std::map<std::string, const std::vector<double>*> LlDuals::by_symbol() const {
  return {{"lambda_D", &lambda_d}, {"lambda_Dq", &lambda_dq}, {"beta", &beta},       {"eta", &eta},
          {"delta_lo", &delta_lo}, {"delta_up", &delta_up},   {"theta_lo", &theta_lo}, {"theta_up", &theta_up},
          {"mu_lo", &mu_lo},       {"mu_up", &mu_up},         {"tau_lo", &tau_lo},   {"tau_up", &tau_up},
          {"psi", &psi},           {"chi", &chi}};
}

namespace {

std::vector<double> default_start(const LlProgram& p, const SystemModel& sys) {
  const LlLayout& lay = p.layout;
  std::vector<double> x(lay.size(), 0.0);
  for (int r = 0; r < lay.R; ++r)
    for (int t = 0; t < lay.H; ++t) {
      for (int b = 0; b < lay.B; ++b) x[lay.u(b, t, r)] = 0.5 * (sys.buses[b].v_min2 + sys.buses[b].v_max2);
      for (int i = 0; i < lay.G; ++i) {
        const auto& g = sys.generators[i];
        x[lay.g(i, t, r)] = 0.5 * (g.p_min + g.p_max);
        x[lay.q(i, t, r)] = 0.5 * (g.q_min + g.q_max);
      }
      x[lay.g0(t, r)] = 0.5 * sys.interface.flow_limit;
    }
  return x;
}

}  // namespace

void account_emissions(const SystemModel& sys, DispatchSolution& d) {
  const int Y = static_cast<int>(sys.external_costs.pollutants.size());
  const int B = static_cast<int>(sys.buses.size());
  d.emissions_bus.assign(Y, std::vector<double>(B, 0.0));
  d.emissions_total.assign(Y, 0.0);
  for (int y = 0; y < Y; ++y) {
    for (int b = 0; b < B; ++b) {
      double e = 0.0;
      for (int i : sys.generators_at(b)) {
        const double R = sys.generators[i].emission_factors[y];
        for (int r = 0; r < sys.days; ++r)
          for (int t = 0; t < sys.hours; ++t) e += day_weight(sys, r) * R * d.g[i](r, t);
      }
      d.emissions_bus[y][b] = e;
    }
    for (int b = 0; b < B; ++b) d.emissions_total[y] += d.emissions_bus[y][b];
  }
}

LlSolution solve_ll(const LlProgram& program, const SystemModel& sys, const nlp::Options& options) {
  const LlLayout& lay = program.layout;
  const LlRows& rows = program.rows;
  nlp::ExprProblem problem(program.model);
  std::vector<double> x0 = default_start(program, sys);
  nlp::Result res = nlp::solve(problem, x0, options);
  if (res.status == nlp::Status::Infeasible && options.bound_relax == 0.0) {
    // Boxes without a strict interior (zero load) are retried with widened bounds
    // and the point is clipped back.
    nlp::Options relaxed = options;
    relaxed.bound_relax = 1e-8;
    nlp::Result again = nlp::solve(problem, x0, relaxed);
    if (again.ok()) {
      for (size_t j = 0; j < again.x.size(); ++j)
        again.x[j] = std::clamp(again.x[j], program.model.x_l[j], program.model.x_u[j]);
      again.iterations += res.iterations;
      res = std::move(again);
    }
  }

  LlSolution sol;
  sol.status = res.status;
  sol.iterations = res.iterations;
  if (res.status == nlp::Status::Infeasible) throw LowerLevelError("lower level is infeasible: " + res.message);
  if (!res.ok()) throw LowerLevelError(std::string("lower-level solve failed: ") + nlp::to_string(res.status) + ", " + res.message);
  sol.primal_vector = res.x;
  const auto& x = res.x;

  DispatchSolution& d = sol.dispatch;
  const HourlySeries zero(lay.R, lay.H);
  d.g.assign(lay.G, zero);
  d.q.assign(lay.G, zero);
  d.import_p = zero;
  d.import_q = zero;
  d.flow_p.assign(lay.L, zero);
  d.flow_q.assign(lay.L, zero);
  d.u.assign(lay.B, zero);
  for (int r = 0; r < lay.R; ++r)
    for (int t = 0; t < lay.H; ++t) {
      d.import_p(r, t) = x[lay.g0(t, r)];
      d.import_q(r, t) = x[lay.q0(t, r)];
      for (int i = 0; i < lay.G; ++i) {
        d.g[i](r, t) = x[lay.g(i, t, r)];
        d.q[i](r, t) = x[lay.q(i, t, r)];
      }
      for (int l = 0; l < lay.L; ++l) {
        d.flow_p[l](r, t) = x[lay.fp(l, t, r)];
        d.flow_q[l](r, t) = x[lay.fq(l, t, r)];
      }
      for (int b = 0; b < lay.B; ++b) d.u[b](r, t) = x[lay.u(b, t, r)];
    }
  account_emissions(sys, d);

  // Multipliers: y = -lambda for rows; bound multipliers as returned.
  LlDuals& du = sol.duals;
  du.H = lay.H;
  du.R = lay.R;
  du.B = lay.B;
  du.L = lay.L;
  du.G = lay.G;
  du.Y = lay.Y;
  const int TR = lay.H * lay.R;
  du.lambda_d.assign(lay.B * TR, 0.0);
  du.lambda_dq.assign(lay.B * TR, 0.0);
  du.beta.assign(lay.L * TR, 0.0);
  du.eta.assign(lay.L * TR, 0.0);
  du.delta_lo.assign(lay.G * TR, 0.0);
  du.delta_up.assign(lay.G * TR, 0.0);
  du.theta_lo.assign(lay.G * TR, 0.0);
  du.theta_up.assign(lay.G * TR, 0.0);
  du.mu_lo.assign(lay.B * TR, 0.0);
  du.mu_up.assign(lay.B * TR, 0.0);
  du.tau_lo.assign(TR, 0.0);
  du.tau_up.assign(TR, 0.0);
  du.psi.assign(lay.Y * lay.B, 0.0);
  du.chi.assign(lay.Y, 0.0);
  const auto& lam = res.lambda;
  for (int r = 0; r < lay.R; ++r)
    for (int t = 0; t < lay.H; ++t) {
      for (int b = 0; b < lay.B; ++b) {
        du.lambda_d[du.at(b, lay.B, t, r)] = -lam[rows.balance_p(b, t, r)];
        du.lambda_dq[du.at(b, lay.B, t, r)] = -lam[rows.balance_q(b, t, r)];
        du.mu_lo[du.at(b, lay.B, t, r)] = res.z_l[lay.u(b, t, r)];
        du.mu_up[du.at(b, lay.B, t, r)] = res.z_u[lay.u(b, t, r)];
      }
      for (int l = 0; l < lay.L; ++l) {
        du.beta[du.at(l, lay.L, t, r)] = -lam[rows.vdrop(l, t, r)];
        du.eta[du.at(l, lay.L, t, r)] = -lam[rows.conic(l, t, r)];
      }
      for (int i = 0; i < lay.G; ++i) {
        du.delta_lo[du.at(i, lay.G, t, r)] = res.z_l[lay.g(i, t, r)];
        du.delta_up[du.at(i, lay.G, t, r)] = res.z_u[lay.g(i, t, r)];
        du.theta_lo[du.at(i, lay.G, t, r)] = res.z_l[lay.q(i, t, r)];
        du.theta_up[du.at(i, lay.G, t, r)] = res.z_u[lay.q(i, t, r)];
      }
      du.tau_lo[r * lay.H + t] = res.z_l[lay.g0(t, r)];
      du.tau_up[r * lay.H + t] = res.z_u[lay.g0(t, r)];
    }
  for (int y = 0; y < lay.Y; ++y) {
    for (int b = 0; b < lay.B; ++b) du.psi[y * lay.B + b] = -lam[rows.e_bus(y, b)];
    du.chi[y] = -lam[rows.e_tot(y)];
  }

  // Primal objective and the Lagrangian dual bound
  //   sum_i y_i (-h_i(0)) + sum l z_l - sum u z_u - sum eta * S.
  sol.objective = problem.objective(x);
  double dual = 0.0;
  for (int i = 0; i < program.model.num_rows(); ++i) {
    if (program.model.row_l[i] != program.model.row_u[i]) continue;
    dual += lam[i] * program.model.rows[i].constant;  // y_i * (-h0) with y = -lambda
  }
  for (int j = 0; j < program.model.num_variables(); ++j) {
    if (std::isfinite(program.model.x_l[j])) dual += program.model.x_l[j] * res.z_l[j];
    if (std::isfinite(program.model.x_u[j])) dual -= program.model.x_u[j] * res.z_u[j];
  }
  for (int r = 0; r < lay.R; ++r)
    for (int t = 0; t < lay.H; ++t)
      for (int l = 0; l < lay.L; ++l) dual -= du.eta[du.at(l, lay.L, t, r)] * sys.lines[l].apparent_limit;
  sol.dual_objective = dual;
  sol.duality_gap = std::abs(sol.objective - dual) / std::max(1.0, std::abs(sol.objective));
  sol.profit = program.revenue - sol.objective;
  return sol;
}

LlSolution solve_ll_at(const SystemModel& sys, const TariffSchedule& tariff, const nlp::Options& options) {
  const DemandProfiles d = flexible_demand(sys, tariff);
  return solve_ll(build_ll(sys, tariff, d), sys, options);
}

double total_revenue(const SystemModel& sys, const TariffSchedule& tariff, const DemandProfiles& demand) {
  double rev = 0.0;
  for (int r = 0; r < sys.days; ++r) {
    const double w = day_weight(sys, r);
    for (size_t b = 0; b < sys.buses.size(); ++b)
      for (int t = 0; t < sys.hours; ++t)
        rev += w * tariff(static_cast<int>(b), t, r) * (demand[b](r, t) + sys.buses[b].inflexible_p(r, t));
  }
  return rev;
}

double operating_cost(const SystemModel& sys, const DispatchSolution& d) {
  double c = 0.0;
  for (int r = 0; r < sys.days; ++r) {
    const double w = day_weight(sys, r);
    for (int t = 0; t < sys.hours; ++t) {
      c += w * sys.interface.lmp(r, t) * d.import_p(r, t);
      for (size_t i = 0; i < sys.generators.size(); ++i) c += w * sys.generators[i].cost * d.g[i](r, t);
    }
  }
  return c;
}

ObjectiveBreakdown eval_objectives(const SystemModel& sys, const TariffSchedule& tariff, const DemandProfiles& demand,
                                   const DispatchSolution& d, const std::vector<double>& weights) {
  ObjectiveBreakdown o;
  const auto& ec = sys.external_costs;
  const int co2 = ec.co2_index();
  o.revenue = total_revenue(sys, tariff, demand);
  o.op_cost = operating_cost(sys, d);
  for (int r = 0; r < sys.days; ++r) {
    const double w = day_weight(sys, r);
    for (size_t b = 0; b < sys.buses.size(); ++b) {
      const Bus& bus = sys.buses[b];
      double e1 = 0.0, e2 = 0.0;
      for (int t = 0; t < sys.hours; ++t) {
        const double tot = demand[b](r, t) + bus.inflexible_p(r, t);
        (sys.in_peak(t) ? e1 : e2) += tot;
        o.consumer_payments += w * tariff(static_cast<int>(b), t, r) * tot;
      }
      o.consumer_utility += w * demand::cobb_douglas_utility(e1, e2, bus.elasticity);
    }
  }
  const double ccap = capital_charge(sys);
  o.f_ew = o.revenue + o.consumer_utility - o.consumer_payments - o.op_cost - ccap;

  for (size_t y = 0; y < ec.pollutants.size(); ++y) {
    if (static_cast<int>(y) == co2) continue;
    for (size_t b = 0; b < sys.buses.size(); ++b) o.f_h += d.emissions_bus[y][b] * ec.health_cost[y][b];
    double et = 0.0;
    for (int r = 0; r < sys.days; ++r)
      for (int t = 0; t < sys.hours; ++t) et += day_weight(sys, r) * sys.interface.transmission_emissions[y](r, t);
    o.f_h += et * sys.interface.interface_external_cost[y];
  }
  double eco2 = 0.0;
  if (co2 >= 0) {
    for (int r = 0; r < sys.days; ++r)
      for (int t = 0; t < sys.hours; ++t) eco2 += day_weight(sys, r) * sys.interface.transmission_emissions[co2](r, t);
    eco2 += d.emissions_total[co2];
  }
  o.emissions_co2_total = eco2;
  o.f_en = (ec.scc - ec.carbon_tax) * eco2;
  const double tax = co2 >= 0 ? ec.carbon_tax * d.emissions_total[co2] : 0.0;
  o.utility_profit = o.revenue - o.op_cost - tax;
  if (weights.size() != 3) throw std::invalid_argument("eval_objectives: weights must have three components");
  o.scalarized = weights[0] * (-o.f_ew) + weights[1] * o.f_h + weights[2] * o.f_en;
  return o;
}

EnergyBurden energy_burden(const SystemModel& sys, const TariffSchedule& tariff, const DemandProfiles& demand, int bus,
                           double kappa) {
  const Bus& b = sys.buses.at(bus);
  EnergyBurden eb;
  eb.bound = kappa * daily_income(b);
  const double per_household = b.household_size / b.population;
  for (int r = 0; r < sys.days; ++r) {
    double s = 0.0;
    for (int t = 0; t < sys.hours; ++t)
      s += (demand[bus](r, t) + b.inflexible_p(r, t)) * per_household * tariff(bus, t, r);
    eb.per_day.push_back(s);
  }
  return eb;
}

double revenue_adequacy_residual(double revenue, double capital_cost, double rate_of_return, double op_cost) {
  return revenue - (1.0 + rate_of_return) * capital_cost - op_cost;
}

double revenue_adequacy_residual(const SystemModel& sys, const TariffSchedule& tariff, const DemandProfiles& demand,
                                 const DispatchSolution& dispatch) {
  return revenue_adequacy_residual(total_revenue(sys, tariff, demand), capital_charge(sys), sys.policy.rate_of_return,
                                   operating_cost(sys, dispatch));
}

double average_tariff(double peak_mean, double offpeak_mean) { return peak_mean + offpeak_mean; }

double average_tariff(const SystemModel& sys, const TariffSchedule& tariff) {
  double p = 0.0, op = 0.0;
  const auto B = static_cast<double>(sys.buses.size());
  for (int r = 0; r < sys.days; ++r)
    for (size_t b = 0; b < sys.buses.size(); ++b) {
      for (int h : sys.policy.peak_window) p += tariff(static_cast<int>(b), h, r);
      for (int h : sys.policy.offpeak_window) op += tariff(static_cast<int>(b), h, r);
    }
  const double np = static_cast<double>(sys.policy.peak_window.size()) * B * sys.days;
  const double nop = static_cast<double>(sys.policy.offpeak_window.size()) * B * sys.days;
  return average_tariff(p / np, op / nop);
}

}  // namespace tariff::dispatch
