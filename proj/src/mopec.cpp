#include "tariff/mopec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace tariff::mopec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double day_weight(const SystemModel& sys, int r) {
  return sys.policy.day_weights.empty() ? 1.0 : sys.policy.day_weights[r];
}

std::string tag(const char* name, std::initializer_list<std::pair<char, int>> idx) {
  std::string s = name;
  s += '[';
  bool first = true;
  for (const auto& [c, v] : idx) {
    if (!first) s += ',';
    first = false;
    s += c;
    s += std::to_string(v);
  }
  s += ']';
  return s;
}

/// Representative tariff index for (b, t, r) under a structure.
int tariff_ref(const SystemModel& sys, const NcpLayout& lay, Structure s, int b, int t) {
  const auto& pw = sys.policy.peak_window;
  const auto& ow = sys.policy.offpeak_window;
  const int first = sys.in_peak(t) ? pw.front() : ow.front();
  switch (s) {
    case Structure::Flat: return lay.pi(0, pw.front(), 0);
    case Structure::Tou: return lay.pi(0, first, 0);
    case Structure::LocationalTou: return lay.pi(b, first, 0);
    case Structure::LocationalHourly: return lay.pi(b, t, 0);
  }
  return lay.pi(b, t, 0);
}

struct Builder {
  NcpSystem& ncp;
  int add_var(std::string name, double lo = -kInf, double up = kInf) {
    ncp.variable_names.push_back(std::move(name));
    return ncp.model.add_variable(lo, up);
  }
  int add_row(std::string name, RowKind kind, nlp::QuadExpr e, double lo, double up) {
    ncp.row_names.push_back(std::move(name));
    ncp.row_kinds.push_back(kind);
    return ncp.model.add_row(std::move(e), lo, up);
  }
};

}  // namespace

const char* to_string(RowKind k) {
  switch (k) {
    case RowKind::Stationarity: return "stationarity";
    case RowKind::LlEquality: return "ll-equality";
    case RowKind::ConeSlack: return "cone-slack";
    case RowKind::Demand: return "demand";
    case RowKind::UlEquality: return "ul-equality";
    case RowKind::StructureTie: return "structure-tie";
    case RowKind::UlInequality: return "ul-inequality";
  }
  return "?";
}

const char* to_string(Stationarity s) {
  switch (s) {
    case Stationarity::Strong: return "strong";
    case Stationarity::B: return "B";
    case Stationarity::M: return "M";
    case Stationarity::C: return "C";
    case Stationarity::None: return "none";
  }
  return "?";
}

double Objective::value(std::span<const double> x) const {
  double v = poly.value(x);
  for (const auto& cd : cobb_douglas) v += cd.value(x);
  return v;
}

void Objective::accumulate_gradient(std::span<const double> x, double scale, std::span<double> grad) const {
  poly.accumulate_gradient(x, scale, grad);
  for (const auto& cd : cobb_douglas) cd.accumulate_gradient(x, scale, grad);
}

std::vector<int> NcpSystem::rows_of(RowKind k) const {
  std::vector<int> out;
  for (size_t i = 0; i < row_kinds.size(); ++i)
    if (row_kinds[i] == k) out.push_back(static_cast<int>(i));
  return out;
}

double NcpSystem::row_violation(int row, std::span<const double> x) const {
  const double c = model.rows[row].value(x);
  const double lo = model.row_l[row], up = model.row_u[row];
  if (lo == up) return std::abs(c - lo);
  return std::max({0.0, lo - c, c - up});
}

double NcpSystem::max_equality_residual(std::span<const double> x, int* worst) const {
  double m = 0.0;
  if (worst) *worst = -1;
  for (int i = 0; i < model.num_rows(); ++i) {
    if (model.row_l[i] != model.row_u[i]) continue;
    const double v = row_violation(i, x);
    if (v > m) {
      m = v;
      if (worst) *worst = i;
    }
  }
  return m;
}

double NcpSystem::max_inequality_violation(std::span<const double> x, int* worst) const {
  double m = 0.0;
  if (worst) *worst = -1;
  for (int i = 0; i < model.num_rows(); ++i) {
    if (model.row_l[i] == model.row_u[i]) continue;
    const double v = row_violation(i, x);
    if (v > m) {
      m = v;
      if (worst) *worst = i;
    }
  }
  return m;
}

NcpSystem assemble_kkt(const SystemModel& sys, Structure structure, double kappa) {
  if (sys.policy.peak_window.empty() || sys.policy.offpeak_window.empty())
    throw AssemblyError("both tariff windows must contain at least one hour");
  if (!(kappa > 0.0)) throw AssemblyError("energy-burden bound must be positive");

  NcpSystem ncp;
  ncp.structure = structure;
  ncp.kappa = kappa;
  NcpLayout& lay = ncp.layout;
  lay.H = sys.hours;
  lay.R = sys.days;
  lay.B = static_cast<int>(sys.buses.size());
  lay.L = static_cast<int>(sys.lines.size());
  lay.G = static_cast<int>(sys.generators.size());
  lay.Y = static_cast<int>(sys.external_costs.pollutants.size());
  const int H = lay.H, R = lay.R, B = lay.B, L = lay.L, G = lay.G, Y = lay.Y;
  const int co2 = sys.external_costs.co2_index();
  Builder bld{ncp};

  // Tariffs: bounds only on representatives so ties do not duplicate active bounds.
  lay.tariff0 = 0;
  for (int r = 0; r < R; ++r)
    for (int b = 0; b < B; ++b)
      for (int t = 0; t < H; ++t) {
        const int idx = bld.add_var(tag("pi", {{'b', sys.buses[b].id}, {'t', t}, {'r', r}}));
        if (tariff_ref(sys, lay, structure, b, t) == idx) {
          ncp.model.x_l[idx] = sys.buses[b].tariff_min;
          ncp.model.x_u[idx] = sys.buses[b].tariff_max;
        }
      }
  lay.demand0 = ncp.model.num_variables();
  for (int r = 0; r < R; ++r)
    for (int b = 0; b < B; ++b)
      for (int t = 0; t < H; ++t) bld.add_var(tag("d", {{'b', sys.buses[b].id}, {'t', t}, {'r', r}}));
  lay.window0 = ncp.model.num_variables();
  for (int r = 0; r < R; ++r)
    for (int b = 0; b < B; ++b)
      for (int w = 0; w < 2; ++w) bld.add_var(tag(w == 0 ? "dW_peak" : "dW_off", {{'b', sys.buses[b].id}, {'r', r}}));

  // Lower-level primal block, copied from the LL program with zero flexible demand.
  const dispatch::LlProgram ll = dispatch::build_ll(sys, dispatch::TariffSchedule(Structure::LocationalHourly, B, H, R, 0.0),
                                                    dispatch::zero_demand(sys));
  lay.ll = dispatch::LlLayout(sys, ncp.model.num_variables());
  const int llbase = lay.ll.base;
  {
    const auto& L0 = ll.layout;
    std::vector<std::string> names(L0.size());
    for (int r = 0; r < R; ++r)
      for (int t = 0; t < H; ++t) {
        names[L0.g0(t, r)] = tag("g0", {{'t', t}, {'r', r}});
        names[L0.q0(t, r)] = tag("q0", {{'t', t}, {'r', r}});
        for (int i = 0; i < G; ++i) {
          names[L0.g(i, t, r)] = tag("g", {{'i', sys.generators[i].id}, {'t', t}, {'r', r}});
          names[L0.q(i, t, r)] = tag("q", {{'i', sys.generators[i].id}, {'t', t}, {'r', r}});
        }
        for (int l = 0; l < L; ++l) {
          names[L0.fp(l, t, r)] = tag("fp", {{'l', l}, {'t', t}, {'r', r}});
          names[L0.fq(l, t, r)] = tag("fq", {{'l', l}, {'t', t}, {'r', r}});
        }
        for (int b = 0; b < B; ++b) names[L0.u(b, t, r)] = tag("u", {{'b', sys.buses[b].id}, {'t', t}, {'r', r}});
      }
    for (int y = 0; y < Y; ++y) {
      for (int b = 0; b < B; ++b)
        names[L0.e_bus(y, b)] = "e_" + sys.external_costs.pollutants[y] + tag("", {{'b', sys.buses[b].id}});
      names[L0.e_tot(y)] = "e_" + sys.external_costs.pollutants[y] + "_total";
    }
    for (int k = 0; k < L0.size(); ++k) bld.add_var(names[k], ll.model.x_l[k], ll.model.x_u[k]);
  }

  // Dual blocks.
  lay.eqdual0 = ncp.model.num_variables();
  for (int r = 0; r < R; ++r)
    for (int t = 0; t < H; ++t) {
      for (int b = 0; b < B; ++b) bld.add_var(tag("lambdaD", {{'b', sys.buses[b].id}, {'t', t}, {'r', r}}));
      for (int b = 0; b < B; ++b) bld.add_var(tag("lambdaDq", {{'b', sys.buses[b].id}, {'t', t}, {'r', r}}));
      for (int l = 0; l < L; ++l) bld.add_var(tag("beta", {{'l', l}, {'t', t}, {'r', r}}));
    }
  lay.emisdual0 = ncp.model.num_variables();
  for (int y = 0; y < Y; ++y)
    for (int b = 0; b < B; ++b) bld.add_var("psi_" + sys.external_costs.pollutants[y] + tag("", {{'b', sys.buses[b].id}}));
  for (int y = 0; y < Y; ++y) bld.add_var("chi_" + sys.external_costs.pollutants[y]);
  lay.bounddual0 = ncp.model.num_variables();
  for (int r = 0; r < R; ++r)
    for (int t = 0; t < H; ++t) {
      for (const char* nm : {"delta_lo", "delta_up", "theta_lo", "theta_up"})
        for (int i = 0; i < G; ++i) bld.add_var(tag(nm, {{'i', sys.generators[i].id}, {'t', t}, {'r', r}}), 0.0);
      for (const char* nm : {"mu_lo", "mu_up"})
        for (int b = 0; b < B; ++b) bld.add_var(tag(nm, {{'b', sys.buses[b].id}, {'t', t}, {'r', r}}), 0.0);
      bld.add_var(tag("tau_lo", {{'t', t}, {'r', r}}), 0.0);
      bld.add_var(tag("tau_up", {{'t', t}, {'r', r}}), 0.0);
    }
  lay.eta0 = ncp.model.num_variables();
  for (int r = 0; r < R; ++r)
    for (int t = 0; t < H; ++t)
      for (int l = 0; l < L; ++l) bld.add_var(tag("eta", {{'l', l}, {'t', t}, {'r', r}}), 0.0);
  lay.sigma0 = ncp.model.num_variables();
  for (int r = 0; r < R; ++r)
    for (int t = 0; t < H; ++t)
      for (int l = 0; l < L; ++l) bld.add_var(tag("sigma", {{'l', l}, {'t', t}, {'r', r}}), 0.0);
  lay.etotal = bld.add_var("e_CO2_system");
  lay.size = ncp.model.num_variables();

  // Multiplier of each LL row and the lower/upper bound dual of each LL primal.
  const auto& L0 = ll.layout;
  const auto& rows = ll.rows;
  std::vector<int> row_dual(rows.size(), -1);
  std::vector<int> lo_dual(L0.size(), -1), up_dual(L0.size(), -1);
  for (int r = 0; r < R; ++r)
    for (int t = 0; t < H; ++t) {
      for (int b = 0; b < B; ++b) {
        row_dual[rows.balance_p(b, t, r)] = lay.lambda_d(b, t, r);
        row_dual[rows.balance_q(b, t, r)] = lay.lambda_dq(b, t, r);
        lo_dual[L0.u(b, t, r)] = lay.mu_lo(b, t, r);
        up_dual[L0.u(b, t, r)] = lay.mu_up(b, t, r);
      }
      for (int l = 0; l < L; ++l) {
        row_dual[rows.vdrop(l, t, r)] = lay.beta(l, t, r);
        row_dual[rows.conic(l, t, r)] = lay.eta(l, t, r);
      }
      for (int i = 0; i < G; ++i) {
        lo_dual[L0.g(i, t, r)] = lay.delta_lo(i, t, r);
        up_dual[L0.g(i, t, r)] = lay.delta_up(i, t, r);
        lo_dual[L0.q(i, t, r)] = lay.theta_lo(i, t, r);
        up_dual[L0.q(i, t, r)] = lay.theta_up(i, t, r);
      }
      lo_dual[L0.g0(t, r)] = lay.tau_lo(t, r);
      up_dual[L0.g0(t, r)] = lay.tau_up(t, r);
    }
  for (int y = 0; y < Y; ++y) {
    for (int b = 0; b < B; ++b) row_dual[rows.e_bus(y, b)] = lay.psi(y, b);
    row_dual[rows.e_tot(y)] = lay.chi(y);
  }

  // Every dual must belong to exactly one primal constraint.
  std::vector<int> owners(lay.size, 0);
  for (int d : row_dual)
    if (d >= 0) ++owners[d];
  for (int k = 0; k < L0.size(); ++k) {
    const bool has_lo = std::isfinite(ll.model.x_l[k]), has_up = std::isfinite(ll.model.x_u[k]);
    if (has_lo != (lo_dual[k] >= 0) || has_up != (up_dual[k] >= 0))
      throw AssemblyError("bound of " + ncp.variable_names[llbase + k] + " has no matching multiplier");
    if (lo_dual[k] >= 0) ++owners[lo_dual[k]];
    if (up_dual[k] >= 0) ++owners[up_dual[k]];
  }
  for (int j = lay.eqdual0; j < lay.sigma0; ++j)
    if (owners[j] != 1) throw AssemblyError("dual " + ncp.variable_names[j] + " has no primal constraint");

  // Stationarity of the LL Lagrangian  f - sum y h - sum z (bound slack) - sum eta * cone.
  std::vector<nlp::QuadExpr> stat(L0.size());
  for (const auto& term : ll.model.objective.linear) stat[term.var].add_constant(term.coef);
  for (int i = 0; i < rows.size(); ++i) {
    const int y = row_dual[i];
    for (const auto& term : ll.model.rows[i].linear) stat[term.var].add(y, -term.coef);
    for (const auto& q : ll.model.rows[i].quadratic) {
      if (q.i == q.j) {
        stat[q.i].add(y, llbase + q.i, -2.0 * q.coef);
      } else {
        stat[q.i].add(y, llbase + q.j, -q.coef);
        stat[q.j].add(y, llbase + q.i, -q.coef);
      }
    }
  }
  for (int k = 0; k < L0.size(); ++k) {
    if (lo_dual[k] >= 0) stat[k].add(lo_dual[k], -1.0);
    if (up_dual[k] >= 0) stat[k].add(up_dual[k], 1.0);
    bld.add_row("stat_" + ncp.variable_names[llbase + k], RowKind::Stationarity, std::move(stat[k]), 0.0, 0.0);
  }

  // LL equalities with flexible demand as a variable; cone rows become sigma definitions.
  for (int i = 0; i < rows.size(); ++i) {
    nlp::QuadExpr e;
    e.constant = ll.model.rows[i].constant;
    for (const auto& term : ll.model.rows[i].linear) e.add(llbase + term.var, term.coef);
    for (const auto& q : ll.model.rows[i].quadratic) e.add(llbase + q.i, llbase + q.j, q.coef);
    if (ll.model.row_l[i] != ll.model.row_u[i]) continue;
    bld.add_row("ll_" + std::to_string(i), RowKind::LlEquality, std::move(e), 0.0, 0.0);
  }
  // Attach -d to the active balances and name the LL rows.
  {
    int row = static_cast<int>(L0.size());  // LL equality rows follow the stationarity rows
    std::map<int, int> ll_to_ncp;
    for (int i = 0; i < rows.size(); ++i)
      if (ll.model.row_l[i] == ll.model.row_u[i]) ll_to_ncp[i] = row++;
    for (int r = 0; r < R; ++r)
      for (int t = 0; t < H; ++t) {
        for (int b = 0; b < B; ++b) {
          const int idp = ll_to_ncp.at(rows.balance_p(b, t, r));
          ncp.model.rows[idp].add(lay.d(b, t, r), -1.0);
          ncp.row_names[idp] = tag("balance_p", {{'b', sys.buses[b].id}, {'t', t}, {'r', r}});
          ncp.row_names[ll_to_ncp.at(rows.balance_q(b, t, r))] =
              tag("balance_q", {{'b', sys.buses[b].id}, {'t', t}, {'r', r}});
        }
        for (int l = 0; l < L; ++l) ncp.row_names[ll_to_ncp.at(rows.vdrop(l, t, r))] = tag("vdrop", {{'l', l}, {'t', t}, {'r', r}});
      }
    for (int y = 0; y < Y; ++y) {
      for (int b = 0; b < B; ++b)
        ncp.row_names[ll_to_ncp.at(rows.e_bus(y, b))] =
            "emis_" + sys.external_costs.pollutants[y] + tag("", {{'b', sys.buses[b].id}});
      ncp.row_names[ll_to_ncp.at(rows.e_tot(y))] = "emis_" + sys.external_costs.pollutants[y] + "_total";
    }
  }
  for (int r = 0; r < R; ++r)
    for (int t = 0; t < H; ++t)
      for (int l = 0; l < L; ++l) {
        nlp::QuadExpr e;
        const auto& hc = ll.model.rows[rows.conic(l, t, r)];
        e.add(lay.sigma(l, t, r), 1.0);
        e.add_constant(-hc.constant);
        for (const auto& term : hc.linear) e.add(llbase + term.var, -term.coef);
        for (const auto& q : hc.quadratic) e.add(llbase + q.i, llbase + q.j, -q.coef);
        bld.add_row(tag("cone", {{'l', l}, {'t', t}, {'r', r}}), RowKind::ConeSlack, std::move(e), 0.0, 0.0);
      }

  // Closed-form demand: d_W * (share-weighted price) = a_W * budget; d_t = share_t * d_W.
  for (int r = 0; r < R; ++r)
    for (int b = 0; b < B; ++b) {
      const Bus& bus = sys.buses[b];
      const double budget =
          demand::household_budget(sys.policy.eb_household, bus.income, bus.population, bus.household_size);
      for (int w = 0; w < 2; ++w) {
        const auto& win = w == 0 ? sys.policy.peak_window : sys.policy.offpeak_window;
        const double a = w == 0 ? bus.elasticity : 1.0 - bus.elasticity;
        nlp::QuadExpr e;
        for (int h : win) e.add(lay.dw(b, w, r), lay.pi(b, h, r), dispatch::window_share(sys, b, h, r));
        e.add_constant(-a * budget);
        bld.add_row(tag(w == 0 ? "budget_peak" : "budget_off", {{'b', bus.id}, {'r', r}}), RowKind::Demand,
                    std::move(e), 0.0, 0.0);
        for (int h : win) {
          nlp::QuadExpr s;
          s.add(lay.d(b, h, r), 1.0);
          s.add(lay.dw(b, w, r), -dispatch::window_share(sys, b, h, r));
          bld.add_row(tag("alloc", {{'b', bus.id}, {'t', h}, {'r', r}}), RowKind::Demand, std::move(s), 0.0, 0.0);
        }
      }
    }

  // Revenue adequacy: revenue - op cost = (1 + upsilon) * capital charge.
  const double ccap = dispatch::capital_charge(sys);
  {
    nlp::QuadExpr e;
    for (int r = 0; r < R; ++r) {
      const double w = day_weight(sys, r);
      for (int b = 0; b < B; ++b)
        for (int t = 0; t < H; ++t) {
          e.add(lay.pi(b, t, r), w * sys.buses[b].inflexible_p(r, t));
          e.add(lay.pi(b, t, r), lay.d(b, t, r), w);
        }
      for (int t = 0; t < H; ++t) {
        e.add(lay.ll.g0(t, r), -w * sys.interface.lmp(r, t));
        for (int i = 0; i < G; ++i) e.add(lay.ll.g(i, t, r), -w * sys.generators[i].cost);
      }
    }
    e.add_constant(-(1.0 + sys.policy.rate_of_return) * ccap);
    bld.add_row("revenue_adequacy", RowKind::UlEquality, std::move(e), 0.0, 0.0);
  }
  // System CO2 including the transmission interface.
  double iface_co2 = 0.0;
  {
    nlp::QuadExpr e;
    e.add(lay.etotal, 1.0);
    if (co2 >= 0) {
      e.add(lay.ll.e_tot(co2), -1.0);
      for (int r = 0; r < R; ++r)
        for (int t = 0; t < H; ++t) iface_co2 += day_weight(sys, r) * sys.interface.transmission_emissions[co2](r, t);
    }
    e.add_constant(-iface_co2);
    bld.add_row("co2_system", RowKind::UlEquality, std::move(e), 0.0, 0.0);
  }

  // Structure ties.
  for (int r = 0; r < R; ++r)
    for (int b = 0; b < B; ++b)
      for (int t = 0; t < H; ++t) {
        const int k = lay.pi(b, t, r), ref = tariff_ref(sys, lay, structure, b, t);
        if (k == ref) continue;
        nlp::QuadExpr e;
        e.add(k, 1.0);
        e.add(ref, -1.0);
        bld.add_row(tag("tie", {{'b', sys.buses[b].id}, {'t', t}, {'r', r}}), RowKind::StructureTie, std::move(e), 0.0,
                    0.0);
      }

  // Energy burden per bus and representative day.
  for (int r = 0; r < R; ++r)
    for (int b = 0; b < B; ++b) {
      const Bus& bus = sys.buses[b];
      const double per_hh = bus.household_size / bus.population;
      nlp::QuadExpr e;
      for (int t = 0; t < H; ++t) {
        e.add(lay.pi(b, t, r), per_hh * bus.inflexible_p(r, t));
        e.add(lay.pi(b, t, r), lay.d(b, t, r), per_hh);
      }
      bld.add_row(tag("energy_burden", {{'b', bus.id}, {'r', r}}), RowKind::UlInequality, std::move(e), -kInf,
                  kappa * daily_income(bus));
    }
  // Peak/off-peak coupling on window means, once per free tariff group.
  if (structure != Structure::Flat) {
    const int nb = structure == Structure::Tou ? 1 : B;
    const double np = static_cast<double>(sys.policy.peak_window.size());
    const double no = static_cast<double>(sys.policy.offpeak_window.size());
    for (int b = 0; b < nb; ++b) {
      nlp::QuadExpr e;
      for (int h : sys.policy.peak_window) e.add(lay.pi(b, h, 0), 1.0 / np);
      for (int h : sys.policy.offpeak_window) e.add(lay.pi(b, h, 0), -sys.policy.tou_ratio / no);
      bld.add_row(structure == Structure::Tou ? std::string("tou_coupling") : tag("tou_coupling", {{'b', sys.buses[b].id}}),
                  RowKind::UlInequality, std::move(e), 0.0, kInf);
    }
  }
  // Average tariff cap.
  if (sys.policy.avg_tariff_cap > 0.0) {
    nlp::QuadExpr e;
    const double np = static_cast<double>(sys.policy.peak_window.size()) * B * R;
    const double no = static_cast<double>(sys.policy.offpeak_window.size()) * B * R;
    for (int r = 0; r < R; ++r)
      for (int b = 0; b < B; ++b) {
        for (int h : sys.policy.peak_window) e.add(lay.pi(b, h, r), 1.0 / np);
        for (int h : sys.policy.offpeak_window) e.add(lay.pi(b, h, r), 1.0 / no);
      }
    bld.add_row("average_tariff", RowKind::UlInequality, std::move(e), -kInf, 2.0 * sys.policy.avg_tariff_cap);
  }

  // Complementarity pairs: bound slacks of LL primals and the cone slack.
  for (int k = 0; k < L0.size(); ++k) {
    const int v = llbase + k;
    if (lo_dual[k] >= 0) {
      nlp::QuadExpr s;
      s.add(v, 1.0).add_constant(-ll.model.x_l[k]);
      ncp.pairs.push_back({ncp.variable_names[v] + ">=lo", std::move(s), lo_dual[k]});
    }
    if (up_dual[k] >= 0) {
      nlp::QuadExpr s;
      s.add(v, -1.0).add_constant(ll.model.x_u[k]);
      ncp.pairs.push_back({ncp.variable_names[v] + "<=up", std::move(s), up_dual[k]});
    }
  }
  for (int r = 0; r < R; ++r)
    for (int t = 0; t < H; ++t)
      for (int l = 0; l < L; ++l) {
        nlp::QuadExpr s;
        s.add(lay.sigma(l, t, r), 1.0);
        ncp.pairs.push_back({tag("cone", {{'l', l}, {'t', t}, {'r', r}}), std::move(s), lay.eta(l, t, r)});
      }

  // Objectives. Revenue and consumer payments cancel in -f_EW.
  {
    Objective& ew = ncp.objectives[0];
    for (int r = 0; r < R; ++r) {
      const double w = day_weight(sys, r);
      for (int t = 0; t < H; ++t) {
        ew.poly.add(lay.ll.g0(t, r), w * sys.interface.lmp(r, t));
        for (int i = 0; i < G; ++i) ew.poly.add(lay.ll.g(i, t, r), w * sys.generators[i].cost);
      }
      for (int b = 0; b < B; ++b) {
        const Bus& bus = sys.buses[b];
        nlp::CobbDouglasTerm cd;
        cd.alpha = bus.elasticity;
        cd.weight = -w;
        double dp = 0.0, dop = 0.0;
        for (int h : sys.policy.peak_window) dp += bus.inflexible_p(r, h);
        for (int h : sys.policy.offpeak_window) dop += bus.inflexible_p(r, h);
        cd.first.add(lay.dw(b, 0, r), 1.0).add_constant(dp);
        cd.second.add(lay.dw(b, 1, r), 1.0).add_constant(dop);
        ew.cobb_douglas.push_back(std::move(cd));
      }
    }
    ew.poly.add_constant(ccap);
    ew.poly.compress();

    Objective& fh = ncp.objectives[1];
    const auto& ec = sys.external_costs;
    for (int y = 0; y < Y; ++y) {
      if (y == co2) continue;
      for (int b = 0; b < B; ++b) fh.poly.add(lay.ll.e_bus(y, b), ec.health_cost[y][b]);
      double et = 0.0;
      for (int r = 0; r < R; ++r)
        for (int t = 0; t < H; ++t) et += day_weight(sys, r) * sys.interface.transmission_emissions[y](r, t);
      fh.poly.add_constant(et * sys.interface.interface_external_cost[y]);
    }
    ncp.objectives[2].poly.add(lay.etotal, ec.scc - ec.carbon_tax);
  }

  for (auto& row : ncp.model.rows) row.compress();
  return ncp;
}

int tariff_rank(const NcpSystem& ncp) {
  const NcpLayout& lay = ncp.layout;
  const int n = lay.B * lay.H * lay.R;
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (int row : ncp.rows_of(RowKind::StructureTie)) {
    const auto& lin = ncp.model.rows[row].linear;
    if (lin.size() != 2) continue;
    const int a = find(lin[0].var - lay.tariff0), b = find(lin[1].var - lay.tariff0);
    if (a != b) parent[a] = b;
  }
  std::set<int> roots;
  for (int i = 0; i < n; ++i) roots.insert(find(i));
  return static_cast<int>(roots.size());
}

ComplementarityMetrics complementarity_violation(const NcpSystem& ncp, std::span<const double> x) {
  if (static_cast<int>(x.size()) != ncp.num_variables())
    throw std::invalid_argument("point dimension " + std::to_string(x.size()) + " does not match " +
                                std::to_string(ncp.num_variables()) + " variables");
  ComplementarityMetrics m;
  m.min_component = kInf;
  m.max_product = -kInf;
  for (size_t j = 0; j < ncp.pairs.size(); ++j) {
    const double s = ncp.pairs[j].slack.value(x);
    const double v = x[ncp.pairs[j].multiplier];
    const double p = s * v;
    m.aggregate += p;
    if (p > m.max_product) {
      m.max_product = p;
      m.worst_pair = static_cast<int>(j);
    }
    m.min_component = std::min(m.min_component, std::min(s, v));
  }
  if (ncp.pairs.empty()) {
    m.min_component = 0.0;
    m.max_product = 0.0;
  }
  return m;
}

StationarityReport classify_stationarity(const NcpSystem& ncp, std::span<const double> x,
                                         std::span<const PairMultipliers> nu, double tol) {
  if (nu.size() != ncp.pairs.size()) throw std::invalid_argument("one multiplier pair per complementarity pair required");
  StationarityReport rep;
  for (size_t j = 0; j < ncp.pairs.size(); ++j) {
    const double s = ncp.pairs[j].slack.value(x);
    const double v = x[ncp.pairs[j].multiplier];
    if (s < -tol || v < -tol || std::abs(s * v) > tol)
      throw InfeasiblePointError("pair " + ncp.pairs[j].name + " is not complementary at the point");
    if (std::abs(s) > tol || std::abs(v) > tol) continue;
    ++rep.biactive;
    const double g = nu[j].nu_g, h = nu[j].nu_h;
    Stationarity c;
    if (g >= -tol && h >= -tol)
      c = Stationarity::Strong;
    else if ((g > tol && h > tol) || std::abs(g * h) <= tol)
      c = Stationarity::M;
    else if (g * h >= -tol)
      c = Stationarity::C;
    else
      c = Stationarity::None;
    if (static_cast<int>(c) > static_cast<int>(rep.cls)) {
      rep.cls = c;
      rep.witness = static_cast<int>(j);
      rep.witness_name = ncp.pairs[j].name;
    }
  }
  return rep;
}

std::vector<double> initial_point(const NcpSystem& ncp, const SystemModel& sys, const dispatch::TariffSchedule& tariff,
                                  const nlp::Options& ll_options) {
  const NcpLayout& lay = ncp.layout;
  std::vector<double> x(lay.size, 0.0);
  for (int r = 0; r < lay.R; ++r)
    for (int b = 0; b < lay.B; ++b)
      for (int t = 0; t < lay.H; ++t) x[lay.pi(b, t, r)] = tariff(b, t, r);
  const auto demand = dispatch::flexible_demand(sys, tariff);
  for (int r = 0; r < lay.R; ++r)
    for (int b = 0; b < lay.B; ++b)
      for (int t = 0; t < lay.H; ++t) {
        x[lay.d(b, t, r)] = demand[b](r, t);
        x[lay.dw(b, sys.in_peak(t) ? 0 : 1, r)] += demand[b](r, t);
      }
  const auto ll = dispatch::solve_ll(dispatch::build_ll(sys, tariff, demand), sys, ll_options);
  for (size_t k = 0; k < ll.primal_vector.size(); ++k) x[lay.ll.base + k] = ll.primal_vector[k];
  const auto& du = ll.duals;
  for (int r = 0; r < lay.R; ++r)
    for (int t = 0; t < lay.H; ++t) {
      for (int b = 0; b < lay.B; ++b) {
        x[lay.lambda_d(b, t, r)] = du.lambda_d[du.at(b, lay.B, t, r)];
        x[lay.lambda_dq(b, t, r)] = du.lambda_dq[du.at(b, lay.B, t, r)];
        x[lay.mu_lo(b, t, r)] = du.mu_lo[du.at(b, lay.B, t, r)];
        x[lay.mu_up(b, t, r)] = du.mu_up[du.at(b, lay.B, t, r)];
      }
      for (int l = 0; l < lay.L; ++l) {
        x[lay.beta(l, t, r)] = du.beta[du.at(l, lay.L, t, r)];
        x[lay.eta(l, t, r)] = du.eta[du.at(l, lay.L, t, r)];
        const double fp = x[lay.ll.fp(l, t, r)], fq = x[lay.ll.fq(l, t, r)];
        const double S = sys.lines[l].apparent_limit;
        x[lay.sigma(l, t, r)] = 0.5 * S - (fp * fp + fq * fq) / (2.0 * S);
      }
      for (int i = 0; i < lay.G; ++i) {
        x[lay.delta_lo(i, t, r)] = du.delta_lo[du.at(i, lay.G, t, r)];
        x[lay.delta_up(i, t, r)] = du.delta_up[du.at(i, lay.G, t, r)];
        x[lay.theta_lo(i, t, r)] = du.theta_lo[du.at(i, lay.G, t, r)];
        x[lay.theta_up(i, t, r)] = du.theta_up[du.at(i, lay.G, t, r)];
      }
      x[lay.tau_lo(t, r)] = du.tau_lo[r * lay.H + t];
      x[lay.tau_up(t, r)] = du.tau_up[r * lay.H + t];
    }
  for (int y = 0; y < lay.Y; ++y) {
    for (int b = 0; b < lay.B; ++b) x[lay.psi(y, b)] = du.psi[y * lay.B + b];
    x[lay.chi(y)] = du.chi[y];
  }
  // e_total from its defining row.
  for (int row : ncp.rows_of(RowKind::UlEquality)) {
    const auto& e = ncp.model.rows[row];
    bool has = false;
    for (const auto& term : e.linear) has |= term.var == lay.etotal;
    if (!has) continue;
    x[lay.etotal] = 0.0;
    x[lay.etotal] = -e.value(x);
  }
  return x;
}

dispatch::TariffSchedule extract_tariff(const NcpSystem& ncp, std::span<const double> x) {
  const NcpLayout& lay = ncp.layout;
  dispatch::TariffSchedule tar(ncp.structure, lay.B, lay.H, lay.R);
  for (int r = 0; r < lay.R; ++r)
    for (int b = 0; b < lay.B; ++b)
      for (int t = 0; t < lay.H; ++t) tar(b, t, r) = x[lay.pi(b, t, r)];
  return tar;
}

dispatch::DemandProfiles extract_demand(const NcpSystem& ncp, std::span<const double> x) {
  const NcpLayout& lay = ncp.layout;
  dispatch::DemandProfiles d(lay.B, HourlySeries(lay.R, lay.H));
  for (int r = 0; r < lay.R; ++r)
    for (int b = 0; b < lay.B; ++b)
      for (int t = 0; t < lay.H; ++t) d[b](r, t) = x[lay.d(b, t, r)];
  return d;
}

dispatch::DispatchSolution extract_dispatch(const NcpSystem& ncp, const SystemModel& sys, std::span<const double> x) {
  (void)sys;
  const NcpLayout& lay = ncp.layout;
  const auto& ll = lay.ll;
  dispatch::DispatchSolution d;
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
      d.import_p(r, t) = x[ll.g0(t, r)];
      d.import_q(r, t) = x[ll.q0(t, r)];
      for (int i = 0; i < lay.G; ++i) {
        d.g[i](r, t) = x[ll.g(i, t, r)];
        d.q[i](r, t) = x[ll.q(i, t, r)];
      }
      for (int l = 0; l < lay.L; ++l) {
        d.flow_p[l](r, t) = x[ll.fp(l, t, r)];
        d.flow_q[l](r, t) = x[ll.fq(l, t, r)];
      }
      for (int b = 0; b < lay.B; ++b) d.u[b](r, t) = x[ll.u(b, t, r)];
    }
  dispatch::account_emissions(sys, d);
  return d;
}

std::string census_text(const NcpSystem& ncp) {
  const NcpLayout& lay = ncp.layout;
  std::ostringstream os;
  os << "structure " << dispatch::to_string(ncp.structure) << "\n";
  os << "dimensions H=" << lay.H << " R=" << lay.R << " B=" << lay.B << " L=" << lay.L << " G=" << lay.G
     << " Y=" << lay.Y << "\n";
  os << "variables " << lay.size << "\n";
  os << "  tariff " << lay.demand0 - lay.tariff0 << "\n";
  os << "  demand " << lay.window0 - lay.demand0 << "\n";
  os << "  window_demand " << lay.ll.base - lay.window0 << "\n";
  os << "  ll_primal " << lay.ll.size() << "\n";
  os << "  equality_duals " << lay.emisdual0 - lay.eqdual0 << "\n";
  os << "  emission_duals " << lay.bounddual0 - lay.emisdual0 << "\n";
  os << "  bound_duals " << lay.eta0 - lay.bounddual0 << "\n";
  os << "  cone_duals " << lay.sigma0 - lay.eta0 << "\n";
  os << "  cone_slacks " << lay.etotal - lay.sigma0 << "\n";
  os << "  system_co2 1\n";
  os << "rows " << ncp.model.num_rows() << "\n";
  for (RowKind k : {RowKind::Stationarity, RowKind::LlEquality, RowKind::ConeSlack, RowKind::Demand, RowKind::UlEquality,
                    RowKind::StructureTie, RowKind::UlInequality})
    os << "  " << to_string(k) << " " << ncp.rows_of(k).size() << "\n";
  os << "pairs " << ncp.pairs.size() << "\n";
  os << "tariff_rank " << tariff_rank(ncp) << "\n";
  return os.str();
}

namespace {

void print_expr(std::ostream& os, const NcpSystem& ncp, const nlp::QuadExpr& e) {
  bool first = true;
  auto sep = [&](double c) {
    if (first) {
      if (c < 0) os << "-";
    } else {
      os << (c < 0 ? " - " : " + ");
    }
    first = false;
  };
  for (const auto& t : e.linear) {
    sep(t.coef);
    os << std::abs(t.coef) << "*" << ncp.variable_names[t.var];
  }
  for (const auto& q : e.quadratic) {
    sep(q.coef);
    os << std::abs(q.coef) << "*" << ncp.variable_names[q.i] << "*" << ncp.variable_names[q.j];
  }
  if (e.constant != 0.0 || first) {
    sep(e.constant);
    os << std::abs(e.constant);
  }
}

}  // namespace

void dump(const NcpSystem& ncp, std::ostream& os) {
  os << census_text(ncp);
  os << "# variables\n";
  for (int j = 0; j < ncp.num_variables(); ++j)
    os << j << " " << ncp.variable_names[j] << " [" << ncp.model.x_l[j] << ", " << ncp.model.x_u[j] << "]\n";
  os << "# rows\n";
  for (int i = 0; i < ncp.model.num_rows(); ++i) {
    os << i << " " << to_string(ncp.row_kinds[i]) << " " << ncp.row_names[i] << ": ";
    print_expr(os, ncp, ncp.model.rows[i]);
    os << " in [" << ncp.model.row_l[i] << ", " << ncp.model.row_u[i] << "]\n";
  }
  os << "# pairs\n";
  for (const auto& p : ncp.pairs) {
    os << p.name << ": ";
    print_expr(os, ncp, p.slack);
    os << " _|_ " << ncp.variable_names[p.multiplier] << "\n";
  }
}

}  // namespace tariff::mopec
