#pragma once

#include <limits>
#include <string>

#include "tariff/mopec.hpp"
#include "tariff/system_data.hpp"

namespace fixtures {

inline std::string dataset_dir() { return std::string(TARIFF_SOURCE_DIR) + "/data/manhattan7"; }

inline const tariff::SystemModel& manhattan() {
  static const tariff::SystemModel sys = tariff::load_system(dataset_dir());
  return sys;
}

struct TwoBus {
  double lmp = 30.0;         // $/MWh, both hours
  double gen_cost = 50.0;    // $/MWh
  double gen_cap = 5.0;      // MW
  double load = 10.0;        // MW at the load bus, both hours
  double load_q = 0.0;       // MVAr
  double root_load = 0.0;    // MW at the root bus
  double flow_limit = 100.0; // MW
  double carbon_tax = 0.0;   // $/t
  double scc = 0.0;          // $/t
  double co2_factor = 0.0;   // t/MWh of the local generator
  double so2_factor = 0.0;   // t/MWh of the local generator
  double so2_health = 0.0;   // $/t of SO2 at the load bus
};

/// Root bus plus one load bus with a local generator, two hours (off-peak, peak), one day.
inline tariff::SystemModel two_bus(const TwoBus& p = {}) {
  using namespace tariff;
  SystemModel m;
  m.hours = 2;
  m.days = 1;
  m.root = 0;
  for (int b = 0; b < 2; ++b) {
    Bus bus;
    bus.id = b + 1;
    bus.inflexible_p = HourlySeries(1, 2, b == 1 ? p.load : p.root_load);
    bus.inflexible_q = HourlySeries(1, 2, b == 1 ? p.load_q : 0.0);
    bus.population = 1000.0;
    bus.household_size = 2.5;
    bus.income = 50000.0;
    bus.elasticity = 0.6;
    bus.tariff_min = 10.0;
    bus.tariff_max = 150.0;
    m.buses.push_back(bus);
  }
  m.lines.push_back({0, 1, 0.01, 0.02, 1000.0});
  Generator g;
  g.id = 1;
  g.bus = 1;
  g.cost = p.gen_cost;
  g.p_min = 0.0;
  g.p_max = p.gen_cap;
  g.q_min = -10.0;
  g.q_max = 10.0;
  g.emission_factors = {p.co2_factor, p.so2_factor};
  m.generators.push_back(g);
  m.interface.lmp = HourlySeries(1, 2, p.lmp);
  m.interface.flow_limit = p.flow_limit;
  m.interface.transmission_emissions = {HourlySeries(1, 2, 0.0), HourlySeries(1, 2, 0.0)};
  m.interface.interface_external_cost = {0.0, 0.0};
  m.external_costs.pollutants = {"CO2", "SO2"};
  m.external_costs.health_cost = {{0.0, 0.0}, {0.0, p.so2_health}};
  m.external_costs.carbon_tax = p.carbon_tax;
  m.external_costs.scc = p.scc;
  m.policy.capital = {0.0, 20, 0.05};
  m.policy.capital_cost_daily = 0.0;
  m.policy.avg_tariff_cap = 45.0;
  m.policy.peak_window = {1};
  m.policy.offpeak_window = {0};
  m.policy.day_weights = {1.0};
  validate(m);
  return m;
}

/// min (x - a)^2 + (y - b)^2 subject to 0 <= x complementary to y >= 0.
inline tariff::mopec::NcpSystem toy_mpec(double a = 1.0, double b = 1.0) {
  using namespace tariff;
  constexpr double inf = std::numeric_limits<double>::infinity();
  mopec::NcpSystem ncp;
  const int x = ncp.model.add_variable(0.0, inf);
  const int y = ncp.model.add_variable(0.0, inf);
  ncp.variable_names = {"x", "y"};
  auto& f = ncp.objectives[0].poly;
  f.add(x, x, 1.0).add(x, -2.0 * a).add(y, y, 1.0).add(y, -2.0 * b).add_constant(a * a + b * b);
  mopec::ComplementarityPair pair;
  pair.name = "x_perp_y";
  pair.slack.add(x, 1.0);
  pair.multiplier = y;
  ncp.pairs.push_back(pair);
  return ncp;
}

}  // namespace fixtures
