#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace tariff {

/// Malformed dataset file (bad JSON, missing column, non-numeric field).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A loaded value violates a documented invariant; the message names it.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The line set does not form a tree rooted at the root bus.
class TopologyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense (rep_day, hour) table.
class HourlySeries {
 public:
  HourlySeries() = default;
  HourlySeries(int days, int hours, double fill = 0.0)
      : days_(days), hours_(hours), values_(static_cast<size_t>(days) * hours, fill) {}

  double& operator()(int day, int hour) { return values_[index(day, hour)]; }
  double operator()(int day, int hour) const { return values_[index(day, hour)]; }

  int days() const { return days_; }
  int hours() const { return hours_; }
  double sum() const;
  double max() const;
  bool operator==(const HourlySeries&) const = default;

 private:
  size_t index(int day, int hour) const { return static_cast<size_t>(day) * hours_ + hour; }

  int days_ = 0;
  int hours_ = 0;
  std::vector<double> values_;
};

struct Bus {
  int id = 0;                   // external id as written in network.json
  std::vector<int> ancestors;   // parent bus index (empty for the root)
  std::vector<int> children;    // child bus indices
  double v_min2 = 0.81;         // squared voltage bounds, p.u.^2
  double v_max2 = 1.21;
  HourlySeries inflexible_p;    // MW
  HourlySeries inflexible_q;    // MVAr
  double population = 0.0;      // persons
  double household_size = 0.0;  // persons per household
  double income = 0.0;          // mean household income, $/year
  double elasticity = 0.0;      // Cobb-Douglas peak exponent in [0, 1]
  double tariff_min = 0.0;      // $/MWh
  double tariff_max = 0.0;
  double max_load_mw = 0.0;     // documented peak load (0 = not documented)

  double households() const { return population / household_size; }
  bool operator==(const Bus&) const = default;
};

struct Line {
  int from = 0;  // bus index, parent side
  int to = 0;    // bus index, child side
  double resistance = 0.0;      // p.u. on the system MVA base
  double reactance = 0.0;       // p.u.
  double apparent_limit = 0.0;  // MVA
  bool operator==(const Line&) const = default;
};

struct Generator {
  int id = 0;
  int bus = 0;  // bus index
  double cost = 0.0;  // $/MWh
  double p_min = 0.0, p_max = 0.0;  // MW
  double q_min = 0.0, q_max = 0.0;  // MVAr
  std::vector<double> emission_factors;  // t/MWh, aligned with ExternalCosts::pollutants
  bool operator==(const Generator&) const = default;
};

struct WholesaleInterface {
  HourlySeries lmp;  // $/MWh at the transmission bus
  double flow_limit = 0.0;  // MW
  std::vector<HourlySeries> transmission_emissions;  // t per hour, per pollutant
  std::vector<double> interface_external_cost;       // $/t, per pollutant
  bool operator==(const WholesaleInterface&) const = default;
};

struct ExternalCosts {
  std::vector<std::string> pollutants;         // CO2 first by convention, but looked up by name
  std::vector<std::vector<double>> health_cost;  // [pollutant][bus] $/t; CO2 row unused
  double carbon_tax = 0.0;  // gamma, $/t
  double scc = 0.0;         // social cost of carbon, $/t

  int co2_index() const;
  bool operator==(const ExternalCosts&) const = default;
};

struct CapitalCost {
  double present_value = 0.0;  // $
  int years = 20;
  double discount_rate = 0.05;
  bool operator==(const CapitalCost&) const = default;
};

struct SolverOverrides {
  double rho_init = 1.0;
  double rho_shrink = 0.1;
  double rho_final = 1e-8;
  int max_outer = 30;
  bool operator==(const SolverOverrides&) const = default;
};

struct RegulatorPolicy {
  double eb_regulator = 0.09;   // kappa
  double eb_household = 0.09;   // kappa'
  double tou_ratio = 1.0;       // nu
  double rate_of_return = 0.11;
  CapitalCost capital;
  double capital_cost_daily = 0.0;  // derived from `capital`
  double avg_tariff_cap = 0.0;      // $/MWh
  std::vector<int> peak_window;     // hours in T1
  std::vector<int> offpeak_window;  // hours in T2
  std::vector<double> weights{1.0, 1.0, 1.0};
  std::vector<double> day_weights;  // one per representative day
  bool allow_export = false;  // symmetric interface bound instead of g_b0 >= 0
  SolverOverrides solver;

  double total_day_weight() const;
  bool operator==(const RegulatorPolicy&) const = default;
};

struct SystemModel {
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<Generator> generators;
  WholesaleInterface interface;
  ExternalCosts external_costs;
  RegulatorPolicy policy;
  int root = 0;  // bus index of b_0
  double base_mva = 100.0;
  int hours = 24;
  int days = 1;

  int bus_index(int id) const;
  /// Index of the line feeding `bus`, or -1 for the root.
  int parent_line(int bus) const;
  std::vector<int> child_lines(int bus) const;
  std::vector<int> generators_at(int bus) const;
  bool in_peak(int hour) const;

  bool operator==(const SystemModel&) const = default;
};

/// Annuity on `capital_pv` over `years` at `rate`, prorated per day (365 d/yr).
/// Throws std::domain_error on negative inputs or years < 1.
double derive_annuity(double capital_pv, int years, double rate);

/// Daily mean household income at `bus`, $/day.
double daily_income(const Bus& bus);

/// Loads network.json, demand.csv, lmp.csv, external_costs.csv and policy.json
/// from `dir`, derives ancestor/children sets and validates every invariant.
SystemModel load_system(const std::filesystem::path& dir);

/// Writes `model` back in the format read by load_system.
void save_system(const SystemModel& model, const std::filesystem::path& dir);

/// Re-runs all invariant and topology checks. Throws ValidationError or TopologyError.
void validate(SystemModel& model);

}  // namespace tariff
