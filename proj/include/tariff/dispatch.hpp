#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "tariff/nlp/expr_problem.hpp"
#include "tariff/nlp/interior_point.hpp"
#include "tariff/system_data.hpp"

namespace tariff::dispatch {

class InfeasibleBoundsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LowerLevelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Structure { Flat, Tou, LocationalTou, LocationalHourly };

const char* to_string(Structure s);
/// Accepts "flat", "tou", "loc-tou"/"locational-tou", "loc-hourly"/"locational-hourly".
Structure parse_structure(const std::string& name);

/// Tariff pi[b, t, r] in $/MWh.
class TariffSchedule {
 public:
  TariffSchedule() = default;
  TariffSchedule(Structure s, int buses, int hours, int days, double fill = 0.0);

  static TariffSchedule flat(const SystemModel& sys, double value);
  static TariffSchedule tou(const SystemModel& sys, double peak, double offpeak);

  Structure structure() const { return structure_; }
  int buses() const { return buses_; }
  int hours() const { return hours_; }
  int days() const { return days_; }

  double& operator()(int bus, int hour, int day) { return values_[index(bus, hour, day)]; }
  double operator()(int bus, int hour, int day) const { return values_[index(bus, hour, day)]; }
  const std::vector<double>& values() const { return values_; }

  /// Unweighted mean over the hours of a window at (bus, day).
  double peak_value(const SystemModel& sys, int bus, int day) const;
  double offpeak_value(const SystemModel& sys, int bus, int day) const;

  /// Throws std::invalid_argument naming the first value that breaks the
  /// structure's tying pattern or the bus tariff bounds.
  void check(const SystemModel& sys, double tol = 1e-9) const;

 private:
  size_t index(int b, int t, int r) const { return (static_cast<size_t>(r) * buses_ + b) * hours_ + t; }
  Structure structure_ = Structure::Flat;
  int buses_ = 0, hours_ = 0, days_ = 0;
  std::vector<double> values_;
};

/// Flexible demand per bus (MW per hour), one HourlySeries per bus.
using DemandProfiles = std::vector<HourlySeries>;

/// Reference-share weights of the inflexible profile over the window that
/// contains `hour`: D[b,hour,r] / sum of D over that window.
double window_share(const SystemModel& sys, int bus, int hour, int day);

/// Share-weighted window price sum_t share_t * pi_t, the price at which the
/// window's flexible energy is bought.
double effective_window_price(const SystemModel& sys, const TariffSchedule& tariff, int bus, int day, bool peak);

/// Closed-form flexible demand at the tariff, allocated over hours.
DemandProfiles flexible_demand(const SystemModel& sys, const TariffSchedule& tariff);

DemandProfiles zero_demand(const SystemModel& sys);

/// Index map of lower-level primal variables inside a larger vector.
struct LlLayout {
  int base = 0;
  int H = 0, R = 0, B = 0, L = 0, G = 0, Y = 0;

  LlLayout() = default;
  LlLayout(const SystemModel& sys, int base_offset);

  int per_hour() const { return 2 + 2 * G + 2 * L + B; }
  int hour_block(int t, int r) const { return base + (r * H + t) * per_hour(); }
  int g0(int t, int r) const { return hour_block(t, r); }
  int q0(int t, int r) const { return hour_block(t, r) + 1; }
  int g(int i, int t, int r) const { return hour_block(t, r) + 2 + i; }
  int q(int i, int t, int r) const { return hour_block(t, r) + 2 + G + i; }
  int fp(int l, int t, int r) const { return hour_block(t, r) + 2 + 2 * G + l; }
  int fq(int l, int t, int r) const { return hour_block(t, r) + 2 + 2 * G + L + l; }
  int u(int b, int t, int r) const { return hour_block(t, r) + 2 + 2 * G + 2 * L + b; }
  int e_bus(int y, int b) const { return base + R * H * per_hour() + y * B + b; }
  int e_tot(int y) const { return base + R * H * per_hour() + Y * B + y; }
  int size() const { return R * H * per_hour() + Y * B + Y; }
};

/// Row map of the lower-level program.
struct LlRows {
  int H = 0, R = 0, B = 0, L = 0, Y = 0;
  int per_hour() const { return 2 * B + 2 * L; }
  int balance_p(int b, int t, int r) const { return (r * H + t) * per_hour() + b; }
  int balance_q(int b, int t, int r) const { return (r * H + t) * per_hour() + B + b; }
  int vdrop(int l, int t, int r) const { return (r * H + t) * per_hour() + 2 * B + l; }
  int conic(int l, int t, int r) const { return (r * H + t) * per_hour() + 2 * B + L + l; }
  int e_bus(int y, int b) const { return R * H * per_hour() + y * B + b; }
  int e_tot(int y) const { return R * H * per_hour() + Y * B + y; }
  int size() const { return R * H * per_hour() + Y * B + Y; }
};

/// Lower-level convex program: min operating cost + carbon tax (revenue is a
/// constant for fixed tariff and demand) subject to LinDistFlow balances,
/// voltage drops, box bounds, line cone limits and emission accounting.
struct LlProgram {
  nlp::ExprModel model;
  LlLayout layout;
  LlRows rows;
  double revenue = 0.0;  // constant revenue term, $
  std::vector<double> lmp_weighted;  // per (t, r): w_r * lambda^T
};

/// Program census, counted by construction.
struct Census {
  int variables = 0;
  int equality_rows = 0;
  int cone_rows = 0;
  int bounded_variables = 0;
  int balance_p_rows = 0;
  int balance_q_rows = 0;
};

LlProgram build_ll(const SystemModel& sys, const TariffSchedule& tariff, const DemandProfiles& demand);
Census census(const LlProgram& program);

struct DispatchSolution {
  std::vector<HourlySeries> g, q;           // per generator
  HourlySeries import_p, import_q;          // at the root
  std::vector<HourlySeries> flow_p, flow_q; // per line
  std::vector<HourlySeries> u;              // per bus
  std::vector<std::vector<double>> emissions_bus;  // [pollutant][bus], t
  std::vector<double> emissions_total;             // [pollutant], t
};

/// Fills the emission ledger from the generator schedule: bus totals from the
/// factors, system totals as the sum of the bus totals.
void account_emissions(const SystemModel& sys, DispatchSolution& d);

/// LL multipliers in the sign convention of the Lagrangian
///   L = f - sum y_i h_i(x) - sum z (bound slack) - sum eta * cone slack,
/// so bound and cone multipliers are nonnegative. Arrays are indexed like
/// the primal they belong to: per (item, hour, day) as item + count*(r*H + t).
struct LlDuals {
  int H = 0, R = 0, B = 0, L = 0, G = 0, Y = 0;
  std::vector<double> lambda_d, lambda_dq;  // per bus
  std::vector<double> beta;                 // per line
  std::vector<double> eta;                  // per line
  std::vector<double> delta_lo, delta_up;   // per generator
  std::vector<double> theta_lo, theta_up;   // per generator
  std::vector<double> mu_lo, mu_up;         // per bus
  std::vector<double> tau_lo, tau_up;       // per (t, r)
  std::vector<double> psi;                  // [y * B + b]
  std::vector<double> chi;                  // per pollutant

  int at(int item, int count, int t, int r) const { return item + count * (r * H + t); }
  /// Arrays keyed by multiplier symbol: lambda_D, lambda_Dq, beta, eta,
  /// delta_lo, delta_up, theta_lo, theta_up, mu_lo, mu_up, tau_lo, tau_up, psi, chi.
  std::map<std::string, const std::vector<double>*> by_symbol() const;
};

struct LlSolution {
  DispatchSolution dispatch;
  LlDuals duals;
  std::vector<double> primal_vector;  // in LlLayout order (base 0)
  double objective = 0.0;       // minimized operating cost + carbon tax, $
  double dual_objective = 0.0;  // Lagrangian dual bound, $
  double duality_gap = 0.0;     // |primal - dual| / max(1, |primal|)
  double profit = 0.0;          // revenue - objective
  nlp::Status status = nlp::Status::NumericFailure;
  int iterations = 0;
};

LlSolution solve_ll(const LlProgram& program, const SystemModel& sys, const nlp::Options& options = {});

/// Convenience: closed-form demand at the tariff, build, solve.
LlSolution solve_ll_at(const SystemModel& sys, const TariffSchedule& tariff, const nlp::Options& options = {});

struct ObjectiveBreakdown {
  double f_ew = 0.0;
  double f_h = 0.0;
  double f_en = 0.0;
  double utility_profit = 0.0;
  double revenue = 0.0;
  double op_cost = 0.0;
  double consumer_utility = 0.0;
  double consumer_payments = 0.0;
  double emissions_co2_total = 0.0;
  double scalarized = 0.0;
};

ObjectiveBreakdown eval_objectives(const SystemModel& sys, const TariffSchedule& tariff,
                                   const DemandProfiles& demand, const DispatchSolution& dispatch,
                                   const std::vector<double>& weights);

struct EnergyBurden {
  std::vector<double> per_day;  // $ per household per day, per representative day
  double bound = 0.0;           // kappa * income / 365
};

EnergyBurden energy_burden(const SystemModel& sys, const TariffSchedule& tariff, const DemandProfiles& demand,
                           int bus, double kappa);

/// revenue - (1 + upsilon) * capital - op_cost.
double revenue_adequacy_residual(double revenue, double capital_cost, double rate_of_return, double op_cost);
double revenue_adequacy_residual(const SystemModel& sys, const TariffSchedule& tariff, const DemandProfiles& demand,
                                 const DispatchSolution& dispatch);

/// Capital charge over the horizon: daily capital cost times total day weight.
double capital_charge(const SystemModel& sys);

/// Peak-window mean plus off-peak-window mean of pi over buses, hours and days.
double average_tariff(const SystemModel& sys, const TariffSchedule& tariff);
double average_tariff(double peak_mean, double offpeak_mean);

double total_revenue(const SystemModel& sys, const TariffSchedule& tariff, const DemandProfiles& demand);
double operating_cost(const SystemModel& sys, const DispatchSolution& dispatch);

}  // namespace tariff::dispatch
