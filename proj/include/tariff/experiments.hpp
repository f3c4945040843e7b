#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tariff/oracle.hpp"
#include "tariff/solver.hpp"

namespace tariff::experiments {

/// Case 1 flat, 2 tou, 3 locational tou, 4 locational hourly.
dispatch::Structure case_structure(int case_id);
int case_of(dispatch::Structure s);
/// Accepts 1..4 or a structure name.
int parse_case(const std::string& text);

constexpr double kKappaMin = 0.04;
constexpr double kKappaMax = 0.20;

struct RunOptions {
  solver::ScholtesSchedule schedule;  // from the dataset policy unless overridden
  bool schedule_override = false;
  std::optional<double> nu;            // tou ratio override
  std::optional<double> average_cap;   // pi_avg override
  solver::ScholtesOptions scholtes;
  double audit_tol = 1e-6;
  int threads = 1;  // sweep workers
};

struct TariffRow {
  int bus_id = 0;
  double peak = 0.0;     // window means
  double offpeak = 0.0;
  std::vector<double> hourly;  // day 0, filled for locational hourly
};

struct ViolatedRow {
  std::string name;
  double violation = 0.0;
};

struct RunReport {
  int case_id = 1;
  dispatch::Structure structure = dispatch::Structure::Flat;
  double kappa = 0.0;
  std::array<double, 3> weights{1.0, 1.0, 1.0};
  std::string status;  // converged, infeasible, max_iter, numeric_failure, audit_fail, error
  std::string message;
  bool published = false;  // converged and audit PASS

  // Published tariff.
  std::optional<double> flat_tariff;
  std::vector<TariffRow> tariff;
  double average_tariff = 0.0;

  dispatch::ObjectiveBreakdown breakdown;
  double ra_residual = 0.0;
  double capital_charge = 0.0;
  std::vector<double> eb_slack;  // per bus, bound - burden (min over days)
  std::vector<double> eb_burden;

  // Solver trace.
  double start_tariff = 0.0;
  solver::ScholtesSchedule schedule;
  std::vector<solver::OuterIterate> iterates;
  std::string stationarity;
  int total_inner_iterations = 0;

  // Infeasibility certificate: rows violated at the point the solver stopped.
  std::vector<ViolatedRow> certificate;

  bool audit_pass = false;
  oracle::AuditRecord audit;

  struct Timings {
    double load = 0.0, assemble = 0.0, start = 0.0, solve = 0.0, audit = 0.0, total = 0.0;
  } timings;

  bool saturated = false;  // set by eb_sweep
};

/// Loads, assembles the case's structure, solves from the flat revenue-adequate
/// tariff, audits and summarizes. Throws std::out_of_range for kappa outside
/// [0.04, 0.20]; every later stage failure is recorded in the report.
RunReport run_case(const SystemModel& sys, int case_id, double kappa, const std::array<double, 3>& weights,
                   const RunOptions& options = {});
RunReport run_case(const std::filesystem::path& data, int case_id, double kappa, const std::array<double, 3>& weights,
                   const RunOptions& options = {});

/// Inclusive grid lo, lo + step, ..., hi; a step of at least the width gives lo alone.
std::vector<double> kappa_grid(double lo, double hi, double step);

struct SweepResult {
  std::vector<RunReport> reports;
  std::optional<double> threshold;   // smallest kappa with a published result
  std::optional<double> saturation;  // smallest kappa from which tariff and objective stay constant
};

SweepResult eb_sweep(const SystemModel& sys, int case_id, double lo, double hi, double step,
                     const std::array<double, 3>& weights, const RunOptions& options = {});

/// Reports over cases x kappas x weights in input order, case-major, then kappa, then weights.
std::vector<RunReport> weight_study(const SystemModel& sys, const std::vector<int>& cases,
                                    const std::vector<double>& kappas,
                                    const std::vector<std::array<double, 3>>& weight_list,
                                    const RunOptions& options = {});

/// `a,b,c` into a weight vector; throws std::invalid_argument otherwise.
std::array<double, 3> parse_weights(const std::string& text);
/// `a,b,c;d,e,f;...`
std::vector<std::array<double, 3>> parse_weight_list(const std::string& text);

std::string report_json(const RunReport& r, bool with_timings = true);
/// Document for a list of reports: {"command", "reports", ...}.
std::string reports_json(const std::string& command, const std::vector<RunReport>& reports,
                         const std::optional<double>& threshold = {}, const std::optional<double>& saturation = {},
                         bool with_timings = true);

/// Fixed-column table, one line per report.
std::string csv_header();
std::string csv_row(const RunReport& r);
std::string reports_csv(const std::vector<RunReport>& reports);

/// 0 when every report is published, 2 if only infeasible cells failed, 1 otherwise.
int exit_code(const std::vector<RunReport>& reports);

}  // namespace tariff::experiments
