#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tariff/dispatch.hpp"
#include "tariff/mopec.hpp"
#include "tariff/solver.hpp"

namespace tariff::oracle {

class DimensionalityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Axis {
  double min = 0.0;
  double max = 0.0;
  int points = 2;
  double value(int k) const;
};

/// Tariff grid, one axis per free tariff value: flat {pi}; tou {peak, off-peak}.
struct GridSpec {
  dispatch::Structure structure = dispatch::Structure::Flat;
  std::vector<Axis> axes;

  /// Uniform grid over the tariff bounds common to every bus.
  static GridSpec uniform(const SystemModel& sys, dispatch::Structure structure, int points);
  /// Throws DimensionalityError for more than 3 axes or a structure without a
  /// grid form, std::invalid_argument for points < 2 or bounds outside the tariff range.
  void validate(const SystemModel& sys) const;
};

struct GridOptions {
  int threads = 0;  // 0: hardware concurrency
  nlp::Options ll;
  double ra_tol = 1e-6;  // revenue-adequacy root tolerance, relative to the capital charge
  double eb_tol = 1e-9;  // $/household/day
  int refine_iter = 200;
};

/// One grid node with its screening data.
struct GridPoint {
  std::vector<double> coords;
  bool ll_ok = false;
  double ra_residual = 0.0;     // revenue - (1 + upsilon) capital - op cost, $
  double eb_slack = 0.0;        // min over buses/days of bound - burden
  int eb_bus = -1;              // bus index attaining eb_slack
  double coupling_slack = 0.0;  // peak mean - nu * off-peak mean (0 for flat)
  double average_slack = 0.0;   // 2 pi_avg - average tariff
  bool inequality_feasible = false;
  double scalarized = 0.0;
  std::string note;
};

/// Revenue-adequate point found between two grid nodes with a sign change.
struct GridCandidate {
  GridPoint point;
  dispatch::TariffSchedule tariff;
  dispatch::ObjectiveBreakdown breakdown;
  bool feasible = false;
};

struct GridResult {
  dispatch::Structure structure = dispatch::Structure::Flat;
  double kappa = 0.0;
  std::vector<GridPoint> map;  // row-major over the axes
  std::vector<GridCandidate> candidates;
  int best = -1;  // index into candidates, -1 when no UL-feasible point exists

  bool empty() const { return best < 0; }
  const GridCandidate& best_candidate() const { return candidates.at(best); }
};

/// Tariff schedule for grid coordinates under a flat or tou structure.
dispatch::TariffSchedule grid_tariff(const SystemModel& sys, dispatch::Structure s, std::span<const double> coords);

/// Exhaustive oracle: exact LL solve per node, revenue adequacy as an equality
/// (sign change along the last axis, refined to a root), every other
/// upper-level row as an inequality. Returns the best feasible candidate.
GridResult grid_search(const SystemModel& sys, dispatch::Structure structure, double kappa, const GridSpec& grid,
                       const std::array<double, 3>& weights, const GridOptions& options = {});

/// Flat tariff at which revenue adequacy holds, by bracketing and regula falsi
/// over the tariff bounds. Throws std::runtime_error if no sign change exists.
double flat_revenue_adequate_tariff(const SystemModel& sys, const nlp::Options& ll = {}, double rel_tol = 1e-9);

struct AuditCheck {
  std::string name;  // row or pair name
  std::string kind;  // stationarity, ll-equality, cone-slack, demand, ul-equality, structure-tie,
                     // ul-inequality, bound, sign, complementarity
  double violation = 0.0;
};

struct AuditRecord {
  bool pass = false;
  double tol = 0.0;
  int checks = 0;
  double max_violation = 0.0;
  std::string worst;
  std::vector<AuditCheck> failures;  // sorted by violation, largest first
  std::string note;
};

/// Re-evaluates every row of the single-level system from the dataset with
/// plain loops (the solver's expression rows are not used) and checks bounds,
/// multiplier signs and complementarity products. PASS iff all are within tol.
AuditRecord audit_point(const SystemModel& sys, const mopec::NcpSystem& ncp, std::span<const double> point, double tol);
AuditRecord audit_solution(const SystemModel& sys, const mopec::NcpSystem& ncp, const solver::SolverReport& report,
                           double tol);

}  // namespace tariff::oracle
