#pragma once

#include <array>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "tariff/mopec.hpp"
#include "tariff/nlp/interior_point.hpp"

namespace tariff::solver {

class WeightError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ScheduleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Inner solve failure: carries the most violated rows and the outer index.
class RelaxedSolveError : public std::runtime_error {
 public:
  RelaxedSolveError(const std::string& what, nlp::Status status, int outer)
      : std::runtime_error(what), status(status), outer(outer) {}
  nlp::Status status;
  int outer;
};

struct ScholtesSchedule {
  double rho_init = 1.0;
  double shrink = 0.1;
  double rho_final = 1e-8;
  int max_outer = 30;

  static ScholtesSchedule from_policy(const SolverOverrides& s);
  void validate() const;
  /// rho per outer iteration: rho_init * shrink^k, clamped at rho_final.
  std::vector<double> values() const;
};

enum class SolveStatus { Converged, Infeasible, MaxIter, NumericFailure };
const char* to_string(SolveStatus s);

struct OuterIterate {
  double rho = 0.0;
  double objective = 0.0;        // scalarized
  double feasibility = 0.0;      // max equality residual
  double ul_violation = 0.0;     // max inequality-row violation
  double complementarity = 0.0;  // max pair product
  double aggregate = 0.0;        // sum of pair products
  int inner_iterations = 0;
  nlp::Status inner_status = nlp::Status::NumericFailure;
};

struct SolverReport {
  SolveStatus status = SolveStatus::NumericFailure;
  std::string message;
  std::vector<OuterIterate> iterates;
  std::vector<double> start_point;
  std::vector<double> final_point;
  std::vector<mopec::PairMultipliers> pair_multipliers;
  std::array<double, 3> components{};  // -f_EW, f_H, f_EN at the final point
  std::array<double, 3> weights{};
  double scalarized = 0.0;
  mopec::StationarityReport stationarity;
  ScholtesSchedule schedule;
  int total_inner_iterations = 0;

  bool converged() const { return status == SolveStatus::Converged; }
};

/// x -> w1 * (-f_EW) + w2 * f_H + w3 * f_EN as one objective.
mopec::Objective scalarize(const std::array<mopec::Objective, 3>& objectives, const std::array<double, 3>& weights);

struct RelaxedResult {
  nlp::Result inner;
  std::vector<mopec::PairMultipliers> pair_multipliers;
};

/// Smooth NLP: min scalarized objective over the NCP rows with slack_j >= 0,
/// multiplier_j >= 0 and slack_j * multiplier_j <= rho for every pair.
class RelaxedNlp {
 public:
  /// `tie_break` adds tie_break * sum (q^2 + fq^2 + (u - 1)^2) over LL reactive and
  /// voltage variables, which carry no cost and are otherwise non-unique.
  RelaxedNlp(const mopec::NcpSystem& ncp, const std::array<double, 3>& weights, double rho, double tie_break = 0.0);
  void set_rho(double rho);
  const nlp::ExprProblem& problem() const { return *problem_; }
  int product_row(int pair) const { return product_rows_[pair]; }
  /// MPEC multipliers nu_G = z_G - lambda_j * m_j and nu_H = z_H - lambda_j * s_j.
  std::vector<mopec::PairMultipliers> pair_multipliers(const nlp::Result& r) const;

 private:
  const mopec::NcpSystem& ncp_;
  std::unique_ptr<nlp::ExprProblem> problem_;
  std::vector<int> product_rows_;
  std::vector<int> slack_rows_;  // -1 when the slack is a variable bound
  struct SlackBound {
    int var = -1;
    bool upper = false;
  };
  std::vector<SlackBound> slack_bounds_;
};

RelaxedResult solve_relaxed_nlp(const mopec::NcpSystem& ncp, const std::array<double, 3>& weights, double rho,
                                std::span<const double> start, const nlp::Options& options = {},
                                double tie_break = 0.0);

struct ScholtesOptions {
  nlp::Options inner;
  double feasibility_tol = 1e-6;     // equality and UL row residual for Converged
  double complementarity_slack = 1e-8;
  // Barrier parameter of warm-started outer iterations: min(warm_mu, warm_mu_ratio * rho).
  double warm_mu = 1e-6;
  double warm_mu_ratio = 1e-5;
  double tie_break = 1e-4;
};

SolverReport scholtes_solve(const mopec::NcpSystem& ncp, const std::array<double, 3>& weights,
                            const ScholtesSchedule& schedule, std::span<const double> start,
                            const ScholtesOptions& options = {});

struct ParetoEntry {
  std::array<double, 3> weights{};
  SolverReport report;
  bool dominated = false;
  std::string error;
};

/// One Scholtes solve per weight vector from the same start; entries sorted by
/// weights and flagged when another converged entry dominates their components.
std::vector<ParetoEntry> pareto_sweep(const mopec::NcpSystem& ncp, std::vector<std::array<double, 3>> weight_list,
                                      const ScholtesSchedule& schedule, std::span<const double> start,
                                      const ScholtesOptions& options = {});

}  // namespace tariff::solver
