#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tariff/nlp/problem.hpp"

namespace tariff::nlp {

enum class Status { Success, Acceptable, Infeasible, MaxIter, NumericFailure, UserStop };

const char* to_string(Status s);

struct Options {
  double tol = 1e-8;
  double constr_viol_tol = 1e-8;
  double acceptable_tol = 1e-6;
  int acceptable_iter = 15;
  int max_iter = 3000;

  double mu_init = 0.1;
  double mu_min = 1e-11;
  double kappa_eps = 10.0;
  double kappa_mu = 0.2;
  double theta_mu = 1.5;

  double bound_push = 1e-2;
  double bound_frac = 1e-2;
  double max_gradient = 100.0;  // gradient-based scaling target

  /// Use the multipliers in the warm start and start from mu_init without
  /// the least-squares multiplier estimate.
  bool warm_start = false;
  double warm_bound_push = 1e-9;

  bool restoration = true;
  /// Variable bounds are widened by bound_relax * max(1, |bound|) before the
  /// solve, which gives degenerate boxes (for example x + y = 0 with x, y >= 0)
  /// a strict interior.
  double bound_relax = 0.0;
  int print_level = 0;

  /// Called after every accepted iteration with the current x; returning
  /// true stops the solve with Status::UserStop.
  std::function<bool(std::span<const double>)> stop_test;
};

/// Multipliers follow the convention  grad f + J^T lambda - z_l + z_u = 0,
/// so lambda_i > 0 when row i presses on its upper bound.
struct WarmStart {
  std::vector<double> lambda;
  std::vector<double> z_l;
  std::vector<double> z_u;
};

struct Result {
  Status status = Status::NumericFailure;
  std::vector<double> x;
  std::vector<double> lambda;
  std::vector<double> z_l;
  std::vector<double> z_u;
  double objective = 0.0;
  double primal_infeasibility = 0.0;  // unscaled max bound/row violation
  double dual_infeasibility = 0.0;    // unscaled
  double complementarity = 0.0;
  double final_mu = 0.0;
  int iterations = 0;
  int restorations = 0;
  std::string message;

  bool ok() const { return status == Status::Success || status == Status::Acceptable; }
};

/// Primal-dual interior-point method with a filter line search, inertia
/// correction on a sparse LDL^T factorization and a feasibility-restoration
/// phase.
Result solve(const Problem& problem, std::span<const double> x0, const Options& options = {},
             const WarmStart* warm = nullptr);

}  // namespace tariff::nlp
