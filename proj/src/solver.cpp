#include "tariff/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

namespace tariff::solver {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_weights(const std::array<double, 3>& w) {
  for (double v : w)
    if (!(v > 0.0) || !std::isfinite(v)) throw WeightError("objective weights must be positive and finite");
}

std::string worst_rows(const mopec::NcpSystem& ncp, std::span<const double> x, int count) {
  std::vector<std::pair<double, int>> v;
  for (int i = 0; i < ncp.model.num_rows(); ++i) v.emplace_back(ncp.row_violation(i, x), i);
  std::partial_sort(v.begin(), v.begin() + std::min<int>(count, static_cast<int>(v.size())), v.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first; });
  std::ostringstream os;
  for (int k = 0; k < count && k < static_cast<int>(v.size()); ++k) {
    if (v[k].first <= 0.0) break;
    if (k) os << "; ";
    os << ncp.row_names[v[k].second] << " = " << v[k].first;
  }
  return os.str();
}

}  // namespace

ScholtesSchedule ScholtesSchedule::from_policy(const SolverOverrides& s) {
  ScholtesSchedule out;
  out.rho_init = s.rho_init;
  out.shrink = s.rho_shrink;
  out.rho_final = s.rho_final;
  out.max_outer = s.max_outer;
  return out;
}

void ScholtesSchedule::validate() const {
  if (!(rho_final > 0.0)) throw ScheduleError("rho_final must be positive");
  if (!(rho_init >= rho_final)) throw ScheduleError("rho_init must not be below rho_final");
  if (!(shrink > 0.0 && shrink < 1.0)) throw ScheduleError("shrink must lie in (0, 1)");
  if (max_outer < 1) throw ScheduleError("max_outer must be at least 1");
}

std::vector<double> ScholtesSchedule::values() const {
  validate();
  std::vector<double> out;
  for (int k = 0; k < max_outer; ++k) {
    const double rho = rho_init * std::pow(shrink, k);
    if (rho <= rho_final * (1.0 + 1e-9)) {
      out.push_back(rho_final);
      break;
    }
    out.push_back(rho);
  }
  return out;
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::NumericFailure: return "numeric_failure";
  }
  return "?";
}

mopec::Objective scalarize(const std::array<mopec::Objective, 3>& objectives, const std::array<double, 3>& weights) {
  check_weights(weights);
  mopec::Objective out;
  for (int k = 0; k < 3; ++k) {
    out.poly.add(objectives[k].poly, weights[k]);
    for (auto cd : objectives[k].cobb_douglas) {
      cd.weight *= weights[k];
      out.cobb_douglas.push_back(std::move(cd));
    }
  }
  out.poly.compress();
  return out;
}

RelaxedNlp::RelaxedNlp(const mopec::NcpSystem& ncp, const std::array<double, 3>& weights, double rho,
                       double tie_break)
    : ncp_(ncp) {
  if (!(rho > 0.0)) throw ScheduleError("relaxation parameter must be positive");
  nlp::ExprModel m = ncp.model;
  const mopec::Objective obj = scalarize(ncp.objectives, weights);
  m.objective = obj.poly;
  m.cobb_douglas = obj.cobb_douglas;
  if (tie_break > 0.0) {
    const auto& ll = ncp.layout.ll;
    for (int r = 0; r < ll.R; ++r)
      for (int t = 0; t < ll.H; ++t) {
        m.objective.add(ll.q0(t, r), ll.q0(t, r), tie_break);
        for (int i = 0; i < ll.G; ++i) m.objective.add(ll.q(i, t, r), ll.q(i, t, r), tie_break);
        for (int l = 0; l < ll.L; ++l) m.objective.add(ll.fq(l, t, r), ll.fq(l, t, r), tie_break);
        for (int b = 0; b < ll.B; ++b) {
          m.objective.add(ll.u(b, t, r), ll.u(b, t, r), tie_break);
          m.objective.add(ll.u(b, t, r), -2.0 * tie_break);
          m.objective.add_constant(tie_break);
        }
      }
  }
  const int np = static_cast<int>(ncp.pairs.size());
  product_rows_.resize(np);
  slack_rows_.assign(np, -1);
  slack_bounds_.resize(np);
  for (int j = 0; j < np; ++j) {
    const auto& p = ncp.pairs[j];
    if (p.multiplier < 0 || p.multiplier >= m.num_variables() || m.x_l[p.multiplier] < 0.0)
      throw mopec::AssemblyError("pair " + p.name + " lacks a nonnegative multiplier variable");
    // Slack nonnegativity is often a variable bound already.
    bool implied = false;
    if (p.slack.quadratic.empty() && p.slack.linear.size() == 1) {
      const auto& t = p.slack.linear[0];
      const double edge = -p.slack.constant / t.coef;
      if (t.coef > 0.0 && m.x_l[t.var] >= edge - 1e-12 * std::max(1.0, std::abs(edge)) &&
          m.x_l[t.var] <= edge + 1e-12 * std::max(1.0, std::abs(edge))) {
        implied = true;
        slack_bounds_[j] = {t.var, false};
      } else if (t.coef < 0.0 && m.x_u[t.var] <= edge + 1e-12 * std::max(1.0, std::abs(edge)) &&
                 m.x_u[t.var] >= edge - 1e-12 * std::max(1.0, std::abs(edge))) {
        implied = true;
        slack_bounds_[j] = {t.var, true};
      }
    }
    if (!implied) slack_rows_[j] = m.add_row(p.slack, 0.0, kInf);
    nlp::QuadExpr prod;
    for (const auto& t : p.slack.linear) prod.add(t.var, p.multiplier, t.coef);
    prod.add(p.multiplier, p.slack.constant);
    if (!p.slack.quadratic.empty()) throw mopec::AssemblyError("pair " + p.name + " has a nonlinear slack");
    product_rows_[j] = m.add_row(std::move(prod), -kInf, rho);
  }
  problem_ = std::make_unique<nlp::ExprProblem>(std::move(m));
}

void RelaxedNlp::set_rho(double rho) {
  if (!(rho > 0.0)) throw ScheduleError("relaxation parameter must be positive");
  for (int row : product_rows_) problem_->set_row_bounds(row, -kInf, rho);
}

std::vector<mopec::PairMultipliers> RelaxedNlp::pair_multipliers(const nlp::Result& r) const {
  std::vector<mopec::PairMultipliers> out(ncp_.pairs.size());
  for (size_t j = 0; j < ncp_.pairs.size(); ++j) {
    const auto& p = ncp_.pairs[j];
    const double lam = std::max(0.0, r.lambda[product_rows_[j]]);
    double zg = 0.0;
    if (slack_rows_[j] >= 0)
      zg = -r.lambda[slack_rows_[j]];
    else
      zg = slack_bounds_[j].upper ? r.z_u[slack_bounds_[j].var] : r.z_l[slack_bounds_[j].var];
    const double zh = r.z_l[p.multiplier];
    const double s = p.slack.value(r.x);
    const double mval = r.x[p.multiplier];
    out[j] = {zg - lam * mval, zh - lam * s};
  }
  return out;
}

RelaxedResult solve_relaxed_nlp(const mopec::NcpSystem& ncp, const std::array<double, 3>& weights, double rho,
                                std::span<const double> start, const nlp::Options& options, double tie_break) {
  if (static_cast<int>(start.size()) != ncp.num_variables())
    throw std::invalid_argument("start point dimension does not match the system");
  RelaxedNlp nlp_(ncp, weights, rho, tie_break);
  RelaxedResult out;
  out.inner = nlp::solve(nlp_.problem(), start, options);
  if (!out.inner.ok())
    throw RelaxedSolveError(std::string("relaxed NLP ") + nlp::to_string(out.inner.status) +
                                "; most violated rows: " + worst_rows(ncp, out.inner.x, 5),
                            out.inner.status, 0);
  out.pair_multipliers = nlp_.pair_multipliers(out.inner);
  return out;
}

SolverReport scholtes_solve(const mopec::NcpSystem& ncp, const std::array<double, 3>& weights,
                            const ScholtesSchedule& schedule, std::span<const double> start,
                            const ScholtesOptions& options) {
  check_weights(weights);
  const std::vector<double> rhos = schedule.values();
  if (static_cast<int>(start.size()) != ncp.num_variables())
    throw std::invalid_argument("start point dimension does not match the system");

  SolverReport rep;
  rep.schedule = schedule;
  rep.weights = weights;
  rep.start_point.assign(start.begin(), start.end());
  const mopec::Objective obj = scalarize(ncp.objectives, weights);

  RelaxedNlp relaxed(ncp, weights, rhos.front(), options.tie_break);
  std::vector<double> x(start.begin(), start.end());
  nlp::WarmStart warm;
  bool have_warm = false;
  nlp::Result last;
  for (size_t k = 0; k < rhos.size(); ++k) {
    relaxed.set_rho(rhos[k]);
    OuterIterate it;
    it.rho = rhos[k];
    auto attempt = [&](const nlp::Options& opt, bool use_warm) {
      nlp::Result res = nlp::solve(relaxed.problem(), x, opt, use_warm ? &warm : nullptr);
      rep.total_inner_iterations += res.iterations;
      it.inner_iterations += res.iterations;
      it.inner_status = res.status;
      it.objective = obj.value(res.x);
      it.feasibility = ncp.max_equality_residual(res.x);
      it.ul_violation = ncp.max_inequality_violation(res.x);
      const auto cm = mopec::complementarity_violation(ncp, res.x);
      it.complementarity = cm.max_product;
      it.aggregate = cm.aggregate;
      // An inner failure whose point already meets the relaxed targets is kept;
      // the inner status stays on the iterate.
      const bool good = res.ok() || (it.feasibility <= options.feasibility_tol &&
                                     it.ul_violation <= options.feasibility_tol &&
                                     it.complementarity <= rhos[k] + options.complementarity_slack);
      return std::pair{std::move(res), good};
    };

    nlp::Options opt = options.inner;
    const double mu_warm = std::min(options.warm_mu, options.warm_mu_ratio * rhos[k]);
    auto warm_opt = [&](double mu) {
      nlp::Options o = options.inner;
      o.warm_start = true;
      o.mu_init = mu;
      o.mu_min = std::min(o.mu_min, mu);
      return o;
    };
    if (have_warm) opt = warm_opt(mu_warm);
    auto [first, meets_targets] = attempt(opt, have_warm);
    last = std::move(first);
    if (!meets_targets && have_warm) {
      // Retries from the previous iterate: smaller and larger warm barrier, then cold.
      const OuterIterate first_it = it;
      for (int a = 0; a < 3 && !meets_targets; ++a) {
        auto [res, good] = a < 2 ? attempt(warm_opt(a == 0 ? 0.1 * mu_warm : 10.0 * mu_warm), true)
                                 : attempt(options.inner, false);
        if (good) {
          last = std::move(res);
          meets_targets = true;
        }
      }
      if (!meets_targets) {
        const int total = it.inner_iterations;
        it = first_it;
        it.inner_iterations = total;
      }
    }
    rep.iterates.push_back(it);
    if (!meets_targets) {
      rep.final_point = last.x;
      rep.status = last.status == nlp::Status::Infeasible ? SolveStatus::Infeasible
                   : last.status == nlp::Status::MaxIter  ? SolveStatus::MaxIter
                                                          : SolveStatus::NumericFailure;
      rep.message = "outer iteration " + std::to_string(k) + " (rho = " + std::to_string(rhos[k]) +
                    "): inner " + nlp::to_string(last.status) + " (" + last.message + "); most violated rows: " + worst_rows(ncp, last.x, 5);
      break;
    }
    x = last.x;
    warm.lambda = last.lambda;
    warm.z_l = last.z_l;
    warm.z_u = last.z_u;
    have_warm = true;
    if (k + 1 == rhos.size()) {
      rep.final_point = last.x;
      rep.pair_multipliers = relaxed.pair_multipliers(last);
      const bool reached = rhos[k] <= schedule.rho_final * (1.0 + 1e-9);
      const bool feasible = it.feasibility <= options.feasibility_tol && it.ul_violation <= options.feasibility_tol;
      const bool compl_ok = rep.iterates.back().complementarity <= schedule.rho_final + options.complementarity_slack;
      if (reached && feasible && compl_ok) {
        rep.status = SolveStatus::Converged;
      } else if (!reached) {
        rep.status = SolveStatus::MaxIter;
        rep.message = "max_outer reached before rho_final";
      } else {
        rep.status = SolveStatus::NumericFailure;
        rep.message = "final iterate misses tolerances: equality " + std::to_string(it.feasibility) + ", ul " +
                      std::to_string(it.ul_violation) + ", complementarity " +
                      std::to_string(rep.iterates.back().complementarity);
      }
    }
  }
  if (rep.final_point.empty()) rep.final_point = x;
  for (int k = 0; k < 3; ++k) rep.components[k] = ncp.objectives[k].value(rep.final_point);
  rep.scalarized = obj.value(rep.final_point);
  if (rep.converged()) {
    try {
      rep.stationarity = mopec::classify_stationarity(ncp, rep.final_point, rep.pair_multipliers,
                                                      std::max(1e-6, 10.0 * schedule.rho_final));
    } catch (const mopec::InfeasiblePointError& e) {
      rep.stationarity.cls = mopec::Stationarity::None;
      rep.stationarity.witness_name = e.what();
    }
  }
  return rep;
}

std::vector<ParetoEntry> pareto_sweep(const mopec::NcpSystem& ncp, std::vector<std::array<double, 3>> weight_list,
                                      const ScholtesSchedule& schedule, std::span<const double> start,
                                      const ScholtesOptions& options) {
  for (const auto& w : weight_list) check_weights(w);
  std::sort(weight_list.begin(), weight_list.end());
  std::vector<ParetoEntry> out;
  for (const auto& w : weight_list) {
    ParetoEntry e;
    e.weights = w;
    try {
      e.report = scholtes_solve(ncp, w, schedule, start, options);
    } catch (const std::exception& ex) {
      e.error = ex.what();
    }
    out.push_back(std::move(e));
  }
  const double tol = 1e-9;
  for (auto& a : out) {
    if (!a.report.converged()) continue;
    for (const auto& b : out) {
      if (&a == &b || !b.report.converged()) continue;
      bool le = true, lt = false;
      for (int k = 0; k < 3; ++k) {
        const double scale = std::max(1.0, std::abs(a.report.components[k]));
        if (b.report.components[k] > a.report.components[k] + tol * scale) le = false;
        if (b.report.components[k] < a.report.components[k] - tol * scale) lt = true;
      }
      if (le && lt) {
        a.dominated = true;
        break;
      }
    }
  }
  return out;
}

}  // namespace tariff::solver
