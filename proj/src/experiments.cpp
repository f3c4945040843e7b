#include "tariff/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "tariff/parallel.hpp"

namespace tariff::experiments {

using dispatch::Structure;
using json = nlohmann::ordered_json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string status_name(solver::SolveStatus s) {
  switch (s) {
    case solver::SolveStatus::Converged: return "converged";
    case solver::SolveStatus::Infeasible: return "infeasible";
    case solver::SolveStatus::MaxIter: return "max_iter";
    case solver::SolveStatus::NumericFailure: return "numeric_failure";
  }
  return "error";
}

std::vector<ViolatedRow> most_violated(const mopec::NcpSystem& ncp, std::span<const double> x, int count) {
  std::vector<ViolatedRow> rows;
  for (int i = 0; i < ncp.model.num_rows(); ++i) {
    const double v = ncp.row_violation(i, x);
    if (v > 1e-6) rows.push_back({ncp.row_names[i], v});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.violation > b.violation; });
  if (static_cast<int>(rows.size()) > count) rows.resize(count);
  return rows;
}

std::vector<double> tariff_signature(const RunReport& r) {
  std::vector<double> s;
  if (r.flat_tariff) s.push_back(*r.flat_tariff);
  for (const auto& row : r.tariff) {
    s.push_back(row.peak);
    s.push_back(row.offpeak);
    s.insert(s.end(), row.hourly.begin(), row.hourly.end());
  }
  return s;
}

bool same_result(const RunReport& a, const RunReport& b, double rel) {
  const auto sa = tariff_signature(a), sb = tariff_signature(b);
  if (sa.size() != sb.size()) return false;
  for (size_t k = 0; k < sa.size(); ++k)
    if (std::abs(sa[k] - sb[k]) > rel * std::max(1.0, std::abs(sa[k]))) return false;
  const double fa = a.breakdown.scalarized, fb = b.breakdown.scalarized;
  return std::abs(fa - fb) <= rel * std::max(1.0, std::abs(fa));
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

Structure case_structure(int case_id) {
  switch (case_id) {
    case 1: return Structure::Flat;
    case 2: return Structure::Tou;
    case 3: return Structure::LocationalTou;
    case 4: return Structure::LocationalHourly;
  }
  throw std::invalid_argument("case must be 1..4, got " + std::to_string(case_id));
}

int case_of(Structure s) {
  switch (s) {
    case Structure::Flat: return 1;
    case Structure::Tou: return 2;
    case Structure::LocationalTou: return 3;
    case Structure::LocationalHourly: return 4;
  }
  return 1;
}

int parse_case(const std::string& text) {
  if (text.size() == 1 && text[0] >= '1' && text[0] <= '4') return text[0] - '0';
  return case_of(dispatch::parse_structure(text));
}

RunReport run_case(const SystemModel& sys_in, int case_id, double kappa, const std::array<double, 3>& weights,
                   const RunOptions& options) {
  if (!(kappa >= kKappaMin && kappa <= kKappaMax))
    throw std::out_of_range("energy-burden bound " + fmt(kappa) + " outside the guard range [0.04, 0.20]");
  const auto t_total = std::chrono::steady_clock::now();
  RunReport rep;
  rep.case_id = case_id;
  rep.structure = case_structure(case_id);
  rep.kappa = kappa;
  rep.weights = weights;
  auto finish = [&](std::string status, std::string message) {
    rep.status = std::move(status);
    rep.message = std::move(message);
    rep.timings.total = seconds_since(t_total);
    return rep;
  };

  SystemModel sys = sys_in;
  try {
    if (options.nu) sys.policy.tou_ratio = *options.nu;
    if (options.average_cap) sys.policy.avg_tariff_cap = *options.average_cap;
    validate(sys);
    rep.schedule = options.schedule_override ? options.schedule : solver::ScholtesSchedule::from_policy(sys.policy.solver);
    rep.schedule.validate();
  } catch (const std::exception& e) {
    return finish("error", std::string("configuration: ") + e.what());
  }
  rep.capital_charge = dispatch::capital_charge(sys);

  auto t = std::chrono::steady_clock::now();
  mopec::NcpSystem ncp;
  try {
    ncp = mopec::assemble_kkt(sys, rep.structure, kappa);
  } catch (const std::exception& e) {
    return finish("error", std::string("assembly: ") + e.what());
  }
  rep.timings.assemble = seconds_since(t);

  t = std::chrono::steady_clock::now();
  std::vector<double> x0;
  try {
    try {
      rep.start_tariff = oracle::flat_revenue_adequate_tariff(sys);
    } catch (const std::runtime_error&) {
      rep.start_tariff = sys.policy.avg_tariff_cap;
    }
    x0 = mopec::initial_point(ncp, sys, dispatch::TariffSchedule::flat(sys, rep.start_tariff));
  } catch (const std::exception& e) {
    return finish("error", std::string("start point: ") + e.what());
  }
  rep.timings.start = seconds_since(t);

  t = std::chrono::steady_clock::now();
  solver::SolverReport sr;
  try {
    sr = solver::scholtes_solve(ncp, weights, rep.schedule, x0, options.scholtes);
  } catch (const std::exception& e) {
    return finish("error", std::string("solve: ") + e.what());
  }
  rep.timings.solve = seconds_since(t);
  rep.iterates = sr.iterates;
  rep.total_inner_iterations = sr.total_inner_iterations;
  rep.stationarity = sr.converged() ? mopec::to_string(sr.stationarity.cls) : "";

  if (!sr.converged()) {
    rep.certificate = most_violated(ncp, sr.final_point, 5);
    return finish(status_name(sr.status), sr.message);
  }

  t = std::chrono::steady_clock::now();
  rep.audit = oracle::audit_solution(sys, ncp, sr, options.audit_tol);
  rep.audit_pass = rep.audit.pass;
  rep.timings.audit = seconds_since(t);
  if (!rep.audit_pass) return finish("audit_fail", "independent audit failed at " + rep.audit.worst);

  const auto tariff = mopec::extract_tariff(ncp, sr.final_point);
  const auto demand = mopec::extract_demand(ncp, sr.final_point);
  const auto disp = mopec::extract_dispatch(ncp, sys, sr.final_point);
  rep.breakdown = dispatch::eval_objectives(sys, tariff, demand, disp, std::vector<double>(weights.begin(), weights.end()));
  rep.ra_residual = dispatch::revenue_adequacy_residual(sys, tariff, demand, disp);
  rep.average_tariff = dispatch::average_tariff(sys, tariff);
  const int B = static_cast<int>(sys.buses.size());
  for (int b = 0; b < B; ++b) {
    const auto eb = dispatch::energy_burden(sys, tariff, demand, b, kappa);
    double worst = 0.0;
    for (double v : eb.per_day) worst = std::max(worst, v);
    rep.eb_burden.push_back(worst);
    rep.eb_slack.push_back(eb.bound - worst);
  }
  if (rep.structure == Structure::Flat) {
    rep.flat_tariff = tariff(0, sys.policy.peak_window.front(), 0);
  } else {
    const int nb = rep.structure == Structure::Tou ? 1 : B;
    for (int b = 0; b < nb; ++b) {
      TariffRow row;
      row.bus_id = rep.structure == Structure::Tou ? 0 : sys.buses[b].id;
      row.peak = tariff.peak_value(sys, b, 0);
      row.offpeak = tariff.offpeak_value(sys, b, 0);
      if (rep.structure == Structure::LocationalHourly)
        for (int r = 0; r < sys.days; ++r)
          for (int h = 0; h < sys.hours; ++h) row.hourly.push_back(tariff(b, h, r));
      rep.tariff.push_back(std::move(row));
    }
  }
  rep.published = true;
  return finish("converged", "");
}

RunReport run_case(const std::filesystem::path& data, int case_id, double kappa, const std::array<double, 3>& weights,
                   const RunOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  SystemModel sys;
  try {
    sys = load_system(data);
  } catch (const std::exception& e) {
    RunReport rep;
    rep.case_id = case_id;
    rep.structure = case_structure(case_id);
    rep.kappa = kappa;
    rep.weights = weights;
    rep.status = "error";
    rep.message = std::string("load: ") + e.what();
    rep.timings.load = rep.timings.total = seconds_since(t0);
    return rep;
  }
  const double load = seconds_since(t0);
  RunReport rep = run_case(sys, case_id, kappa, weights, options);
  rep.timings.load = load;
  rep.timings.total += load;
  return rep;
}

std::vector<double> kappa_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw std::invalid_argument("kappa range needs lo <= hi and step > 0");
  if (step >= hi - lo) return {lo};
  std::vector<double> out;
  const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  for (int k = 0; k <= n; ++k) out.push_back(std::round((lo + k * step) * 1e10) / 1e10);
  if (hi - out.back() > 1e-9 * step) out.push_back(hi);
  return out;
}

SweepResult eb_sweep(const SystemModel& sys, int case_id, double lo, double hi, double step,
                     const std::array<double, 3>& weights, const RunOptions& options) {
  if (lo < kKappaMin || hi > kKappaMax) throw std::out_of_range("kappa range outside the guard range [0.04, 0.20]");
  const auto ks = kappa_grid(lo, hi, step);
  SweepResult res;
  res.reports.resize(ks.size());
  parallel_for(static_cast<int>(ks.size()), options.threads,
               [&](int i) { res.reports[i] = run_case(sys, case_id, ks[i], weights, options); });
  for (const auto& r : res.reports)
    if (r.published) {
      res.threshold = r.kappa;
      break;
    }
  // Saturation: the last published run and every earlier one that matches it without a gap.
  const int n = static_cast<int>(res.reports.size());
  if (n >= 2 && res.reports.back().published) {
    int first = n - 1;
    while (first > 0 && res.reports[first - 1].published && same_result(res.reports[first - 1], res.reports.back(), 1e-6))
      --first;
    if (first < n - 1) {
      res.saturation = res.reports[first].kappa;
      for (int i = first; i < n; ++i) res.reports[i].saturated = true;
    }
  }
  return res;
}

std::vector<RunReport> weight_study(const SystemModel& sys, const std::vector<int>& cases,
                                    const std::vector<double>& kappas,
                                    const std::vector<std::array<double, 3>>& weight_list, const RunOptions& options) {
  struct Cell {
    int c;
    double k;
    std::array<double, 3> w;
  };
  std::vector<Cell> cells;
  for (int c : cases)
    for (double k : kappas)
      for (const auto& w : weight_list) cells.push_back({c, k, w});
  std::vector<RunReport> out(cells.size());
  parallel_for(static_cast<int>(cells.size()), options.threads,
               [&](int i) { out[i] = run_case(sys, cells[i].c, cells[i].k, cells[i].w, options); });
  return out;
}

std::array<double, 3> parse_weights(const std::string& text) {
  std::array<double, 3> w{};
  std::stringstream ss(text);
  std::string tok;
  int k = 0;
  while (std::getline(ss, tok, ',')) {
    if (k >= 3) throw std::invalid_argument("weights need exactly three components: " + text);
    size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("weight is not a number: " + tok);
    }
    if (used != tok.size() || !(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument("weights must be positive numbers: " + text);
    w[k++] = v;
  }
  if (k != 3) throw std::invalid_argument("weights need exactly three components: " + text);
  return w;
}

std::vector<std::array<double, 3>> parse_weight_list(const std::string& text) {
  std::vector<std::array<double, 3>> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ';'))
    if (!tok.empty()) out.push_back(parse_weights(tok));
  if (out.empty()) throw std::invalid_argument("empty weight list");
  return out;
}

namespace {

json to_json(const RunReport& r, bool with_timings) {
  json j;
  j["case"] = r.case_id;
  j["structure"] = dispatch::to_string(r.structure);
  j["kappa"] = r.kappa;
  j["weights"] = {r.weights[0], r.weights[1], r.weights[2]};
  j["status"] = r.status;
  j["message"] = r.message;
  j["published"] = r.published;
  if (r.published) {
    json t;
    if (r.flat_tariff) t["flat"] = *r.flat_tariff;
    if (!r.tariff.empty()) {
      json rows = json::array();
      for (const auto& row : r.tariff) {
        json e;
        if (r.structure != Structure::Tou) e["bus"] = row.bus_id;
        e["peak"] = row.peak;
        e["offpeak"] = row.offpeak;
        if (!row.hourly.empty()) e["hourly"] = row.hourly;
        rows.push_back(std::move(e));
      }
      t["table"] = std::move(rows);
    }
    t["peak_plus_offpeak_mean"] = r.average_tariff;
    j["tariff"] = std::move(t);
    const auto& b = r.breakdown;
    j["objectives"] = {{"neg_f_ew", -b.f_ew},        {"f_h", b.f_h},
                       {"f_en", b.f_en},             {"scalarized", b.scalarized},
                       {"revenue", b.revenue},       {"op_cost", b.op_cost},
                       {"consumer_utility", b.consumer_utility}, {"consumer_payments", b.consumer_payments},
                       {"co2_total", b.emissions_co2_total}};
    j["utility_profit"] = b.utility_profit;
    j["revenue_adequacy_residual"] = r.ra_residual;
    j["capital_charge"] = r.capital_charge;
    j["eb_slack"] = r.eb_slack;
    j["eb_burden"] = r.eb_burden;
  }
  if (!r.certificate.empty()) {
    json c = json::array();
    for (const auto& v : r.certificate) c.push_back({{"row", v.name}, {"violation", number(v.violation)}});
    j["infeasibility_certificate"] = std::move(c);
  }
  json a;
  a["pass"] = r.audit_pass;
  a["checks"] = r.audit.checks;
  a["tol"] = r.audit.tol;
  a["max_violation"] = number(r.audit.max_violation);
  a["worst"] = r.audit.worst;
  json fails = json::array();
  for (size_t k = 0; k < std::min<size_t>(r.audit.failures.size(), 10); ++k)
    fails.push_back({{"name", r.audit.failures[k].name},
                     {"kind", r.audit.failures[k].kind},
                     {"violation", number(r.audit.failures[k].violation)}});
  a["failures"] = std::move(fails);
  j["audit"] = std::move(a);
  json s;
  s["start_flat_tariff"] = r.start_tariff;
  s["schedule"] = {{"rho_init", r.schedule.rho_init},
                   {"shrink", r.schedule.shrink},
                   {"rho_final", r.schedule.rho_final},
                   {"max_outer", r.schedule.max_outer}};
  json its = json::array();
  for (const auto& it : r.iterates)
    its.push_back({{"rho", it.rho},
                   {"objective", number(it.objective)},
                   {"feasibility", number(it.feasibility)},
                   {"ul_violation", number(it.ul_violation)},
                   {"complementarity", number(it.complementarity)},
                   {"aggregate", number(it.aggregate)},
                   {"inner_iterations", it.inner_iterations},
                   {"inner_status", nlp::to_string(it.inner_status)}});
  s["iterates"] = std::move(its);
  s["total_inner_iterations"] = r.total_inner_iterations;
  s["stationarity"] = r.stationarity;
  j["solver"] = std::move(s);
  j["saturated"] = r.saturated;
  if (with_timings)
    j["timings"] = {{"load_s", r.timings.load},   {"assemble_s", r.timings.assemble}, {"start_s", r.timings.start},
                    {"solve_s", r.timings.solve}, {"audit_s", r.timings.audit},       {"total_s", r.timings.total}};
  return j;
}

}  // namespace

std::string report_json(const RunReport& r, bool with_timings) { return to_json(r, with_timings).dump(2) + "\n"; }

std::string reports_json(const std::string& command, const std::vector<RunReport>& reports,
                         const std::optional<double>& threshold, const std::optional<double>& saturation,
                         bool with_timings) {
  json j;
  j["command"] = command;
  if (threshold) j["feasible_threshold"] = *threshold;
  if (saturation) j["saturation_kappa"] = *saturation;
  json rs = json::array();
  for (const auto& r : reports) rs.push_back(to_json(r, with_timings));
  j["reports"] = std::move(rs);
  return j.dump(2) + "\n";
}

std::string csv_header() {
  return "case,structure,kappa,w_ew,w_h,w_en,status,audit,flat_tariff,peak_mean,offpeak_mean,neg_f_ew,f_h,f_en,"
         "scalarized,utility_profit,min_eb_slack,saturated";
}

std::string csv_row(const RunReport& r) {
  std::string s = std::to_string(r.case_id) + "," + dispatch::to_string(r.structure) + "," + fmt(r.kappa) + "," +
                  fmt(r.weights[0]) + "," + fmt(r.weights[1]) + "," + fmt(r.weights[2]) + "," + r.status + "," +
                  (r.audit_pass ? "PASS" : "FAIL") + ",";
  if (!r.published) return s + ",,,,,,,,," + (r.saturated ? "1" : "0");
  double pk = 0.0, op = 0.0;
  if (r.flat_tariff) {
    pk = op = *r.flat_tariff;
  } else {
    for (const auto& row : r.tariff) {
      pk += row.peak;
      op += row.offpeak;
    }
    pk /= static_cast<double>(r.tariff.size());
    op /= static_cast<double>(r.tariff.size());
  }
  double min_slack = r.eb_slack.empty() ? 0.0 : *std::min_element(r.eb_slack.begin(), r.eb_slack.end());
  const auto& b = r.breakdown;
  s += (r.flat_tariff ? fmt(*r.flat_tariff) : std::string()) + "," + fmt(pk) + "," + fmt(op) + "," + fmt(-b.f_ew) +
       "," + fmt(b.f_h) + "," + fmt(b.f_en) + "," + fmt(b.scalarized) + "," + fmt(b.utility_profit) + "," +
       fmt(min_slack) + "," + (r.saturated ? "1" : "0");
  return s;
}

std::string reports_csv(const std::vector<RunReport>& reports) {
  std::string s = csv_header() + "\n";
  for (const auto& r : reports) s += csv_row(r) + "\n";
  return s;
}

int exit_code(const std::vector<RunReport>& reports) {
  bool infeasible = false;
  for (const auto& r : reports) {
    if (r.published) continue;
    if (r.status == "infeasible") {
      infeasible = true;
      continue;
    }
    return 1;
  }
  return infeasible ? 2 : 0;
}

}  // namespace tariff::experiments
