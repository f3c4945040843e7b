#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tariff/experiments.hpp"

namespace fs = std::filesystem;
using namespace tariff;

namespace {

struct Common {
  std::string data;
  std::string weights = "1,1,1";
  std::optional<double> rho_init, rho_shrink, rho_final, nu, pi_avg;
  std::string out = "report.json";
  std::string csv;
  int threads = 1;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--data", c.data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  app->add_option("--weights", c.weights, "objective weights w_ew,w_h,w_en");
  app->add_option("--rho-init", c.rho_init, "initial relaxation parameter");
  app->add_option("--rho-shrink", c.rho_shrink, "relaxation shrink factor");
  app->add_option("--rho-final", c.rho_final, "final relaxation parameter");
  app->add_option("--nu", c.nu, "peak/off-peak coupling ratio");
  app->add_option("--pi-avg", c.pi_avg, "reference average tariff, $/MWh");
  app->add_option("--out", c.out, "report path");
  app->add_option("--csv", c.csv, "table path (default: table.csv next to the report)");
  app->add_option("--threads", c.threads, "sweep workers")->check(CLI::PositiveNumber);
}

experiments::RunOptions options_from(const Common& c, const SystemModel& sys) {
  experiments::RunOptions o;
  o.schedule = solver::ScholtesSchedule::from_policy(sys.policy.solver);
  if (c.rho_init || c.rho_shrink || c.rho_final) {
    o.schedule_override = true;
    if (c.rho_init) o.schedule.rho_init = *c.rho_init;
    if (c.rho_shrink) o.schedule.shrink = *c.rho_shrink;
    if (c.rho_final) o.schedule.rho_final = *c.rho_final;
  }
  o.nu = c.nu;
  o.average_cap = c.pi_avg;
  o.threads = c.threads;
  return o;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, sep))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

void print_summary(const std::vector<experiments::RunReport>& reports) {
  for (const auto& r : reports) {
    std::printf("case %d %-10s kappa %.4f w [%g,%g,%g] %-15s", r.case_id, dispatch::to_string(r.structure), r.kappa,
                r.weights[0], r.weights[1], r.weights[2], r.status.c_str());
    if (r.published) {
      if (r.flat_tariff) std::printf(" tariff %.4f", *r.flat_tariff);
      else std::printf(" avg %.4f", r.average_tariff);
      std::printf(" objective %.6e audit PASS", r.breakdown.scalarized);
    }
    if (r.saturated) std::printf(" saturated");
    std::printf("\n");
  }
}

int emit(const Common& c, const std::string& json, const std::vector<experiments::RunReport>& reports) {
  const fs::path out = c.out;
  const fs::path csv = c.csv.empty() ? (out.has_parent_path() ? out.parent_path() / "table.csv" : fs::path("table.csv"))
                                     : fs::path(c.csv);
  write_file(out, json);
  write_file(csv, experiments::reports_csv(reports));
  print_summary(reports);
  return experiments::exit_code(reports);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Justice-cognizant electricity tariff design"};
  app.require_subcommand(1);

  Common run_c, sweep_c, weights_c;
  std::string run_case = "flat", sweep_case = "flat", weight_cases = "flat,tou";
  double run_eb = 0.09;
  std::string eb_range, weights_list = "1,1,1;1,2,2;1,5,5", weights_eb = "0.09";

  auto* run = app.add_subcommand("run", "solve one case");
  add_common(run, run_c);
  run->add_option("--case", run_case, "flat|tou|loc-tou|loc-hourly or 1..4");
  run->add_option("--eb", run_eb, "energy-burden bound kappa");

  auto* sweep = app.add_subcommand("sweep", "energy-burden sweep for one case");
  add_common(sweep, sweep_c);
  sweep->add_option("--case", sweep_case, "flat|tou|loc-tou|loc-hourly or 1..4");
  sweep->add_option("--eb-range", eb_range, "lo:hi:step")->required();

  auto* weights = app.add_subcommand("weights", "weight study over cases");
  add_common(weights, weights_c);
  weights->add_option("--list", weights_list, "weight vectors a,b,c;d,e,f;...");
  weights->add_option("--cases", weight_cases, "comma-separated cases");
  weights->add_option("--eb", weights_eb, "comma-separated kappa values");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const SystemModel sys = load_system(run_c.data);
      const auto rep = experiments::run_case(sys, experiments::parse_case(run_case), run_eb,
                                             experiments::parse_weights(run_c.weights), options_from(run_c, sys));
      return emit(run_c, experiments::report_json(rep), {rep});
    }
    if (sweep->parsed()) {
      const auto parts = split(eb_range, ':');
      if (parts.size() != 3) throw std::invalid_argument("--eb-range expects lo:hi:step");
      const SystemModel sys = load_system(sweep_c.data);
      const auto res = experiments::eb_sweep(sys, experiments::parse_case(sweep_case), std::stod(parts[0]),
                                             std::stod(parts[1]), std::stod(parts[2]),
                                             experiments::parse_weights(sweep_c.weights), options_from(sweep_c, sys));
      return emit(sweep_c, experiments::reports_json("sweep", res.reports, res.threshold, res.saturation), res.reports);
    }
    if (weights->parsed()) {
      const SystemModel sys = load_system(weights_c.data);
      std::vector<int> cases;
      for (const auto& s : split(weight_cases, ',')) cases.push_back(experiments::parse_case(s));
      std::vector<double> ks;
      for (const auto& s : split(weights_eb, ',')) ks.push_back(std::stod(s));
      const auto reports = experiments::weight_study(sys, cases, ks, experiments::parse_weight_list(weights_list),
                                                     options_from(weights_c, sys));
      return emit(weights_c, experiments::reports_json("weights", reports), reports);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
