#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "json.hpp"
#include "tariff/system_data.hpp"

using namespace tariff;
namespace fs = std::filesystem;

namespace {

fs::path scratch_copy(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("tariff_test_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  for (const auto& e : fs::directory_iterator(fixtures::dataset_dir()))
    if (e.is_regular_file()) fs::copy_file(e.path(), dir / e.path().filename());
  return dir;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream f(p);
  return nlohmann::json::parse(f);
}

void write_json(const fs::path& p, const nlohmann::json& j) {
  std::ofstream f(p);
  f << j.dump(2);
}

}  // namespace

TEST_CASE("manhattan7 loads with 7 buses, 6 lines and root bus 1") {
  const auto& sys = fixtures::manhattan();
  CHECK(sys.buses.size() == 7);
  CHECK(sys.lines.size() == 6);
  CHECK(sys.buses[sys.root].id == 1);
  CHECK(sys.hours == 24);
  CHECK(sys.days == 1);
}

TEST_CASE("bus 4 demographics load verbatim") {
  const auto& sys = fixtures::manhattan();
  const Bus& b = sys.buses[sys.bus_index(4)];
  CHECK(b.income == 14896.0);
  CHECK(b.population == 479911.0);
  CHECK(b.max_load_mw == 855.0);
}

TEST_CASE("annuity examples") {
  CHECK(derive_annuity(0.0, 20, 0.05) == 0.0);
  // Independent evaluation: 1e6 * 0.05 / (1 - 1.05^-20) / 365.
  CHECK(derive_annuity(1'000'000.0, 20, 0.05) == doctest::Approx(219.84270463203092).epsilon(1e-12));
  CHECK(derive_annuity(365'000.0, 1, 0.0) == doctest::Approx(1000.0).epsilon(1e-15));
  CHECK_THROWS_AS(derive_annuity(-1.0, 20, 0.05), std::domain_error);
  CHECK_THROWS_AS(derive_annuity(1.0, 0, 0.05), std::domain_error);
  CHECK_THROWS_AS(derive_annuity(1.0, 20, -0.01), std::domain_error);
}

TEST_CASE("annuity at a zero rate is the straight-line limit of small rates") {
  const double a0 = derive_annuity(2.0e6, 10, 0.0);
  CHECK(a0 == doctest::Approx(2.0e6 / 3650.0));
  CHECK(derive_annuity(2.0e6, 10, 1e-9) == doctest::Approx(a0).epsilon(1e-6));
}

TEST_CASE("daily capital cost follows the annuity of the dataset capital") {
  const auto& sys = fixtures::manhattan();
  const auto& c = sys.policy.capital;
  CHECK(sys.policy.capital_cost_daily ==
        doctest::Approx(derive_annuity(c.present_value, c.years, c.discount_rate)).epsilon(1e-14));
}

TEST_CASE("radiality: every non-root bus has exactly one ancestor") {
  const auto& sys = fixtures::manhattan();
  for (int b = 0; b < static_cast<int>(sys.buses.size()); ++b) {
    const auto& bus = sys.buses[b];
    if (b == sys.root) {
      CHECK(bus.ancestors.empty());
      continue;
    }
    REQUIRE(bus.ancestors.size() == 1);
    const int parent = bus.ancestors[0];
    const auto& siblings = sys.buses[parent].children;
    CHECK(std::find(siblings.begin(), siblings.end(), b) != siblings.end());
    CHECK(sys.parent_line(b) >= 0);
  }
  CHECK(sys.parent_line(sys.root) == -1);
}

TEST_CASE("generators reference existing buses and series cover the time grid") {
  const auto& sys = fixtures::manhattan();
  for (const auto& g : sys.generators) {
    CHECK(g.bus >= 0);
    CHECK(g.bus < static_cast<int>(sys.buses.size()));
  }
  for (const auto& b : sys.buses) {
    CHECK(b.inflexible_p.days() == sys.days);
    CHECK(b.inflexible_p.hours() == sys.hours);
    CHECK(b.inflexible_q.hours() == sys.hours);
  }
  CHECK(sys.interface.lmp.hours() == sys.hours);
  CHECK(sys.interface.lmp.days() == sys.days);
  for (const auto& e : sys.interface.transmission_emissions) CHECK(e.hours() == sys.hours);
}

TEST_CASE("peak and off-peak windows partition the day") {
  const auto& sys = fixtures::manhattan();
  int peak = 0;
  for (int t = 0; t < sys.hours; ++t) peak += sys.in_peak(t) ? 1 : 0;
  CHECK(peak == static_cast<int>(sys.policy.peak_window.size()));
  CHECK(sys.policy.peak_window.size() + sys.policy.offpeak_window.size() == static_cast<size_t>(sys.hours));
}

TEST_CASE("save and reload reproduce the model") {
  const auto& sys = fixtures::manhattan();
  const fs::path dir = fs::temp_directory_path() / ("tariff_test_roundtrip_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  save_system(sys, dir);
  const SystemModel again = load_system(dir);
  CHECK(again == sys);
  // A second pass is a fixed point as well.
  save_system(again, dir);
  CHECK(load_system(dir) == sys);
  fs::remove_all(dir);
}

TEST_CASE("round trip of the two-bus toy") {
  const SystemModel toy = fixtures::two_bus({.lmp = 33.3, .gen_cost = 41.7, .carbon_tax = 5.0, .scc = 51.0});
  const fs::path dir = fs::temp_directory_path() / ("tariff_test_toy_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  save_system(toy, dir);
  CHECK(load_system(dir) == toy);
  fs::remove_all(dir);
}

TEST_CASE("a duplicated line forming a cycle is a topology error") {
  const fs::path dir = scratch_copy("cycle");
  auto j = read_json(dir / "network.json");
  // The copy replaces the line feeding bus 7, so the line count still matches a tree.
  auto& lines = j["lines"];
  nlohmann::json kept = nlohmann::json::array();
  for (const auto& l : lines)
    if (l["to"] != 7) kept.push_back(l);
  kept.push_back(lines[1]);
  lines = kept;
  write_json(dir / "network.json", j);
  CHECK_THROWS_AS(load_system(dir), TopologyError);
  fs::remove_all(dir);
}

TEST_CASE("an extra line is a topology error") {
  const fs::path dir = scratch_copy("extra");
  auto j = read_json(dir / "network.json");
  j["lines"].push_back(j["lines"][0]);
  write_json(dir / "network.json", j);
  CHECK_THROWS_AS(load_system(dir), TopologyError);
  fs::remove_all(dir);
}

TEST_CASE("a loop cut off from the root is a disconnection error") {
  const fs::path dir = scratch_copy("island");
  auto j = read_json(dir / "network.json");
  // Bus 2 is fed from its own child bus 3: buses 2 and 3 form a loop unreachable from the root.
  for (auto& l : j["lines"])
    if (l["to"] == 2) l["from"] = 3;
  write_json(dir / "network.json", j);
  try {
    load_system(dir);
    FAIL("expected a topology error");
  } catch (const TopologyError& e) {
    CHECK(std::string(e.what()).find("disconnected") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("validation errors name the violated invariant") {
  const fs::path dir = scratch_copy("invalid");
  auto j = read_json(dir / "network.json");
  j["buses"][2]["elasticity"] = 1.5;
  write_json(dir / "network.json", j);
  try {
    load_system(dir);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("elasticity") != std::string::npos);
  }
  j["buses"][2]["elasticity"] = 0.6;
  j["buses"][2]["income"] = 0.0;
  write_json(dir / "network.json", j);
  try {
    load_system(dir);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("income") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("malformed files are parse errors") {
  const fs::path dir = scratch_copy("parse");
  {
    std::ofstream f(dir / "policy.json");
    f << "{ \"eb_regulator\": ";
  }
  CHECK_THROWS_AS(load_system(dir), ParseError);
  fs::remove_all(dir);
  CHECK_THROWS_AS(load_system(dir), ParseError);
}

TEST_CASE("non-numeric demand cell is a parse error") {
  const fs::path dir = scratch_copy("csv");
  std::ifstream in(dir / "demand.csv");
  std::string text((std::istreambuf_iterator<char>(in)), {});
  in.close();
  const auto pos = text.find("179.227");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 7, "abc");
  std::ofstream(dir / "demand.csv") << text;
  CHECK_THROWS_AS(load_system(dir), ParseError);
  fs::remove_all(dir);
}

TEST_CASE("manual model edits are re-validated") {
  SystemModel m = fixtures::manhattan();
  m.buses[1].v_min2 = 2.0;
  CHECK_THROWS_AS(validate(m), ValidationError);
  m = fixtures::manhattan();
  m.external_costs.carbon_tax = m.external_costs.scc + 1.0;
  CHECK_THROWS_AS(validate(m), ValidationError);
  m = fixtures::manhattan();
  m.policy.offpeak_window.push_back(m.policy.peak_window.front());
  CHECK_THROWS_AS(validate(m), ValidationError);
}
