#include "tariff/system_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace tariff {

using nlohmann::json;
namespace fs = std::filesystem;

double HourlySeries::sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

double HourlySeries::max() const {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

int ExternalCosts::co2_index() const {
  for (size_t y = 0; y < pollutants.size(); ++y)
    if (pollutants[y] == "CO2") return static_cast<int>(y);
  return -1;
}

double RegulatorPolicy::total_day_weight() const {
  return std::accumulate(day_weights.begin(), day_weights.end(), 0.0);
}

int SystemModel::bus_index(int id) const {
  for (size_t b = 0; b < buses.size(); ++b)
    if (buses[b].id == id) return static_cast<int>(b);
  return -1;
}

int SystemModel::parent_line(int bus) const {
  for (size_t l = 0; l < lines.size(); ++l)
    if (lines[l].to == bus) return static_cast<int>(l);
  return -1;
}

std::vector<int> SystemModel::child_lines(int bus) const {
  std::vector<int> out;
  for (size_t l = 0; l < lines.size(); ++l)
    if (lines[l].from == bus) out.push_back(static_cast<int>(l));
  return out;
}

std::vector<int> SystemModel::generators_at(int bus) const {
  std::vector<int> out;
  for (size_t i = 0; i < generators.size(); ++i)
    if (generators[i].bus == bus) out.push_back(static_cast<int>(i));
  return out;
}

bool SystemModel::in_peak(int hour) const {
  const auto& w = policy.peak_window;
  return std::find(w.begin(), w.end(), hour) != w.end();
}

double derive_annuity(double capital_pv, int years, double rate) {
  if (capital_pv < 0.0) throw std::domain_error("derive_annuity: negative present value");
  if (years < 1) throw std::domain_error("derive_annuity: years must be >= 1");
  if (rate < 0.0) throw std::domain_error("derive_annuity: negative discount rate");
  double annual = 0.0;
  if (rate == 0.0)
    annual = capital_pv / years;
  else
    annual = capital_pv * rate / (1.0 - std::pow(1.0 + rate, -years));
  return annual / 365.0;
}

double daily_income(const Bus& bus) { return bus.income / 365.0; }

namespace {

// ---------------------------------------------------------------- CSV

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::string file;

  int column(const std::string& name, bool required = true) const {
    for (size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return static_cast<int>(c);
    if (required) throw ParseError(file + ": missing column '" + name + "'");
    return -1;
  }
};

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  CsvTable table;
  table.file = path.filename().string();
  std::string line;
  bool have_header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto cells = split(t);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size())
      throw ParseError(table.file + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(table.header.size()) + " fields, got " +
                       std::to_string(cells.size()));
    table.rows.push_back(std::move(cells));
  }
  if (!have_header) throw ParseError(table.file + ": empty file");
  return table;
}

double to_double(const std::string& s, const std::string& where) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(where + ": not a number: '" + s + "'");
  }
}

int to_int(const std::string& s, const std::string& where) {
  const double v = to_double(s, where);
  if (v != std::floor(v)) throw ParseError(where + ": not an integer: '" + s + "'");
  return static_cast<int>(v);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.filename().string() + ": " + e.what());
  }
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where + ": field '" + key + "': " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  return j.contains(key) ? get<T>(j, key, where) : fallback;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

// ---------------------------------------------------------------- topology

void derive_topology(SystemModel& m) {
  const int nb = static_cast<int>(m.buses.size());
  for (auto& b : m.buses) {
    b.ancestors.clear();
    b.children.clear();
  }
  if (static_cast<int>(m.lines.size()) != nb - 1)
    throw TopologyError("line count " + std::to_string(m.lines.size()) +
                        " != bus count - 1 (" + std::to_string(nb - 1) + "): not a tree");
  for (const auto& l : m.lines) {
    if (l.from < 0 || l.from >= nb || l.to < 0 || l.to >= nb)
      throw TopologyError("line references an unknown bus");
    if (l.from == l.to) throw TopologyError("self-loop line");
    if (l.to == m.root) throw TopologyError("line feeds the root bus");
    auto& child = m.buses[l.to];
    if (!child.ancestors.empty())
      throw TopologyError("bus " + std::to_string(child.id) + " has more than one ancestor (cycle)");
    child.ancestors.push_back(l.from);
    m.buses[l.from].children.push_back(l.to);
  }
  // Reachability from the root; with |L| = |B| - 1 this also rules out cycles.
  std::vector<bool> seen(nb, false);
  std::vector<int> stack{m.root};
  seen[m.root] = true;
  int count = 0;
  while (!stack.empty()) {
    const int b = stack.back();
    stack.pop_back();
    ++count;
    for (int c : m.buses[b].children) {
      if (seen[c]) throw TopologyError("cycle through bus " + std::to_string(m.buses[c].id));
      seen[c] = true;
      stack.push_back(c);
    }
  }
  if (count != nb) throw TopologyError("network is disconnected: " + std::to_string(nb - count) +
                                       " bus(es) unreachable from the root");
}

}  // namespace

void validate(SystemModel& m) {
  require(!m.buses.empty(), "system has no buses");
  require(m.root >= 0 && m.root < static_cast<int>(m.buses.size()), "root bus id not found");
  require(m.hours >= 1 && m.days >= 1, "time grid must be non-empty");
  require(m.base_mva > 0.0, "base_mva must be > 0");
  derive_topology(m);
  require(m.buses[m.root].ancestors.empty(), "root bus must have empty ancestors");

  const auto& ec = m.external_costs;
  const int ny = static_cast<int>(ec.pollutants.size());
  require(ec.co2_index() >= 0, "pollutant set must contain CO2");
  require(ec.scc >= ec.carbon_tax && ec.carbon_tax >= 0.0,
          "scc >= carbon_tax >= 0 (net external cost must be nonnegative)");
  require(static_cast<int>(ec.health_cost.size()) == ny, "health_cost rows must match pollutants");
  for (int y = 0; y < ny; ++y) {
    require(ec.health_cost[y].size() == m.buses.size(), "health_cost must cover every bus");
    for (double v : ec.health_cost[y])
      require(std::isfinite(v) && v >= 0.0,
              "health_cost for " + ec.pollutants[y] + " must be defined and nonnegative");
  }

  for (const auto& b : m.buses) {
    const std::string tag = "bus " + std::to_string(b.id) + ": ";
    require(b.elasticity >= 0.0 && b.elasticity <= 1.0, tag + "0 <= elasticity <= 1");
    require(b.population > 0.0, tag + "population > 0");
    require(b.household_size > 0.0, tag + "household_size > 0");
    require(b.income > 0.0, tag + "income > 0");
    require(b.v_min2 <= b.v_max2, tag + "v_min2 <= v_max2");
    require(b.tariff_min <= b.tariff_max, tag + "tariff_min <= tariff_max");
    require(b.tariff_min > 0.0, tag + "tariff_min > 0");
    require(b.inflexible_p.days() == m.days && b.inflexible_p.hours() == m.hours,
            tag + "active demand must cover the full T x R grid");
    require(b.inflexible_q.days() == m.days && b.inflexible_q.hours() == m.hours,
            tag + "reactive demand must cover the full T x R grid");
    for (int r = 0; r < m.days; ++r)
      for (int t = 0; t < m.hours; ++t) require(b.inflexible_p(r, t) >= 0.0, tag + "demand >= 0");
    if (b.max_load_mw > 0.0)
      require(b.inflexible_p.max() <= b.max_load_mw * (1.0 + 1e-9),
              tag + "demand series exceeds documented max_load_mw");
  }
  for (const auto& l : m.lines) {
    require(l.resistance >= 0.0, "line resistance >= 0");
    require(l.reactance >= 0.0, "line reactance >= 0");
    require(l.apparent_limit > 0.0, "line apparent_limit > 0");
  }
  for (const auto& g : m.generators) {
    const std::string tag = "generator " + std::to_string(g.id) + ": ";
    require(g.bus >= 0 && g.bus < static_cast<int>(m.buses.size()), tag + "references unknown bus");
    require(g.p_min <= g.p_max, tag + "p_min <= p_max");
    require(g.q_min <= g.q_max, tag + "q_min <= q_max");
    require(static_cast<int>(g.emission_factors.size()) == ny, tag + "emission factors per pollutant");
    for (double e : g.emission_factors) require(e >= 0.0, tag + "emission_factors >= 0");
  }

  const auto& itf = m.interface;
  require(itf.flow_limit > 0.0, "interface flow_limit > 0");
  require(itf.lmp.days() == m.days && itf.lmp.hours() == m.hours, "LMP series must cover T x R");
  require(static_cast<int>(itf.transmission_emissions.size()) == ny &&
              static_cast<int>(itf.interface_external_cost.size()) == ny,
          "interface emissions/costs per pollutant");
  for (int y = 0; y < ny; ++y) {
    require(itf.interface_external_cost[y] >= 0.0, "interface external cost >= 0");
    const auto& e = itf.transmission_emissions[y];
    require(e.days() == m.days && e.hours() == m.hours, "interface emissions must cover T x R");
    for (int r = 0; r < m.days; ++r)
      for (int t = 0; t < m.hours; ++t) require(e(r, t) >= 0.0, "interface emissions >= 0");
  }

  auto& p = m.policy;
  require(p.eb_regulator > 0.0 && p.eb_regulator < 1.0, "kappa in (0,1)");
  require(p.eb_household > 0.0 && p.eb_household < 1.0, "kappa' in (0,1)");
  require(p.tou_ratio >= 1.0, "tou_ratio (nu) >= 1");
  require(p.rate_of_return >= 0.0, "rate_of_return >= 0");
  require(p.weights.size() == 3, "weights must have 3 components");
  for (double w : p.weights) require(w > 0.0, "weights must be > 0 componentwise");
  require(static_cast<int>(p.day_weights.size()) == m.days, "one weight per representative day");
  for (double w : p.day_weights) require(w > 0.0, "representative-day weights must be > 0");
  std::set<int> peak(p.peak_window.begin(), p.peak_window.end());
  std::set<int> off(p.offpeak_window.begin(), p.offpeak_window.end());
  require(peak.size() == p.peak_window.size() && off.size() == p.offpeak_window.size(),
          "duplicate hour in peak/off-peak window");
  for (int h : peak) require(!off.count(h), "T1 and T2 must be disjoint");
  require(static_cast<int>(peak.size() + off.size()) == m.hours, "T1 union T2 must equal T");
  for (int h : peak) require(h >= 0 && h < m.hours, "peak hour out of range");
  for (int h : off) require(h >= 0 && h < m.hours, "off-peak hour out of range");
  require(!peak.empty() && !off.empty(), "both tariff windows must be non-empty");
  require(p.avg_tariff_cap > 0.0, "avg_tariff_cap > 0");
  p.capital_cost_daily = derive_annuity(p.capital.present_value, p.capital.years, p.capital.discount_rate);
  require(p.solver.rho_init > p.solver.rho_final && p.solver.rho_final > 0.0, "rho_init > rho_final > 0");
  require(p.solver.rho_shrink > 0.0 && p.solver.rho_shrink < 1.0, "0 < rho_shrink < 1");
}

SystemModel load_system(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ParseError("not a dataset directory: " + dir.string());
  SystemModel m;

  // network.json
  const json net = read_json(dir / "network.json");
  const std::string nw = "network.json";
  m.base_mva = get_or<double>(net, "base_mva", 100.0, nw);
  const auto pollutants = get<std::vector<std::string>>(net, "pollutants", nw);
  m.external_costs.pollutants = pollutants;
  const int ny = static_cast<int>(pollutants.size());
  auto pollutant_index = [&](const std::string& name, const std::string& where) {
    for (int y = 0; y < ny; ++y)
      if (pollutants[y] == name) return y;
    throw ParseError(where + ": unknown pollutant '" + name + "'");
  };

  for (const auto& jb : get<json>(net, "buses", nw)) {
    Bus b;
    b.id = get<int>(jb, "id", nw);
    const std::string w = nw + " bus " + std::to_string(b.id);
    b.v_min2 = get<double>(jb, "v_min2", w);
    b.v_max2 = get<double>(jb, "v_max2", w);
    b.population = get<double>(jb, "population", w);
    b.household_size = get<double>(jb, "household_size", w);
    b.income = get<double>(jb, "income", w);
    b.elasticity = get<double>(jb, "elasticity", w);
    b.tariff_min = get<double>(jb, "tariff_min", w);
    b.tariff_max = get<double>(jb, "tariff_max", w);
    b.max_load_mw = get_or<double>(jb, "max_load_mw", 0.0, w);
    if (m.bus_index(b.id) >= 0) throw ParseError(w + ": duplicate bus id");
    m.buses.push_back(std::move(b));
  }
  m.root = m.bus_index(get<int>(net, "root", nw));
  if (m.root < 0) throw ValidationError("root bus id not found among buses");

  for (const auto& jl : get<json>(net, "lines", nw)) {
    Line l;
    const int from = get<int>(jl, "from", nw), to = get<int>(jl, "to", nw);
    l.from = m.bus_index(from);
    l.to = m.bus_index(to);
    if (l.from < 0 || l.to < 0)
      throw TopologyError("line " + std::to_string(from) + "-" + std::to_string(to) + " references an unknown bus");
    l.resistance = get<double>(jl, "r", nw);
    l.reactance = get<double>(jl, "x", nw);
    l.apparent_limit = get<double>(jl, "s_max_mva", nw);
    m.lines.push_back(l);
  }

  for (const auto& jg : get_or<json>(net, "generators", json::array(), nw)) {
    Generator g;
    g.id = get<int>(jg, "id", nw);
    const std::string w = nw + " generator " + std::to_string(g.id);
    const int bus_id = get<int>(jg, "bus", w);
    g.bus = m.bus_index(bus_id);
    if (g.bus < 0) throw ValidationError(w + ": references unknown bus " + std::to_string(bus_id));
    g.cost = get<double>(jg, "cost", w);
    g.p_min = get<double>(jg, "p_min", w);
    g.p_max = get<double>(jg, "p_max", w);
    g.q_min = get<double>(jg, "q_min", w);
    g.q_max = get<double>(jg, "q_max", w);
    g.emission_factors.assign(ny, 0.0);
    const json emissions = get_or<json>(jg, "emissions", json::object(), w);
    for (const auto& [name, val] : emissions.items())
      g.emission_factors[pollutant_index(name, w)] = val.get<double>();
    m.generators.push_back(std::move(g));
  }
  const json itf = get<json>(net, "interface", nw);
  m.interface.flow_limit = get<double>(itf, "flow_limit_mw", nw + " interface");

  // demand.csv: the grid size is taken from the largest indices present.
  const CsvTable dem = read_csv(dir / "demand.csv");
  {
    const int cb = dem.column("bus"), cr = dem.column("rep_day"), ch = dem.column("hour");
    const int cp = dem.column("p_mw"), cq = dem.column("q_mvar");
    int max_day = -1, max_hour = -1;
    for (const auto& row : dem.rows) {
      max_day = std::max(max_day, to_int(row[cr], dem.file));
      max_hour = std::max(max_hour, to_int(row[ch], dem.file));
    }
    m.days = max_day + 1;
    m.hours = max_hour + 1;
    if (m.days < 1 || m.hours < 1) throw ParseError("demand.csv: no rows");
    std::vector<std::vector<int>> filled(m.buses.size(), std::vector<int>(m.days * m.hours, 0));
    for (auto& b : m.buses) {
      b.inflexible_p = HourlySeries(m.days, m.hours);
      b.inflexible_q = HourlySeries(m.days, m.hours);
    }
    for (const auto& row : dem.rows) {
      const int b = m.bus_index(to_int(row[cb], dem.file));
      if (b < 0) throw ValidationError("demand.csv references unknown bus " + row[cb]);
      const int r = to_int(row[cr], dem.file), t = to_int(row[ch], dem.file);
      if (r < 0 || t < 0) throw ParseError("demand.csv: negative index");
      m.buses[b].inflexible_p(r, t) = to_double(row[cp], dem.file);
      m.buses[b].inflexible_q(r, t) = to_double(row[cq], dem.file);
      ++filled[b][r * m.hours + t];
    }
    for (size_t b = 0; b < m.buses.size(); ++b)
      for (int k : filled[b])
        if (k != 1)
          throw ValidationError("demand.csv must contain exactly one row per (bus, rep_day, hour); bus " +
                                std::to_string(m.buses[b].id) + " does not cover the full T x R grid");
  }

  // lmp.csv, with optional per-pollutant interface emission columns "<pollutant>_t".
  const CsvTable lmp = read_csv(dir / "lmp.csv");
  {
    const int cr = lmp.column("rep_day"), ch = lmp.column("hour"), cl = lmp.column("lmp_usd_per_mwh");
    std::vector<int> ce(ny);
    for (int y = 0; y < ny; ++y) ce[y] = lmp.column(pollutants[y] + "_t", false);
    m.interface.lmp = HourlySeries(m.days, m.hours);
    m.interface.transmission_emissions.assign(ny, HourlySeries(m.days, m.hours));
    std::vector<int> filled(m.days * m.hours, 0);
    for (const auto& row : lmp.rows) {
      const int r = to_int(row[cr], lmp.file), t = to_int(row[ch], lmp.file);
      if (r < 0 || r >= m.days || t < 0 || t >= m.hours)
        throw ValidationError("lmp.csv index (" + row[cr] + "," + row[ch] + ") outside the demand grid");
      m.interface.lmp(r, t) = to_double(row[cl], lmp.file);
      for (int y = 0; y < ny; ++y)
        if (ce[y] >= 0) m.interface.transmission_emissions[y](r, t) = to_double(row[ce[y]], lmp.file);
      ++filled[r * m.hours + t];
    }
    for (int k : filled)
      if (k != 1) throw ValidationError("lmp.csv must cover the full T x R grid exactly once");
  }

  // external_costs.csv
  const CsvTable ext = read_csv(dir / "external_costs.csv");
  {
    const int cp = ext.column("pollutant"), cb = ext.column("bus"), cv = ext.column("usd_per_tonne");
    auto& ec = m.external_costs;
    ec.health_cost.assign(ny, std::vector<double>(m.buses.size(), std::nan("")));
    ec.health_cost[ec.co2_index() >= 0 ? ec.co2_index() : 0].assign(m.buses.size(), 0.0);
    m.interface.interface_external_cost.assign(ny, 0.0);
    bool have_gamma = false, have_scc = false;
    for (const auto& row : ext.rows) {
      const double v = to_double(row[cv], ext.file);
      if (row[cp] == "gamma") {
        ec.carbon_tax = v;
        have_gamma = true;
      } else if (row[cp] == "gamma_sc") {
        ec.scc = v;
        have_scc = true;
      } else {
        const int y = pollutant_index(row[cp], ext.file);
        if (row[cb] == "T") {
          m.interface.interface_external_cost[y] = v;
        } else {
          const int b = m.bus_index(to_int(row[cb], ext.file));
          if (b < 0) throw ValidationError("external_costs.csv references unknown bus " + row[cb]);
          ec.health_cost[y][b] = v;
        }
      }
    }
    if (!have_gamma || !have_scc) throw ParseError("external_costs.csv: missing gamma or gamma_sc row");
  }

  // policy.json
  const json pol = read_json(dir / "policy.json");
  {
    const std::string pw = "policy.json";
    auto& p = m.policy;
    p.eb_regulator = get<double>(pol, "eb_regulator", pw);
    // kappa' defaults to kappa unless the dataset overrides it.
    p.eb_household = get_or<double>(pol, "eb_household", p.eb_regulator, pw);
    p.tou_ratio = get_or<double>(pol, "tou_ratio", 1.0, pw);
    p.rate_of_return = get<double>(pol, "rate_of_return", pw);
    const json cap = get<json>(pol, "capital", pw);
    p.capital.present_value = get<double>(cap, "present_value_usd", pw);
    p.capital.years = get_or<int>(cap, "years", 20, pw);
    p.capital.discount_rate = get_or<double>(cap, "discount_rate", 0.05, pw);
    p.avg_tariff_cap = get<double>(pol, "avg_tariff_cap_usd_per_mwh", pw);
    p.peak_window = get<std::vector<int>>(pol, "peak_hours", pw);
    if (pol.contains("offpeak_hours")) {
      p.offpeak_window = get<std::vector<int>>(pol, "offpeak_hours", pw);
    } else {
      for (int h = 0; h < m.hours; ++h)
        if (std::find(p.peak_window.begin(), p.peak_window.end(), h) == p.peak_window.end())
          p.offpeak_window.push_back(h);
    }
    p.weights = get_or<std::vector<double>>(pol, "weights", {1.0, 1.0, 1.0}, pw);
    p.day_weights = get_or<std::vector<double>>(pol, "rep_day_weights", std::vector<double>(m.days, 1.0), pw);
    p.allow_export = get_or<bool>(pol, "allow_export", false, pw);
    if (pol.contains("solver")) {
      const json& s = pol.at("solver");
      p.solver.rho_init = get_or<double>(s, "rho_init", p.solver.rho_init, pw);
      p.solver.rho_shrink = get_or<double>(s, "rho_shrink", p.solver.rho_shrink, pw);
      p.solver.rho_final = get_or<double>(s, "rho_final", p.solver.rho_final, pw);
      p.solver.max_outer = get_or<int>(s, "max_outer", p.solver.max_outer, pw);
    }
  }

  validate(m);
  return m;
}

void save_system(const SystemModel& m, const fs::path& dir) {
  fs::create_directories(dir);
  const auto& ec = m.external_costs;
  const int ny = static_cast<int>(ec.pollutants.size());

  json net;
  net["base_mva"] = m.base_mva;
  net["root"] = m.buses[m.root].id;
  net["pollutants"] = ec.pollutants;
  net["interface"] = {{"flow_limit_mw", m.interface.flow_limit}};
  net["buses"] = json::array();
  for (const auto& b : m.buses) {
    json jb = {{"id", b.id},           {"v_min2", b.v_min2},
               {"v_max2", b.v_max2},   {"population", b.population},
               {"household_size", b.household_size}, {"income", b.income},
               {"elasticity", b.elasticity}, {"tariff_min", b.tariff_min},
               {"tariff_max", b.tariff_max}};
    if (b.max_load_mw > 0.0) jb["max_load_mw"] = b.max_load_mw;
    net["buses"].push_back(jb);
  }
  net["lines"] = json::array();
  for (const auto& l : m.lines)
    net["lines"].push_back({{"from", m.buses[l.from].id}, {"to", m.buses[l.to].id},
                            {"r", l.resistance}, {"x", l.reactance}, {"s_max_mva", l.apparent_limit}});
  net["generators"] = json::array();
  for (const auto& g : m.generators) {
    json em = json::object();
    for (int y = 0; y < ny; ++y)
      if (g.emission_factors[y] != 0.0) em[ec.pollutants[y]] = g.emission_factors[y];
    net["generators"].push_back({{"id", g.id}, {"bus", m.buses[g.bus].id}, {"cost", g.cost},
                                 {"p_min", g.p_min}, {"p_max", g.p_max}, {"q_min", g.q_min},
                                 {"q_max", g.q_max}, {"emissions", em}});
  }
  std::ofstream(dir / "network.json") << net.dump(2) << '\n';

  {
    std::ofstream out(dir / "demand.csv");
    out << "bus,rep_day,hour,p_mw,q_mvar\n";
    for (const auto& b : m.buses)
      for (int r = 0; r < m.days; ++r)
        for (int t = 0; t < m.hours; ++t)
          out << b.id << ',' << r << ',' << t << ',' << fmt(b.inflexible_p(r, t)) << ','
              << fmt(b.inflexible_q(r, t)) << '\n';
  }
  {
    std::ofstream out(dir / "lmp.csv");
    out << "rep_day,hour,lmp_usd_per_mwh";
    for (const auto& name : ec.pollutants) out << ',' << name << "_t";
    out << '\n';
    for (int r = 0; r < m.days; ++r)
      for (int t = 0; t < m.hours; ++t) {
        out << r << ',' << t << ',' << fmt(m.interface.lmp(r, t));
        for (int y = 0; y < ny; ++y) out << ',' << fmt(m.interface.transmission_emissions[y](r, t));
        out << '\n';
      }
  }
  {
    std::ofstream out(dir / "external_costs.csv");
    out << "pollutant,bus,usd_per_tonne\n";
    for (int y = 0; y < ny; ++y) {
      if (y != ec.co2_index())
        for (size_t b = 0; b < m.buses.size(); ++b)
          out << ec.pollutants[y] << ',' << m.buses[b].id << ',' << fmt(ec.health_cost[y][b]) << '\n';
      out << ec.pollutants[y] << ",T," << fmt(m.interface.interface_external_cost[y]) << '\n';
    }
    out << "gamma,," << fmt(ec.carbon_tax) << '\n';
    out << "gamma_sc,," << fmt(ec.scc) << '\n';
  }
  {
    const auto& p = m.policy;
    json pol = {{"eb_regulator", p.eb_regulator},
                {"eb_household", p.eb_household},
                {"tou_ratio", p.tou_ratio},
                {"rate_of_return", p.rate_of_return},
                {"capital",
                 {{"present_value_usd", p.capital.present_value},
                  {"years", p.capital.years},
                  {"discount_rate", p.capital.discount_rate}}},
                {"avg_tariff_cap_usd_per_mwh", p.avg_tariff_cap},
                {"peak_hours", p.peak_window},
                {"offpeak_hours", p.offpeak_window},
                {"weights", p.weights},
                {"rep_day_weights", p.day_weights},
                {"allow_export", p.allow_export},
                {"solver",
                 {{"rho_init", p.solver.rho_init},
                  {"rho_shrink", p.solver.rho_shrink},
                  {"rho_final", p.solver.rho_final},
                  {"max_outer", p.solver.max_outer}}}};
    std::ofstream(dir / "policy.json") << pol.dump(2) << '\n';
  }
}

}  // namespace tariff
