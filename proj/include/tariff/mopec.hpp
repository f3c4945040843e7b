#pragma once

#include <array>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "tariff/demand_model.hpp"
#include "tariff/dispatch.hpp"
#include "tariff/nlp/expr_problem.hpp"

namespace tariff::mopec {

class AssemblyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InfeasiblePointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using dispatch::Structure;

enum class RowKind { Stationarity, LlEquality, ConeSlack, Demand, UlEquality, StructureTie, UlInequality };
const char* to_string(RowKind k);

/// slack(x) >= 0, multiplier >= 0, slack * multiplier = 0.
struct ComplementarityPair {
  std::string name;
  nlp::QuadExpr slack;  // affine
  int multiplier = -1;
};

struct Objective {
  nlp::QuadExpr poly;
  std::vector<nlp::CobbDouglasTerm> cobb_douglas;
  double value(std::span<const double> x) const;
  void accumulate_gradient(std::span<const double> x, double scale, std::span<double> grad) const;
};

/// Variable index map of the flattened system.
struct NcpLayout {
  int H = 0, R = 0, B = 0, L = 0, G = 0, Y = 0;
  int tariff0 = 0, demand0 = 0, window0 = 0;
  dispatch::LlLayout ll;
  int eqdual0 = 0, emisdual0 = 0, bounddual0 = 0, eta0 = 0, sigma0 = 0, etotal = 0;
  int size = 0;

  int pi(int b, int t, int r) const { return tariff0 + (r * B + b) * H + t; }
  int d(int b, int t, int r) const { return demand0 + (r * B + b) * H + t; }
  int dw(int b, int w, int r) const { return window0 + (r * B + b) * 2 + w; }  // w: 0 peak, 1 off-peak

  int eq_per_hour() const { return 2 * B + L; }
  int lambda_d(int b, int t, int r) const { return eqdual0 + (r * H + t) * eq_per_hour() + b; }
  int lambda_dq(int b, int t, int r) const { return eqdual0 + (r * H + t) * eq_per_hour() + B + b; }
  int beta(int l, int t, int r) const { return eqdual0 + (r * H + t) * eq_per_hour() + 2 * B + l; }
  int psi(int y, int b) const { return emisdual0 + y * B + b; }
  int chi(int y) const { return emisdual0 + Y * B + y; }

  int bd_per_hour() const { return 4 * G + 2 * B + 2; }
  int delta_lo(int i, int t, int r) const { return bounddual0 + (r * H + t) * bd_per_hour() + i; }
  int delta_up(int i, int t, int r) const { return bounddual0 + (r * H + t) * bd_per_hour() + G + i; }
  int theta_lo(int i, int t, int r) const { return bounddual0 + (r * H + t) * bd_per_hour() + 2 * G + i; }
  int theta_up(int i, int t, int r) const { return bounddual0 + (r * H + t) * bd_per_hour() + 3 * G + i; }
  int mu_lo(int b, int t, int r) const { return bounddual0 + (r * H + t) * bd_per_hour() + 4 * G + b; }
  int mu_up(int b, int t, int r) const { return bounddual0 + (r * H + t) * bd_per_hour() + 4 * G + B + b; }
  int tau_lo(int t, int r) const { return bounddual0 + (r * H + t) * bd_per_hour() + 4 * G + 2 * B; }
  int tau_up(int t, int r) const { return bounddual0 + (r * H + t) * bd_per_hour() + 4 * G + 2 * B + 1; }
  int eta(int l, int t, int r) const { return eta0 + (r * H + t) * L + l; }
  int sigma(int l, int t, int r) const { return sigma0 + (r * H + t) * L + l; }
};

/// Single-level system: LL stationarity and equalities, demand closed forms,
/// upper-level rows, tariff ties and complementarity pairs.
struct NcpSystem {
  nlp::ExprModel model;  // variables with bounds; equality rows and UL inequality rows
  std::vector<std::string> variable_names;
  std::vector<std::string> row_names;
  std::vector<RowKind> row_kinds;
  std::vector<ComplementarityPair> pairs;
  std::array<Objective, 3> objectives;  // -f_EW, f_H, f_EN (all minimized)
  NcpLayout layout;
  Structure structure = Structure::Flat;
  double kappa = 0.0;

  int num_variables() const { return model.num_variables(); }
  std::vector<int> rows_of(RowKind k) const;
  /// Violation of row i at x: |c - bound| for equalities, distance to the interval otherwise.
  double row_violation(int row, std::span<const double> x) const;
  double max_equality_residual(std::span<const double> x, int* worst = nullptr) const;
  double max_inequality_violation(std::span<const double> x, int* worst = nullptr) const;
};

NcpSystem assemble_kkt(const SystemModel& sys, Structure structure, double kappa);

/// Number of distinct tariff values the tie rows leave free.
int tariff_rank(const NcpSystem& ncp);

struct ComplementarityMetrics {
  double max_product = 0.0;   // max_j slack_j * multiplier_j
  double min_component = 0.0; // min_j min(slack_j, multiplier_j)
  double aggregate = 0.0;     // sum_j slack_j * multiplier_j
  int worst_pair = -1;
};

ComplementarityMetrics complementarity_violation(const NcpSystem& ncp, std::span<const double> point);

enum class Stationarity { Strong, B, M, C, None };
const char* to_string(Stationarity s);

/// MPEC multipliers of one pair: nu_g on slack >= 0, nu_h on multiplier >= 0.
struct PairMultipliers {
  double nu_g = 0.0;
  double nu_h = 0.0;
};

struct StationarityReport {
  Stationarity cls = Stationarity::Strong;
  int biactive = 0;
  int witness = -1;  // pair that limits the class
  std::string witness_name;
};

/// Class from the signs of the MPEC multipliers at bi-active pairs. Strong:
/// both >= -tol; M: both > tol or product within tol of 0; C: product >= -tol.
/// Strong stationarity implies B-stationarity; B is not separately witnessed
/// by multiplier signs, so it is never the result of this test.
StationarityReport classify_stationarity(const NcpSystem& ncp, std::span<const double> point,
                                         std::span<const PairMultipliers> multipliers, double tol);

/// Start point: closed-form demand at `tariff`, LL primal and duals from
/// dispatch::solve_ll, cone slacks and emissions filled consistently.
std::vector<double> initial_point(const NcpSystem& ncp, const SystemModel& sys,
                                  const dispatch::TariffSchedule& tariff, const nlp::Options& ll_options = {});

/// Tariff schedule read back from a point.
dispatch::TariffSchedule extract_tariff(const NcpSystem& ncp, std::span<const double> point);
dispatch::DemandProfiles extract_demand(const NcpSystem& ncp, std::span<const double> point);
dispatch::DispatchSolution extract_dispatch(const NcpSystem& ncp, const SystemModel& sys,
                                            std::span<const double> point);

/// Text census (block sizes, row kinds, pair counts) for golden-file tests.
std::string census_text(const NcpSystem& ncp);
/// Full listing of variables, rows and pairs.
void dump(const NcpSystem& ncp, std::ostream& os);

}  // namespace tariff::mopec
