#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace tariff::demand {

/// Raised when a window's reference shape sums to zero but must carry energy.
class DegenerateShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Peak/off-peak flexible energy that maximizes Cobb-Douglas utility under
/// the daily budget d_peak * pi_p + d_offpeak * pi_op = budget.
struct DemandSplit {
  double d_peak = 0.0;     // MWh over the peak window
  double d_offpeak = 0.0;  // MWh over the off-peak window
  double budget = 0.0;     // $
};

struct IntervalProfile {
  std::vector<double> values;  // MW per hour
};

DemandSplit demand_split(double alpha, double budget, double price_peak, double price_offpeak);

/// Scales `reference_shape` window-by-window so each window sums to the split.
/// `peak_mask[t]` selects the window of hour t.
IntervalProfile allocate_intervals(const DemandSplit& split, std::span<const double> reference_shape,
                                   std::span<const bool> peak_mask);

/// d1^alpha * d2^(1 - alpha); a zero base with positive exponent contributes 0.
double cobb_douglas_utility(double d1, double d2, double alpha);

double consumer_surplus(double d1, double d2, double alpha, double price_peak, double price_offpeak);

/// Daily flexible-energy budget of a bus: kappa' * (income / 365) * population / household_size.
double household_budget(double eb_household, double income, double population, double household_size);

}  // namespace tariff::demand
