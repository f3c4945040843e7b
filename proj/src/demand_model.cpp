#include "tariff/demand_model.hpp"

#include <cmath>
#include <string>

namespace tariff::demand {

DemandSplit demand_split(double alpha, double budget, double price_peak, double price_offpeak) {
  if (!(price_peak > 0.0) || !(price_offpeak > 0.0))
    throw std::domain_error("demand_split: prices must be positive");
  if (budget < 0.0) throw std::domain_error("demand_split: negative budget");
  if (alpha < 0.0 || alpha > 1.0) throw std::domain_error("demand_split: alpha outside [0, 1]");
  return {alpha * budget / price_peak, (1.0 - alpha) * budget / price_offpeak, budget};
}

IntervalProfile allocate_intervals(const DemandSplit& split, std::span<const double> reference_shape,
                                   std::span<const bool> peak_mask) {
  if (reference_shape.size() != peak_mask.size())
    throw std::invalid_argument("allocate_intervals: shape and window mask differ in length");
  double ref_peak = 0.0, ref_off = 0.0;
  for (size_t t = 0; t < reference_shape.size(); ++t) {
    if (reference_shape[t] < 0.0) throw std::domain_error("allocate_intervals: negative reference");
    (peak_mask[t] ? ref_peak : ref_off) += reference_shape[t];
  }
  if (ref_peak == 0.0 && split.d_peak > 0.0)
    throw DegenerateShapeError("peak window reference sums to 0 but carries " +
                               std::to_string(split.d_peak) + " MWh");
  if (ref_off == 0.0 && split.d_offpeak > 0.0)
    throw DegenerateShapeError("off-peak window reference sums to 0 but carries " +
                               std::to_string(split.d_offpeak) + " MWh");

  IntervalProfile out;
  out.values.resize(reference_shape.size(), 0.0);
  for (size_t t = 0; t < reference_shape.size(); ++t) {
    const double ref = peak_mask[t] ? ref_peak : ref_off;
    const double energy = peak_mask[t] ? split.d_peak : split.d_offpeak;
    if (ref > 0.0) out.values[t] = reference_shape[t] * (energy / ref);
  }
  return out;
}

double cobb_douglas_utility(double d1, double d2, double alpha) {
  auto term = [](double base, double exponent) {
    if (exponent == 0.0) return 1.0;
    if (base <= 0.0) return 0.0;
    return std::pow(base, exponent);
  };
  return term(d1, alpha) * term(d2, 1.0 - alpha);
}

double consumer_surplus(double d1, double d2, double alpha, double price_peak, double price_offpeak) {
  return cobb_douglas_utility(d1, d2, alpha) - price_peak * d1 - price_offpeak * d2;
}

double household_budget(double eb_household, double income, double population, double household_size) {
  return eb_household * (income / 365.0) * population / household_size;
}

}  // namespace tariff::demand
