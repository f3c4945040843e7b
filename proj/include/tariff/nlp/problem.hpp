#pragma once

#include <span>
#include <vector>

namespace tariff::nlp {

/// Coordinate-format sparsity pattern.
struct Sparsity {
  std::vector<int> rows;
  std::vector<int> cols;
  size_t nnz() const { return rows.size(); }
};

/// Smooth nonlinear program
///
///   min f(x)  s.t.  c_l <= c(x) <= c_u,  x_l <= x <= x_u
///
/// Rows with c_l == c_u are equalities. Infinite bounds use +/-infinity.
/// The Hessian is that of  obj_factor * f + sum_i lambda_i c_i  (lower triangle).
class Problem {
 public:
  virtual ~Problem() = default;

  virtual int num_variables() const = 0;
  virtual int num_constraints() const = 0;
  virtual void bounds(std::span<double> x_l, std::span<double> x_u, std::span<double> c_l,
                      std::span<double> c_u) const = 0;

  virtual double objective(std::span<const double> x) const = 0;
  virtual void gradient(std::span<const double> x, std::span<double> grad) const = 0;
  virtual void constraints(std::span<const double> x, std::span<double> c) const = 0;

  virtual const Sparsity& jacobian_structure() const = 0;
  virtual void jacobian_values(std::span<const double> x, std::span<double> values) const = 0;

  virtual const Sparsity& hessian_structure() const = 0;
  virtual void hessian_values(std::span<const double> x, double obj_factor,
                              std::span<const double> lambda, std::span<double> values) const = 0;
};

}  // namespace tariff::nlp
