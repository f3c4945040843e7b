#pragma once

#include <limits>
#include <vector>

#include "tariff/nlp/expr.hpp"
#include "tariff/nlp/problem.hpp"

namespace tariff::nlp {

/// Model description: every row is a degree-2 polynomial; the objective is a
/// polynomial plus Cobb-Douglas terms.
struct ExprModel {
  std::vector<double> x_l;
  std::vector<double> x_u;
  QuadExpr objective;
  std::vector<CobbDouglasTerm> cobb_douglas;
  std::vector<QuadExpr> rows;
  std::vector<double> row_l;
  std::vector<double> row_u;

  int add_variable(double lower = -std::numeric_limits<double>::infinity(),
                   double upper = std::numeric_limits<double>::infinity()) {
    x_l.push_back(lower);
    x_u.push_back(upper);
    return static_cast<int>(x_l.size()) - 1;
  }
  int add_row(QuadExpr e, double lower, double upper) {
    rows.push_back(std::move(e));
    row_l.push_back(lower);
    row_u.push_back(upper);
    return static_cast<int>(rows.size()) - 1;
  }
  int num_variables() const { return static_cast<int>(x_l.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }
};

/// Exact first and second derivatives of an ExprModel with sparsity fixed at
/// construction.
class ExprProblem final : public Problem {
 public:
  explicit ExprProblem(ExprModel model);

  const ExprModel& model() const { return model_; }
  void set_row_bounds(int row, double lower, double upper);
  void set_variable_bounds(int var, double lower, double upper);

  int num_variables() const override { return model_.num_variables(); }
  int num_constraints() const override { return model_.num_rows(); }
  void bounds(std::span<double> x_l, std::span<double> x_u, std::span<double> c_l,
              std::span<double> c_u) const override;

  double objective(std::span<const double> x) const override;
  void gradient(std::span<const double> x, std::span<double> grad) const override;
  void constraints(std::span<const double> x, std::span<double> c) const override;

  const Sparsity& jacobian_structure() const override { return jac_; }
  void jacobian_values(std::span<const double> x, std::span<double> values) const override;

  const Sparsity& hessian_structure() const override { return hes_; }
  void hessian_values(std::span<const double> x, double obj_factor, std::span<const double> lambda,
                      std::span<double> values) const override;

 private:
  struct CdSlots {
    std::vector<int> vars;
    std::vector<double> a, b;  // coefficients of each var in the two bases
    std::vector<int> slots;     // lower-triangle pairs (p >= q) in row-major order
  };

  ExprModel model_;
  Sparsity jac_, hes_;
  std::vector<int> lin_slot_, quad_slot_i_, quad_slot_j_, quad_hslot_;
  std::vector<int> lin_off_, quad_off_;
  std::vector<int> obj_hslot_;
  std::vector<CdSlots> cd_;
};

}  // namespace tariff::nlp
