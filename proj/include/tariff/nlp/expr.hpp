#pragma once

#include <span>
#include <vector>

namespace tariff::nlp {

struct LinearTerm {
  int var;
  double coef;
};

/// coef * x[i] * x[j]; i == j is a square term.
struct BilinearTerm {
  int i;
  int j;
  double coef;
};

/// Polynomial of degree <= 2 in the problem variables. Every row of the
/// assembled programs is one of these, which keeps Jacobian and Hessian
/// sparsity fixed and derivatives exact.
struct QuadExpr {
  double constant = 0.0;
  std::vector<LinearTerm> linear;
  std::vector<BilinearTerm> quadratic;

  QuadExpr& add(int var, double coef) {
    if (coef != 0.0) linear.push_back({var, coef});
    return *this;
  }
  QuadExpr& add(int i, int j, double coef) {
    if (coef != 0.0) quadratic.push_back({i, j, coef});
    return *this;
  }
  QuadExpr& add_constant(double c) {
    constant += c;
    return *this;
  }
  QuadExpr& add(const QuadExpr& other, double scale = 1.0);

  double value(std::span<const double> x) const;
  /// Accumulates scale * gradient into `grad` (dense).
  void accumulate_gradient(std::span<const double> x, double scale, std::span<double> grad) const;
  /// Sum of duplicate linear entries merged; zero coefficients dropped.
  void compress();
  bool is_linear() const { return quadratic.empty(); }
};

/// weight * A(x)^alpha * B(x)^(1 - alpha) with A, B affine.
struct CobbDouglasTerm {
  QuadExpr first;   // affine
  QuadExpr second;  // affine
  double alpha = 0.5;
  double weight = 1.0;

  /// NaN when a base with positive exponent is non-positive.
  double value(std::span<const double> x) const;
  void accumulate_gradient(std::span<const double> x, double scale, std::span<double> grad) const;
  /// Second derivatives with respect to (A, B): d2f/dA2, d2f/dAdB, d2f/dB2.
  void curvature(std::span<const double> x, double& faa, double& fab, double& fbb) const;
};

}  // namespace tariff::nlp
