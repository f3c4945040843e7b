#include "tariff/nlp/expr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tariff::nlp {

QuadExpr& QuadExpr::add(const QuadExpr& other, double scale) {
  constant += scale * other.constant;
  for (const auto& t : other.linear) add(t.var, scale * t.coef);
  for (const auto& q : other.quadratic) add(q.i, q.j, scale * q.coef);
  return *this;
}

double QuadExpr::value(std::span<const double> x) const {
  double v = constant;
  for (const auto& t : linear) v += t.coef * x[t.var];
  for (const auto& q : quadratic) v += q.coef * x[q.i] * x[q.j];
  return v;
}

void QuadExpr::accumulate_gradient(std::span<const double> x, double scale, std::span<double> grad) const {
  for (const auto& t : linear) grad[t.var] += scale * t.coef;
  for (const auto& q : quadratic) {
    grad[q.i] += scale * q.coef * x[q.j];
    grad[q.j] += scale * q.coef * x[q.i];
  }
}

void QuadExpr::compress() {
  std::sort(linear.begin(), linear.end(), [](const auto& a, const auto& b) { return a.var < b.var; });
  std::vector<LinearTerm> merged;
  for (const auto& t : linear) {
    if (!merged.empty() && merged.back().var == t.var)
      merged.back().coef += t.coef;
    else
      merged.push_back(t);
  }
  std::erase_if(merged, [](const auto& t) { return t.coef == 0.0; });
  linear = std::move(merged);

  for (auto& q : quadratic)
    if (q.i > q.j) std::swap(q.i, q.j);
  std::sort(quadratic.begin(), quadratic.end(),
            [](const auto& a, const auto& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
  std::vector<BilinearTerm> mq;
  for (const auto& q : quadratic) {
    if (!mq.empty() && mq.back().i == q.i && mq.back().j == q.j)
      mq.back().coef += q.coef;
    else
      mq.push_back(q);
  }
  std::erase_if(mq, [](const auto& q) { return q.coef == 0.0; });
  quadratic = std::move(mq);
}

double CobbDouglasTerm::value(std::span<const double> x) const {
  const double a = first.value(x), b = second.value(x);
  if (alpha == 1.0) return weight * a;
  if (alpha == 0.0) return weight * b;
  if (a <= 0.0 || b <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return weight * std::pow(a, alpha) * std::pow(b, 1.0 - alpha);
}

void CobbDouglasTerm::accumulate_gradient(std::span<const double> x, double scale,
                                          std::span<double> grad) const {
  const double a = first.value(x), b = second.value(x);
  double fa = 0.0, fb = 0.0;
  if (alpha == 1.0) {
    fa = weight;
  } else if (alpha == 0.0) {
    fb = weight;
  } else {
    if (a <= 0.0 || b <= 0.0) return;
    const double f = weight * std::pow(a, alpha) * std::pow(b, 1.0 - alpha);
    fa = alpha * f / a;
    fb = (1.0 - alpha) * f / b;
  }
  first.accumulate_gradient(x, scale * fa, grad);
  second.accumulate_gradient(x, scale * fb, grad);
}

void CobbDouglasTerm::curvature(std::span<const double> x, double& faa, double& fab, double& fbb) const {
  faa = fab = fbb = 0.0;
  if (alpha == 1.0 || alpha == 0.0) return;
  const double a = first.value(x), b = second.value(x);
  if (a <= 0.0 || b <= 0.0) return;
  const double beta = 1.0 - alpha;
  const double f = weight * std::pow(a, alpha) * std::pow(b, beta);
  faa = alpha * (alpha - 1.0) * f / (a * a);
  fab = alpha * beta * f / (a * b);
  fbb = beta * (beta - 1.0) * f / (b * b);
}

}  // namespace tariff::nlp
