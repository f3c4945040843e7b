#include <cmath>
#include <random>

#include "doctest.h"
#include "tariff/nlp/expr_problem.hpp"
#include "tariff/nlp/interior_point.hpp"

using namespace tariff::nlp;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

QuadExpr lin(std::initializer_list<std::pair<int, double>> terms, double c = 0.0) {
  QuadExpr e;
  for (auto [v, a] : terms) e.add(v, a);
  e.add_constant(c);
  return e;
}
}  // namespace

TEST_CASE("linear equality system is solved exactly") {
  ExprModel m;
  m.add_variable();
  m.add_variable();
  m.add_row(lin({{0, 1}, {1, 1}}), 3, 3);
  m.add_row(lin({{0, 1}, {1, -1}}), 1, 1);
  ExprProblem p(m);
  std::vector<double> x0{0, 0};
  Result r = solve(p, x0);
  REQUIRE(r.ok());
  CHECK(r.x[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.iterations <= 2);
}

TEST_CASE("convex QP with an active inequality") {
  ExprModel m;
  m.add_variable();
  m.add_variable();
  // (x-1)^2 + (y-2)^2
  m.objective.add(0, 0, 1.0).add(0, -2.0).add(1, 1, 1.0).add(1, -4.0).add_constant(5.0);
  m.add_row(lin({{0, 1}, {1, 1}}), -kInf, 2.0);
  ExprProblem p(m);
  std::vector<double> x0{0, 0};
  Result r = solve(p, x0);
  REQUIRE(r.status == Status::Success);
  CHECK(r.x[0] == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(r.x[1] == doctest::Approx(1.5).epsilon(1e-7));
  // grad f + J^T lambda = 0  =>  lambda = 1
  CHECK(r.lambda[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("nonconvex Rosenbrock in lifted form") {
  ExprModel m;
  const int x = m.add_variable(), y = m.add_variable(), z = m.add_variable();
  // (1-x)^2 + 100 (y - z)^2
  m.objective.add(x, x, 1.0).add(x, -2.0).add_constant(1.0);
  m.objective.add(y, y, 100.0).add(z, z, 100.0).add(y, z, -200.0);
  QuadExpr c;
  c.add(z, 1.0).add(x, x, -1.0);
  m.add_row(c, 0.0, 0.0);
  ExprProblem p(m);
  std::vector<double> x0{-1.2, 1.0, 1.44};
  Result r = solve(p, x0);
  REQUIRE(r.ok());
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("relaxed complementarity toy with loose and tight relaxation") {
  for (double rho : {10.0, 1e-8}) {
    ExprModel m;
    const int x = m.add_variable(0.0, kInf), y = m.add_variable(0.0, kInf);
    m.objective.add(x, x, 1.0).add(x, -2.0).add(y, y, 1.0).add(y, -2.0).add_constant(2.0);
    QuadExpr prod;
    prod.add(x, y, 1.0);
    m.add_row(prod, -kInf, rho);
    ExprProblem p(m);
    std::vector<double> x0{1.0, 0.5};
    Result r = solve(p, x0);
    REQUIRE(r.ok());
    if (rho > 1.0) {
      CHECK(r.objective == doctest::Approx(0.0).epsilon(1e-8));
    } else {
      CHECK(std::abs(r.objective - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("local infeasibility is reported") {
  ExprModel m;
  const int x = m.add_variable();
  m.objective.add(x, 1.0);
  m.add_row(lin({{x, 1}}), 1.0, kInf);
  m.add_row(lin({{x, 1}}), -kInf, -1.0);
  ExprProblem p(m);
  std::vector<double> x0{0.0};
  Result r = solve(p, x0);
  CHECK(r.status == Status::Infeasible);
}

TEST_CASE("ExprProblem derivatives match central differences") {
  ExprModel m;
  for (int i = 0; i < 4; ++i) m.add_variable();
  m.objective.add(0, 1, 2.0).add(2, 2, -1.5).add(3, 0.7);
  CobbDouglasTerm cd;
  cd.first.add(0, 1.0).add(1, 0.5).add_constant(3.0);
  cd.second.add(2, 2.0).add(3, 1.0).add_constant(4.0);
  cd.alpha = 0.6;
  cd.weight = 2.5;
  m.cobb_douglas.push_back(cd);
  QuadExpr r0;
  r0.add(0, 3, 1.0).add(1, 1, 2.0).add(2, -1.0);
  m.add_row(r0, 0, 0);
  m.add_row(lin({{1, 2.0}, {3, -1.0}}, 1.0), 0, 0);
  ExprProblem p(m);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(4), lam{0.7, -1.3};
    for (double& v : x) v = u(rng);
    std::vector<double> g(4);
    p.gradient(x, g);
    std::vector<double> jv(p.jacobian_structure().nnz());
    p.jacobian_values(x, jv);
    std::vector<double> hv(p.hessian_structure().nnz());
    p.hessian_values(x, 1.0, lam, hv);
    // dense Hessian of the Lagrangian from the sparse lower triangle
    double H[4][4] = {};
    for (size_t k = 0; k < hv.size(); ++k) {
      const int r = p.hessian_structure().rows[k], c = p.hessian_structure().cols[k];
      H[r][c] += hv[k];
      if (r != c) H[c][r] += hv[k];
    }
    auto lag_grad = [&](std::vector<double> xx, std::vector<double>& out) {
      out.assign(4, 0.0);
      p.gradient(xx, out);
      std::vector<double> jj(p.jacobian_structure().nnz());
      p.jacobian_values(xx, jj);
      for (size_t k = 0; k < jj.size(); ++k)
        out[p.jacobian_structure().cols[k]] += lam[p.jacobian_structure().rows[k]] * jj[k];
    };
    for (int j = 0; j < 4; ++j) {
      auto xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const double fd = (p.objective(xp) - p.objective(xm)) / (2 * h);
      CHECK(g[j] == doctest::Approx(fd).epsilon(1e-6));
      std::vector<double> cp(2), cm(2);
      p.constraints(xp, cp);
      p.constraints(xm, cm);
      for (size_t k = 0; k < jv.size(); ++k)
        if (p.jacobian_structure().cols[k] == j)
          CHECK(jv[k] == doctest::Approx((cp[p.jacobian_structure().rows[k]] - cm[p.jacobian_structure().rows[k]]) / (2 * h)).epsilon(1e-6));
      std::vector<double> gp, gm;
      lag_grad(xp, gp);
      lag_grad(xm, gm);
      for (int i = 0; i < 4; ++i) CHECK(H[i][j] == doctest::Approx((gp[i] - gm[i]) / (2 * h)).epsilon(1e-5));
    }
  }
}
