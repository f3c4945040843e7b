#include "tariff/nlp/expr_problem.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace tariff::nlp {

namespace {

class SlotMap {
 public:
  int get(int i, int j, Sparsity& s) {
    const int r = std::max(i, j), c = std::min(i, j);
    auto [it, inserted] = map_.try_emplace({r, c}, static_cast<int>(s.rows.size()));
    if (inserted) {
      s.rows.push_back(r);
      s.cols.push_back(c);
    }
    return it->second;
  }

 private:
  std::map<std::pair<int, int>, int> map_;
};

}  // namespace

ExprProblem::ExprProblem(ExprModel model) : model_(std::move(model)) {
  const int n = model_.num_variables();
  const int m = model_.num_rows();
  if (static_cast<int>(model_.row_l.size()) != m || static_cast<int>(model_.row_u.size()) != m)
    throw std::invalid_argument("ExprProblem: row bound arrays do not match the row count");
  auto check_var = [n](int v) {
    if (v < 0 || v >= n) throw std::out_of_range("ExprProblem: expression references unknown variable");
  };

  model_.objective.compress();
  for (auto& r : model_.rows) r.compress();

  SlotMap hmap;
  lin_off_.assign(m + 1, 0);
  quad_off_.assign(m + 1, 0);
  for (int r = 0; r < m; ++r) {
    const QuadExpr& e = model_.rows[r];
    std::vector<int> cols;
    for (const auto& t : e.linear) cols.push_back(t.var);
    for (const auto& q : e.quadratic) {
      cols.push_back(q.i);
      cols.push_back(q.j);
    }
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    const int base = static_cast<int>(jac_.rows.size());
    for (int c : cols) {
      check_var(c);
      jac_.rows.push_back(r);
      jac_.cols.push_back(c);
    }
    auto slot = [&](int var) {
      return base + static_cast<int>(std::lower_bound(cols.begin(), cols.end(), var) - cols.begin());
    };
    for (const auto& t : e.linear) lin_slot_.push_back(slot(t.var));
    for (const auto& q : e.quadratic) {
      quad_slot_i_.push_back(slot(q.i));
      quad_slot_j_.push_back(slot(q.j));
      quad_hslot_.push_back(hmap.get(q.i, q.j, hes_));
    }
    lin_off_[r + 1] = static_cast<int>(lin_slot_.size());
    quad_off_[r + 1] = static_cast<int>(quad_slot_i_.size());
  }

  for (const auto& t : model_.objective.linear) check_var(t.var);
  for (const auto& q : model_.objective.quadratic) {
    check_var(q.i);
    check_var(q.j);
    obj_hslot_.push_back(hmap.get(q.i, q.j, hes_));
  }

  for (auto& term : model_.cobb_douglas) {
    term.first.compress();
    term.second.compress();
    if (!term.first.is_linear() || !term.second.is_linear())
      throw std::invalid_argument("ExprProblem: Cobb-Douglas bases must be affine");
    CdSlots cs;
    for (const auto& t : term.first.linear) cs.vars.push_back(t.var);
    for (const auto& t : term.second.linear) cs.vars.push_back(t.var);
    std::sort(cs.vars.begin(), cs.vars.end());
    cs.vars.erase(std::unique(cs.vars.begin(), cs.vars.end()), cs.vars.end());
    cs.a.assign(cs.vars.size(), 0.0);
    cs.b.assign(cs.vars.size(), 0.0);
    auto idx = [&](int v) { return std::lower_bound(cs.vars.begin(), cs.vars.end(), v) - cs.vars.begin(); };
    for (const auto& t : term.first.linear) cs.a[idx(t.var)] += t.coef;
    for (const auto& t : term.second.linear) cs.b[idx(t.var)] += t.coef;
    for (size_t p = 0; p < cs.vars.size(); ++p) {
      check_var(cs.vars[p]);
      for (size_t q = 0; q <= p; ++q) cs.slots.push_back(hmap.get(cs.vars[p], cs.vars[q], hes_));
    }
    cd_.push_back(std::move(cs));
  }
}

void ExprProblem::set_row_bounds(int row, double lower, double upper) {
  model_.row_l.at(row) = lower;
  model_.row_u.at(row) = upper;
}

void ExprProblem::set_variable_bounds(int var, double lower, double upper) {
  model_.x_l.at(var) = lower;
  model_.x_u.at(var) = upper;
}

void ExprProblem::bounds(std::span<double> x_l, std::span<double> x_u, std::span<double> c_l,
                         std::span<double> c_u) const {
  std::copy(model_.x_l.begin(), model_.x_l.end(), x_l.begin());
  std::copy(model_.x_u.begin(), model_.x_u.end(), x_u.begin());
  std::copy(model_.row_l.begin(), model_.row_l.end(), c_l.begin());
  std::copy(model_.row_u.begin(), model_.row_u.end(), c_u.begin());
}

double ExprProblem::objective(std::span<const double> x) const {
  double v = model_.objective.value(x);
  for (const auto& t : model_.cobb_douglas) v += t.value(x);
  return v;
}

void ExprProblem::gradient(std::span<const double> x, std::span<double> grad) const {
  std::fill(grad.begin(), grad.end(), 0.0);
  model_.objective.accumulate_gradient(x, 1.0, grad);
  for (const auto& t : model_.cobb_douglas) t.accumulate_gradient(x, 1.0, grad);
}

void ExprProblem::constraints(std::span<const double> x, std::span<double> c) const {
  for (int r = 0; r < model_.num_rows(); ++r) c[r] = model_.rows[r].value(x);
}

void ExprProblem::jacobian_values(std::span<const double> x, std::span<double> values) const {
  std::fill(values.begin(), values.end(), 0.0);
  for (int r = 0; r < model_.num_rows(); ++r) {
    const QuadExpr& e = model_.rows[r];
    for (size_t k = 0; k < e.linear.size(); ++k) values[lin_slot_[lin_off_[r] + k]] += e.linear[k].coef;
    for (size_t k = 0; k < e.quadratic.size(); ++k) {
      const auto& q = e.quadratic[k];
      values[quad_slot_i_[quad_off_[r] + k]] += q.coef * x[q.j];
      values[quad_slot_j_[quad_off_[r] + k]] += q.coef * x[q.i];
    }
  }
}

void ExprProblem::hessian_values(std::span<const double> x, double obj_factor, std::span<const double> lambda,
                                 std::span<double> values) const {
  std::fill(values.begin(), values.end(), 0.0);
  // d2(c*x_i*x_j): off-diagonal c, diagonal 2c.
  auto add_quad = [&](const BilinearTerm& q, double scale, int slot) {
    values[slot] += (q.i == q.j ? 2.0 : 1.0) * q.coef * scale;
  };
  for (int r = 0; r < model_.num_rows(); ++r) {
    if (lambda[r] == 0.0) continue;
    const QuadExpr& e = model_.rows[r];
    for (size_t k = 0; k < e.quadratic.size(); ++k) add_quad(e.quadratic[k], lambda[r], quad_hslot_[quad_off_[r] + k]);
  }
  if (obj_factor != 0.0) {
    for (size_t k = 0; k < model_.objective.quadratic.size(); ++k)
      add_quad(model_.objective.quadratic[k], obj_factor, obj_hslot_[k]);
    for (size_t t = 0; t < cd_.size(); ++t) {
      double faa, fab, fbb;
      model_.cobb_douglas[t].curvature(x, faa, fab, fbb);
      const CdSlots& cs = cd_[t];
      size_t s = 0;
      for (size_t p = 0; p < cs.vars.size(); ++p)
        for (size_t q = 0; q <= p; ++q) {
          const double h = faa * cs.a[p] * cs.a[q] + fab * (cs.a[p] * cs.b[q] + cs.b[p] * cs.a[q]) +
                           fbb * cs.b[p] * cs.b[q];
          values[cs.slots[s++]] += obj_factor * h;
        }
    }
  }
}

}  // namespace tariff::nlp
