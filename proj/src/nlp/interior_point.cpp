#include "tariff/nlp/interior_point.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <utility>

namespace tariff::nlp {

const char* to_string(Status s) {
  switch (s) {
    case Status::Success: return "success";
    case Status::Acceptable: return "acceptable";
    case Status::Infeasible: return "infeasible";
    case Status::MaxIter: return "max_iter";
    case Status::NumericFailure: return "numeric_failure";
    case Status::UserStop: return "user_stop";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Filter line-search constants.
constexpr double kGammaTheta = 1e-5;
constexpr double kGammaPhi = 1e-8;
constexpr double kEtaPhi = 1e-8;
constexpr double kSTheta = 1.1;
constexpr double kSPhi = 2.3;
constexpr double kDelta = 1.0;
constexpr double kGammaAlpha = 0.05;
constexpr double kKappaSoc = 0.99;
constexpr int kMaxSoc = 4;
constexpr double kKappaSigma = 1e10;
constexpr double kKappaD = 1e-5;
constexpr double kSMax = 100.0;
constexpr double kKappaResto = 0.9;
constexpr double kRhoResto = 1000.0;

// Inertia-correction constants.
constexpr double kDeltaWInit = 1e-4;
constexpr double kDeltaWMin = 1e-20;
constexpr double kDeltaWMax = 1e40;
constexpr double kKappaWMinus = 1.0 / 3.0;
constexpr double kKappaWPlus = 8.0;
constexpr double kKappaWPlusBar = 100.0;
constexpr double kDeltaC = 1e-9;
// Primal regularization kept in every factorization so the LDL^T without
// pivoting sees a quasi-definite matrix; refinement removes it again.
constexpr double kDeltaWFloor = 1e-8;

/// Feasibility problem  min rho*sum(p + n) + zeta/2 |D (x - x_r)|^2
/// s.t.  rs_i c_i(x) - p_i + n_i in [rs_i c_l, rs_i c_u],  p, n >= 0.
class RestorationProblem final : public Problem {
 public:
  RestorationProblem(const Problem& base, std::vector<double> row_scale, std::vector<double> x_ref,
                     double zeta)
      : base_(base), rs_(std::move(row_scale)), xr_(std::move(x_ref)), zeta_(zeta) {
    n_ = base.num_variables();
    m_ = base.num_constraints();
    d2_.resize(n_);
    for (int i = 0; i < n_; ++i) {
      const double d = std::min(1.0, 1.0 / std::max(std::abs(xr_[i]), kEps));
      d2_[i] = d * d;
    }
    const Sparsity& bj = base.jacobian_structure();
    jac_ = bj;
    for (int i = 0; i < m_; ++i) {
      jac_.rows.push_back(i);
      jac_.cols.push_back(n_ + i);
      jac_.rows.push_back(i);
      jac_.cols.push_back(n_ + m_ + i);
    }
    const Sparsity& bh = base.hessian_structure();
    hes_ = bh;
    for (int i = 0; i < n_; ++i) {
      hes_.rows.push_back(i);
      hes_.cols.push_back(i);
    }
    base_jac_.resize(bj.nnz());
  }

  int num_variables() const override { return n_ + 2 * m_; }
  int num_constraints() const override { return m_; }

  void bounds(std::span<double> x_l, std::span<double> x_u, std::span<double> c_l,
              std::span<double> c_u) const override {
    base_.bounds(x_l.subspan(0, n_), x_u.subspan(0, n_), c_l, c_u);
    for (int i = 0; i < 2 * m_; ++i) {
      x_l[n_ + i] = 0.0;
      x_u[n_ + i] = kInf;
    }
    for (int i = 0; i < m_; ++i) {
      c_l[i] *= rs_[i];
      c_u[i] *= rs_[i];
    }
  }

  double objective(std::span<const double> x) const override {
    double v = 0.0;
    for (int i = 0; i < 2 * m_; ++i) v += kRhoResto * x[n_ + i];
    for (int i = 0; i < n_; ++i) v += 0.5 * zeta_ * d2_[i] * (x[i] - xr_[i]) * (x[i] - xr_[i]);
    return v;
  }

  void gradient(std::span<const double> x, std::span<double> g) const override {
    for (int i = 0; i < n_; ++i) g[i] = zeta_ * d2_[i] * (x[i] - xr_[i]);
    for (int i = 0; i < 2 * m_; ++i) g[n_ + i] = kRhoResto;
  }

  void constraints(std::span<const double> x, std::span<double> c) const override {
    base_.constraints(x.subspan(0, n_), c);
    for (int i = 0; i < m_; ++i) c[i] = rs_[i] * c[i] - x[n_ + i] + x[n_ + m_ + i];
  }

  const Sparsity& jacobian_structure() const override { return jac_; }

  void jacobian_values(std::span<const double> x, std::span<double> values) const override {
    base_.jacobian_values(x.subspan(0, n_), base_jac_);
    const Sparsity& bj = base_.jacobian_structure();
    for (size_t k = 0; k < bj.nnz(); ++k) values[k] = rs_[bj.rows[k]] * base_jac_[k];
    size_t k = bj.nnz();
    for (int i = 0; i < m_; ++i) {
      values[k++] = -1.0;
      values[k++] = 1.0;
    }
  }

  const Sparsity& hessian_structure() const override { return hes_; }

  void hessian_values(std::span<const double> x, double obj_factor, std::span<const double> lambda,
                      std::span<double> values) const override {
    std::vector<double> lam(m_);
    for (int i = 0; i < m_; ++i) lam[i] = lambda[i] * rs_[i];
    const size_t nb = base_.hessian_structure().nnz();
    base_.hessian_values(x.subspan(0, n_), 0.0, lam, values.subspan(0, nb));
    for (int i = 0; i < n_; ++i) values[nb + i] = obj_factor * zeta_ * d2_[i];
  }

 private:
  const Problem& base_;
  std::vector<double> rs_, xr_, d2_;
  double zeta_;
  int n_ = 0, m_ = 0;
  Sparsity jac_, hes_;
  mutable std::vector<double> base_jac_;
};

class Solver {
 public:
  Solver(const Problem& p, const Options& o, int depth) : prob_(p), opt_(o), depth_(depth) {}

  Result run(std::span<const double> x0, const WarmStart* warm);

 private:
  using SpMat = Eigen::SparseMatrix<double>;
  using Ldlt = Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>>;

  struct Trial {
    std::vector<double> w;
    std::vector<double> c;
    double f = 0.0;
    double theta = 0.0;
    double phi = 0.0;
  };

  void setup();
  void compute_scaling(std::span<const double> x);
  void initial_point(std::span<const double> x0, const WarmStart* warm);

  double eval_f(const std::vector<double>& w) const;
  void eval_c(const std::vector<double>& w, std::vector<double>& c) const;
  void eval_derivatives();
  bool evaluate_trial(Trial& t) const;

  double barrier(const std::vector<double>& w, double f) const;
  void barrier_gradient(std::vector<double>& g) const;
  double theta_of(const std::vector<double>& c) const;

  void jt_times(const std::vector<double>& v, std::vector<double>& out) const;
  void dual_residual(std::vector<double>& r) const;
  void errors(double mu, double& dual, double& primal, double& compl_, double& sd, double& sc) const;
  double unscaled_violation(std::span<const double> x) const;

  void build_kkt_pattern();
  bool factorize(double delta_w, double delta_c, bool check_inertia);
  void solve_kkt(const Eigen::VectorXd& rhs, Eigen::VectorXd& sol, double delta_w, double delta_c);
  bool compute_direction(std::vector<double>& dw, std::vector<double>& dlam);
  void bound_steps(const std::vector<double>& dw, std::vector<double>& dzl, std::vector<double>& dzu) const;
  double max_step_primal(const std::vector<double>& w, const std::vector<double>& dw, double tau) const;
  double max_step_dual(const std::vector<double>& dzl, const std::vector<double>& dzu, double tau) const;

  bool filter_acceptable(double theta, double phi) const;
  void least_squares_multipliers();
  void reset_bound_multipliers();
  void clip_bound_multipliers();
  int restoration(double theta_cur, double phi_cur);
  void candidate_from_x(std::span<const double> x, std::vector<double>& w) const;

  Result finish(Status st, const std::string& msg);

  const Problem& prob_;
  Options opt_;
  int depth_;

  int n_ = 0, m_ = 0, mi_ = 0, N_ = 0;
  std::vector<double> xl_, xu_, cl_, cu_;
  std::vector<int> slack_of_row_, row_of_slack_;
  std::vector<double> lo_, up_;
  std::vector<char> has_lo_, has_up_;
  double obj_scale_ = 1.0;
  std::vector<double> rs_;

  Sparsity jac_, hes_;
  std::vector<double> jval_raw_, jval_, hval_;

  // iterate
  std::vector<double> w_, lam_, zl_, zu_;
  double mu_ = 0.1;
  double f_ = 0.0;
  std::vector<double> grad_, c_;
  std::vector<std::pair<double, double>> filter_;
  double theta_max_ = kInf, theta_min_ = 0.0;
  int iter_ = 0;
  int restorations_ = 0;

  // KKT
  SpMat K_;
  Ldlt ldlt_;
  bool analyzed_ = false;
  std::vector<int> pos_hes_, pos_jac_, pos_slack_, pos_diag_w_, pos_diag_c_;
  double last_delta_w_ = 0.0;
};

void Solver::setup() {
  n_ = prob_.num_variables();
  m_ = prob_.num_constraints();
  xl_.assign(n_, -kInf);
  xu_.assign(n_, kInf);
  cl_.assign(m_, -kInf);
  cu_.assign(m_, kInf);
  prob_.bounds(xl_, xu_, cl_, cu_);
  slack_of_row_.assign(m_, -1);
  row_of_slack_.clear();
  for (int i = 0; i < m_; ++i) {
    if (cl_[i] > cu_[i]) throw std::invalid_argument("row bounds inverted");
    if (cl_[i] != cu_[i]) {
      slack_of_row_[i] = static_cast<int>(row_of_slack_.size());
      row_of_slack_.push_back(i);
    }
  }
  for (int j = 0; j < n_; ++j)
    if (xl_[j] > xu_[j]) throw std::invalid_argument("variable bounds inverted");
  mi_ = static_cast<int>(row_of_slack_.size());
  N_ = n_ + mi_;
  jac_ = prob_.jacobian_structure();
  hes_ = prob_.hessian_structure();
  jval_raw_.resize(jac_.nnz());
  jval_.resize(jac_.nnz());
  hval_.resize(hes_.nnz());
}

void Solver::compute_scaling(std::span<const double> x) {
  obj_scale_ = 1.0;
  rs_.assign(m_, 1.0);
  std::vector<double> g(n_, 0.0);
  prob_.gradient(x, g);
  double gmax = 0.0;
  for (double v : g)
    if (std::isfinite(v)) gmax = std::max(gmax, std::abs(v));
  if (gmax > opt_.max_gradient) obj_scale_ = opt_.max_gradient / gmax;
  prob_.jacobian_values(x, jval_raw_);
  std::vector<double> rmax(m_, 0.0);
  for (size_t k = 0; k < jac_.nnz(); ++k)
    if (std::isfinite(jval_raw_[k])) rmax[jac_.rows[k]] = std::max(rmax[jac_.rows[k]], std::abs(jval_raw_[k]));
  for (int i = 0; i < m_; ++i)
    if (rmax[i] > opt_.max_gradient) rs_[i] = opt_.max_gradient / rmax[i];
}

void Solver::initial_point(std::span<const double> x0, const WarmStart* warm) {
  const double k1 = warm && opt_.warm_start ? opt_.warm_bound_push : opt_.bound_push;
  const double k2 = warm && opt_.warm_start ? opt_.warm_bound_push : opt_.bound_frac;
  auto push = [&](double v, double l, double u) {
    const bool fl = std::isfinite(l), fu = std::isfinite(u);
    if (fl && fu && l == u) return l;
    if (fl) {
      double pl = k1 * std::max(1.0, std::abs(l));
      if (fu) pl = std::min(pl, k2 * (u - l));
      v = std::max(v, l + pl);
    }
    if (fu) {
      double pu = k1 * std::max(1.0, std::abs(u));
      if (fl) pu = std::min(pu, k2 * (u - l));
      v = std::min(v, u - pu);
    }
    return v;
  };
  w_.assign(N_, 0.0);
  lo_.assign(N_, -kInf);
  up_.assign(N_, kInf);
  for (int j = 0; j < n_; ++j) {
    lo_[j] = xl_[j];
    up_[j] = xu_[j];
  }
  for (int k = 0; k < mi_; ++k) {
    const int i = row_of_slack_[k];
    lo_[n_ + k] = cl_[i] * rs_[i];
    up_[n_ + k] = cu_[i] * rs_[i];
  }
  has_lo_.assign(N_, 0);
  has_up_.assign(N_, 0);
  for (int j = 0; j < N_; ++j) {
    has_lo_[j] = std::isfinite(lo_[j]);
    has_up_[j] = std::isfinite(up_[j]);
  }
  if (opt_.bound_relax > 0.0)
    for (int j = 0; j < n_; ++j) {
      if (lo_[j] == up_[j]) continue;
      if (std::isfinite(lo_[j])) lo_[j] -= opt_.bound_relax * std::max(1.0, std::abs(lo_[j]));
      if (std::isfinite(up_[j])) up_[j] += opt_.bound_relax * std::max(1.0, std::abs(up_[j]));
    }
  for (int j = 0; j < n_; ++j) {
    if (std::isfinite(lo_[j]) && lo_[j] == up_[j]) {
      const double r = 1e-8 * std::max(1.0, std::abs(lo_[j]));
      lo_[j] -= r;
      up_[j] += r;
    }
    w_[j] = push(x0[j], lo_[j], up_[j]);
  }
  std::vector<double> cx(m_, 0.0);
  prob_.constraints(std::span<const double>(w_.data(), n_), cx);
  for (int k = 0; k < mi_; ++k) {
    const int i = row_of_slack_[k];
    w_[n_ + k] = push(cx[i] * rs_[i], lo_[n_ + k], up_[n_ + k]);
  }

  lam_.assign(m_, 0.0);
  zl_.assign(N_, 0.0);
  zu_.assign(N_, 0.0);
  mu_ = opt_.mu_init;
  if (warm && opt_.warm_start) {
    for (int i = 0; i < m_ && i < static_cast<int>(warm->lambda.size()); ++i)
      lam_[i] = warm->lambda[i] * obj_scale_ / rs_[i];
    const double floor = mu_;
    for (int j = 0; j < n_; ++j) {
      if (has_lo_[j]) zl_[j] = std::max(j < static_cast<int>(warm->z_l.size()) ? warm->z_l[j] * obj_scale_ : 0.0, floor);
      if (has_up_[j]) zu_[j] = std::max(j < static_cast<int>(warm->z_u.size()) ? warm->z_u[j] * obj_scale_ : 0.0, floor);
    }
    for (int k = 0; k < mi_; ++k) {
      const int i = row_of_slack_[k];
      const int j = n_ + k;
      if (has_lo_[j]) zl_[j] = std::max(-lam_[i], floor);
      if (has_up_[j]) zu_[j] = std::max(lam_[i], floor);
    }
  } else {
    for (int j = 0; j < N_; ++j) {
      if (has_lo_[j]) zl_[j] = 1.0;
      if (has_up_[j]) zu_[j] = 1.0;
    }
  }
}

double Solver::eval_f(const std::vector<double>& w) const {
  return obj_scale_ * prob_.objective(std::span<const double>(w.data(), n_));
}

void Solver::eval_c(const std::vector<double>& w, std::vector<double>& c) const {
  c.assign(m_, 0.0);
  prob_.constraints(std::span<const double>(w.data(), n_), c);
  for (int i = 0; i < m_; ++i) {
    const int k = slack_of_row_[i];
    c[i] *= rs_[i];
    if (k < 0)
      c[i] -= cl_[i] * rs_[i];
    else
      c[i] -= w[n_ + k];
  }
}

void Solver::eval_derivatives() {
  grad_.assign(N_, 0.0);
  prob_.gradient(std::span<const double>(w_.data(), n_), std::span<double>(grad_.data(), n_));
  for (int j = 0; j < n_; ++j) grad_[j] *= obj_scale_;
  prob_.jacobian_values(std::span<const double>(w_.data(), n_), jval_raw_);
  for (size_t k = 0; k < jac_.nnz(); ++k) jval_[k] = rs_[jac_.rows[k]] * jval_raw_[k];
}

bool Solver::evaluate_trial(Trial& t) const {
  t.f = eval_f(t.w);
  if (!std::isfinite(t.f)) return false;
  eval_c(t.w, t.c);
  for (double v : t.c)
    if (!std::isfinite(v)) return false;
  t.theta = theta_of(t.c);
  t.phi = barrier(t.w, t.f);
  return std::isfinite(t.phi);
}

double Solver::barrier(const std::vector<double>& w, double f) const {
  double phi = f;
  for (int j = 0; j < N_; ++j) {
    if (has_lo_[j]) {
      const double s = w[j] - lo_[j];
      if (!(s > 0.0)) return kInf;
      phi -= mu_ * std::log(s);
      if (!has_up_[j]) phi += kKappaD * mu_ * s;
    }
    if (has_up_[j]) {
      const double s = up_[j] - w[j];
      if (!(s > 0.0)) return kInf;
      phi -= mu_ * std::log(s);
      if (!has_lo_[j]) phi += kKappaD * mu_ * s;
    }
  }
  return phi;
}

void Solver::barrier_gradient(std::vector<double>& g) const {
  g = grad_;
  for (int j = 0; j < N_; ++j) {
    if (has_lo_[j]) {
      g[j] -= mu_ / (w_[j] - lo_[j]);
      if (!has_up_[j]) g[j] += kKappaD * mu_;
    }
    if (has_up_[j]) {
      g[j] += mu_ / (up_[j] - w_[j]);
      if (!has_lo_[j]) g[j] -= kKappaD * mu_;
    }
  }
}

double Solver::theta_of(const std::vector<double>& c) const {
  double t = 0.0;
  for (double v : c) t += std::abs(v);
  return t;
}

void Solver::jt_times(const std::vector<double>& v, std::vector<double>& out) const {
  out.assign(N_, 0.0);
  for (size_t k = 0; k < jac_.nnz(); ++k) out[jac_.cols[k]] += jval_[k] * v[jac_.rows[k]];
  for (int k = 0; k < mi_; ++k) out[n_ + k] -= v[row_of_slack_[k]];
}

void Solver::dual_residual(std::vector<double>& r) const {
  jt_times(lam_, r);
  for (int j = 0; j < N_; ++j) r[j] += grad_[j] - zl_[j] + zu_[j];
}

void Solver::errors(double mu, double& dual, double& primal, double& compl_, double& sd, double& sc) const {
  std::vector<double> r;
  dual_residual(r);
  dual = 0.0;
  for (double v : r) dual = std::max(dual, std::abs(v));
  primal = 0.0;
  for (double v : c_) primal = std::max(primal, std::abs(v));
  compl_ = 0.0;
  double zsum = 0.0, lsum = 0.0;
  int nz = 0;
  for (int j = 0; j < N_; ++j) {
    if (has_lo_[j]) {
      compl_ = std::max(compl_, std::abs((w_[j] - lo_[j]) * zl_[j] - mu));
      zsum += std::abs(zl_[j]);
      ++nz;
    }
    if (has_up_[j]) {
      compl_ = std::max(compl_, std::abs((up_[j] - w_[j]) * zu_[j] - mu));
      zsum += std::abs(zu_[j]);
      ++nz;
    }
  }
  for (double v : lam_) lsum += std::abs(v);
  sd = std::max(kSMax, (lsum + zsum) / std::max(1, m_ + nz)) / kSMax;
  sc = std::max(kSMax, zsum / std::max(1, nz)) / kSMax;
}

double Solver::unscaled_violation(std::span<const double> x) const {
  std::vector<double> cx(m_, 0.0);
  prob_.constraints(x, cx);
  double v = 0.0;
  for (int i = 0; i < m_; ++i) {
    if (!std::isfinite(cx[i])) return kInf;
    v = std::max({v, cl_[i] - cx[i], cx[i] - cu_[i]});
  }
  for (int j = 0; j < n_; ++j) v = std::max({v, xl_[j] - x[j], x[j] - xu_[j]});
  return v;
}

void Solver::build_kkt_pattern() {
  const int dim = N_ + m_;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(hes_.nnz() + jac_.nnz() + N_ + 2 * m_);
  for (size_t k = 0; k < hes_.nnz(); ++k) {
    const int r = std::max(hes_.rows[k], hes_.cols[k]);
    const int c = std::min(hes_.rows[k], hes_.cols[k]);
    trips.emplace_back(r, c, 1.0);
  }
  for (int j = 0; j < N_; ++j) trips.emplace_back(j, j, 1.0);
  for (size_t k = 0; k < jac_.nnz(); ++k) trips.emplace_back(N_ + jac_.rows[k], jac_.cols[k], 1.0);
  for (int k = 0; k < mi_; ++k) trips.emplace_back(N_ + row_of_slack_[k], n_ + k, 1.0);
  for (int i = 0; i < m_; ++i) trips.emplace_back(N_ + i, N_ + i, 1.0);
  K_.resize(dim, dim);
  K_.setFromTriplets(trips.begin(), trips.end());
  K_.makeCompressed();
  auto pos = [&](int r, int c) { return static_cast<int>(&K_.coeffRef(r, c) - K_.valuePtr()); };
  pos_hes_.resize(hes_.nnz());
  for (size_t k = 0; k < hes_.nnz(); ++k)
    pos_hes_[k] = pos(std::max(hes_.rows[k], hes_.cols[k]), std::min(hes_.rows[k], hes_.cols[k]));
  pos_diag_w_.resize(N_);
  for (int j = 0; j < N_; ++j) pos_diag_w_[j] = pos(j, j);
  pos_jac_.resize(jac_.nnz());
  for (size_t k = 0; k < jac_.nnz(); ++k) pos_jac_[k] = pos(N_ + jac_.rows[k], jac_.cols[k]);
  pos_slack_.resize(mi_);
  for (int k = 0; k < mi_; ++k) pos_slack_[k] = pos(N_ + row_of_slack_[k], n_ + k);
  pos_diag_c_.resize(m_);
  for (int i = 0; i < m_; ++i) pos_diag_c_[i] = pos(N_ + i, N_ + i);
}

bool Solver::factorize(double delta_w, double delta_c, bool check_inertia) {
  double* v = K_.valuePtr();
  std::fill(v, v + K_.nonZeros(), 0.0);
  for (size_t k = 0; k < hes_.nnz(); ++k) v[pos_hes_[k]] += hval_[k];
  for (int j = 0; j < N_; ++j) {
    double sig = delta_w + kDeltaWFloor;
    if (has_lo_[j]) sig += zl_[j] / (w_[j] - lo_[j]);
    if (has_up_[j]) sig += zu_[j] / (up_[j] - w_[j]);
    v[pos_diag_w_[j]] += sig;
  }
  for (size_t k = 0; k < jac_.nnz(); ++k) v[pos_jac_[k]] += jval_[k];
  for (int k = 0; k < mi_; ++k) v[pos_slack_[k]] += -1.0;
  for (int i = 0; i < m_; ++i) v[pos_diag_c_[i]] += -delta_c;
  if (!analyzed_) {
    ldlt_.analyzePattern(K_);
    analyzed_ = true;
  }
  ldlt_.factorize(K_);
  if (ldlt_.info() != Eigen::Success) return false;
  const Eigen::VectorXd& d = ldlt_.vectorD();
  int pos = 0, neg = 0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (!std::isfinite(d[i])) return false;
    if (d[i] > 0.0)
      ++pos;
    else if (d[i] < 0.0)
      ++neg;
  }
  if (!check_inertia) return pos + neg == d.size();
  return pos == N_ && neg == m_;
}

void Solver::solve_kkt(const Eigen::VectorXd& rhs, Eigen::VectorXd& sol, double /*delta_w*/, double delta_c) {
  sol = ldlt_.solve(rhs);
  // Iterative refinement against the system without the constraint regularization.
  auto residual = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r) {
    r = rhs;
    for (int col = 0; col < K_.outerSize(); ++col) {
      for (SpMat::InnerIterator it(K_, col); it; ++it) {
        const int row = static_cast<int>(it.row());
        r[row] -= it.value() * x[col];
        if (row != col) r[col] -= it.value() * x[row];
      }
    }
    for (int j = 0; j < N_; ++j) r[j] += kDeltaWFloor * x[j];
    for (int i = 0; i < m_; ++i) r[N_ + i] -= delta_c * x[N_ + i];
  };
  Eigen::VectorXd r;
  residual(sol, r);
  double rn = r.lpNorm<Eigen::Infinity>();
  const double scale = std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
  for (int it = 0; it < 10 && rn > 1e-14 * scale; ++it) {
    Eigen::VectorXd cand = sol + ldlt_.solve(r);
    Eigen::VectorXd rc;
    residual(cand, rc);
    const double rcn = rc.lpNorm<Eigen::Infinity>();
    if (!(rcn < 0.9 * rn)) {
      if (rcn < rn) sol = cand;
      break;
    }
    sol = std::move(cand);
    r = std::move(rc);
    rn = rcn;
  }
}

bool Solver::compute_direction(std::vector<double>& dw, std::vector<double>& dlam) {
  std::vector<double> lam_h(m_);
  for (int i = 0; i < m_; ++i) lam_h[i] = lam_[i] * rs_[i];
  prob_.hessian_values(std::span<const double>(w_.data(), n_), obj_scale_, lam_h, hval_);

  double delta_w = 0.0;
  bool ok = factorize(0.0, kDeltaC, true);
  if (!ok) {
    delta_w = last_delta_w_ == 0.0 ? kDeltaWInit : std::max(kDeltaWMin, kKappaWMinus * last_delta_w_);
    while (true) {
      ok = factorize(delta_w, kDeltaC, true);
      if (ok) break;
      delta_w *= (last_delta_w_ == 0.0 ? kKappaWPlusBar : kKappaWPlus);
      if (delta_w > kDeltaWMax) return false;
    }
    last_delta_w_ = delta_w;
  }

  std::vector<double> gphi, atl;
  barrier_gradient(gphi);
  jt_times(lam_, atl);
  Eigen::VectorXd rhs(N_ + m_), sol;
  for (int j = 0; j < N_; ++j) rhs[j] = -(gphi[j] + atl[j]);
  for (int i = 0; i < m_; ++i) rhs[N_ + i] = -c_[i];
  solve_kkt(rhs, sol, delta_w, kDeltaC);
  dw.resize(N_);
  dlam.resize(m_);
  for (int j = 0; j < N_; ++j) dw[j] = sol[j];
  for (int i = 0; i < m_; ++i) dlam[i] = sol[N_ + i];
  for (double v : dw)
    if (!std::isfinite(v)) return false;
  return true;
}

void Solver::bound_steps(const std::vector<double>& dw, std::vector<double>& dzl, std::vector<double>& dzu) const {
  dzl.assign(N_, 0.0);
  dzu.assign(N_, 0.0);
  for (int j = 0; j < N_; ++j) {
    if (has_lo_[j]) {
      const double s = w_[j] - lo_[j];
      dzl[j] = (mu_ - zl_[j] * s - zl_[j] * dw[j]) / s;
    }
    if (has_up_[j]) {
      const double s = up_[j] - w_[j];
      dzu[j] = (mu_ - zu_[j] * s + zu_[j] * dw[j]) / s;
    }
  }
}

double Solver::max_step_primal(const std::vector<double>& w, const std::vector<double>& dw, double tau) const {
  double a = 1.0;
  for (int j = 0; j < N_; ++j) {
    if (has_lo_[j] && dw[j] < 0.0) a = std::min(a, -tau * (w[j] - lo_[j]) / dw[j]);
    if (has_up_[j] && dw[j] > 0.0) a = std::min(a, tau * (up_[j] - w[j]) / dw[j]);
  }
  return a;
}

double Solver::max_step_dual(const std::vector<double>& dzl, const std::vector<double>& dzu, double tau) const {
  double a = 1.0;
  for (int j = 0; j < N_; ++j) {
    if (has_lo_[j] && dzl[j] < 0.0) a = std::min(a, -tau * zl_[j] / dzl[j]);
    if (has_up_[j] && dzu[j] < 0.0) a = std::min(a, -tau * zu_[j] / dzu[j]);
  }
  return a;
}

bool Solver::filter_acceptable(double theta, double phi) const {
  for (const auto& [ft, fp] : filter_)
    if (theta >= ft && phi >= fp) return false;
  return true;
}

void Solver::least_squares_multipliers() {
  lam_.assign(m_, 0.0);
  if (m_ == 0) return;
  // [I A^T; A -dc] [v; lam] = [-(grad - zl + zu); 0]
  std::fill(hval_.begin(), hval_.end(), 0.0);
  std::vector<double> zl0(N_, 0.0), zu0(N_, 0.0);
  std::swap(zl0, zl_);
  std::swap(zu0, zu_);
  const bool ok = factorize(1.0, 1e-8, false);
  std::swap(zl0, zl_);
  std::swap(zu0, zu_);
  if (!ok) return;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N_ + m_), sol;
  for (int j = 0; j < N_; ++j) rhs[j] = -(grad_[j] - zl_[j] + zu_[j]);
  sol = ldlt_.solve(rhs);
  double mx = 0.0;
  for (int i = 0; i < m_; ++i) mx = std::max(mx, std::abs(sol[N_ + i]));
  if (!std::isfinite(mx) || mx > 1e3) return;
  for (int i = 0; i < m_; ++i) lam_[i] = sol[N_ + i];
}

void Solver::reset_bound_multipliers() {
  for (int j = 0; j < N_; ++j) {
    if (has_lo_[j]) zl_[j] = std::min(1e3, mu_ / (w_[j] - lo_[j]));
    if (has_up_[j]) zu_[j] = std::min(1e3, mu_ / (up_[j] - w_[j]));
  }
}

void Solver::clip_bound_multipliers() {
  for (int j = 0; j < N_; ++j) {
    if (has_lo_[j]) {
      const double s = w_[j] - lo_[j];
      zl_[j] = std::max(std::min(zl_[j], kKappaSigma * mu_ / s), mu_ / (kKappaSigma * s));
    }
    if (has_up_[j]) {
      const double s = up_[j] - w_[j];
      zu_[j] = std::max(std::min(zu_[j], kKappaSigma * mu_ / s), mu_ / (kKappaSigma * s));
    }
  }
}

void Solver::candidate_from_x(std::span<const double> x, std::vector<double>& w) const {
  w.assign(N_, 0.0);
  auto inside = [](double v, double l, double u) {
    const bool fl = std::isfinite(l), fu = std::isfinite(u);
    double gap = kInf;
    if (fl && fu) gap = 1e-2 * (u - l);
    if (fl) v = std::max(v, l + std::min(gap, 1e-8 * std::max(1.0, std::abs(l))));
    if (fu) v = std::min(v, u - std::min(gap, 1e-8 * std::max(1.0, std::abs(u))));
    return v;
  };
  for (int j = 0; j < n_; ++j) w[j] = inside(x[j], lo_[j], up_[j]);
  std::vector<double> cx(m_, 0.0);
  prob_.constraints(std::span<const double>(w.data(), n_), cx);
  for (int k = 0; k < mi_; ++k) {
    const int i = row_of_slack_[k];
    w[n_ + k] = inside(cx[i] * rs_[i], lo_[n_ + k], up_[n_ + k]);
  }
}

int Solver::restoration(double theta_cur, double phi_cur) {
  // 0: recovered, 1: locally infeasible, 2: failure
  ++restorations_;
  filter_.emplace_back((1.0 - kGammaTheta) * theta_cur, phi_cur - kGammaPhi * theta_cur);

  std::vector<double> xr(w_.begin(), w_.begin() + n_);
  RestorationProblem rp(prob_, rs_, xr, std::sqrt(mu_));
  const int nr = rp.num_variables();
  std::vector<double> x0(nr, 0.0);
  std::copy(xr.begin(), xr.end(), x0.begin());
  std::vector<double> cx(m_, 0.0);
  prob_.constraints(std::span<const double>(xr.data(), n_), cx);
  const double mur = mu_;
  for (int i = 0; i < m_; ++i) {
    const double c = cx[i] * rs_[i];
    const double l = cl_[i] * rs_[i], u = cu_[i] * rs_[i];
    const double v = c > u ? c - u : (c < l ? c - l : 0.0);
    const double a = (mur - kRhoResto * v) / (2.0 * kRhoResto);
    const double nn = a + std::sqrt(a * a + mur * v / (2.0 * kRhoResto));
    x0[n_ + i] = v + nn;       // p
    x0[n_ + m_ + i] = nn;      // n
  }

  Options ro = opt_;
  ro.restoration = false;
  ro.warm_start = false;
  ro.bound_push = std::min(opt_.bound_push, 1e-8);
  ro.bound_frac = std::min(opt_.bound_frac, 1e-8);
  ro.mu_init = std::max(mu_, 1e-2 * std::min(1.0, theta_cur));
  ro.max_iter = std::max(100, opt_.max_iter / 2);
  ro.print_level = opt_.print_level > 1 ? opt_.print_level : 0;
  std::vector<double> cand;
  Trial found;
  bool have = false;
  ro.stop_test = [&](std::span<const double> xc) {
    candidate_from_x(xc.subspan(0, n_), cand);
    Trial t;
    t.w = cand;
    if (!evaluate_trial(t)) return false;
    if (t.theta <= kKappaResto * theta_cur && filter_acceptable(t.theta, t.phi)) {
      found = std::move(t);
      have = true;
      return true;
    }
    return false;
  };
  Solver child(rp, ro, depth_ + 1);
  Result r = child.run(x0, nullptr);
  if (!have) {
    if (r.ok()) {
      candidate_from_x(std::span<const double>(r.x.data(), n_), cand);
      if (unscaled_violation(std::span<const double>(cand.data(), n_)) > opt_.constr_viol_tol) return 1;
      found.w = cand;
      if (!evaluate_trial(found)) return 2;
    } else {
      return 2;
    }
  }
  w_ = std::move(found.w);
  f_ = found.f;
  c_ = std::move(found.c);
  eval_derivatives();
  reset_bound_multipliers();
  least_squares_multipliers();
  return 0;
}

Result Solver::finish(Status st, const std::string& msg) {
  Result r;
  r.status = st;
  r.message = msg;
  r.x.assign(w_.begin(), w_.begin() + n_);
  r.lambda.assign(m_, 0.0);
  for (int i = 0; i < m_; ++i) r.lambda[i] = lam_[i] * rs_[i] / obj_scale_;
  r.z_l.assign(n_, 0.0);
  r.z_u.assign(n_, 0.0);
  for (int j = 0; j < n_; ++j) {
    r.z_l[j] = zl_[j] / obj_scale_;
    r.z_u[j] = zu_[j] / obj_scale_;
  }
  r.objective = prob_.objective(r.x);
  r.primal_infeasibility = unscaled_violation(r.x);
  double d, p, c, sd, sc;
  errors(0.0, d, p, c, sd, sc);
  r.dual_infeasibility = d / obj_scale_;
  r.complementarity = c / obj_scale_;
  r.final_mu = mu_;
  r.iterations = iter_;
  r.restorations = restorations_;
  return r;
}

Result Solver::run(std::span<const double> x0, const WarmStart* warm) {
  setup();
  if (static_cast<int>(x0.size()) != n_) throw std::invalid_argument("starting point has wrong dimension");
  {
    std::vector<double> xs(x0.begin(), x0.end());
    for (int j = 0; j < n_; ++j) xs[j] = std::clamp(xs[j], xl_[j], xu_[j]);
    compute_scaling(xs);
  }
  initial_point(x0, warm);
  build_kkt_pattern();

  f_ = eval_f(w_);
  eval_c(w_, c_);
  if (!std::isfinite(f_)) return finish(Status::NumericFailure, "objective not finite at the starting point");
  eval_derivatives();
  if (!(warm && opt_.warm_start)) least_squares_multipliers();

  const double theta0 = theta_of(c_);
  theta_max_ = 1e4 * std::max(1.0, theta0);
  theta_min_ = 1e-4 * std::max(1.0, theta0);
  const double mu_floor = opt_.mu_min;
  int acceptable_count = 0;

  std::vector<double> dw, dlam, dzl, dzu, gphi;
  for (iter_ = 0;; ++iter_) {
    double dual, primal, compl_, sd, sc;
    errors(0.0, dual, primal, compl_, sd, sc);
    const double e0 = std::max({dual / sd, primal, compl_ / sc});
    const double viol = unscaled_violation(std::span<const double>(w_.data(), n_));
    if (opt_.print_level > 0)
      std::fprintf(stderr, "%*s%4d f=% .8e inf_pr=%.2e inf_du=%.2e compl=%.2e mu=%.1e\n", 2 * depth_, "", iter_,
                   f_ / obj_scale_, primal, dual, compl_, mu_);
    if (e0 <= opt_.tol && viol <= opt_.constr_viol_tol) return finish(Status::Success, "converged");
    if (e0 <= opt_.acceptable_tol && viol <= std::max(opt_.constr_viol_tol, opt_.acceptable_tol)) {
      if (++acceptable_count >= opt_.acceptable_iter)
        return finish(Status::Acceptable, "converged to acceptable level");
    } else {
      acceptable_count = 0;
    }
    if (iter_ >= opt_.max_iter) return finish(Status::MaxIter, "iteration limit reached");

    // Monotone barrier update.
    while (mu_ > mu_floor) {
      double d2, p2, c2, sd2, sc2;
      errors(mu_, d2, p2, c2, sd2, sc2);
      const double emu = std::max({d2 / sd2, p2, c2 / sc2});
      if (emu > opt_.kappa_eps * mu_) break;
      mu_ = std::max(mu_floor, std::min(opt_.kappa_mu * mu_, std::pow(mu_, opt_.theta_mu)));
      filter_.clear();
    }
    const double tau = std::max(0.99, 1.0 - mu_);

    if (!compute_direction(dw, dlam)) return finish(Status::NumericFailure, "KKT factorization failed");
    bound_steps(dw, dzl, dzu);
    barrier_gradient(gphi);
    double gd = 0.0;
    for (int j = 0; j < N_; ++j) gd += gphi[j] * dw[j];
    const double theta = theta_of(c_);
    const double phi = barrier(w_, f_);

    const double alpha_max = max_step_primal(w_, dw, tau);
    const double alpha_z = max_step_dual(dzl, dzu, tau);

    bool tiny = true;
    for (int j = 0; j < N_; ++j)
      if (std::abs(dw[j]) > 10.0 * kEps * (1.0 + std::abs(w_[j]))) {
        tiny = false;
        break;
      }

    Trial trial;
    double alpha = alpha_max;
    bool accepted = false;
    bool f_type = false;
    if (tiny) {
      trial.w = w_;
      for (int j = 0; j < N_; ++j) trial.w[j] += alpha * dw[j];
      accepted = evaluate_trial(trial);
    }
    double alpha_min = kGammaAlpha * kGammaTheta;
    if (gd < 0.0) {
      alpha_min = std::min(kGammaTheta, kGammaPhi * theta / -gd);
      if (theta <= theta_min_) alpha_min = std::min(alpha_min, kDelta * std::pow(theta, kSTheta) / std::pow(-gd, kSPhi));
      alpha_min *= kGammaAlpha;
    }
    alpha_min = std::max(alpha_min, 1e-16);

    auto acceptable = [&](const Trial& t, double a, bool& ftype) {
      ftype = false;
      if (t.theta > theta_max_) return false;
      if (!filter_acceptable(t.theta, t.phi)) return false;
      const bool switching =
          gd < 0.0 && theta <= theta_min_ && a * std::pow(-gd, kSPhi) > kDelta * std::pow(theta, kSTheta);
      if (switching) {
        ftype = true;
        return t.phi <= phi + kEtaPhi * a * gd + 10.0 * kEps * std::abs(phi);
      }
      return t.theta <= (1.0 - kGammaTheta) * theta || t.phi <= phi - kGammaPhi * theta + 10.0 * kEps * std::abs(phi);
    };

    bool first = true;
    while (!accepted) {
      trial.w = w_;
      for (int j = 0; j < N_; ++j) trial.w[j] += alpha * dw[j];
      if (evaluate_trial(trial) && acceptable(trial, alpha, f_type)) {
        accepted = true;
        break;
      }
      if (first && std::isfinite(trial.theta) && trial.theta >= theta && trial.w.size() == w_.size()) {
        // Second-order correction on the first trial.
        std::vector<double> csoc(m_);
        for (int i = 0; i < m_; ++i) csoc[i] = alpha * c_[i] + trial.c[i];
        double theta_old = trial.theta;
        std::vector<double> atl;
        jt_times(lam_, atl);
        for (int p = 0; p < kMaxSoc; ++p) {
          Eigen::VectorXd rhs(N_ + m_), sol;
          for (int j = 0; j < N_; ++j) rhs[j] = -(gphi[j] + atl[j]);
          for (int i = 0; i < m_; ++i) rhs[N_ + i] = -csoc[i];
          solve_kkt(rhs, sol, 0.0, kDeltaC);
          std::vector<double> dsoc(N_);
          for (int j = 0; j < N_; ++j) dsoc[j] = sol[j];
          const double asoc = max_step_primal(w_, dsoc, tau);
          Trial ts;
          ts.w = w_;
          for (int j = 0; j < N_; ++j) ts.w[j] += asoc * dsoc[j];
          if (!evaluate_trial(ts)) break;
          if (acceptable(ts, alpha, f_type)) {
            trial = std::move(ts);
            alpha = asoc;
            for (int j = 0; j < N_; ++j) dw[j] = dsoc[j];
            for (int i = 0; i < m_; ++i) dlam[i] = sol[N_ + i];
            bound_steps(dw, dzl, dzu);
            accepted = true;
            break;
          }
          if (ts.theta > kKappaSoc * theta_old) break;
          theta_old = ts.theta;
          for (int i = 0; i < m_; ++i) csoc[i] = asoc * csoc[i] + ts.c[i];
        }
        if (accepted) break;
      }
      first = false;
      alpha *= 0.5;
      if (alpha < alpha_min) break;
    }

    if (!accepted) {
      if (depth_ > 0 || !opt_.restoration || theta <= opt_.constr_viol_tol * 1e-2) {
        if (theta <= opt_.constr_viol_tol && e0 <= std::sqrt(opt_.tol))
          return finish(Status::Acceptable, "line search stalled near a solution");
        return finish(Status::NumericFailure, "line search failed");
      }
      const int rc = restoration(theta, phi);
      if (rc == 1) return finish(Status::Infeasible, "restoration converged to an infeasible point");
      if (rc == 2) return finish(Status::NumericFailure, "restoration failed");
      if (opt_.stop_test && opt_.stop_test(std::span<const double>(w_.data(), n_)))
        return finish(Status::UserStop, "stopped by callback");
      continue;
    }

    if (!f_type) filter_.emplace_back((1.0 - kGammaTheta) * theta, phi - kGammaPhi * theta);

    const double az = std::min(alpha_z, max_step_dual(dzl, dzu, tau));
    w_ = std::move(trial.w);
    f_ = trial.f;
    c_ = std::move(trial.c);
    for (int i = 0; i < m_; ++i) lam_[i] += alpha * dlam[i];
    for (int j = 0; j < N_; ++j) {
      zl_[j] += az * dzl[j];
      zu_[j] += az * dzu[j];
    }
    clip_bound_multipliers();
    eval_derivatives();
    if (opt_.stop_test && opt_.stop_test(std::span<const double>(w_.data(), n_)))
      return finish(Status::UserStop, "stopped by callback");
  }
}

}  // namespace

Result solve(const Problem& problem, std::span<const double> x0, const Options& options, const WarmStart* warm) {
  Solver s(problem, options, 0);
  return s.run(x0, warm);
}

}  // namespace tariff::nlp
