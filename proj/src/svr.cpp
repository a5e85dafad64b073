#include <cmath>
#include <limits>
#include <string>

#include "learner_impl.hpp"
#include "spocc/error.hpp"
#include "spocc/kernels.hpp"

namespace spocc::detail {
namespace {

constexpr double kTau = 1e-12;

// epsilon-SVR dual in the 2n-variable form
//   min 0.5 a'Qa + p'a  s.t.  y'a = 0, 0 <= a <= C,
// with a = (alpha, alpha*), y = (+1.., -1..), p = (eps - t, eps + t) and
// Q_st = y_s y_t K. Solved by SMO with second-order working-set selection.
class SmoSolver {
 public:
  SmoSolver(const Eigen::MatrixXd& kernel, std::span<const double> targets, const SvrParams& hp)
      : k_(kernel), n_(static_cast<int>(targets.size())), c_(hp.C) {
    const int l = 2 * n_;
    alpha_.assign(static_cast<std::size_t>(l), 0.0);
    grad_.resize(static_cast<std::size_t>(l));
    for (int i = 0; i < n_; ++i) {
      grad_[static_cast<std::size_t>(i)] = hp.epsilon - targets[static_cast<std::size_t>(i)];
      grad_[static_cast<std::size_t>(i + n_)] = hp.epsilon + targets[static_cast<std::size_t>(i)];
    }
  }

  // Returns the final maximal violating-pair gap.
  double solve(double tol, long max_iter, long& iterations) {
    iterations = 0;
    while (true) {
      int i = -1;
      int j = -1;
      const double gap = select(i, j);
      if (gap < tol || j < 0) return std::max(gap, 0.0);
      if (iterations >= max_iter) return gap;
      step(i, j);
      ++iterations;
    }
  }

  double coefficient(int i) const {
    return alpha_[static_cast<std::size_t>(i)] - alpha_[static_cast<std::size_t>(i + n_)];
  }

  // Threshold rho of the decision function sum beta_i K(x_i, x) - rho.
  double rho() const {
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    int n_free = 0;
    for (int t = 0; t < 2 * n_; ++t) {
      const double yg = sign(t) * g(t);
      if (at_upper(t)) {
        if (sign(t) < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
      } else if (at_lower(t)) {
        if (sign(t) > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
      } else {
        ++n_free;
        sum_free += yg;
      }
    }
    return n_free > 0 ? sum_free / n_free : 0.5 * (ub + lb);
  }

 private:
  double sign(int t) const { return t < n_ ? 1.0 : -1.0; }
  int sample(int t) const { return t < n_ ? t : t - n_; }
  double a(int t) const { return alpha_[static_cast<std::size_t>(t)]; }
  double g(int t) const { return grad_[static_cast<std::size_t>(t)]; }
  bool at_upper(int t) const { return a(t) >= c_; }
  bool at_lower(int t) const { return a(t) <= 0.0; }
  double kern(int s, int t) const { return k_(sample(s), sample(t)); }
  double q(int s, int t) const { return sign(s) * sign(t) * kern(s, t); }

  double select(int& out_i, int& out_j) const {
    const int l = 2 * n_;
    double gmax = -std::numeric_limits<double>::infinity();
    double gmax2 = -std::numeric_limits<double>::infinity();
    int gmax_idx = -1;
    for (int t = 0; t < l; ++t) {
      if (sign(t) > 0) {
        if (!at_upper(t) && -g(t) >= gmax) { gmax = -g(t); gmax_idx = t; }
      } else {
        if (!at_lower(t) && g(t) >= gmax) { gmax = g(t); gmax_idx = t; }
      }
    }
    out_i = gmax_idx;
    if (gmax_idx < 0) return 0.0;
    const int i = gmax_idx;
    const double qd_i = kern(i, i);
    double obj_min = std::numeric_limits<double>::infinity();
    int gmin_idx = -1;
    for (int t = 0; t < l; ++t) {
      const double qd_t = kern(t, t);
      if (sign(t) > 0) {
        if (at_lower(t)) continue;
        const double diff = gmax + g(t);
        gmax2 = std::max(gmax2, g(t));
        if (diff > 0.0) {
          double quad = qd_i + qd_t - 2.0 * sign(i) * q(i, t);
          if (quad <= 0.0) quad = kTau;
          const double obj = -(diff * diff) / quad;
          if (obj <= obj_min) { gmin_idx = t; obj_min = obj; }
        }
      } else {
        if (at_upper(t)) continue;
        const double diff = gmax - g(t);
        gmax2 = std::max(gmax2, -g(t));
        if (diff > 0.0) {
          double quad = qd_i + qd_t + 2.0 * sign(i) * q(i, t);
          if (quad <= 0.0) quad = kTau;
          const double obj = -(diff * diff) / quad;
          if (obj <= obj_min) { gmin_idx = t; obj_min = obj; }
        }
      }
    }
    out_j = gmin_idx;
    return gmax + gmax2;
  }

  void step(int i, int j) {
    auto& ai = alpha_[static_cast<std::size_t>(i)];
    auto& aj = alpha_[static_cast<std::size_t>(j)];
    const double old_i = ai;
    const double old_j = aj;
    const double qij = q(i, j);
    if (sign(i) != sign(j)) {
      double quad = kern(i, i) + kern(j, j) + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-g(i) - g(j)) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) { aj = 0.0; ai = diff; }
      } else {
        if (ai < 0.0) { ai = 0.0; aj = -diff; }
      }
      if (diff > 0.0) {
        if (ai > c_) { ai = c_; aj = c_ - diff; }
      } else {
        if (aj > c_) { aj = c_; ai = c_ + diff; }
      }
    } else {
      double quad = kern(i, i) + kern(j, j) - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (g(i) - g(j)) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > c_) {
        if (ai > c_) { ai = c_; aj = sum - c_; }
      } else {
        if (aj < 0.0) { aj = 0.0; ai = sum; }
      }
      if (sum > c_) {
        if (aj > c_) { aj = c_; ai = sum - c_; }
      } else {
        if (ai < 0.0) { ai = 0.0; aj = sum; }
      }
    }
    const double di = ai - old_i;
    const double dj = aj - old_j;
    // Q_ti = y_t y_i K: the alpha half gets +u, the alpha* half gets -u
    const double* ki = k_.col(sample(i)).data();
    const double* kj = k_.col(sample(j)).data();
    const double wi = sign(i) * di;
    const double wj = sign(j) * dj;
    double* g_alpha = grad_.data();
    double* g_star = grad_.data() + n_;
    for (int t = 0; t < n_; ++t) {
      const double u = wi * ki[t] + wj * kj[t];
      g_alpha[t] += u;
      g_star[t] -= u;
    }
  }

  const Eigen::MatrixXd& k_;
  int n_;
  double c_;
  std::vector<double> alpha_;
  std::vector<double> grad_;
};

class BoundSvr final : public BoundLearner {
 public:
  BoundSvr(std::vector<Point> coords, const SvrParams& hp)
      : BoundLearner(std::move(coords)), hp_(hp), kernel_(kernels::rbf_gram(coords_, hp.rbf_gamma)) {}

  LearnerKind kind() const override { return LearnerKind::svr; }

  FittedSurface fit(std::span<const double> targets) const override {
    check_targets(targets);
    const int n = static_cast<int>(targets.size());
    SmoSolver solver(kernel_, targets, hp_);
    long iterations = 0;
    const long budget = static_cast<long>(hp_.max_passes) * n;
    const double gap = solver.solve(hp_.tol, budget, iterations);
    if (gap >= hp_.tol) {
      throw ConvergenceError("svr: SMO stopped after " + std::to_string(iterations) +
                                 " iterations with KKT violation " + std::to_string(gap),
                             gap);
    }
    SvrModel model;
    model.gamma = hp_.rbf_gamma;
    model.bias = -solver.rho();
    model.kkt_violation = gap;
    model.iterations = iterations;
    for (int i = 0; i < n; ++i) {
      const double beta = solver.coefficient(i);
      if (beta != 0.0) {
        model.support.push_back(coords_[static_cast<std::size_t>(i)]);
        model.coef.push_back(beta);
      }
    }
    return FittedSurface(std::move(model), BoundingBox::of(coords_));
  }

 private:
  SvrParams hp_;
  Eigen::MatrixXd kernel_;
};

}  // namespace

std::unique_ptr<BoundLearner> bind_svr(std::vector<Point> coords, const SvrParams& hp) {
  return std::make_unique<BoundSvr>(std::move(coords), hp);
}

}  // namespace spocc::detail
