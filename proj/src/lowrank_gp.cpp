#include <string>

#include "learner_impl.hpp"
#include "spocc/error.hpp"
#include "spocc/kernels.hpp"

namespace spocc::detail {
namespace {

// Predictive-process regression: f(s) = b(s)'w where b(s) holds the
// covariances between s and the knots, and
//   w = (B'B + tau2 K)^{-1} B' r.
// B, K and the Cholesky factor depend only on the coordinates.
class BoundLowRankGp final : public BoundLearner {
 public:
  BoundLowRankGp(std::vector<Point> coords, const LowRankGpParams& hp) : BoundLearner(std::move(coords)) {
    const BoundingBox box = BoundingBox::of(coords_).padded();
    knots_ = knot_grid(box, hp.n_knots);
    range_ = hp.range_phi > 0.0 ? hp.range_phi : 0.3 * box.diagonal();
    sill_ = hp.sill_sigma2;
    basis_ = kernels::exponential_cross_covariance(coords_, knots_, range_, sill_);
    const Eigen::MatrixXd knot_cov = kernels::exponential_cross_covariance(knots_, knots_, range_, sill_);
    const Eigen::MatrixXd system = basis_.transpose() * basis_ + hp.nugget_tau2 * knot_cov;
    factor_.compute(system);
    const Eigen::VectorXd d = Eigen::MatrixXd(factor_.matrixL()).diagonal();
    if (factor_.info() != Eigen::Success || !d.allFinite() ||
        d.minCoeff() * d.minCoeff() <= 1e-13 * d.maxCoeff() * d.maxCoeff()) {
      throw LinearAlgebraError("lowrank_gp: knot system is singular (" + std::to_string(knots_.size()) +
                               " knots, " + std::to_string(coords_.size()) + " sites)");
    }
  }

  LearnerKind kind() const override { return LearnerKind::lowrank_gp; }

  FittedSurface fit(std::span<const double> targets) const override {
    check_targets(targets);
    const Eigen::Map<const Eigen::VectorXd> r(targets.data(), static_cast<Eigen::Index>(targets.size()));
    LowRankGpModel model;
    model.knots = knots_;
    model.weights = factor_.solve(basis_.transpose() * r);
    model.range_phi = range_;
    model.sill_sigma2 = sill_;
    return FittedSurface(std::move(model), BoundingBox::of(coords_));
  }

 private:
  std::vector<Point> knots_;
  double range_ = 1.0;
  double sill_ = 1.0;
  Eigen::MatrixXd basis_;
  Eigen::LLT<Eigen::MatrixXd> factor_;
};

}  // namespace

std::unique_ptr<BoundLearner> bind_lowrank_gp(std::vector<Point> coords, const LowRankGpParams& hp) {
  return std::make_unique<BoundLowRankGp>(std::move(coords), hp);
}

}  // namespace spocc::detail
