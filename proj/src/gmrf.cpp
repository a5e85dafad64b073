#include <Eigen/SparseCholesky>

#include "learner_impl.hpp"
#include "spocc/error.hpp"

namespace spocc::detail {
namespace {

// Posterior mode of lattice effects u under a proper-CAR prior:
//   (Q + obs_prec A'A) u = obs_prec A' r.
class BoundGmrf final : public BoundLearner {
 public:
  BoundGmrf(std::vector<Point> coords, const GmrfParams& hp) : BoundLearner(std::move(coords)), hp_(hp) {
    grid_ = GridGeometry{BoundingBox::of(coords_).padded(), hp.grid_nx, hp.grid_ny};
    cells_.reserve(coords_.size());
    Eigen::SparseMatrix<double> system = car_precision(hp.grid_nx, hp.grid_ny, hp.rho, hp.tau_prec);
    for (const auto& s : coords_) {
      const int c = grid_.cell_of(s);
      cells_.push_back(c);
      system.coeffRef(c, c) += hp.obs_prec;
    }
    factor_.compute(system);
    if (factor_.info() != Eigen::Success) throw LinearAlgebraError("gmrf: precision factorization failed");
  }

  LearnerKind kind() const override { return LearnerKind::gmrf; }

  FittedSurface fit(std::span<const double> targets) const override {
    check_targets(targets);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(grid_.num_cells());
    for (std::size_t i = 0; i < targets.size(); ++i) rhs(cells_[i]) += hp_.obs_prec * targets[i];
    GmrfModel model{grid_, factor_.solve(rhs)};
    return FittedSurface(std::move(model), BoundingBox::of(coords_));
  }

  const std::vector<int>& cells() const { return cells_; }

 private:
  GmrfParams hp_;
  GridGeometry grid_;
  std::vector<int> cells_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> factor_;
};

}  // namespace

std::unique_ptr<BoundLearner> bind_gmrf(std::vector<Point> coords, const GmrfParams& hp) {
  return std::make_unique<BoundGmrf>(std::move(coords), hp);
}

}  // namespace spocc::detail
