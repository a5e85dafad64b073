#pragma once

// Spatial regressors used to approximate f(s). Each learner fits real-valued
// targets observed at 2-D coordinates and returns an immutable FittedSurface
// that can be evaluated anywhere in the plane.

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "spocc/model.hpp"

namespace spocc {

enum class LearnerKind { none, tree, svr, lowrank_gp, gmrf };

std::string_view to_string(LearnerKind kind);
// Accepts the canonical names plus the short alias "gp" for lowrank_gp.
LearnerKind parse_learner_kind(std::string_view name);

struct LearnerSpec {
  LearnerKind kind = LearnerKind::none;
  std::map<std::string, double> hyperparams;
};

struct TreeParams {
  int max_depth = 6;
  int min_leaf = 10;
  double min_improvement = 1e-6;
  // A split must also gain at least complexity x (root-node SSE).
  double complexity = 0.01;
  // Pseudo-count pulling leaf values toward 0: value = sum / (count + shrinkage).
  double leaf_shrinkage = 1.0;
};

struct SvrParams {
  double C = 1.0;
  double epsilon = 0.1;
  double rbf_gamma = 10.0;
  double tol = 1e-4;
  // Iteration budget of the SMO solver, in units of the sample count.
  int max_passes = 1000;
};

struct LowRankGpParams {
  int n_knots = 100;  // must be a perfect square; knots form a regular grid
  double range_phi = 0.0;  // <= 0 selects 0.3 x bounding-box diagonal
  double sill_sigma2 = 1.0;
  double nugget_tau2 = 0.1;
};

struct GmrfParams {
  int grid_nx = 15;
  int grid_ny = 15;
  double rho = 0.99;
  double tau_prec = 1.0;
  double obs_prec = 10.0;
};

// Resolve a spec's key/value hyperparameters over the defaults. Unknown keys
// and out-of-range values raise InvalidArgument.
TreeParams tree_params(const LearnerSpec& spec);
SvrParams svr_params(const LearnerSpec& spec);
LowRankGpParams lowrank_gp_params(const LearnerSpec& spec);
GmrfParams gmrf_params(const LearnerSpec& spec);
void validate(const LearnerSpec& spec);
void validate(const TreeParams& hp);
void validate(const SvrParams& hp);
void validate(const LowRankGpParams& hp);
void validate(const GmrfParams& hp);

struct BoundingBox {
  Point lo{0.0, 0.0};
  Point hi{0.0, 0.0};

  static BoundingBox of(std::span<const Point> coords);
  double width() const { return hi[0] - lo[0]; }
  double height() const { return hi[1] - lo[1]; }
  double diagonal() const;
  // Widens zero-extent axes so grids and knot layouts stay non-degenerate:
  // a flat axis takes the other axis' extent, or 1 if both are flat.
  BoundingBox padded() const;
};

// Regular nx x ny lattice over a box; cells are indexed column-major in x
// (cell = ix + nx * iy).
struct GridGeometry {
  BoundingBox box;
  int nx = 1;
  int ny = 1;

  int num_cells() const { return nx * ny; }
  // Coordinates outside the box map to the nearest edge cell.
  int cell_of(Point s) const;
  Point center(int cell) const;
};

struct TreeNode {
  int axis = -1;  // -1 marks a leaf
  double threshold = 0.0;  // go left when coord[axis] <= threshold
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf mean (also kept on internal nodes)
  int count = 0;
};

struct TreeModel {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  int num_leaves() const;
  int depth() const;
};

struct SvrModel {
  std::vector<Point> support;
  std::vector<double> coef;  // alpha_i - alpha_i^* for each support point
  double bias = 0.0;
  double gamma = 1.0;
  double kkt_violation = 0.0;
  long iterations = 0;
};

struct LowRankGpModel {
  std::vector<Point> knots;
  Eigen::VectorXd weights;
  double range_phi = 1.0;
  double sill_sigma2 = 1.0;
};

struct GmrfModel {
  GridGeometry grid;
  Eigen::VectorXd effects;
};

struct ZeroModel {};

class FittedSurface {
 public:
  using Model = std::variant<ZeroModel, TreeModel, SvrModel, LowRankGpModel, GmrfModel>;

  FittedSurface() = default;
  FittedSurface(Model model, BoundingBox training_box)
      : model_(std::move(model)), box_(training_box) {}

  LearnerKind kind() const;
  const Model& model() const { return model_; }
  const BoundingBox& training_box() const { return box_; }

  double predict(Point s) const;

 private:
  Model model_;
  BoundingBox box_;
};

// Throws InvalidArgument on non-finite coordinates.
std::vector<double> predict(const FittedSurface& surface, std::span<const Point> coords);

double rbf_kernel(Point a, Point b, double gamma);
double exponential_covariance(Point a, Point b, double range_phi, double sill_sigma2);

// A learner tied to one set of training coordinates. Everything that depends
// only on the coordinates (sort orders, kernel matrices, factorizations) is
// computed once, so refitting to new targets is cheap. fit() is const and
// deterministic.
class BoundLearner {
 public:
  virtual ~BoundLearner() = default;
  virtual LearnerKind kind() const = 0;
  virtual FittedSurface fit(std::span<const double> targets) const = 0;
  const std::vector<Point>& coords() const { return coords_; }

 protected:
  explicit BoundLearner(std::vector<Point> coords);
  void check_targets(std::span<const double> targets) const;
  std::vector<Point> coords_;
};

std::unique_ptr<BoundLearner> bind_learner(const LearnerSpec& spec, std::vector<Point> coords);

FittedSurface fit_tree(std::span<const Point> coords, std::span<const double> targets,
                       const TreeParams& hp = {});
FittedSurface fit_svr(std::span<const Point> coords, std::span<const double> targets,
                      const SvrParams& hp = {});
FittedSurface fit_lowrank_gp(std::span<const Point> coords, std::span<const double> targets,
                             const LowRankGpParams& hp = {});
FittedSurface fit_gmrf(std::span<const Point> coords, std::span<const double> targets,
                       const GmrfParams& hp = {});
FittedSurface fit(const LearnerSpec& spec, std::span<const Point> coords,
                  std::span<const double> targets);

// Knot layout used by the low-rank GP: a side x side grid of cell centres
// over the (padded) box.
std::vector<Point> knot_grid(const BoundingBox& box, int n_knots);

// Proper-CAR precision tau * (D - rho W) on a rook-adjacency lattice.
Eigen::SparseMatrix<double> car_precision(int nx, int ny, double rho, double tau);

}  // namespace spocc
