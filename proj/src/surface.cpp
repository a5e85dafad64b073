#include <algorithm>
#include <cmath>
#include <string>

#include "spocc/error.hpp"
#include "spocc/learners.hpp"

namespace spocc {

std::string_view to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::none: return "none";
    case LearnerKind::tree: return "tree";
    case LearnerKind::svr: return "svr";
    case LearnerKind::lowrank_gp: return "lowrank_gp";
    case LearnerKind::gmrf: return "gmrf";
  }
  return "unknown";
}

LearnerKind parse_learner_kind(std::string_view name) {
  if (name == "none") return LearnerKind::none;
  if (name == "tree") return LearnerKind::tree;
  if (name == "svr") return LearnerKind::svr;
  if (name == "lowrank_gp" || name == "gp") return LearnerKind::lowrank_gp;
  if (name == "gmrf") return LearnerKind::gmrf;
  throw InvalidArgument("unknown learner kind '" + std::string(name) + "'");
}

namespace {

class ParamReader {
 public:
  explicit ParamReader(const LearnerSpec& spec) : spec_(spec) {}

  void read(const char* key, double& out) {
    used_.push_back(key);
    if (auto it = spec_.hyperparams.find(key); it != spec_.hyperparams.end()) out = it->second;
    if (!std::isfinite(out)) throw InvalidArgument(std::string(key) + " must be finite");
  }

  void read(const char* key, int& out) {
    double value = out;
    read(key, value);
    if (value != std::floor(value)) throw InvalidArgument(std::string(key) + " must be an integer");
    out = static_cast<int>(value);
  }

  void finish() const {
    for (const auto& [key, value] : spec_.hyperparams) {
      if (std::find(used_.begin(), used_.end(), key) == used_.end()) {
        throw InvalidArgument("unknown hyperparameter '" + key + "' for learner " +
                              std::string(to_string(spec_.kind)));
      }
    }
  }

 private:
  const LearnerSpec& spec_;
  std::vector<std::string> used_;
};

void require(bool ok, const char* message) {
  if (!ok) throw InvalidArgument(message);
}

}  // namespace

void validate(const TreeParams& hp) {
  require(hp.complexity >= 0.0 && hp.complexity < 1.0, "tree: complexity must lie in [0, 1)");
  require(hp.leaf_shrinkage >= 0.0, "tree: leaf_shrinkage must be >= 0");
  require(hp.max_depth >= 0, "tree: max_depth must be >= 0");
  require(hp.min_leaf >= 1, "tree: min_leaf must be >= 1");
  require(hp.min_improvement >= 0.0, "tree: min_improvement must be >= 0");
}

TreeParams tree_params(const LearnerSpec& spec) {
  TreeParams hp;
  ParamReader r(spec);
  r.read("max_depth", hp.max_depth);
  r.read("min_leaf", hp.min_leaf);
  r.read("min_improvement", hp.min_improvement);
  r.read("complexity", hp.complexity);
  r.read("leaf_shrinkage", hp.leaf_shrinkage);
  r.finish();
  validate(hp);
  return hp;
}

void validate(const SvrParams& hp) {
  require(hp.C > 0.0, "svr: C must be > 0");
  require(hp.epsilon >= 0.0, "svr: epsilon must be >= 0");
  require(hp.rbf_gamma > 0.0, "svr: rbf_gamma must be > 0");
  require(hp.tol > 0.0, "svr: tol must be > 0");
  require(hp.max_passes >= 1, "svr: max_passes must be >= 1");
}

SvrParams svr_params(const LearnerSpec& spec) {
  SvrParams hp;
  ParamReader r(spec);
  r.read("C", hp.C);
  r.read("epsilon", hp.epsilon);
  r.read("rbf_gamma", hp.rbf_gamma);
  r.read("tol", hp.tol);
  r.read("max_passes", hp.max_passes);
  r.finish();
  validate(hp);
  return hp;
}

void validate(const LowRankGpParams& hp) {
  require(hp.n_knots >= 1, "lowrank_gp: n_knots must be >= 1");
  const int side = static_cast<int>(std::lround(std::sqrt(hp.n_knots)));
  require(side * side == hp.n_knots, "lowrank_gp: n_knots must be a perfect square");
  require(hp.sill_sigma2 > 0.0, "lowrank_gp: sill_sigma2 must be > 0");
  require(hp.nugget_tau2 >= 0.0, "lowrank_gp: nugget_tau2 must be >= 0");
}

LowRankGpParams lowrank_gp_params(const LearnerSpec& spec) {
  LowRankGpParams hp;
  ParamReader r(spec);
  r.read("n_knots", hp.n_knots);
  r.read("range_phi", hp.range_phi);
  r.read("sill_sigma2", hp.sill_sigma2);
  r.read("nugget_tau2", hp.nugget_tau2);
  r.finish();
  validate(hp);
  return hp;
}

void validate(const GmrfParams& hp) {
  require(hp.grid_nx >= 1 && hp.grid_ny >= 1, "gmrf: grid dimensions must be >= 1");
  require(hp.rho > 0.0 && hp.rho < 1.0, "gmrf: rho must lie in (0, 1)");
  require(hp.tau_prec > 0.0, "gmrf: tau_prec must be > 0");
  require(hp.obs_prec > 0.0, "gmrf: obs_prec must be > 0");
}

GmrfParams gmrf_params(const LearnerSpec& spec) {
  GmrfParams hp;
  ParamReader r(spec);
  r.read("grid_nx", hp.grid_nx);
  r.read("grid_ny", hp.grid_ny);
  r.read("rho", hp.rho);
  r.read("tau_prec", hp.tau_prec);
  r.read("obs_prec", hp.obs_prec);
  r.finish();
  validate(hp);
  return hp;
}

void validate(const LearnerSpec& spec) {
  switch (spec.kind) {
    case LearnerKind::none:
      if (!spec.hyperparams.empty()) throw InvalidArgument("learner none takes no hyperparameters");
      return;
    case LearnerKind::tree: tree_params(spec); return;
    case LearnerKind::svr: svr_params(spec); return;
    case LearnerKind::lowrank_gp: lowrank_gp_params(spec); return;
    case LearnerKind::gmrf: gmrf_params(spec); return;
  }
}

BoundingBox BoundingBox::of(std::span<const Point> coords) {
  if (coords.empty()) throw InvalidArgument("bounding box of an empty coordinate set");
  BoundingBox box{coords[0], coords[0]};
  for (const auto& s : coords) {
    for (int a = 0; a < 2; ++a) {
      box.lo[a] = std::min(box.lo[a], s[a]);
      box.hi[a] = std::max(box.hi[a], s[a]);
    }
  }
  return box;
}

double BoundingBox::diagonal() const { return std::hypot(width(), height()); }

BoundingBox BoundingBox::padded() const {
  BoundingBox out = *this;
  const double w = width();
  const double h = height();
  auto widen = [&](int axis, double extent) {
    const double mid = 0.5 * (lo[axis] + hi[axis]);
    out.lo[axis] = mid - 0.5 * extent;
    out.hi[axis] = mid + 0.5 * extent;
  };
  if (w <= 0.0 && h <= 0.0) {
    widen(0, 1.0);
    widen(1, 1.0);
  } else if (w <= 0.0) {
    widen(0, h);
  } else if (h <= 0.0) {
    widen(1, w);
  }
  return out;
}

int GridGeometry::cell_of(Point s) const {
  auto index = [](double v, double lo, double hi, int n) {
    const double t = (v - lo) / (hi - lo);
    const int i = static_cast<int>(std::floor(t * n));
    return std::clamp(i, 0, n - 1);
  };
  const int ix = index(s[0], box.lo[0], box.hi[0], nx);
  const int iy = index(s[1], box.lo[1], box.hi[1], ny);
  return ix + nx * iy;
}

Point GridGeometry::center(int cell) const {
  const int ix = cell % nx;
  const int iy = cell / nx;
  return {box.lo[0] + (ix + 0.5) * box.width() / nx, box.lo[1] + (iy + 0.5) * box.height() / ny};
}

int TreeModel::num_leaves() const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(),
                                        [](const TreeNode& n) { return n.axis < 0; }));
}

int TreeModel::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> d(nodes.size(), 0);
  int deepest = 0;
  // children are always appended after their parent
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (nodes[i].axis >= 0) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

double rbf_kernel(Point a, Point b, double gamma) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  return std::exp(-gamma * (dx * dx + dy * dy));
}

double exponential_covariance(Point a, Point b, double range_phi, double sill_sigma2) {
  return sill_sigma2 * std::exp(-std::hypot(a[0] - b[0], a[1] - b[1]) / range_phi);
}

LearnerKind FittedSurface::kind() const {
  switch (model_.index()) {
    case 1: return LearnerKind::tree;
    case 2: return LearnerKind::svr;
    case 3: return LearnerKind::lowrank_gp;
    case 4: return LearnerKind::gmrf;
    default: return LearnerKind::none;
  }
}

namespace {

struct PointEvaluator {
  Point s;

  double operator()(const ZeroModel&) const { return 0.0; }

  double operator()(const TreeModel& m) const {
    if (m.nodes.empty()) return 0.0;
    int i = 0;
    while (m.nodes[static_cast<std::size_t>(i)].axis >= 0) {
      const auto& node = m.nodes[static_cast<std::size_t>(i)];
      i = s[static_cast<std::size_t>(node.axis)] <= node.threshold ? node.left : node.right;
    }
    return m.nodes[static_cast<std::size_t>(i)].value;
  }

  double operator()(const SvrModel& m) const {
    double sum = m.bias;
    for (std::size_t k = 0; k < m.support.size(); ++k) sum += m.coef[k] * rbf_kernel(m.support[k], s, m.gamma);
    return sum;
  }

  double operator()(const LowRankGpModel& m) const {
    double sum = 0.0;
    for (std::size_t k = 0; k < m.knots.size(); ++k) {
      sum += m.weights(static_cast<Eigen::Index>(k)) *
             exponential_covariance(s, m.knots[k], m.range_phi, m.sill_sigma2);
    }
    return sum;
  }

  double operator()(const GmrfModel& m) const { return m.effects(m.grid.cell_of(s)); }
};

}  // namespace

double FittedSurface::predict(Point s) const {
  if (!std::isfinite(s[0]) || !std::isfinite(s[1])) throw InvalidArgument("predict: non-finite coordinate");
  return std::visit(PointEvaluator{s}, model_);
}

std::vector<double> predict(const FittedSurface& surface, std::span<const Point> coords) {
  std::vector<double> out;
  out.reserve(coords.size());
  for (const auto& s : coords) out.push_back(surface.predict(s));
  return out;
}

std::vector<Point> knot_grid(const BoundingBox& box, int n_knots) {
  const int side = static_cast<int>(std::lround(std::sqrt(n_knots)));
  if (side * side != n_knots || side < 1) throw InvalidArgument("knot count must be a perfect square");
  const GridGeometry grid{box.padded(), side, side};
  std::vector<Point> knots;
  knots.reserve(static_cast<std::size_t>(n_knots));
  for (int c = 0; c < grid.num_cells(); ++c) knots.push_back(grid.center(c));
  return knots;
}

Eigen::SparseMatrix<double> car_precision(int nx, int ny, double rho, double tau) {
  const int n = nx * ny;
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(5 * n));
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const int c = ix + nx * iy;
      int degree = 0;
      auto link = [&](int jx, int jy) {
        if (jx < 0 || jy < 0 || jx >= nx || jy >= ny) return;
        ++degree;
        entries.emplace_back(c, jx + nx * jy, -tau * rho);
      };
      link(ix - 1, iy);
      link(ix + 1, iy);
      link(ix, iy - 1);
      link(ix, iy + 1);
      // an isolated cell (1x1 grid) keeps unit degree so Q stays invertible
      entries.emplace_back(c, c, tau * std::max(degree, 1));
    }
  }
  Eigen::SparseMatrix<double> q(n, n);
  q.setFromTriplets(entries.begin(), entries.end());
  return q;
}

}  // namespace spocc
