#include <cmath>
#include <string>

#include "learner_impl.hpp"
#include "spocc/error.hpp"

namespace spocc {

BoundLearner::BoundLearner(std::vector<Point> coords) : coords_(std::move(coords)) {
  if (coords_.empty()) throw InvalidArgument("learner: no training coordinates");
  for (const auto& s : coords_) {
    if (!std::isfinite(s[0]) || !std::isfinite(s[1])) throw InvalidArgument("learner: non-finite coordinate");
  }
}

void BoundLearner::check_targets(std::span<const double> targets) const {
  if (targets.size() != coords_.size()) {
    throw ShapeError("learner: " + std::to_string(targets.size()) + " targets for " +
                     std::to_string(coords_.size()) + " coordinates");
  }
  for (double t : targets) {
    if (!std::isfinite(t)) throw InvalidArgument("learner: non-finite target");
  }
}

namespace {

class BoundZero final : public BoundLearner {
 public:
  explicit BoundZero(std::vector<Point> coords) : BoundLearner(std::move(coords)) {}
  LearnerKind kind() const override { return LearnerKind::none; }
  FittedSurface fit(std::span<const double> targets) const override {
    check_targets(targets);
    return FittedSurface(ZeroModel{}, BoundingBox::of(coords_));
  }
};

std::vector<Point> copy(std::span<const Point> coords) { return {coords.begin(), coords.end()}; }

}  // namespace

std::unique_ptr<BoundLearner> bind_learner(const LearnerSpec& spec, std::vector<Point> coords) {
  switch (spec.kind) {
    case LearnerKind::none:
      validate(spec);
      return std::make_unique<BoundZero>(std::move(coords));
    case LearnerKind::tree: return detail::bind_tree(std::move(coords), tree_params(spec));
    case LearnerKind::svr: return detail::bind_svr(std::move(coords), svr_params(spec));
    case LearnerKind::lowrank_gp: return detail::bind_lowrank_gp(std::move(coords), lowrank_gp_params(spec));
    case LearnerKind::gmrf: return detail::bind_gmrf(std::move(coords), gmrf_params(spec));
  }
  throw InvalidArgument("unknown learner kind");
}

FittedSurface fit_tree(std::span<const Point> coords, std::span<const double> targets, const TreeParams& hp) {
  validate(hp);
  return detail::bind_tree(copy(coords), hp)->fit(targets);
}

FittedSurface fit_svr(std::span<const Point> coords, std::span<const double> targets, const SvrParams& hp) {
  validate(hp);
  return detail::bind_svr(copy(coords), hp)->fit(targets);
}

FittedSurface fit_lowrank_gp(std::span<const Point> coords, std::span<const double> targets,
                             const LowRankGpParams& hp) {
  validate(hp);
  return detail::bind_lowrank_gp(copy(coords), hp)->fit(targets);
}

FittedSurface fit_gmrf(std::span<const Point> coords, std::span<const double> targets, const GmrfParams& hp) {
  validate(hp);
  return detail::bind_gmrf(copy(coords), hp)->fit(targets);
}

FittedSurface fit(const LearnerSpec& spec, std::span<const Point> coords, std::span<const double> targets) {
  return bind_learner(spec, copy(coords))->fit(targets);
}

}  // namespace spocc
