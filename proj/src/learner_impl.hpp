#pragma once

#include <memory>
#include <vector>

#include "spocc/learners.hpp"

namespace spocc::detail {

std::unique_ptr<BoundLearner> bind_tree(std::vector<Point> coords, const TreeParams& hp);
std::unique_ptr<BoundLearner> bind_svr(std::vector<Point> coords, const SvrParams& hp);
std::unique_ptr<BoundLearner> bind_lowrank_gp(std::vector<Point> coords, const LowRankGpParams& hp);
std::unique_ptr<BoundLearner> bind_gmrf(std::vector<Point> coords, const GmrfParams& hp);

}  // namespace spocc::detail
