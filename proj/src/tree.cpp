#include <algorithm>
#include <array>
#include <utility>
#include <numeric>

#include "learner_impl.hpp"

namespace spocc::detail {
namespace {

struct Candidate {
  int axis = -1;
  int left_count = 0;  // number of members (in axis order) sent left
  double threshold = 0.0;
  double gain = 0.0;
};

class BoundTree final : public BoundLearner {
 public:
  BoundTree(std::vector<Point> coords, const TreeParams& hp) : BoundLearner(std::move(coords)), hp_(hp) {
    const int n = static_cast<int>(coords_.size());
    for (int axis = 0; axis < 2; ++axis) {
      std::vector<int> order(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return coords_[static_cast<std::size_t>(a)][static_cast<std::size_t>(axis)] <
               coords_[static_cast<std::size_t>(b)][static_cast<std::size_t>(axis)];
      });
      order_[static_cast<std::size_t>(axis)] = std::move(order);
    }
  }

  LearnerKind kind() const override { return LearnerKind::tree; }

  FittedSurface fit(std::span<const double> targets) const override {
    check_targets(targets);
    TreeModel model;
    Orders sorted = order_;
    double mean = 0.0;
    for (double t : targets) mean += t;
    mean /= static_cast<double>(targets.size());
    double root_sse = 0.0;
    for (double t : targets) root_sse += (t - mean) * (t - mean);
    const double min_gain = std::max(hp_.min_improvement, hp_.complexity * root_sse);
    std::vector<char> flag(coords_.size(), 0);
    grow(model, std::move(sorted), 0, targets, min_gain, flag);
    return FittedSurface(std::move(model), BoundingBox::of(coords_));
  }

 private:
  double coord(int i, int axis) const {
    return coords_[static_cast<std::size_t>(i)][static_cast<std::size_t>(axis)];
  }

  using Orders = std::array<std::vector<int>, 2>;

  // Best single split of a member set given its per-axis orderings. Only
  // splits with positive gain are returned; axis -1 means none.
  Candidate best_split(const Orders& sorted, std::span<const double> y, double total) const {
    Candidate best;
    const int n = static_cast<int>(sorted[0].size());
    if (n < 2 * hp_.min_leaf) return best;
    const double base = total * total / n;
    for (int axis = 0; axis < 2; ++axis) {
      const auto& order = sorted[static_cast<std::size_t>(axis)];
      double left_sum = 0.0;
      for (int k = 0; k + 1 < n; ++k) {
        left_sum += y[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
        const int nl = k + 1;
        const int nr = n - nl;
        if (nl < hp_.min_leaf) continue;
        if (nr < hp_.min_leaf) break;
        const double lo = coord(order[static_cast<std::size_t>(k)], axis);
        const double hi = coord(order[static_cast<std::size_t>(k + 1)], axis);
        if (!(lo < hi)) continue;
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - base;
        if (gain > best.gain) {
          double threshold = lo + 0.5 * (hi - lo);
          if (!(threshold < hi)) threshold = lo;
          best = Candidate{axis, nl, threshold, gain};
        }
      }
    }
    return best;
  }

  // Splits `sorted` by the first `left_count` members along `axis`, keeping
  // both orderings of each side.
  std::pair<Orders, Orders> partition(const Orders& sorted, int axis, int left_count, std::vector<char>& flag) const {
    const auto& primary = sorted[static_cast<std::size_t>(axis)];
    for (std::size_t k = 0; k < primary.size(); ++k) {
      flag[static_cast<std::size_t>(primary[k])] = static_cast<char>(static_cast<int>(k) < left_count);
    }
    Orders left;
    Orders right;
    for (int a = 0; a < 2; ++a) {
      const auto ua = static_cast<std::size_t>(a);
      left[ua].reserve(static_cast<std::size_t>(left_count));
      right[ua].reserve(primary.size() - static_cast<std::size_t>(left_count));
      for (int i : sorted[ua]) (flag[static_cast<std::size_t>(i)] ? left[ua] : right[ua]).push_back(i);
    }
    return {std::move(left), std::move(right)};
  }

  double sum_of(const std::vector<int>& members, std::span<const double> y) const {
    double total = 0.0;
    for (int i : members) total += y[static_cast<std::size_t>(i)];
    return total;
  }

  // Gain a child would realise with its own best split, or 0 if it stays a leaf.
  double child_gain(const Orders& sorted, std::span<const double> y, double min_gain) const {
    const Candidate c = best_split(sorted, y, sum_of(sorted[0], y));
    return c.axis >= 0 && c.gain >= min_gain ? c.gain : 0.0;
  }

  // With two or more levels left, a split is chosen by its own gain plus the
  // best gains of the two children it creates, so depth-2 trees are optimal
  // and splits whose value only shows one level down (checkerboards) are found.
  Candidate lookahead_split(const Orders& sorted, std::span<const double> y, double total, double min_gain,
                            std::vector<char>& flag) const {
    Candidate best;
    double best_score = 0.0;
    double best_gain = 0.0;
    const int n = static_cast<int>(sorted[0].size());
    const double base = total * total / n;
    for (int axis = 0; axis < 2; ++axis) {
      const auto& order = sorted[static_cast<std::size_t>(axis)];
      double left_sum = 0.0;
      for (int k = 0; k + 1 < n; ++k) {
        left_sum += y[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
        const int nl = k + 1;
        const int nr = n - nl;
        if (nl < hp_.min_leaf) continue;
        if (nr < hp_.min_leaf) break;
        const double lo = coord(order[static_cast<std::size_t>(k)], axis);
        const double hi = coord(order[static_cast<std::size_t>(k + 1)], axis);
        if (!(lo < hi)) continue;
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - base;
        double score = gain;
        if (nl >= 2 * hp_.min_leaf || nr >= 2 * hp_.min_leaf) {
          const auto [left, right] = partition(sorted, axis, nl, flag);
          score += child_gain(left, y, min_gain) + child_gain(right, y, min_gain);
        }
        // equal two-level scores: take the larger immediate gain
        constexpr double kTie = 1e-12;
        const bool better = score > best_score * (1.0 + kTie) ||
                            (score >= best_score * (1.0 - kTie) && gain > best_gain);
        if (better && score > 0.0) {
          double threshold = lo + 0.5 * (hi - lo);
          if (!(threshold < hi)) threshold = lo;
          best = Candidate{axis, nl, threshold, score};
          best_score = score;
          best_gain = gain;
        }
      }
    }
    return best;
  }

  // Appends the subtree for the members in `sorted` and returns its node index.
  int grow(TreeModel& model, Orders sorted, int depth, std::span<const double> y, double min_gain,
           std::vector<char>& flag) const {
    const int n = static_cast<int>(sorted[0].size());
    const double total = sum_of(sorted[0], y);

    const int self = static_cast<int>(model.nodes.size());
    model.nodes.push_back(TreeNode{-1, 0.0, -1, -1, total / (n + hp_.leaf_shrinkage), n});
    if (depth >= hp_.max_depth || n < 2 * hp_.min_leaf) return self;

    const Candidate best = hp_.max_depth - depth >= 2 ? lookahead_split(sorted, y, total, min_gain, flag)
                                                      : best_split(sorted, y, total);
    if (best.axis < 0 || best.gain < min_gain) return self;

    auto [left, right] = partition(sorted, best.axis, best.left_count, flag);
    sorted = {};
    const int l = grow(model, std::move(left), depth + 1, y, min_gain, flag);
    const int r = grow(model, std::move(right), depth + 1, y, min_gain, flag);
    auto& node = model.nodes[static_cast<std::size_t>(self)];
    node.axis = best.axis;
    node.threshold = best.threshold;
    node.left = l;
    node.right = r;
    return self;
  }

  TreeParams hp_;
  Orders order_;  // site indices sorted by each coordinate
};

}  // namespace

std::unique_ptr<BoundLearner> bind_tree(std::vector<Point> coords, const TreeParams& hp) {
  return std::make_unique<BoundTree>(std::move(coords), hp);
}

}  // namespace spocc::detail
