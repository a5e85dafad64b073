#pragma once

// Data-parallel inner loops. Each kernel has an OpenMP version in
// spocc::kernels and a straightforward single-threaded version in
// spocc::kernels::serial that the tests use as the reference. Work is split
// so every output element is produced by one thread in a fixed order, which
// makes the two versions bit-identical.

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "spocc/learners.hpp"
#include "spocc/model.hpp"

namespace spocc::kernels {

// Site pairs (i < j) that fall in some distance bin.
struct BinnedPairs {
  std::vector<int> first;
  std::vector<int> second;
  std::vector<int> bin;
  int num_bins = 0;
  std::vector<long> counts;  // pairs per bin
};

// Bins are half-open [edges[b], edges[b+1]) except the last, which is closed.
BinnedPairs bin_pairs(std::span<const Point> coords, std::span<const double> edges);

// Per-draw design inputs for evaluating psi at a set of points.
struct DrawView {
  const FittedSurface* surface = nullptr;
  const Eigen::VectorXd* beta = nullptr;
};

struct PsiInputs {
  std::span<const DrawView> draws;
  const Eigen::MatrixXd* design = nullptr;  // points x (q+1), intercept column first
  std::span<const Point> coords;            // coordinates in learner units
};

Eigen::MatrixXd rbf_gram(std::span<const Point> coords, double gamma);
Eigen::MatrixXd exponential_cross_covariance(std::span<const Point> rows, std::span<const Point> cols,
                                             double range_phi, double sill_sigma2);
// draws x points matrix of Phi(x'beta_m + f_m(s)).
Eigen::MatrixXd psi_matrix(const PsiInputs& in);
// Sum over pairs in each bin of v_i * v_j.
std::vector<double> bin_cross_products(std::span<const double> values, const BinnedPairs& pairs);
// Row k holds bin_cross_products of values permuted by permutations[k].
Eigen::MatrixXd permuted_bin_cross_products(std::span<const double> values, const BinnedPairs& pairs,
                                            const std::vector<std::vector<int>>& permutations);

namespace serial {

Eigen::MatrixXd rbf_gram(std::span<const Point> coords, double gamma);
Eigen::MatrixXd exponential_cross_covariance(std::span<const Point> rows, std::span<const Point> cols,
                                             double range_phi, double sill_sigma2);
Eigen::MatrixXd psi_matrix(const PsiInputs& in);
std::vector<double> bin_cross_products(std::span<const double> values, const BinnedPairs& pairs);
Eigen::MatrixXd permuted_bin_cross_products(std::span<const double> values, const BinnedPairs& pairs,
                                            const std::vector<std::vector<int>>& permutations);

}  // namespace serial

}  // namespace spocc::kernels
