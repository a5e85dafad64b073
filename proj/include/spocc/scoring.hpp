#pragma once

// Out-of-sample -2 x LPPD and Moran's I correlograms.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spocc/model.hpp"
#include "spocc/sampler.hpp"

namespace spocc {

struct ScoreReport {
  std::string label;
  double neg2_lppd = 0.0;
  std::vector<std::string> site_ids;
  std::vector<double> site_lppd;  // log mean predictive density per site
  int n_holdout = 0;
  int num_draws = 0;
};

// Per-site log of the draw-averaged marginal likelihood. psi is draws x sites,
// p holds one detection probability per draw.
std::vector<double> site_lppd(const Eigen::MatrixXd& psi, std::span<const double> p,
                              std::span<const DetectionHistory> histories);

// Scores `sites` (dataset indices); defaults to the dataset's holdout split.
ScoreReport neg2_lppd(const PosteriorSamples& samples, const OccupancyDataset& data,
                      std::span<const int> sites, std::string label = {});
ScoreReport neg2_lppd(const PosteriorSamples& samples, const OccupancyDataset& data, std::string label = {});

// Naive occupancy (any detection) minus the posterior mean probability of at
// least one detection over the site's visits.
std::vector<double> occupancy_residuals(const Eigen::MatrixXd& psi, std::span<const double> p,
                                        std::span<const DetectionHistory> histories);
std::vector<double> occupancy_residuals(const PosteriorSamples& samples, const OccupancyDataset& data,
                                        std::span<const int> sites);

// Moran's I for an arbitrary nonnegative weight matrix with zero diagonal.
// Throws UndefinedStatistic for constant values or all-zero weights.
double morans_i(std::span<const double> values, const Eigen::MatrixXd& weights);

struct Correlogram {
  std::vector<double> edges;                 // num_bins + 1
  std::vector<std::optional<double>> moran;  // empty bins have no value
  std::vector<std::optional<double>> env_lo;
  std::vector<std::optional<double>> env_hi;
  std::vector<long> pairs;
  int n_perm = 0;
  std::uint64_t seed = 0;

  int num_bins() const { return static_cast<int>(pairs.size()); }
};

// Binary distance-band weights per bin, 2.5% / 97.5% permutation envelope.
Correlogram correlogram(std::span<const double> values, std::span<const Point> coords,
                        std::span<const double> edges, int n_perm, std::uint64_t seed);

// num_bins equal-width bins from 0 to half the largest pairwise distance.
std::vector<double> default_bin_edges(std::span<const Point> coords, int num_bins = 10);

// Linear-interpolation (type 7) sample quantile.
double quantile(std::vector<double> values, double q);

}  // namespace spocc
