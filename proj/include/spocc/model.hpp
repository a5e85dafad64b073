#pragma once

// Domain types and the closed-form occupancy likelihood pieces. Nothing in
// here samples or touches files.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace spocc {

using Point = std::array<double, 2>;

struct Site {
  std::string id;
  Point coords{};
};

struct DetectionHistory {
  std::string site_id;
  std::vector<std::uint8_t> visits;

  int num_visits() const { return static_cast<int>(visits.size()); }
  int num_detections() const;
  bool detected() const { return num_detections() > 0; }
};

// Which sites are used for fitting and which are held out for scoring.
// train and holdout are sorted index lists into OccupancyDataset::sites.
struct Split {
  std::vector<int> train;
  std::vector<int> holdout;
};

class OccupancyDataset {
 public:
  OccupancyDataset() = default;
  // Validates: one history per site in the same order, unique ids, finite
  // coordinates, J_i >= 1, binary visits, covariate rows == sites, split a
  // partition of 0..n-1.
  OccupancyDataset(std::vector<Site> sites, std::vector<DetectionHistory> histories,
                   Eigen::MatrixXd covariates, Split split);

  int size() const { return static_cast<int>(sites_.size()); }
  int num_covariates() const { return static_cast<int>(covariates_.cols()); }

  const std::vector<Site>& sites() const { return sites_; }
  const std::vector<DetectionHistory>& histories() const { return histories_; }
  const Eigen::MatrixXd& covariates() const { return covariates_; }
  const Split& split() const { return split_; }

  // Design row (1, x_i1, ..., x_iq) for site i.
  Eigen::VectorXd design_row(int i) const;

  // Copy of this dataset restricted to the given site indices. The result's
  // split marks every kept site as training.
  OccupancyDataset subset(std::span<const int> indices) const;
  OccupancyDataset with_split(Split split) const;

  friend bool operator==(const OccupancyDataset& a, const OccupancyDataset& b);

 private:
  std::vector<Site> sites_;
  std::vector<DetectionHistory> histories_;
  Eigen::MatrixXd covariates_;
  Split split_;
};

struct Coefficients {
  Eigen::VectorXd beta;  // intercept first
};

struct DetectionParams {
  double p = 0.5;
};

struct LatentState {
  std::vector<std::uint8_t> z;
  std::vector<double> aux;
};

// Smallest distance kept between psi and {0, 1} inside log-likelihoods.
inline constexpr double kPsiClamp = 1e-12;

// Standard normal CDF. Throws InvalidArgument for non-finite x. Never returns
// exactly 0 for finite x (the far lower tail is subnormal but positive).
double inv_probit(double x);

// log Phi(x), accurate far into the lower tail.
double log_inv_probit(double x);

// Phi(x'beta + f).
double occupancy_prob(const Coefficients& beta, const Eigen::VectorXd& x, double f_si);

// P(y | psi, p) with z marginalized out.
double site_marginal_likelihood(const DetectionHistory& history, double psi, double p);
double site_log_marginal_likelihood(const DetectionHistory& history, double psi, double p);

// P(z = 1 | all J visits were non-detections, psi, p).
double conditional_occupancy_prob(double psi, double p, int num_visits);

double clamp_psi(double psi);

}  // namespace spocc
