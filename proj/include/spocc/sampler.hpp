#pragma once

// Gibbs sampler for the occupancy model with an embedded spatial learner.
// Probit data augmentation gives conjugate updates for z, the auxiliary
// variables, beta and p; f is refit by the learner to the latent residuals.

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "spocc/learners.hpp"
#include "spocc/model.hpp"
#include "spocc/truncnorm.hpp"

namespace spocc {

struct Priors {
  Eigen::VectorXd beta_mean;  // empty means all zeros
  double beta_var = 2.25;
  double p_alpha = 1.0;
  double p_beta = 1.0;
};

struct McmcConfig {
  int n_iter = 5000;
  int burn_in = 1000;
  int thin = 4;
  std::uint64_t seed = 1;
  int refit_every = 1;
  Priors priors;

  int num_retained() const { return (n_iter - burn_in) / thin; }
  // Throws InvalidArgument. num_coefficients is q + 1.
  void validate(int num_coefficients) const;
  Eigen::VectorXd prior_mean(int num_coefficients) const;
};

// Isotropic map of raw coordinates onto the unit square of the training
// bounding box. Learners always see mapped coordinates.
struct CoordScaler {
  Point origin{0.0, 0.0};
  double scale = 1.0;

  static CoordScaler fit(std::span<const Point> coords);
  Point to_unit(Point s) const { return {(s[0] - origin[0]) / scale, (s[1] - origin[1]) / scale}; }
  std::vector<Point> to_unit(std::span<const Point> coords) const;
};

// Training-site view of a dataset in the layout the updates need.
struct TrainingData {
  Eigen::MatrixXd design;               // n x (q+1), intercept first
  Eigen::MatrixXd gram;                 // design' design
  std::vector<Point> coords;            // learner units
  std::vector<int> visits;              // J_i
  std::vector<int> detections;          // sum_j y_ij
  std::vector<int> site_index;          // index into the source dataset

  static TrainingData from(const OccupancyDataset& data, std::span<const int> sites, const CoordScaler& scaler);
  int size() const { return static_cast<int>(visits.size()); }
};

struct ChainState {
  LatentState latent;
  Coefficients beta;
  DetectionParams p;
  FittedSurface surface;
  std::vector<double> f_values;

  double linear_predictor(const TrainingData& data, int i) const;
  double psi(const TrainingData& data, int i) const;
};

ChainState initial_state(const TrainingData& data, const McmcConfig& cfg);

// Probability that update_z sets z_i = 1.
double z_update_probability(double psi, double p, int visits, int detections);

void update_z(ChainState& state, const TrainingData& data, Rng& rng);
void update_aux(ChainState& state, const TrainingData& data, Rng& rng);
void update_beta(ChainState& state, const TrainingData& data, const Priors& priors, Rng& rng);
void update_f(ChainState& state, const TrainingData& data, const BoundLearner& learner);
void update_p(ChainState& state, const TrainingData& data, const Priors& priors, Rng& rng);

// Parameters of the Gaussian full conditional of beta.
struct BetaConditional {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};
BetaConditional beta_conditional(const ChainState& state, const TrainingData& data, const Priors& priors);

struct BetaParams {
  double alpha = 1.0;
  double beta = 1.0;
};
BetaParams p_conditional(const ChainState& state, const TrainingData& data, const Priors& priors);

struct Draw {
  Eigen::VectorXd beta;
  double p = 0.5;
  FittedSurface surface;
  std::vector<double> psi;        // at training sites
  std::vector<std::uint8_t> z;    // at training sites
};

struct SamplerCounters {
  long iterations = 0;
  long refits = 0;
};

struct PosteriorSamples {
  LearnerSpec learner;
  McmcConfig config;
  CoordScaler scaler;
  std::vector<int> train_sites;  // dataset indices of training sites
  std::vector<Draw> draws;
  SamplerCounters counters;
};

PosteriorSamples run_chain(const OccupancyDataset& data, const LearnerSpec& learner, const McmcConfig& cfg);

// Posterior mean of psi at raw coordinates. `design` supplies x(s) for each
// point (intercept column first); omit it for intercept-only models.
std::vector<double> posterior_psi_surface(const PosteriorSamples& samples, std::span<const Point> coords,
                                          const Eigen::MatrixXd* design = nullptr);

// draws x points matrix of psi at raw coordinates.
Eigen::MatrixXd psi_draws(const PosteriorSamples& samples, std::span<const Point> coords,
                          const Eigen::MatrixXd* design = nullptr);

}  // namespace spocc
