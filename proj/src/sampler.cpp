#include "spocc/sampler.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "spocc/error.hpp"
#include "spocc/kernels.hpp"

namespace spocc {

void McmcConfig::validate(int num_coefficients) const {
  if (n_iter < 1) throw InvalidArgument("mcmc: n_iter must be >= 1");
  if (burn_in < 0 || burn_in >= n_iter) throw InvalidArgument("mcmc: burn_in must lie in [0, n_iter)");
  if (thin < 1) throw InvalidArgument("mcmc: thin must be >= 1");
  if (refit_every < 1) throw InvalidArgument("mcmc: refit_every must be >= 1");
  if (!(priors.beta_var > 0.0) || !std::isfinite(priors.beta_var)) throw InvalidArgument("mcmc: beta_var must be > 0");
  if (!(priors.p_alpha > 0.0) || !(priors.p_beta > 0.0)) throw InvalidArgument("mcmc: p_alpha and p_beta must be > 0");
  if (priors.beta_mean.size() != 0 && priors.beta_mean.size() != num_coefficients) {
    throw ShapeError("mcmc: beta_mean has " + std::to_string(priors.beta_mean.size()) + " entries, model has " +
                     std::to_string(num_coefficients) + " coefficients");
  }
  if (!priors.beta_mean.allFinite()) throw InvalidArgument("mcmc: beta_mean must be finite");
}

Eigen::VectorXd McmcConfig::prior_mean(int num_coefficients) const {
  if (priors.beta_mean.size() == 0) return Eigen::VectorXd::Zero(num_coefficients);
  return priors.beta_mean;
}

CoordScaler CoordScaler::fit(std::span<const Point> coords) {
  const auto box = BoundingBox::of(coords);
  const double extent = std::max(box.width(), box.height());
  return CoordScaler{box.lo, extent > 0.0 ? extent : 1.0};
}

std::vector<Point> CoordScaler::to_unit(std::span<const Point> coords) const {
  std::vector<Point> out;
  out.reserve(coords.size());
  for (const auto& s : coords) out.push_back(to_unit(s));
  return out;
}

TrainingData TrainingData::from(const OccupancyDataset& data, std::span<const int> sites, const CoordScaler& scaler) {
  TrainingData out;
  const auto n = static_cast<Eigen::Index>(sites.size());
  const int k = data.num_covariates() + 1;
  out.design.resize(n, k);
  for (Eigen::Index r = 0; r < n; ++r) {
    const int i = sites[static_cast<std::size_t>(r)];
    out.design.row(r) = data.design_row(i).transpose();
    const auto& h = data.histories()[static_cast<std::size_t>(i)];
    out.coords.push_back(scaler.to_unit(data.sites()[static_cast<std::size_t>(i)].coords));
    out.visits.push_back(h.num_visits());
    out.detections.push_back(h.num_detections());
    out.site_index.push_back(i);
  }
  out.gram = out.design.transpose() * out.design;
  return out;
}

double ChainState::linear_predictor(const TrainingData& data, int i) const {
  return data.design.row(i).dot(beta.beta) + f_values[static_cast<std::size_t>(i)];
}

double ChainState::psi(const TrainingData& data, int i) const { return inv_probit(linear_predictor(data, i)); }

ChainState initial_state(const TrainingData& data, const McmcConfig& cfg) {
  const int n = data.size();
  ChainState s;
  s.latent.z.assign(static_cast<std::size_t>(n), 1);
  s.latent.aux.assign(static_cast<std::size_t>(n), 1.0);
  s.beta.beta = cfg.prior_mean(static_cast<int>(data.design.cols()));
  s.p.p = cfg.priors.p_alpha / (cfg.priors.p_alpha + cfg.priors.p_beta);
  s.surface = FittedSurface(ZeroModel{}, BoundingBox::of(data.coords));
  s.f_values.assign(static_cast<std::size_t>(n), 0.0);
  return s;
}

double z_update_probability(double psi, double p, int visits, int detections) {
  if (detections > 0) return 1.0;
  return conditional_occupancy_prob(psi, p, visits);
}

void update_z(ChainState& state, const TrainingData& data, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < data.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (data.detections[k] > 0) {
      state.latent.z[k] = 1;
      continue;
    }
    const double prob = z_update_probability(state.psi(data, i), state.p.p, data.visits[k], 0);
    state.latent.z[k] = unif(rng) < prob ? 1 : 0;
  }
}

void update_aux(ChainState& state, const TrainingData& data, Rng& rng) {
  for (int i = 0; i < data.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double mean = state.linear_predictor(data, i);
    state.latent.aux[k] = state.latent.z[k] ? truncated_normal_positive(mean, rng)
                                            : truncated_normal_nonpositive(mean, rng);
  }
}

namespace {

struct BetaSystem {
  Eigen::LLT<Eigen::MatrixXd> precision;
  Eigen::VectorXd mean;
};

BetaSystem beta_system(const ChainState& state, const TrainingData& data, const Priors& priors) {
  const auto k = data.design.cols();
  Eigen::VectorXd resid(data.size());
  for (int i = 0; i < data.size(); ++i) {
    resid(i) = state.latent.aux[static_cast<std::size_t>(i)] - state.f_values[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd mu0 = priors.beta_mean.size() ? priors.beta_mean : Eigen::VectorXd::Zero(k);
  const Eigen::MatrixXd precision =
      data.gram + Eigen::MatrixXd::Identity(k, k) / priors.beta_var;
  BetaSystem sys;
  sys.precision.compute(precision);
  if (sys.precision.info() != Eigen::Success) throw LinearAlgebraError("update_beta: posterior precision is singular");
  sys.mean = sys.precision.solve(data.design.transpose() * resid + mu0 / priors.beta_var);
  return sys;
}

}  // namespace

BetaConditional beta_conditional(const ChainState& state, const TrainingData& data, const Priors& priors) {
  const auto sys = beta_system(state, data, priors);
  const auto k = data.design.cols();
  return {sys.mean, sys.precision.solve(Eigen::MatrixXd::Identity(k, k))};
}

void update_beta(ChainState& state, const TrainingData& data, const Priors& priors, Rng& rng) {
  const auto sys = beta_system(state, data, priors);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd xi(sys.mean.size());
  for (Eigen::Index j = 0; j < xi.size(); ++j) xi(j) = normal(rng);
  // precision = L L'  =>  L'^{-1} xi has covariance precision^{-1}
  state.beta.beta = sys.mean + sys.precision.matrixU().solve(xi);
}

void update_f(ChainState& state, const TrainingData& data, const BoundLearner& learner) {
  if (learner.kind() == LearnerKind::none) {
    std::fill(state.f_values.begin(), state.f_values.end(), 0.0);
    state.surface = FittedSurface(ZeroModel{}, BoundingBox::of(data.coords));
    return;
  }
  std::vector<double> targets(static_cast<std::size_t>(data.size()));
  for (int i = 0; i < data.size(); ++i) {
    targets[static_cast<std::size_t>(i)] =
        state.latent.aux[static_cast<std::size_t>(i)] - data.design.row(i).dot(state.beta.beta);
  }
  state.surface = learner.fit(targets);
  state.f_values = predict(state.surface, data.coords);
}

BetaParams p_conditional(const ChainState& state, const TrainingData& data, const Priors& priors) {
  long successes = 0;
  long trials = 0;
  for (int i = 0; i < data.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (!state.latent.z[k]) continue;
    successes += data.detections[k];
    trials += data.visits[k];
  }
  return {priors.p_alpha + static_cast<double>(successes), priors.p_beta + static_cast<double>(trials - successes)};
}

void update_p(ChainState& state, const TrainingData& data, const Priors& priors, Rng& rng) {
  const auto post = p_conditional(state, data, priors);
  double p = beta_draw(post.alpha, post.beta, rng);
  // keep p inside the open interval required by the likelihood
  constexpr double kEdge = 1e-12;
  state.p.p = std::clamp(p, kEdge, 1.0 - kEdge);
}

namespace {

void check_state(const ChainState& state, const TrainingData& data, long iteration) {
  bool ok = state.beta.beta.allFinite() && state.p.p > 0.0 && state.p.p < 1.0;
  for (double f : state.f_values) ok = ok && std::isfinite(f);
  for (double a : state.latent.aux) ok = ok && std::isfinite(a);
  for (int i = 0; i < data.size() && ok; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (data.detections[k] > 0 && !state.latent.z[k]) ok = false;
    if ((state.latent.aux[k] > 0.0) != (state.latent.z[k] == 1)) ok = false;
  }
  if (ok) return;
  std::ostringstream dump;
  dump << "invalid chain state at iteration " << iteration << ": beta=[" << state.beta.beta.transpose()
       << "] p=" << state.p.p;
  double fmin = 0.0, fmax = 0.0;
  for (double f : state.f_values) {
    fmin = std::min(fmin, f);
    fmax = std::max(fmax, f);
  }
  dump << " f-range=[" << fmin << ", " << fmax << "]";
  throw SamplerError(dump.str(), iteration);
}

}  // namespace

PosteriorSamples run_chain(const OccupancyDataset& data, const LearnerSpec& learner, const McmcConfig& cfg) {
  const auto& train = data.split().train;
  if (train.empty()) throw InvalidArgument("run_chain: training split is empty");
  cfg.validate(data.num_covariates() + 1);
  validate(learner);

  std::vector<Point> raw;
  raw.reserve(train.size());
  for (int i : train) raw.push_back(data.sites()[static_cast<std::size_t>(i)].coords);

  PosteriorSamples out;
  out.learner = learner;
  out.config = cfg;
  out.scaler = CoordScaler::fit(raw);
  out.train_sites = train;
  out.draws.reserve(static_cast<std::size_t>(cfg.num_retained()));

  const TrainingData td = TrainingData::from(data, train, out.scaler);
  const auto bound = bind_learner(learner, td.coords);
  Rng rng(cfg.seed);
  ChainState state = initial_state(td, cfg);

  for (long t = 0; t < cfg.n_iter; ++t) {
    update_z(state, td, rng);
    update_aux(state, td, rng);
    update_beta(state, td, cfg.priors, rng);
    if (t % cfg.refit_every == 0) {
      try {
        update_f(state, td, *bound);
      } catch (const ConvergenceError& e) {
        throw SamplerError("learner failed at iteration " + std::to_string(t) + ": " + e.what(), t);
      }
      ++out.counters.refits;
    }
    update_p(state, td, cfg.priors, rng);
    check_state(state, td, t);
    ++out.counters.iterations;

    if (t >= cfg.burn_in && (t - cfg.burn_in + 1) % cfg.thin == 0) {
      Draw d;
      d.beta = state.beta.beta;
      d.p = state.p.p;
      d.surface = state.surface;
      d.psi.resize(static_cast<std::size_t>(td.size()));
      for (int i = 0; i < td.size(); ++i) d.psi[static_cast<std::size_t>(i)] = state.psi(td, i);
      d.z = state.latent.z;
      out.draws.push_back(std::move(d));
    }
  }
  return out;
}

Eigen::MatrixXd psi_draws(const PosteriorSamples& samples, std::span<const Point> coords,
                          const Eigen::MatrixXd* design) {
  if (samples.draws.empty()) throw InvalidArgument("posterior has no retained draws");
  const auto k = samples.draws.front().beta.size();
  Eigen::MatrixXd intercept;
  if (design == nullptr) {
    if (k != 1) throw ShapeError("psi prediction needs covariates for a model with " + std::to_string(k - 1) + " of them");
    intercept = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(coords.size()), 1);
    design = &intercept;
  }
  if (design->rows() != static_cast<Eigen::Index>(coords.size()) || design->cols() != k) {
    throw ShapeError("psi prediction: design matrix shape does not match coordinates and coefficients");
  }
  std::vector<kernels::DrawView> views;
  views.reserve(samples.draws.size());
  for (const auto& d : samples.draws) views.push_back({&d.surface, &d.beta});
  const auto unit = samples.scaler.to_unit(coords);
  return kernels::psi_matrix({views, design, unit});
}

std::vector<double> posterior_psi_surface(const PosteriorSamples& samples, std::span<const Point> coords,
                                          const Eigen::MatrixXd* design) {
  const Eigen::MatrixXd psi = psi_draws(samples, coords, design);
  const Eigen::VectorXd mean = psi.colwise().mean().transpose();
  return {mean.data(), mean.data() + mean.size()};
}

}  // namespace spocc
