#include "spocc/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "spocc/error.hpp"
#include "spocc/kernels.hpp"

namespace spocc {

namespace {

struct SiteSlice {
  std::vector<Point> coords;
  std::vector<DetectionHistory> histories;
  std::vector<std::string> ids;
  Eigen::MatrixXd design;
};

SiteSlice slice(const OccupancyDataset& data, std::span<const int> sites) {
  SiteSlice s;
  s.design.resize(static_cast<Eigen::Index>(sites.size()), data.num_covariates() + 1);
  for (std::size_t k = 0; k < sites.size(); ++k) {
    const auto i = static_cast<std::size_t>(sites[k]);
    if (sites[k] < 0 || i >= data.sites().size()) throw InvalidArgument("site index out of range");
    s.coords.push_back(data.sites()[i].coords);
    s.histories.push_back(data.histories()[i]);
    s.ids.push_back(data.sites()[i].id);
    s.design.row(static_cast<Eigen::Index>(k)) = data.design_row(sites[k]).transpose();
  }
  return s;
}

std::vector<double> draw_p(const PosteriorSamples& samples) {
  std::vector<double> p;
  p.reserve(samples.draws.size());
  for (const auto& d : samples.draws) p.push_back(d.p);
  return p;
}

void check_shapes(const Eigen::MatrixXd& psi, std::span<const double> p, std::span<const DetectionHistory> h) {
  if (psi.rows() == 0) throw InvalidArgument("scoring needs at least one draw");
  if (static_cast<std::size_t>(psi.rows()) != p.size() || static_cast<std::size_t>(psi.cols()) != h.size()) {
    throw ShapeError("scoring: psi matrix does not match draws and sites");
  }
}

}  // namespace

std::vector<double> site_lppd(const Eigen::MatrixXd& psi, std::span<const double> p,
                              std::span<const DetectionHistory> histories) {
  check_shapes(psi, p, histories);
  const auto draws = psi.rows();
  std::vector<double> out(histories.size());
  std::vector<double> logs(static_cast<std::size_t>(draws));
  for (std::size_t i = 0; i < histories.size(); ++i) {
    for (Eigen::Index m = 0; m < draws; ++m) {
      logs[static_cast<std::size_t>(m)] =
          site_log_marginal_likelihood(histories[i], psi(m, static_cast<Eigen::Index>(i)), p[static_cast<std::size_t>(m)]);
    }
    const double hi = *std::max_element(logs.begin(), logs.end());
    double acc = 0.0;
    for (double l : logs) acc += std::exp(l - hi);
    out[i] = hi + std::log(acc / static_cast<double>(draws));
    if (!std::isfinite(out[i])) throw Error("zero predictive density at holdout site " + histories[i].site_id);
  }
  return out;
}

ScoreReport neg2_lppd(const PosteriorSamples& samples, const OccupancyDataset& data, std::span<const int> sites,
                      std::string label) {
  if (sites.empty()) throw InvalidArgument("neg2_lppd: no holdout sites");
  const auto s = slice(data, sites);
  const auto psi = psi_draws(samples, s.coords, &s.design);
  const auto p = draw_p(samples);
  ScoreReport r;
  r.label = label.empty() ? std::string(to_string(samples.learner.kind)) : std::move(label);
  r.site_ids = s.ids;
  r.site_lppd = site_lppd(psi, p, s.histories);
  r.neg2_lppd = -2.0 * std::accumulate(r.site_lppd.begin(), r.site_lppd.end(), 0.0);
  r.n_holdout = static_cast<int>(sites.size());
  r.num_draws = static_cast<int>(samples.draws.size());
  return r;
}

ScoreReport neg2_lppd(const PosteriorSamples& samples, const OccupancyDataset& data, std::string label) {
  return neg2_lppd(samples, data, data.split().holdout, std::move(label));
}

std::vector<double> occupancy_residuals(const Eigen::MatrixXd& psi, std::span<const double> p,
                                        std::span<const DetectionHistory> histories) {
  check_shapes(psi, p, histories);
  std::vector<double> out(histories.size());
  for (std::size_t i = 0; i < histories.size(); ++i) {
    const int visits = histories[i].num_visits();
    double expected = 0.0;
    for (Eigen::Index m = 0; m < psi.rows(); ++m) {
      const double detect_any = 1.0 - std::pow(1.0 - p[static_cast<std::size_t>(m)], visits);
      expected += psi(m, static_cast<Eigen::Index>(i)) * detect_any;
    }
    expected /= static_cast<double>(psi.rows());
    out[i] = (histories[i].detected() ? 1.0 : 0.0) - expected;
  }
  return out;
}

std::vector<double> occupancy_residuals(const PosteriorSamples& samples, const OccupancyDataset& data,
                                        std::span<const int> sites) {
  const auto s = slice(data, sites);
  const auto psi = psi_draws(samples, s.coords, &s.design);
  return occupancy_residuals(psi, draw_p(samples), s.histories);
}

double morans_i(std::span<const double> values, const Eigen::MatrixXd& weights) {
  const auto n = static_cast<Eigen::Index>(values.size());
  if (weights.rows() != n || weights.cols() != n) throw ShapeError("morans_i: weight matrix shape mismatch");
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  Eigen::VectorXd c(n);
  for (Eigen::Index i = 0; i < n; ++i) c(i) = values[static_cast<std::size_t>(i)] - mean;
  const double ss = c.squaredNorm();
  const double total = weights.sum();
  if (!(ss > 0.0)) throw UndefinedStatistic("morans_i: values have zero variance");
  if (!(total > 0.0)) throw UndefinedStatistic("morans_i: weights sum to zero");
  return static_cast<double>(n) / total * c.dot(weights * c) / ss;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidArgument("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<double> default_bin_edges(std::span<const Point> coords, int num_bins) {
  if (num_bins < 2) throw InvalidArgument("correlogram needs at least two bins");
  double max_dist = 0.0;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    for (std::size_t j = i + 1; j < coords.size(); ++j) {
      max_dist = std::max(max_dist, std::hypot(coords[i][0] - coords[j][0], coords[i][1] - coords[j][1]));
    }
  }
  if (!(max_dist > 0.0)) throw InvalidArgument("correlogram needs at least two distinct locations");
  std::vector<double> edges(static_cast<std::size_t>(num_bins) + 1);
  for (int b = 0; b <= num_bins; ++b) edges[static_cast<std::size_t>(b)] = 0.5 * max_dist * b / num_bins;
  return edges;
}

Correlogram correlogram(std::span<const double> values, std::span<const Point> coords,
                        std::span<const double> edges, int n_perm, std::uint64_t seed) {
  if (values.size() != coords.size()) throw ShapeError("correlogram: values and coordinates differ in length");
  if (n_perm < 1) throw InvalidArgument("correlogram: n_perm must be >= 1");
  const auto pairs = kernels::bin_pairs(coords, edges);
  const auto n = values.size();
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  std::vector<double> centred(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    centred[i] = values[i] - mean;
    ss += centred[i] * centred[i];
  }
  if (!(ss > 0.0)) throw UndefinedStatistic("correlogram: values have zero variance");

  Rng rng(seed);
  std::vector<std::vector<int>> perms(static_cast<std::size_t>(n_perm), std::vector<int>(n));
  for (auto& perm : perms) {
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(perm[i], perm[pick(rng)]);
    }
  }

  const auto observed = kernels::bin_cross_products(centred, pairs);
  const auto permuted = kernels::permuted_bin_cross_products(centred, pairs, perms);

  Correlogram out;
  out.edges.assign(edges.begin(), edges.end());
  out.pairs = pairs.counts;
  out.n_perm = n_perm;
  out.seed = seed;
  const auto bins = static_cast<std::size_t>(pairs.num_bins);
  out.moran.resize(bins);
  out.env_lo.resize(bins);
  out.env_hi.resize(bins);
  // binary symmetric weights: I = n * sum_{i<j in bin} c_i c_j / (pairs * ss)
  for (std::size_t b = 0; b < bins; ++b) {
    if (pairs.counts[b] == 0) continue;
    const double scale = static_cast<double>(n) / (static_cast<double>(pairs.counts[b]) * ss);
    out.moran[b] = scale * observed[b];
    std::vector<double> null(static_cast<std::size_t>(n_perm));
    for (int r = 0; r < n_perm; ++r) null[static_cast<std::size_t>(r)] = scale * permuted(r, static_cast<Eigen::Index>(b));
    out.env_lo[b] = quantile(null, 0.025);
    out.env_hi[b] = quantile(null, 0.975);
  }
  return out;
}

}  // namespace spocc
