#include "spocc/model.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "spocc/error.hpp"

namespace spocc {

int DetectionHistory::num_detections() const {
  int count = 0;
  for (auto v : visits) count += v;
  return count;
}

OccupancyDataset::OccupancyDataset(std::vector<Site> sites,
                                   std::vector<DetectionHistory> histories,
                                   Eigen::MatrixXd covariates, Split split)
    : sites_(std::move(sites)),
      histories_(std::move(histories)),
      covariates_(std::move(covariates)),
      split_(std::move(split)) {
  const auto n = sites_.size();
  if (histories_.size() != n) {
    throw ShapeError("dataset has " + std::to_string(n) + " sites but " +
                     std::to_string(histories_.size()) + " detection histories");
  }
  if (covariates_.rows() == 0 && covariates_.cols() == 0) covariates_.resize(static_cast<Eigen::Index>(n), 0);
  if (static_cast<std::size_t>(covariates_.rows()) != n) {
    throw ShapeError("covariate rows do not match the number of sites");
  }
  if (!covariates_.allFinite()) throw InvalidArgument("covariates must be finite");

  std::set<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = sites_[i];
    if (!std::isfinite(s.coords[0]) || !std::isfinite(s.coords[1])) {
      throw InvalidArgument("site '" + s.id + "' has non-finite coordinates");
    }
    if (!ids.insert(s.id).second) throw InvalidArgument("duplicate site id '" + s.id + "'");
    const auto& h = histories_[i];
    if (h.site_id != s.id) {
      throw ShapeError("history " + std::to_string(i) + " belongs to '" + h.site_id +
                       "', expected '" + s.id + "'");
    }
    if (h.visits.empty()) throw InvalidArgument("site '" + s.id + "' has no visits");
    for (auto v : h.visits) {
      if (v > 1) throw InvalidArgument("site '" + s.id + "' has a non-binary visit");
    }
  }

  std::vector<int> seen(n, 0);
  for (const auto* part : {&split_.train, &split_.holdout}) {
    for (int idx : *part) {
      if (idx < 0 || static_cast<std::size_t>(idx) >= n) throw InvalidArgument("split index out of range");
      if (seen[static_cast<std::size_t>(idx)]++) throw InvalidArgument("split is not disjoint");
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw InvalidArgument("split does not cover every site");
  }
  std::sort(split_.train.begin(), split_.train.end());
  std::sort(split_.holdout.begin(), split_.holdout.end());
}

Eigen::VectorXd OccupancyDataset::design_row(int i) const {
  Eigen::VectorXd x(num_covariates() + 1);
  x(0) = 1.0;
  if (num_covariates() > 0) x.tail(num_covariates()) = covariates_.row(i).transpose();
  return x;
}

OccupancyDataset OccupancyDataset::subset(std::span<const int> indices) const {
  std::vector<Site> sites;
  std::vector<DetectionHistory> histories;
  Eigen::MatrixXd cov(static_cast<Eigen::Index>(indices.size()), covariates_.cols());
  Split split;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const int i = indices[k];
    sites.push_back(sites_.at(static_cast<std::size_t>(i)));
    histories.push_back(histories_.at(static_cast<std::size_t>(i)));
    if (cov.cols() > 0) cov.row(static_cast<Eigen::Index>(k)) = covariates_.row(i);
    split.train.push_back(static_cast<int>(k));
  }
  return OccupancyDataset(std::move(sites), std::move(histories), std::move(cov), std::move(split));
}

OccupancyDataset OccupancyDataset::with_split(Split split) const {
  return OccupancyDataset(sites_, histories_, covariates_, std::move(split));
}

bool operator==(const OccupancyDataset& a, const OccupancyDataset& b) {
  if (a.sites_.size() != b.sites_.size()) return false;
  for (std::size_t i = 0; i < a.sites_.size(); ++i) {
    if (a.sites_[i].id != b.sites_[i].id || a.sites_[i].coords != b.sites_[i].coords) return false;
    if (a.histories_[i].site_id != b.histories_[i].site_id ||
        a.histories_[i].visits != b.histories_[i].visits) {
      return false;
    }
  }
  return a.covariates_.rows() == b.covariates_.rows() &&
         a.covariates_.cols() == b.covariates_.cols() && a.covariates_ == b.covariates_ &&
         a.split_.train == b.split_.train && a.split_.holdout == b.split_.holdout;
}

double inv_probit(double x) {
  if (!std::isfinite(x)) throw InvalidArgument("inv_probit: non-finite argument");
  const double value = 0.5 * std::erfc(-x / std::numbers::sqrt2);
  // erfc stays subnormal down to about x = -38.4; below that report the
  // smallest positive double rather than an exact 0.
  return value > 0.0 ? value : std::numeric_limits<double>::denorm_min();
}

double log_inv_probit(double x) {
  if (!std::isfinite(x)) throw InvalidArgument("log_inv_probit: non-finite argument");
  if (x > -30.0) return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
  // Mills-ratio series: Phi(x) ~ phi(x)/|x| * (1 - 1/x^2 + 3/x^4 - 15/x^6)
  const double x2 = x * x;
  const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
  return -0.5 * x2 - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

double occupancy_prob(const Coefficients& beta, const Eigen::VectorXd& x, double f_si) {
  if (beta.beta.size() != x.size()) {
    throw ShapeError("occupancy_prob: beta has " + std::to_string(beta.beta.size()) +
                     " entries but x has " + std::to_string(x.size()));
  }
  return inv_probit(x.dot(beta.beta) + f_si);
}

namespace {

void check_likelihood_args(const DetectionHistory& history, double psi, double p) {
  if (history.visits.empty()) throw InvalidArgument("site likelihood: empty detection history");
  if (!(psi >= 0.0 && psi <= 1.0)) throw InvalidArgument("site likelihood: psi outside [0, 1]");
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("site likelihood: p outside (0, 1)");
}

}  // namespace

double site_marginal_likelihood(const DetectionHistory& history, double psi, double p) {
  check_likelihood_args(history, psi, p);
  const int detections = history.num_detections();
  const int misses = history.num_visits() - detections;
  const double occupied = psi * std::pow(p, detections) * std::pow(1.0 - p, misses);
  return detections > 0 ? occupied : occupied + (1.0 - psi);
}

double site_log_marginal_likelihood(const DetectionHistory& history, double psi, double p) {
  check_likelihood_args(history, psi, p);
  psi = clamp_psi(psi);
  const int detections = history.num_detections();
  const int misses = history.num_visits() - detections;
  const double log_occupied =
      std::log(psi) + detections * std::log(p) + misses * std::log1p(-p);
  if (detections > 0) return log_occupied;
  const double log_absent = std::log1p(-psi);
  const double hi = std::max(log_occupied, log_absent);
  const double lo = std::min(log_occupied, log_absent);
  return hi + std::log1p(std::exp(lo - hi));
}

double conditional_occupancy_prob(double psi, double p, int num_visits) {
  if (num_visits < 1) throw InvalidArgument("conditional_occupancy_prob: J must be >= 1");
  if (!(psi >= 0.0 && psi <= 1.0)) throw InvalidArgument("conditional_occupancy_prob: psi outside [0, 1]");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("conditional_occupancy_prob: p outside [0, 1]");
  const double occupied = psi * std::pow(1.0 - p, num_visits);
  const double total = occupied + (1.0 - psi);
  if (total <= 0.0) {
    throw DegenerateError("conditional_occupancy_prob: psi = 1 and p = 1 leave an all-zero history impossible");
  }
  return occupied / total;
}

double clamp_psi(double psi) { return std::clamp(psi, kPsiClamp, 1.0 - kPsiClamp); }

}  // namespace spocc
