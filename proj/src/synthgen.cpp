#include "spocc/synthgen.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "spocc/error.hpp"
#include "spocc/learners.hpp"
#include "spocc/truncnorm.hpp"

namespace spocc {

double deterministic_field(int scenario, Point s, const ScenarioParams& params) {
  switch (scenario) {
    case 1:
      return (s[0] < params.step_break_x) == (s[1] < params.step_break_y) ? params.step_level : -params.step_level;
    case 2:
      return params.circle_centre + params.circle_slope * std::hypot(s[0] - 0.5, s[1] - 0.5);
    case 3:
      return params.cosine_amplitude * std::cos(2.0 * std::numbers::pi * s[0]) *
             std::cos(2.0 * std::numbers::pi * s[1]);
    default:
      throw InvalidArgument("scenario " + std::to_string(scenario) + " is not deterministic");
  }
}

namespace {

std::vector<double> standard_normals(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> xi(n);
  for (auto& v : xi) v = normal(rng);
  return xi;
}

// f = L xi with C = L L'; jitter grows until the factorization succeeds.
std::vector<double> gaussian_field(Eigen::MatrixXd cov, std::uint64_t seed) {
  const auto n = cov.rows();
  double jitter = 1e-8 * cov.diagonal().maxCoeff();
  Eigen::LLT<Eigen::MatrixXd> llt;
  for (int attempt = 0; attempt < 12; ++attempt) {
    llt.compute(cov + jitter * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() == Eigen::Success) break;
    jitter *= 10.0;
  }
  if (llt.info() != Eigen::Success) throw LinearAlgebraError("synthgen: covariance factorization failed");
  const auto xi = standard_normals(static_cast<std::size_t>(n), seed);
  const Eigen::VectorXd f = llt.matrixL() * Eigen::Map<const Eigen::VectorXd>(xi.data(), n);
  return {f.data(), f.data() + n};
}

std::vector<double> car_field(const GridSpec& grid, const ScenarioParams& params, std::uint64_t seed) {
  const Eigen::MatrixXd q = Eigen::MatrixXd(car_precision(grid.nx, grid.ny, params.car_rho, 1.0));
  Eigen::LLT<Eigen::MatrixXd> llt(q);
  if (llt.info() != Eigen::Success) throw LinearAlgebraError("synthgen: CAR precision factorization failed");
  const auto n = q.rows();
  // rescale so the average marginal variance equals field_sd^2
  const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(n, n));
  const double scale = params.field_sd / std::sqrt(cov.diagonal().mean());
  const auto xi = standard_normals(static_cast<std::size_t>(n), seed);
  // Q = L L'  =>  u = L'^{-1} xi ~ N(0, Q^{-1})
  const Eigen::VectorXd u = llt.matrixU().solve(Eigen::Map<const Eigen::VectorXd>(xi.data(), n)) * scale;
  return {u.data(), u.data() + n};
}

}  // namespace

ScenarioSurface make_surface(int scenario, GridSpec grid, const ScenarioParams& params, std::uint64_t seed) {
  if (scenario < 1 || scenario > 6) throw InvalidArgument("unknown scenario " + std::to_string(scenario));
  if (grid.nx < 1 || grid.ny < 1) throw InvalidArgument("grid dimensions must be >= 1");
  if (!(params.p > 0.0 && params.p < 1.0)) throw InvalidArgument("detection probability must lie in (0, 1)");
  if (!(params.step_break_x > 0.0 && params.step_break_x < 1.0 && params.step_break_y > 0.0 &&
        params.step_break_y < 1.0)) {
    throw InvalidArgument("step breakpoints must lie in (0, 1)");
  }
  if (!(params.car_rho > 0.0 && params.car_rho < 1.0)) throw InvalidArgument("car_rho must lie in (0, 1)");
  if (!(params.gp_range > 0.0) || !(params.field_sd > 0.0)) throw InvalidArgument("field range and sd must be > 0");

  ScenarioSurface out;
  out.scenario = scenario;
  out.grid = grid;
  out.p = params.p;
  out.beta0 = params.beta0;
  out.seed = seed;
  const int n = grid.num_cells();
  out.cells.reserve(static_cast<std::size_t>(n));
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      out.cells.push_back({(ix + 0.5) / grid.nx, (iy + 0.5) / grid.ny});
    }
  }

  if (scenario <= 3) {
    for (const auto& s : out.cells) out.f.push_back(deterministic_field(scenario, s, params));
  } else if (scenario == 4) {
    out.f = car_field(grid, params, seed);
  } else {
    const double var = params.field_sd * params.field_sd;
    Eigen::MatrixXd cov(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const auto& a = out.cells[static_cast<std::size_t>(i)];
        const auto& b = out.cells[static_cast<std::size_t>(j)];
        const double d = std::hypot(a[0] - b[0], a[1] - b[1]) / params.gp_range;
        cov(i, j) = scenario == 5 ? var * std::exp(-d) : var * std::exp(-d * d);
      }
    }
    out.f = gaussian_field(std::move(cov), seed);
  }

  out.psi.reserve(out.f.size());
  for (double f : out.f) out.psi.push_back(inv_probit(params.beta0 + f));
  return out;
}

OccupancyDataset sample_design(const ScenarioSurface& surface, int n_train, int n_holdout, int visits,
                               std::uint64_t seed) {
  const int cells = static_cast<int>(surface.cells.size());
  if (n_train < 1 || n_holdout < 0) throw InvalidArgument("sample_design: need n_train >= 1 and n_holdout >= 0");
  if (n_train + n_holdout > cells) {
    throw InvalidArgument("sample_design: " + std::to_string(n_train + n_holdout) + " sites requested from " +
                          std::to_string(cells) + " cells");
  }
  if (visits < 1) throw InvalidArgument("sample_design: visits must be >= 1");

  Rng rng(seed);
  std::vector<int> order(static_cast<std::size_t>(cells));
  std::iota(order.begin(), order.end(), 0);
  const int wanted = n_train + n_holdout;
  for (int i = 0; i < wanted; ++i) {
    std::uniform_int_distribution<int> pick(i, cells - 1);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
  }
  std::vector<int> role(static_cast<std::size_t>(cells), -1);  // 0 train, 1 holdout
  for (int i = 0; i < wanted; ++i) role[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i < n_train ? 0 : 1;

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Site> sites;
  std::vector<DetectionHistory> histories;
  Split split;
  for (int c = 0; c < cells; ++c) {
    const int r = role[static_cast<std::size_t>(c)];
    if (r < 0) continue;
    const int idx = static_cast<int>(sites.size());
    (r == 0 ? split.train : split.holdout).push_back(idx);
    const std::string id = std::to_string(c);
    sites.push_back({id, surface.cells[static_cast<std::size_t>(c)]});
    const bool occupied = unif(rng) < surface.psi[static_cast<std::size_t>(c)];
    DetectionHistory h{id, {}};
    for (int j = 0; j < visits; ++j) {
      const bool seen = unif(rng) < surface.p;
      h.visits.push_back(occupied && seen ? 1 : 0);
    }
    histories.push_back(std::move(h));
  }
  return OccupancyDataset(std::move(sites), std::move(histories), Eigen::MatrixXd(), std::move(split));
}

}  // namespace spocc
