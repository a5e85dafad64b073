#pragma once

// The workflows behind the `spocc` command-line tool, exposed as a library so
// tests can drive them without spawning processes.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spocc/config.hpp"
#include "spocc/scoring.hpp"
#include "spocc/synthgen.hpp"

namespace spocc::cli {

struct SimulationOptions {
  int scenario = 1;
  std::uint64_t seed = 1;
  GridSpec grid;
  int n_train = 200;
  int n_holdout = 200;
  int visits = 3;
  double p = 0.5;
};

struct Simulation {
  ScenarioSurface surface;
  OccupancyDataset data;
};

// The surface uses `seed`; site selection and detections use seed + 1000.
Simulation simulate(const SimulationOptions& opt);
// sites.csv, detections.csv, split.csv, truth_raster.csv, simulate.json.
void write_simulation(const Simulation& sim, const SimulationOptions& opt, const std::filesystem::path& dir);

struct FitResult {
  PosteriorSamples samples;
  std::optional<ScoreReport> score;          // absent when there is no holdout
  std::optional<Correlogram> correlogram;    // residuals at training sites
  std::vector<std::string> warnings;
};

// Correlogram of occupancy residuals at the given sites.
Correlogram residual_correlogram(const PosteriorSamples& samples, const OccupancyDataset& data,
                                 std::span<const int> sites, const ScoringConfig& scoring);

FitResult fit_and_score(const OccupancyDataset& data, const LearnerSpec& learner, const McmcConfig& mcmc,
                        const ScoringConfig& scoring, const std::string& label);

struct LeagueEntry {
  std::string label;
  LearnerSpec learner;
  std::optional<FitResult> result;
  std::string error;  // set when the fit failed

  bool ok() const { return result.has_value() && result->score.has_value(); }
};

// Learner k runs its chain and permutation test with seed + k.
std::vector<LeagueEntry> compare(const OccupancyDataset& data,
                                 const std::vector<std::pair<std::string, LearnerSpec>>& learners,
                                 std::uint64_t seed, const McmcConfig& base, const ScoringConfig& scoring);

// Indices sorted by ascending -2 x LPPD; failures last in input order.
std::vector<std::size_t> league_order(const std::vector<LeagueEntry>& entries);
void write_league(const std::filesystem::path& path, const std::vector<LeagueEntry>& entries);

// Regular nx x ny cell-centre grid over a box.
std::vector<Point> raster_points(const BoundingBox& box, int nx, int ny);
// Parses "30x30".
std::pair<int, int> parse_grid(const std::string& text);

// Entry point of the executable; returns the process exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spocc::cli
