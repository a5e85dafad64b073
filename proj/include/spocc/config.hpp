#pragma once

// Run configuration for `spocc fit`. Schema (JSON):
//
//   {
//     "data":    {"sites": "sites.csv", "detections": "detections.csv"},
//     "split":   {"file": "split.csv"} | {"holdout_ids": [...]}
//              | {"holdout_fraction": 0.5, "seed": 1} | {"none": true},
//     "learner": {"kind": "tree", "hyperparams": {"max_depth": 6}},
//     "mcmc":    {"n_iter": 5000, "burn_in": 1000, "thin": 4, "seed": 1,
//                 "refit_every": 1, "priors": {...}},
//     "scoring": {"n_bins": 10, "n_perm": 199, "seed": 1, "max_distance": 0},
//     "raster":  {"nx": 30, "ny": 30},
//     "output_dir": "out"
//   }
//
// Relative paths resolve against the directory holding the config file.
// A missing "split" uses split.csv next to sites.csv when present and
// otherwise trains on every site.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spocc/dataio.hpp"
#include "spocc/learners.hpp"
#include "spocc/sampler.hpp"

namespace spocc {

struct SplitSpec {
  enum class Mode { auto_detect, file, ids, fraction, none };
  Mode mode = Mode::auto_detect;
  std::filesystem::path file;
  std::vector<std::string> holdout_ids;
  double holdout_fraction = 0.0;
  std::uint64_t seed = 1;
};

struct ScoringConfig {
  int n_bins = 10;
  int n_perm = 199;
  std::uint64_t seed = 1;
  double max_distance = 0.0;  // <= 0: half the largest pairwise distance
};

struct RasterSpec {
  int nx = 30;
  int ny = 30;
};

struct RunConfig {
  std::filesystem::path sites_path;
  std::filesystem::path detections_path;
  SplitSpec split;
  LearnerSpec learner;
  McmcConfig mcmc;
  ScoringConfig scoring;
  RasterSpec raster;
  std::filesystem::path output_dir;
};

// Throws InvalidArgument for schema violations and IoError for missing files.
RunConfig parse_run_config(const io::Json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);
io::Json to_json(const RunConfig& cfg);

// Applies the split spec to a loaded dataset.
Split resolve_split(const SplitSpec& spec, const OccupancyDataset& data);

// Random holdout of round(fraction * n) sites.
Split random_split(int n, double holdout_fraction, std::uint64_t seed);

std::vector<double> bin_edges(const ScoringConfig& cfg, std::span<const Point> coords);

}  // namespace spocc
