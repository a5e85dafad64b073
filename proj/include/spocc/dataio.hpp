#pragma once

// CSV / JSON readers and writers for datasets, fits and reports. Numbers are
// written in shortest round-trip form so output bytes depend only on values.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "spocc/model.hpp"
#include "spocc/sampler.hpp"
#include "spocc/scoring.hpp"

namespace spocc::io {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::string format_number(double x);

// Splits one CSV record. Double-quoted fields may contain commas and "".
std::vector<std::string> split_csv_line(std::string_view line);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;  // 1-based source line of each row
};

// Throws IoError if the file cannot be opened and LoadError on ragged rows.
CsvTable read_csv(const fs::path& path);

// sites: site_id,x,y[,cov1..covq]; detections: site_id,visit,y. Every site is
// marked as training.
OccupancyDataset load_dataset(const fs::path& sites_path, const fs::path& detections_path);

// Writes sites.csv, detections.csv and split.csv into dir.
void write_dataset(const OccupancyDataset& data, const fs::path& dir);

// split.csv: site_id,set with set in {train, holdout}. Sites absent from the
// file are an error.
Split load_split(const fs::path& path, const OccupancyDataset& data);
void write_split(const fs::path& path, const OccupancyDataset& data);

struct RasterRow {
  double x = 0.0;
  double y = 0.0;
  double psi_mean = 0.0;
  double psi_lo = 0.0;
  double psi_hi = 0.0;
  friend bool operator==(const RasterRow&, const RasterRow&) = default;
};

// Column-wise mean and 2.5% / 97.5% quantiles of a draws x points matrix.
std::vector<RasterRow> summarize_raster(const Eigen::MatrixXd& psi, std::span<const Point> coords);
void write_raster(const fs::path& path, std::span<const RasterRow> rows);
std::vector<RasterRow> read_raster(const fs::path& path);

struct ParameterSummary {
  std::string parameter;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
  friend bool operator==(const ParameterSummary&, const ParameterSummary&) = default;
};

// beta0..betaq and p.
std::vector<ParameterSummary> summarize_parameters(const PosteriorSamples& samples);
void write_posterior_summary(const fs::path& path, std::span<const ParameterSummary> rows);
std::vector<ParameterSummary> read_posterior_summary(const fs::path& path);

Json score_to_json(const ScoreReport& report);
// Returns false (and writes nothing) when the report covers no sites.
bool write_score(const fs::path& path, const ScoreReport& report);

void write_correlogram(const fs::path& path, const Correlogram& c);
// Bins without a statistic are written as NA and read back as nullopt.
Correlogram read_correlogram(const fs::path& path);

Json surface_to_json(const FittedSurface& surface);
FittedSurface surface_from_json(const Json& j);
Json learner_to_json(const LearnerSpec& spec);
LearnerSpec learner_from_json(const Json& j);
Json mcmc_to_json(const McmcConfig& cfg);
McmcConfig mcmc_from_json(const Json& j);

// draws.json: learner, config, coordinate scaler, training site ids and every
// retained draw's beta, p and surface. Latent z and training psi are not kept.
void write_samples(const fs::path& path, const PosteriorSamples& samples, const OccupancyDataset& data);
PosteriorSamples read_samples(const fs::path& path, const OccupancyDataset& data);

void write_json(const fs::path& path, const Json& j);
Json read_json(const fs::path& path);
void write_text(const fs::path& path, std::string_view text);

}  // namespace spocc::io
