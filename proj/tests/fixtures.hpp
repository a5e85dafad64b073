#pragma once

// On-disk fixtures written with plain streams, independent of the writers
// under test.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace fixture {

namespace fs = std::filesystem;

// Fresh empty directory under the system temp dir.
inline fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("spocc_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct GazelleShape {
  int sites = 195;
  int min_visits = 1;
  int max_visits = 46;
};

// Gazelle-shaped survey: 195 sites in projected metres, two covariates,
// between 1 and 46 visits per site (both extremes present) with detection
// rows in shuffled order. Returns the per-site visit counts.
inline std::vector<int> write_gazelle(const fs::path& dir, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> east(700000.0, 760000.0);
  std::uniform_real_distribution<double> north(9700000.0, 9760000.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> jdist(1, 46);
  const GazelleShape shape;
  std::vector<int> visits(static_cast<std::size_t>(shape.sites));
  std::ofstream sites(dir / "sites.csv");
  sites << "site_id,x,y,grass,water_km\n";
  struct Row {
    int site;
    int visit;
    int y;
  };
  std::vector<Row> rows;
  for (int i = 0; i < shape.sites; ++i) {
    const int J = i == 0 ? shape.min_visits : i == 1 ? shape.max_visits : jdist(rng);
    visits[static_cast<std::size_t>(i)] = J;
    char id[16];
    std::snprintf(id, sizeof id, "G%03d", i + 1);
    sites.precision(17);
    sites << id << ',' << east(rng) << ',' << north(rng) << ',' << u(rng) << ',' << 20.0 * u(rng) << '\n';
    const bool occ = u(rng) < 0.6;
    for (int j = 1; j <= J; ++j) rows.push_back({i, j, occ && u(rng) < 0.3 ? 1 : 0});
  }
  std::shuffle(rows.begin(), rows.end(), rng);
  std::ofstream det(dir / "detections.csv");
  det << "site_id,visit,y\n";
  for (const auto& r : rows) {
    char id[16];
    std::snprintf(id, sizeof id, "G%03d", r.site + 1);
    det << id << ',' << r.visit << ',' << r.y << '\n';
  }
  return visits;
}

inline void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace fixture
