#pragma once

// Synthetic occupancy scenarios on the unit square: three deterministic
// surfaces with nontraditional structure (step, circle, cosine) and three
// Gaussian random fields (proper CAR, exponential GP, squared-exponential GP).

#include <cstdint>
#include <vector>

#include "spocc/model.hpp"

namespace spocc {

struct GridSpec {
  int nx = 30;
  int ny = 30;
  int num_cells() const { return nx * ny; }
};

struct ScenarioParams {
  double p = 0.5;
  double beta0 = 0.0;
  double step_level = 1.5;       // scenario 1: +level where (x < break_x) == (y < break_y)
  double step_break_x = 0.5;
  double step_break_y = 0.5;
  double circle_centre = -2.0;   // scenario 2: f at the centre
  double circle_slope = 5.0;     // scenario 2: increase per unit distance
  double cosine_amplitude = 1.5; // scenario 3
  double car_rho = 0.99;         // scenario 4
  double gp_range = 0.2;         // scenarios 5 and 6
  double field_sd = 1.0;         // scenarios 4-6
};

struct ScenarioSurface {
  int scenario = 1;
  GridSpec grid;
  std::vector<Point> cells;  // cell centres, index ix + nx * iy
  std::vector<double> f;
  std::vector<double> psi;
  double p = 0.5;
  double beta0 = 0.0;
  std::uint64_t seed = 0;
};

// Throws InvalidArgument for scenario ids outside 1..6 or bad parameters.
ScenarioSurface make_surface(int scenario, GridSpec grid = {}, const ScenarioParams& params = {},
                             std::uint64_t seed = 1);

// Samples n_train + n_holdout distinct cells, latent occupancy and J visits
// per site. Sites are ordered by cell index; ids are the cell indices.
OccupancyDataset sample_design(const ScenarioSurface& surface, int n_train, int n_holdout, int visits,
                               std::uint64_t seed);

// f at an arbitrary point for the deterministic scenarios 1-3.
double deterministic_field(int scenario, Point s, const ScenarioParams& params);

}  // namespace spocc
