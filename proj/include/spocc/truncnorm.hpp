#pragma once

#include <random>

namespace spocc {

using Rng = std::mt19937_64;

// Draw from N(0, 1) conditioned on x > lower. Uses plain rejection near the
// mode, Robert's exponential proposal in the tail, and inverse-CDF sampling if
// the rejection loop runs too long. Never throws.
double std_normal_above(double lower, Rng& rng);

// a ~ N(mean, 1) truncated to (0, inf); result is strictly positive.
double truncated_normal_positive(double mean, Rng& rng);
// a ~ N(mean, 1) truncated to (-inf, 0]; result is <= 0.
double truncated_normal_nonpositive(double mean, Rng& rng);

double std_normal_quantile(double prob);

// Beta(a, b) through two gamma draws.
double beta_draw(double a, double b, Rng& rng);

}  // namespace spocc
