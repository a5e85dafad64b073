#include <omp.h>

#include "spocc/kernels.hpp"

namespace spocc::kernels {

Eigen::MatrixXd rbf_gram(std::span<const Point> coords, double gamma) {
  const auto n = static_cast<Eigen::Index>(coords.size());
  Eigen::MatrixXd k(n, n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      k(i, j) = spocc::rbf_kernel(coords[static_cast<std::size_t>(i)], coords[static_cast<std::size_t>(j)], gamma);
    }
  }
  return k;
}

Eigen::MatrixXd exponential_cross_covariance(std::span<const Point> rows, std::span<const Point> cols,
                                             double range_phi, double sill_sigma2) {
  Eigen::MatrixXd c(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < c.cols(); ++j) {
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      c(i, j) = exponential_covariance(rows[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)],
                                       range_phi, sill_sigma2);
    }
  }
  return c;
}

Eigen::MatrixXd psi_matrix(const PsiInputs& in) {
  const auto draws = static_cast<Eigen::Index>(in.draws.size());
  const auto points = static_cast<Eigen::Index>(in.coords.size());
  Eigen::MatrixXd psi(draws, points);
#pragma omp parallel for schedule(dynamic, 8)
  for (Eigen::Index m = 0; m < draws; ++m) {
    const auto& draw = in.draws[static_cast<std::size_t>(m)];
    const auto& surface = *draw.surface;
    const Eigen::VectorXd eta = *in.design * *draw.beta;
    for (Eigen::Index i = 0; i < points; ++i) {
      psi(m, i) = inv_probit(eta(i) + surface.predict(in.coords[static_cast<std::size_t>(i)]));
    }
  }
  return psi;
}

std::vector<double> bin_cross_products(std::span<const double> values, const BinnedPairs& pairs) {
  // One thread per bin keeps each bin's summation order identical to the
  // serial loop.
  std::vector<double> sums(static_cast<std::size_t>(pairs.num_bins), 0.0);
  const auto total = static_cast<long>(pairs.bin.size());
#pragma omp parallel for schedule(static)
  for (int b = 0; b < pairs.num_bins; ++b) {
    double s = 0.0;
    for (long k = 0; k < total; ++k) {
      if (pairs.bin[static_cast<std::size_t>(k)] != b) continue;
      s += values[static_cast<std::size_t>(pairs.first[static_cast<std::size_t>(k)])] *
           values[static_cast<std::size_t>(pairs.second[static_cast<std::size_t>(k)])];
    }
    sums[static_cast<std::size_t>(b)] = s;
  }
  return sums;
}

Eigen::MatrixXd permuted_bin_cross_products(std::span<const double> values, const BinnedPairs& pairs,
                                            const std::vector<std::vector<int>>& permutations) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(permutations.size()), pairs.num_bins);
  const auto reps = static_cast<long>(permutations.size());
#pragma omp parallel
  {
    std::vector<double> shuffled(values.size());
    std::vector<double> sums(static_cast<std::size_t>(pairs.num_bins));
#pragma omp for schedule(static)
    for (long r = 0; r < reps; ++r) {
      const auto& perm = permutations[static_cast<std::size_t>(r)];
      for (std::size_t i = 0; i < values.size(); ++i) shuffled[i] = values[static_cast<std::size_t>(perm[i])];
      std::fill(sums.begin(), sums.end(), 0.0);
      for (std::size_t k = 0; k < pairs.bin.size(); ++k) {
        sums[static_cast<std::size_t>(pairs.bin[k])] +=
            shuffled[static_cast<std::size_t>(pairs.first[k])] * shuffled[static_cast<std::size_t>(pairs.second[k])];
      }
      for (int b = 0; b < pairs.num_bins; ++b) out(r, b) = sums[static_cast<std::size_t>(b)];
    }
  }
  return out;
}

}  // namespace spocc::kernels
