#include <algorithm>
#include <cmath>

#include "spocc/error.hpp"
#include "spocc/kernels.hpp"

namespace spocc::kernels {

BinnedPairs bin_pairs(std::span<const Point> coords, std::span<const double> edges) {
  if (edges.size() < 3) throw InvalidArgument("correlogram needs at least two bins");
  for (std::size_t b = 1; b < edges.size(); ++b) {
    if (!(edges[b] > edges[b - 1])) throw InvalidArgument("bin edges must be strictly increasing");
  }
  BinnedPairs out;
  out.num_bins = static_cast<int>(edges.size()) - 1;
  out.counts.assign(static_cast<std::size_t>(out.num_bins), 0);
  const int n = static_cast<int>(coords.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const auto& a = coords[static_cast<std::size_t>(i)];
      const auto& b = coords[static_cast<std::size_t>(j)];
      const double d = std::hypot(a[0] - b[0], a[1] - b[1]);
      if (d < edges.front() || d > edges.back()) continue;
      int bin = static_cast<int>(std::upper_bound(edges.begin(), edges.end(), d) - edges.begin()) - 1;
      bin = std::min(bin, out.num_bins - 1);
      out.first.push_back(i);
      out.second.push_back(j);
      out.bin.push_back(bin);
      ++out.counts[static_cast<std::size_t>(bin)];
    }
  }
  return out;
}

namespace serial {

Eigen::MatrixXd rbf_gram(std::span<const Point> coords, double gamma) {
  const auto n = static_cast<Eigen::Index>(coords.size());
  Eigen::MatrixXd k(n, n);
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
  std::vector<double> sums(static_cast<std::size_t>(pairs.num_bins), 0.0);
  for (std::size_t k = 0; k < pairs.bin.size(); ++k) {
    sums[static_cast<std::size_t>(pairs.bin[k])] +=
        values[static_cast<std::size_t>(pairs.first[k])] * values[static_cast<std::size_t>(pairs.second[k])];
  }
  return sums;
}

Eigen::MatrixXd permuted_bin_cross_products(std::span<const double> values, const BinnedPairs& pairs,
                                            const std::vector<std::vector<int>>& permutations) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(permutations.size()), pairs.num_bins);
  std::vector<double> shuffled(values.size());
  for (std::size_t r = 0; r < permutations.size(); ++r) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      shuffled[i] = values[static_cast<std::size_t>(permutations[r][i])];
    }
    const auto sums = serial::bin_cross_products(std::span<const double>(shuffled), pairs);
    for (int b = 0; b < pairs.num_bins; ++b) out(static_cast<Eigen::Index>(r), b) = sums[static_cast<std::size_t>(b)];
  }
  return out;
}

}  // namespace serial
}  // namespace spocc::kernels
