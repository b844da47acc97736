// Copyright 2026 The sciq Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SCIQ_STATISTICS_HPP_
#define SCIQ_STATISTICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sciq/core.hpp"
#include "sciq/rng.hpp"

namespace sciq {

/// Guard added to the std in distribution normalization and used as the lower
/// clamp of sigma before the KL logarithm.
inline constexpr double kStdEpsilon = 1e-9;

/// Per-dimension moments of a patch group (rows are patches).
template <typename Scalar>
struct DistributionStats {
  Vec<Scalar> mu;
  Vec<Scalar> sigma;  // sample std, N - 1 denominator
  Vec<Scalar> phi;    // KL to N(0, 1); empty until computed
  Index n = 0;
};

/// Mean and sample std of each column of an N x D feature matrix.
template <typename Derived>
DistributionStats<typename Derived::Scalar> patch_stats(const Eigen::MatrixBase<Derived>& features) {
  using S = typename Derived::Scalar;
  const Index n = features.rows();
  if (n < 2) throw SampleError("patch statistics need at least 2 samples, got " + std::to_string(n));
  DistributionStats<S> st;
  st.n = n;
  st.mu = features.colwise().mean().transpose();
  st.sigma = ((features.rowwise() - st.mu.transpose()).colwise().squaredNorm().transpose() /
              static_cast<S>(n - 1))
                 .cwiseSqrt();
  return st;
}

/// Gradient of a scalar loss w.r.t. the features, given its gradients w.r.t.
/// the mean and std produced by `patch_stats`. Dimensions with zero std pass
/// no gradient through the std.
template <typename Derived, typename S>
Mat<S> patch_stats_backward(const Eigen::MatrixBase<Derived>& features,
                            const DistributionStats<S>& st, const Vec<S>& dmu,
                            const Vec<S>& dsigma) {
  const Index n = features.rows();
  Vec<S> coef(st.sigma.size());
  for (Index j = 0; j < coef.size(); ++j)
    coef(j) = st.sigma(j) > S(0) ? dsigma(j) / (static_cast<S>(n - 1) * st.sigma(j)) : S(0);
  Mat<S> dx = (features.rowwise() - st.mu.transpose()) * coef.asDiagonal();
  dx.rowwise() += (dmu / static_cast<S>(n)).transpose();
  return dx;
}

/// Standardizes each column: (x - mu) / (sigma + eps).
template <typename Derived, typename S>
Mat<S> normalize_distribution(const Eigen::MatrixBase<Derived>& features, const Vec<S>& mu,
                              const Vec<S>& sigma) {
  const Vec<S> inv = (sigma.array() + static_cast<S>(kStdEpsilon)).inverse().matrix();
  return (features.rowwise() - mu.transpose()) * inv.asDiagonal();
}

/// Backward of `normalize_distribution` composed with `patch_stats`
/// (mu and sigma computed from the same features).
template <typename Derived, typename S>
Mat<S> normalize_distribution_backward(const Eigen::MatrixBase<Derived>& features,
                                       const DistributionStats<S>& st, const Mat<S>& dy) {
  const Vec<S> denom = st.sigma.array() + static_cast<S>(kStdEpsilon);
  const Mat<S> centered = features.rowwise() - st.mu.transpose();
  const Vec<S> dmu = -(dy.colwise().sum().transpose().array() / denom.array()).matrix();
  const Vec<S> dsigma =
      -((dy.cwiseProduct(centered)).colwise().sum().transpose().array() / denom.array().square())
           .matrix();
  Mat<S> dx = dy * denom.cwiseInverse().asDiagonal();
  dx += patch_stats_backward(features, st, dmu, dsigma);
  return dx;
}

/// Closed-form KL( N(mu, sigma^2) || N(0, 1) ) per dimension:
/// -1/2 (1 + log sigma^2 - sigma^2 - mu^2). Sigma is clamped at eps.
template <typename S>
Vec<S> kl_to_standard_normal(const Vec<S>& mu, const Vec<S>& sigma) {
  Vec<S> phi(mu.size());
  const S eps = static_cast<S>(kStdEpsilon);
  for (Index j = 0; j < mu.size(); ++j) {
    const S s = std::max(sigma(j), eps);
    const S s2 = s * s;
    phi(j) = S(-0.5) * (S(1) + std::log(s2) - s2 - mu(j) * mu(j));
    // Rounding can leave -1e-17 near the minimum.
    if (phi(j) < S(0)) phi(j) = S(0);
  }
  return phi;
}

/// Returns (dmu, dsigma) for the KL above. Clamped sigmas receive zero.
template <typename S>
std::pair<Vec<S>, Vec<S>> kl_to_standard_normal_backward(const Vec<S>& mu, const Vec<S>& sigma,
                                                         const Vec<S>& dphi) {
  Vec<S> dmu = dphi.cwiseProduct(mu);
  Vec<S> dsigma(sigma.size());
  const S eps = static_cast<S>(kStdEpsilon);
  for (Index j = 0; j < sigma.size(); ++j)
    dsigma(j) = sigma(j) > eps ? dphi(j) * (sigma(j) - S(1) / sigma(j)) : S(0);
  return {dmu, dsigma};
}

namespace detail {

template <typename A, typename B>
Mat<typename A::Scalar> squared_distances(const Eigen::MatrixBase<A>& x,
                                          const Eigen::MatrixBase<B>& y) {
  using S = typename A::Scalar;
  Mat<S> d(x.rows(), y.rows());
  for (Index j = 0; j < y.rows(); ++j)
    for (Index i = 0; i < x.rows(); ++i) d(i, j) = (x.row(i) - y.row(j)).squaredNorm();
  return d;
}

template <typename S>
Mat<S> kernel_from_distances(const Mat<S>& d2, const std::vector<double>& bandwidths) {
  Mat<S> k = Mat<S>::Zero(d2.rows(), d2.cols());
  for (double w : bandwidths) {
    const S c = static_cast<S>(-0.5 / (w * w));
    k.array() += (d2.array() * c).exp();
  }
  return k;
}

// Orders the two samples so that mmd(X, Y) and mmd(Y, X) run the identical
// floating-point computation.
template <typename A, typename B>
bool canonical_order(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
  if (x.rows() != y.rows()) return x.rows() < y.rows();
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < x.cols(); ++j)
      if (x(i, j) != y(i, j)) return x(i, j) < y(i, j);
  return true;
}

}  // namespace detail

/// Median of the pairwise Euclidean distances of the pooled sample, scaled
/// by {0.5, 1, 2}. Falls back to 1 when the median is zero.
template <typename A, typename B>
std::vector<double> median_heuristic_bandwidths(const Eigen::MatrixBase<A>& x,
                                                const Eigen::MatrixBase<B>& y) {
  using S = typename A::Scalar;
  Mat<S> joint(x.rows() + y.rows(), x.cols());
  joint << x, y;
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(joint.rows() * (joint.rows() - 1) / 2));
  for (Index i = 0; i < joint.rows(); ++i)
    for (Index j = i + 1; j < joint.rows(); ++j)
      dist.push_back(std::sqrt(static_cast<double>((joint.row(i) - joint.row(j)).squaredNorm())));
  for (double d : dist)
    if (!std::isfinite(d)) throw NumericError("non-finite sample in MMD bandwidth estimate");
  double m = 1.0;
  if (!dist.empty()) {
    const auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
    std::nth_element(dist.begin(), mid, dist.end());
    m = *mid;
    if (dist.size() % 2 == 0) {
      const double lower = *std::max_element(dist.begin(), mid);
      m = 0.5 * (m + lower);
    }
    if (!(m > 0.0)) m = 1.0;
  }
  return {0.5 * m, m, 2.0 * m};
}

/// Biased (V-statistic) squared MMD with a sum of Gaussian kernels
/// k(a, b) = sum_w exp(-|a - b|^2 / (2 w^2)). Rows are samples. Clamped at 0.
template <typename A, typename B>
typename A::Scalar mmd_gaussian(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y,
                                const std::vector<double>& bandwidths) {
  using S = typename A::Scalar;
  if (x.rows() < 1 || y.rows() < 1) throw SampleError("MMD needs non-empty sample sets");
  if (x.cols() != y.cols()) throw SizeError("MMD samples differ in dimension");
  if (bandwidths.empty()) throw ConfigError("MMD needs at least one bandwidth");
  for (double w : bandwidths)
    if (!(w > 0.0)) throw ConfigError("MMD bandwidths must be positive");
  if (!x.allFinite() || !y.allFinite()) throw NumericError("non-finite sample in MMD");
  if (!detail::canonical_order(x, y)) return mmd_gaussian(y, x, bandwidths);
  const Mat<S> kxx = detail::kernel_from_distances<S>(detail::squared_distances(x, x), bandwidths);
  const Mat<S> kyy = detail::kernel_from_distances<S>(detail::squared_distances(y, y), bandwidths);
  const Mat<S> kxy = detail::kernel_from_distances<S>(detail::squared_distances(x, y), bandwidths);
  const S v = (kxx.mean() + kyy.mean()) - S(2) * kxy.mean();
  return std::max(v, S(0));
}

/// MMD value and its gradient w.r.t. the rows of `x` (bandwidths held fixed).
template <typename S>
std::pair<S, Mat<S>> mmd_gaussian_grad(const Mat<S>& x, const Mat<S>& y,
                                       const std::vector<double>& bandwidths) {
  const S value = mmd_gaussian(x, y, bandwidths);
  const S m = static_cast<S>(x.rows()), n = static_cast<S>(y.rows());
  const Mat<S> dxx = detail::squared_distances(x, x);
  const Mat<S> dxy = detail::squared_distances(x, y);
  // K'(d2) = sum_w exp(-d2 / 2w^2) / w^2 gives d k(a, b) / d a = -K' (a - b).
  Mat<S> kpxx = Mat<S>::Zero(dxx.rows(), dxx.cols());
  Mat<S> kpxy = Mat<S>::Zero(dxy.rows(), dxy.cols());
  for (double w : bandwidths) {
    const S c = static_cast<S>(-0.5 / (w * w));
    const S inv = static_cast<S>(1.0 / (w * w));
    kpxx.array() += (dxx.array() * c).exp() * inv;
    kpxy.array() += (dxy.array() * c).exp() * inv;
  }
  if (value <= S(0)) return {value, Mat<S>::Zero(x.rows(), x.cols())};
  // sum_b K'_ab (x_a - z_b) = rowsum(K')_a x_a - (K' Z)_a
  const Mat<S> gxx = kpxx.rowwise().sum().asDiagonal() * x - kpxx * x;
  const Mat<S> gxy = kpxy.rowwise().sum().asDiagonal() * x - kpxy * y;
  Mat<S> dx = (S(-2) / (m * m)) * gxx + (S(2) / (m * n)) * gxy;
  return {value, dx};
}

/// M x D draws from the independent multivariate standard normal.
struct GaussianReference {
  Mat<double> samples;
  std::uint64_t seed = 0;
};

inline GaussianReference sample_gaussian_reference(Index rows, Index dims, std::uint64_t seed) {
  if (rows < 1 || dims < 1) throw SizeError("Gaussian reference needs positive shape");
  GaussianReference ref;
  ref.seed = seed;
  ref.samples.resize(rows, dims);
  Rng rng(derive_seed(seed, 0x9a05));
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < dims; ++j) ref.samples(i, j) = rng.normal();
  return ref;
}

}  // namespace sciq

#endif  // SCIQ_STATISTICS_HPP_
