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

#ifndef SCIQ_OBJECTIVE_HPP_
#define SCIQ_OBJECTIVE_HPP_

// The full training objective over one triplet batch, with its analytic
// gradient w.r.t. every model parameter.

#include <cstdint>
#include <optional>
#include <vector>

#include "sciq/losses.hpp"
#include "sciq/model.hpp"
#include "sciq/patches.hpp"
#include "sciq/statistics.hpp"
#include "sciq/triplet.hpp"

namespace sciq {

struct ObjectiveOptions {
  HyperParams hyper;
  /// Seed of the standard-normal reference draw matched by the MMD term.
  std::uint64_t gaussian_seed = 0;
  /// Fixed MMD bandwidths; when empty the median heuristic is applied to the
  /// current batch and treated as a constant for differentiation.
  std::optional<std::vector<double>> bandwidths;
};

template <typename S>
struct ObjectiveResult {
  LossBundle losses;
  ParamSet<S> grads;  // empty unless requested
  std::vector<double> bandwidths;
  Vec<S> predictions;
  /// Fingerprint of every discrete branch taken; equal fingerprints at two
  /// parameter points mean the objective is smooth between them.
  std::uint64_t signature = 0;
};

namespace detail {

inline void mix(std::uint64_t& h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
}

template <typename S>
struct GroupStats {
  DistributionStats<S> stats;
  Vec<S> phi;
};

template <typename Derived>
GroupStats<typename Derived::Scalar> group_stats(const Eigen::MatrixBase<Derived>& rows) {
  GroupStats<typename Derived::Scalar> g;
  g.stats = patch_stats(rows);
  g.phi = kl_to_standard_normal(g.stats.mu, g.stats.sigma);
  return g;
}

// d/dfeatures of a loss given d/dphi for a group.
template <typename Derived, typename S>
Mat<S> phi_backward(const Eigen::MatrixBase<Derived>& rows, const GroupStats<S>& g, const Vec<S>& dphi) {
  const auto [dmu, dsigma] = kl_to_standard_normal_backward(g.stats.mu, g.stats.sigma, dphi);
  return patch_stats_backward(rows, g.stats, dmu, dsigma);
}

}  // namespace detail

template <typename S>
ObjectiveResult<S> evaluate_objective(const Model<S>& model, const TripletBatch& batch,
                                      const ObjectiveOptions& options, bool with_grad) {
  const Index B = batch.batch, N = batch.patches_per_image;
  const Index BN = B * N;
  if (N < 2) throw SampleError("objective needs at least 2 patches per image");
  if (static_cast<Index>(batch.distorted_patches.size()) != BN ||
      static_cast<Index>(batch.reference_patches.size()) != BN ||
      static_cast<Index>(batch.auxiliary_patches.size()) != BN)
    throw SizeError("triplet batch patch counts do not match B * N");
  const HyperParams& hp = options.hyper;

  std::vector<Image> all;
  all.reserve(static_cast<std::size_t>(3 * BN));
  all.insert(all.end(), batch.distorted_patches.begin(), batch.distorted_patches.end());
  all.insert(all.end(), batch.reference_patches.begin(), batch.reference_patches.end());
  all.insert(all.end(), batch.auxiliary_patches.begin(), batch.auxiliary_patches.end());
  const Mat<S> input = patches_to_input<S>(all);

  TrunkCache<S> cache;
  const DisentangledFeatures<S> f = forward_patches(model, input, 3 * BN, &cache);
  const Index D = f.semantic.cols();
  const Mat<S>& Fs = f.semantic;
  const Mat<S>& Fd = f.distortion;
  const auto group = [&](const Mat<S>& m, Index block, Index i) { return m.middleRows(block * BN + i * N, N); };

  ObjectiveResult<S> res;
  std::uint64_t sig = cache.kink_signature();

  // Per-image semantic aggregates.
  Mat<S> sem_d(B, D), sem_r(B, D), sem_a(B, D);
  for (Index i = 0; i < B; ++i) {
    sem_d.row(i) = group(Fs, 0, i).colwise().mean();
    sem_r.row(i) = group(Fs, 1, i).colwise().mean();
    sem_a.row(i) = group(Fs, 2, i).colwise().mean();
  }
  const TripletResult<S> trip = triplet_loss_grad(sem_r, sem_d, sem_a, hp.alpha);
  for (bool a : trip.active) detail::mix(sig, a);

  // Distorted images: statistics, normalization, prediction.
  std::vector<detail::GroupStats<S>> dstats;
  Mat<S> normalized(BN, D);
  Vec<S> pred(B), gt(B);
  std::vector<Vec<S>> att(static_cast<std::size_t>(B)), z(static_cast<std::size_t>(B));
  for (Index i = 0; i < B; ++i) {
    dstats.push_back(detail::group_stats(group(Fd, 0, i)));
    const auto& g = dstats.back();
    for (Index j = 0; j < D; ++j) detail::mix(sig, g.stats.sigma(j) > static_cast<S>(kStdEpsilon));
    normalized.middleRows(i * N, N) = normalize_distribution(group(Fd, 0, i), g.stats.mu, g.stats.sigma);
    att[static_cast<std::size_t>(i)] = attention_weights(model, Vec<S>(sem_d.row(i).transpose()));
    z[static_cast<std::size_t>(i)] = att[static_cast<std::size_t>(i)].cwiseProduct(g.phi);
    S pre;
    pred(i) = regress(model, z[static_cast<std::size_t>(i)], &pre);
    detail::mix(sig, pre > S(0));
    gt(i) = static_cast<S>(batch.scores[static_cast<std::size_t>(i)]);
    detail::mix(sig, pred(i) > gt(i) ? 1 : (pred(i) < gt(i) ? 2 : 0));
  }
  const auto [mae, dpred] = mae_loss_grad(pred, gt);

  // Distribution matching against a standard-normal draw.
  const Mat<S> gauss = sample_gaussian_reference(BN, D, options.gaussian_seed).samples.template cast<S>();
  res.bandwidths = options.bandwidths ? *options.bandwidths : median_heuristic_bandwidths(normalized, gauss);
  S mmd;
  Mat<S> dnormalized;
  if (with_grad && hp.lambda2 != 0.0) {
    std::tie(mmd, dnormalized) = mmd_gaussian_grad(normalized, gauss, res.bandwidths);
  } else {
    mmd = mmd_gaussian(normalized, gauss, res.bandwidths);
  }
  detail::mix(sig, mmd > S(0));

  // Distortion-type classification on distorted patches.
  const Mat<S> logits = classify_distortion(model, Mat<S>(Fd.topRows(BN)));
  std::vector<int> labels(static_cast<std::size_t>(BN));
  for (Index p = 0; p < BN; ++p)
    labels[static_cast<std::size_t>(p)] = batch.distortion_labels[static_cast<std::size_t>(p / N)];
  const auto [cls, dlogits] = classification_loss_grad(logits, std::span<const int>(labels));

  // KL regularizers on pristine reference/auxiliary statistics.
  std::vector<detail::GroupStats<S>> rstats, astats;
  std::vector<KlRegularizers<S>> regs;
  S reg_rd = 0, reg_ad = 0, reg_diff = 0;
  for (Index i = 0; i < B; ++i) {
    rstats.push_back(detail::group_stats(group(Fd, 1, i)));
    astats.push_back(detail::group_stats(group(Fd, 2, i)));
    for (Index j = 0; j < D; ++j) {
      detail::mix(sig, rstats.back().stats.sigma(j) > static_cast<S>(kStdEpsilon));
      detail::mix(sig, astats.back().stats.sigma(j) > static_cast<S>(kStdEpsilon));
    }
    regs.push_back(kl_regularizers(rstats.back().phi, astats.back().phi));
    reg_rd += regs.back().reg_rd;
    reg_ad += regs.back().reg_ad;
    reg_diff += regs.back().reg_diff;
  }
  const S inv_b = S(1) / static_cast<S>(B);

  LossBundle c;
  c.mae = static_cast<double>(mae);
  c.trip = static_cast<double>(trip.value);
  c.mmd = static_cast<double>(mmd);
  c.cls = static_cast<double>(cls);
  c.reg_rd = static_cast<double>(reg_rd * inv_b);
  c.reg_ad = static_cast<double>(reg_ad * inv_b);
  c.reg_diff = static_cast<double>(reg_diff * inv_b);
  res.losses = total_loss(c, hp);
  res.predictions = pred;
  res.signature = sig;
  if (!with_grad) return res;

  res.grads = model.params.zeros_like();
  Mat<S> dFs = Mat<S>::Zero(3 * BN, D);
  Mat<S> dFd = Mat<S>::Zero(3 * BN, D);
  const S l1 = static_cast<S>(hp.lambda1), l2 = static_cast<S>(hp.lambda2),
          l3 = static_cast<S>(hp.lambda3);

  Mat<S> dsem_d = l1 * trip.d_dist;
  const Mat<S> dsem_r = l1 * trip.d_ref;
  const Mat<S> dsem_a = l1 * trip.d_aux;

  for (Index i = 0; i < B; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const Vec<S> dz = regress_backward(model, z[k], dpred(i), res.grads);
    const Vec<S> datt = dz.cwiseProduct(dstats[k].phi);
    const Vec<S> dphi = dz.cwiseProduct(att[k]);
    dsem_d.row(i) += attention_backward(model, Vec<S>(sem_d.row(i).transpose()), datt, res.grads).transpose();
    dFd.middleRows(i * N, N) += detail::phi_backward(group(Fd, 0, i), dstats[k], dphi);
    if (l2 != S(0))
      dFd.middleRows(i * N, N) += normalize_distribution_backward(
          group(Fd, 0, i), dstats[k].stats, Mat<S>(l2 * dnormalized.middleRows(i * N, N)));
    dFd.middleRows(BN + i * N, N) += detail::phi_backward(group(Fd, 1, i), rstats[k], Vec<S>(inv_b * regs[k].d_rd));
    dFd.middleRows(2 * BN + i * N, N) += detail::phi_backward(group(Fd, 2, i), astats[k], Vec<S>(inv_b * regs[k].d_ad));
  }
  for (Index i = 0; i < B; ++i) {
    const S invn = S(1) / static_cast<S>(N);
    dFs.middleRows(i * N, N).rowwise() += invn * dsem_d.row(i);
    dFs.middleRows(BN + i * N, N).rowwise() += invn * dsem_r.row(i);
    dFs.middleRows(2 * BN + i * N, N).rowwise() += invn * dsem_a.row(i);
  }
  if (l3 != S(0))
    dFd.topRows(BN) += classify_backward(model, Mat<S>(Fd.topRows(BN)), Mat<S>(l3 * dlogits), res.grads);
  else
    classify_backward(model, Mat<S>(Fd.topRows(BN)), Mat<S>(Mat<S>::Zero(BN, logits.cols())), res.grads);

  backward_patches(model, cache, dFs, dFd, res.grads);
  return res;
}

}  // namespace sciq

#endif  // SCIQ_OBJECTIVE_HPP_
