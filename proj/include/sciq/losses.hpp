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

#ifndef SCIQ_LOSSES_HPP_
#define SCIQ_LOSSES_HPP_

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "sciq/core.hpp"

namespace sciq {

struct HyperParams {
  double alpha = 1.0;    // triplet margin
  double lambda1 = 1.0;  // triplet weight
  double lambda2 = 5e-3; // MMD weight
  double lambda3 = 1.0;  // classification weight
};

/// Per-step loss components and their weighted total.
struct LossBundle {
  double mae = 0, trip = 0, mmd = 0, cls = 0;
  double reg_rd = 0, reg_ad = 0, reg_diff = 0;
  double total = 0;
  HyperParams lambdas;

  /// Recomputes the weighted sum; `total` must equal it bit for bit.
  double weighted_sum() const {
    return mae + lambdas.lambda1 * trip + lambdas.lambda2 * mmd + lambdas.lambda3 * cls +
           reg_rd + reg_ad + reg_diff;
  }
  bool identity_holds() const { return total == weighted_sum(); }
};

template <typename S>
struct TripletResult {
  S value = 0;
  Mat<S> d_ref, d_dist, d_aux;  // gradients, same shape as the inputs
  std::vector<bool> active;     // hinge active per row
};

/// Mean over rows of max(|r - d|^2 - |r - a|^2 + alpha, 0). Rows are
/// per-image feature vectors.
template <typename S>
TripletResult<S> triplet_loss_grad(const Mat<S>& ref, const Mat<S>& dist, const Mat<S>& aux,
                                   double alpha) {
  if (ref.rows() != dist.rows() || ref.rows() != aux.rows() || ref.cols() != dist.cols() ||
      ref.cols() != aux.cols())
    throw SizeError("triplet loss inputs differ in shape");
  const Index b = ref.rows();
  TripletResult<S> out;
  out.d_ref = Mat<S>::Zero(ref.rows(), ref.cols());
  out.d_dist = out.d_ref;
  out.d_aux = out.d_ref;
  out.active.assign(static_cast<std::size_t>(b), false);
  if (b == 0) return out;
  const S inv_b = S(1) / static_cast<S>(b);
  for (Index i = 0; i < b; ++i) {
    const auto rd = ref.row(i) - dist.row(i);
    const auto ra = ref.row(i) - aux.row(i);
    const S h = rd.squaredNorm() - ra.squaredNorm() + static_cast<S>(alpha);
    if (h > S(0)) {
      out.value += h;
      out.active[static_cast<std::size_t>(i)] = true;
      out.d_ref.row(i) = S(2) * inv_b * (rd - ra);
      out.d_dist.row(i) = S(-2) * inv_b * rd;
      out.d_aux.row(i) = S(2) * inv_b * ra;
    }
  }
  out.value *= inv_b;
  return out;
}

template <typename S>
S triplet_loss(const Mat<S>& ref, const Mat<S>& dist, const Mat<S>& aux, double alpha) {
  return triplet_loss_grad(ref, dist, aux, alpha).value;
}

/// Mean softmax cross-entropy over rows of `logits` (B x K), stabilized by
/// max-logit subtraction. Returns the value and d/dlogits.
template <typename S>
std::pair<S, Mat<S>> classification_loss_grad(const Mat<S>& logits, std::span<const int> labels) {
  if (static_cast<std::size_t>(logits.rows()) != labels.size())
    throw SizeError("classification loss: label count differs from logit rows");
  const Index b = logits.rows(), k = logits.cols();
  Mat<S> grad(b, k);
  S total = 0;
  for (Index i = 0; i < b; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= k)
      throw ConfigError("label " + std::to_string(y) + " outside [0, " + std::to_string(k) + ")");
    const S mx = logits.row(i).maxCoeff();
    const auto shifted = (logits.row(i).array() - mx).eval();
    const S lse = std::log(shifted.exp().sum());
    total += lse - shifted(y);
    grad.row(i) = (shifted - lse).exp().matrix();
    grad(i, y) -= S(1);
  }
  if (b > 0) {
    total /= static_cast<S>(b);
    grad /= static_cast<S>(b);
  }
  return {total, grad};
}

template <typename S>
S classification_loss(const Mat<S>& logits, std::span<const int> labels) {
  return classification_loss_grad(logits, labels).first;
}

/// Mean absolute error and its (sub)gradient w.r.t. `pred` (0 at ties).
template <typename S>
std::pair<S, Vec<S>> mae_loss_grad(const Vec<S>& pred, const Vec<S>& gt) {
  if (pred.size() != gt.size()) throw SizeError("MAE: prediction and target lengths differ");
  if (pred.size() == 0) return {S(0), Vec<S>()};
  const Vec<S> diff = pred - gt;
  const S n = static_cast<S>(pred.size());
  Vec<S> grad = diff.unaryExpr([](S v) { return v > S(0) ? S(1) : (v < S(0) ? S(-1) : S(0)); }) / n;
  return {diff.cwiseAbs().sum() / n, grad};
}

template <typename S>
S mae_loss(const Vec<S>& pred, const Vec<S>& gt) {
  return mae_loss_grad(pred, gt).first;
}

/// Squared norms |phi_rd|^2, |phi_ad|^2, |phi_rd - phi_ad|^2 and their
/// gradients w.r.t. phi_rd and phi_ad.
template <typename S>
struct KlRegularizers {
  S reg_rd = 0, reg_ad = 0, reg_diff = 0;
  Vec<S> d_rd, d_ad;  // gradient of the sum of the three terms
};

template <typename S>
KlRegularizers<S> kl_regularizers(const Vec<S>& phi_rd, const Vec<S>& phi_ad) {
  if (phi_rd.size() != phi_ad.size()) throw SizeError("KL regularizers: shape mismatch");
  KlRegularizers<S> r;
  const Vec<S> diff = phi_rd - phi_ad;
  r.reg_rd = phi_rd.squaredNorm();
  r.reg_ad = phi_ad.squaredNorm();
  r.reg_diff = diff.squaredNorm();
  r.d_rd = S(2) * phi_rd + S(2) * diff;
  r.d_ad = S(2) * phi_ad - S(2) * diff;
  return r;
}

/// Assembles the total objective. Throws NumericError naming the first
/// non-finite component.
inline LossBundle total_loss(const LossBundle& c, const HyperParams& hyper) {
  const std::pair<const char*, double> parts[] = {
      {"mae", c.mae},       {"trip", c.trip},     {"mmd", c.mmd},
      {"cls", c.cls},       {"reg_rd", c.reg_rd}, {"reg_ad", c.reg_ad},
      {"reg_diff", c.reg_diff}};
  for (const auto& [name, v] : parts)
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite loss component '") + name + "'");
  LossBundle out = c;
  out.lambdas = hyper;
  out.total = out.weighted_sum();
  return out;
}

}  // namespace sciq

#endif  // SCIQ_LOSSES_HPP_
