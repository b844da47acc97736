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

#ifndef SCIQ_MODEL_HPP_
#define SCIQ_MODEL_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sciq/core.hpp"
#include "sciq/image.hpp"
#include "sciq/layers.hpp"

namespace sciq {

inline constexpr int kStages = 5;

struct ModelConfig {
  std::array<int, kStages> stage_channels{32, 64, 128, 256, 256};
  std::array<int, kStages> convs_per_stage{2, 2, 2, 2, 2};
  int feature_dim = 512;
  int num_classes = 5;
  int patch_size = 32;

  /// Throws ConfigError on non-positive sizes, K < 2, or a patch size that
  /// does not survive five 2x poolings.
  void validate() const;

  /// Feature widths studied for the released model.
  static bool is_reference_dim(int d) { return d == 256 || d == 512 || d == 1792 || d == 2048; }

  /// 4 channels per stage, 16-dimensional features. For gradient checks.
  static ModelConfig tiny(int num_classes = 3);
  /// Reduced widths that train in minutes on one CPU core.
  static ModelConfig compact(int num_classes = 3);

  bool operator==(const ModelConfig&) const = default;
};

/// Indices of every parameter array inside a ParamSet.
struct ModelLayout {
  std::vector<std::vector<int>> stage_w, stage_b;  // [stage][conv]
  std::array<int, 2> fusion_w{}, fusion_b{};
  std::array<int, 2> semantic_w{}, semantic_b{};
  std::array<int, 2> distortion_w{}, distortion_b{};
  std::array<int, 2> attention_w{}, attention_b{};
  int regressor_w = 0, regressor_b = 0;
  int classifier_w = 0, classifier_b = 0;
};

/// Named parameter arrays. Names and logical shapes form the checkpoint
/// contract:
///   generator.stage{t}.conv{k}.{weight,bias}   weight (out, 3, 3, in)
///   fusion.conv{1,2}.{weight,bias}              weight (out, 1, 1, in)
///   semantic.fc{1,2}, distortion.fc{1,2}, attention.fc{1,2},
///   regressor.fc, classifier.fc                 weight (out, in)
/// Biases have shape (out). Values are stored as out x (prod of the rest)
/// matrices whose row-major order matches the logical shape.
template <typename S>
struct ParamSet {
  std::vector<std::string> names;
  std::vector<std::vector<int>> shapes;
  std::vector<Mat<S>> values;

  int add(std::string name, std::vector<int> shape);
  int index_of(std::string_view name) const;  // -1 if absent
  Mat<S>& operator[](std::string_view name);
  const Mat<S>& operator[](std::string_view name) const;
  std::size_t size() const { return values.size(); }
  Index scalar_count() const;

  ParamSet zeros_like() const;
  template <typename T>
  ParamSet<T> cast() const {
    ParamSet<T> out;
    out.names = names;
    out.shapes = shapes;
    for (const auto& v : values) out.values.push_back(v.template cast<T>());
    return out;
  }
  /// Flat scalar view for the k-th scalar across all arrays.
  S& scalar(Index k);
};

template <typename S>
struct Model {
  ModelConfig config;
  ModelLayout layout;
  ParamSet<S> params;

  /// All parameters zero.
  static Model create(const ModelConfig& config);
  /// Fan-in scaled uniform weights (zero-mean, except non-negative for the
  /// regressor), zero biases.
  static Model initialized(const ModelConfig& config, std::uint64_t seed);

  template <typename T>
  Model<T> cast() const {
    return Model<T>{config, layout, params.template cast<T>()};
  }
};

/// Per-patch outputs of the two disentanglement heads (rows are patches).
template <typename S>
struct DisentangledFeatures {
  Mat<S> semantic;
  Mat<S> distortion;
};

/// Everything the backward pass needs from a forward pass over patches.
template <typename S>
struct TrunkCache {
  Index patches = 0;
  std::vector<std::vector<Mat<S>>> conv_inputs;   // [stage][conv]
  std::vector<std::vector<Mat<S>>> conv_outputs;  // post-ReLU
  std::vector<layers::Geometry> stage_geometry;   // conv geometry per stage
  std::vector<layers::IndexMap> pool_argmax;
  std::vector<Mat<S>> stage_maps;                 // after max pooling
  std::vector<Mat<S>> pooled_mean, pooled_std;
  Mat<S> fused_input;                             // (2 * sum C) x (P * 9)
  Mat<S> fusion1, fusion2;                        // post-ReLU
  Mat<S> quality;                                 // D x P
  Mat<S> semantic_hidden, semantic;               // D x P
  Mat<S> distortion_hidden, distortion;           // D x P

  /// Hash of every discrete branch taken (ReLU masks, pooling winners).
  std::uint64_t kink_signature() const;
};

/// Network input (3 x P*ps*ps) from patches, see patches_to_input.
/// Stage maps F_t, t = 1..5; map t has spatial size ps / 2^t.
template <typename S>
std::vector<Mat<S>> multiscale_features(const Model<S>& model, const Mat<S>& input, Index patches,
                                        TrunkCache<S>* cache = nullptr);

/// Mean/std pooled, fused and spatially averaged quality feature (P x D).
template <typename S>
Mat<S> pooled_quality_feature(const Model<S>& model, const std::vector<Mat<S>>& stage_maps,
                              Index patches, TrunkCache<S>* cache = nullptr);

/// Two independent heads on the quality feature (rows are patches).
template <typename S>
DisentangledFeatures<S> disentangle(const Model<S>& model, const Mat<S>& quality,
                                    TrunkCache<S>* cache = nullptr);

/// Full patch pipeline: input -> stage maps -> quality feature -> heads.
template <typename S>
DisentangledFeatures<S> forward_patches(const Model<S>& model, const Mat<S>& input, Index patches,
                                        TrunkCache<S>* cache = nullptr);

/// Backpropagates head-output gradients (P x D each) through the trunk,
/// accumulating into `grads`.
template <typename S>
void backward_patches(const Model<S>& model, const TrunkCache<S>& cache, const Mat<S>& d_semantic,
                      const Mat<S>& d_distortion, ParamSet<S>& grads);

/// Channel attention in (0, 1) from a per-image semantic vector.
template <typename S>
Vec<S> attention_weights(const Model<S>& model, const Vec<S>& semantic);

/// Returns d/dsemantic and accumulates parameter gradients.
template <typename S>
Vec<S> attention_backward(const Model<S>& model, const Vec<S>& semantic, const Vec<S>& d_attention,
                          ParamSet<S>& grads);

/// Regressor r(z) = ReLU(w . z + b).
template <typename S>
S regress(const Model<S>& model, const Vec<S>& z, S* pre_activation = nullptr);

template <typename S>
Vec<S> regress_backward(const Model<S>& model, const Vec<S>& z, S d_out, ParamSet<S>& grads);

/// Distortion-type logits (P x K) from distortion features (P x D).
template <typename S>
Mat<S> classify_distortion(const Model<S>& model, const Mat<S>& distortion);

/// Returns d/ddistortion and accumulates parameter gradients.
template <typename S>
Mat<S> classify_backward(const Model<S>& model, const Mat<S>& distortion, const Mat<S>& d_logits,
                         ParamSet<S>& grads);

/// Intermediate quantities of a single-image prediction.
template <typename S>
struct QualityTrace {
  DisentangledFeatures<S> features;
  Vec<S> mu, sigma, phi;
  Vec<S> attention;
  S score = 0;
};

/// No-reference quality of one image from all of its non-overlapping
/// patches. Needs at least two patches for the std estimate.
template <typename S>
S predict_quality(const Model<S>& model, const Image& image, QualityTrace<S>* trace = nullptr);

/// Same as predict_quality but over an explicit patch set (P >= 2).
template <typename S>
S predict_quality_from_patches(const Model<S>& model, const std::vector<Image>& patches,
                               QualityTrace<S>* trace = nullptr);

}  // namespace sciq

#endif  // SCIQ_MODEL_HPP_
