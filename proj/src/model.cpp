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

#include "sciq/model.hpp"

#include <cmath>

#include "sciq/patches.hpp"
#include "sciq/rng.hpp"
#include "sciq/statistics.hpp"

namespace sciq {

namespace {

using layers::Geometry;

void hash_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

template <typename S>
void hash_mask(std::uint64_t& h, const Mat<S>& m) {
  unsigned char byte = 0;
  int bits = 0;
  for (Index i = 0; i < m.size(); ++i) {
    byte = static_cast<unsigned char>((byte << 1) | (m.data()[i] > S(0) ? 1 : 0));
    if (++bits == 8) {
      hash_bytes(h, &byte, 1);
      byte = 0;
      bits = 0;
    }
  }
  hash_bytes(h, &byte, 1);
}

template <typename S>
Mat<S> affine(const Mat<S>& w, const Mat<S>& b, const Mat<S>& x) {
  Mat<S> y = w * x;
  y.colwise() += b.col(0);
  return y;
}

// Accumulates gradients of y = w x + b and returns dx.
template <typename S>
Mat<S> affine_backward(const Mat<S>& w, const Mat<S>& x, const Mat<S>& dy, Mat<S>& dw, Mat<S>& db) {
  dw.noalias() += dy * x.transpose();
  db.col(0) += dy.rowwise().sum();
  return w.transpose() * dy;
}

constexpr int kCells = layers::kPoolCells * layers::kPoolCells;

}  // namespace

void ModelConfig::validate() const {
  for (int t = 0; t < kStages; ++t) {
    if (stage_channels[static_cast<std::size_t>(t)] < 1)
      throw ConfigError("stage_channels must be positive");
    if (convs_per_stage[static_cast<std::size_t>(t)] < 1)
      throw ConfigError("convs_per_stage must be positive");
  }
  if (feature_dim < 1) throw ConfigError("feature_dim must be positive");
  if (num_classes < 2) throw ConfigError("num_classes must be at least 2");
  if (patch_size < 32 || patch_size % 32 != 0)
    throw ConfigError("patch_size must be a positive multiple of 32");
}

ModelConfig ModelConfig::tiny(int num_classes) {
  ModelConfig c;
  c.stage_channels = {4, 4, 4, 4, 4};
  c.convs_per_stage = {2, 2, 2, 2, 2};
  c.feature_dim = 16;
  c.num_classes = num_classes;
  return c;
}

ModelConfig ModelConfig::compact(int num_classes) {
  ModelConfig c;
  c.stage_channels = {16, 32, 32, 64, 64};
  c.convs_per_stage = {1, 1, 1, 1, 1};
  c.feature_dim = 64;
  c.num_classes = num_classes;
  return c;
}

template <typename S>
int ParamSet<S>::add(std::string name, std::vector<int> shape) {
  Index rows = shape.empty() ? 1 : shape[0], cols = 1;
  for (std::size_t i = 1; i < shape.size(); ++i) cols *= shape[i];
  names.push_back(std::move(name));
  shapes.push_back(std::move(shape));
  values.push_back(Mat<S>::Zero(rows, cols));
  return static_cast<int>(values.size() - 1);
}

template <typename S>
int ParamSet<S>::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

template <typename S>
Mat<S>& ParamSet<S>::operator[](std::string_view name) {
  const int i = index_of(name);
  if (i < 0) throw ConfigError("no parameter named '" + std::string(name) + "'");
  return values[static_cast<std::size_t>(i)];
}

template <typename S>
const Mat<S>& ParamSet<S>::operator[](std::string_view name) const {
  const int i = index_of(name);
  if (i < 0) throw ConfigError("no parameter named '" + std::string(name) + "'");
  return values[static_cast<std::size_t>(i)];
}

template <typename S>
Index ParamSet<S>::scalar_count() const {
  Index n = 0;
  for (const auto& v : values) n += v.size();
  return n;
}

template <typename S>
ParamSet<S> ParamSet<S>::zeros_like() const {
  ParamSet out;
  out.names = names;
  out.shapes = shapes;
  for (const auto& v : values) out.values.push_back(Mat<S>::Zero(v.rows(), v.cols()));
  return out;
}

template <typename S>
S& ParamSet<S>::scalar(Index k) {
  for (auto& v : values) {
    if (k < v.size()) return v.data()[k];
    k -= v.size();
  }
  throw SizeError("scalar index out of range");
}

template <typename S>
Model<S> Model<S>::create(const ModelConfig& config) {
  config.validate();
  Model m;
  m.config = config;
  auto& L = m.layout;
  auto& P = m.params;
  const int D = config.feature_dim;
  int cin = 3, pooled = 0;
  for (int t = 0; t < kStages; ++t) {
    const int c = config.stage_channels[static_cast<std::size_t>(t)];
    L.stage_w.emplace_back();
    L.stage_b.emplace_back();
    for (int k = 0; k < config.convs_per_stage[static_cast<std::size_t>(t)]; ++k) {
      const std::string base = "generator.stage" + std::to_string(t + 1) + ".conv" + std::to_string(k + 1);
      L.stage_w.back().push_back(P.add(base + ".weight", {c, 3, 3, cin}));
      L.stage_b.back().push_back(P.add(base + ".bias", {c}));
      cin = c;
    }
    pooled += 2 * c;
  }
  L.fusion_w[0] = P.add("fusion.conv1.weight", {D, 1, 1, pooled});
  L.fusion_b[0] = P.add("fusion.conv1.bias", {D});
  L.fusion_w[1] = P.add("fusion.conv2.weight", {D, 1, 1, D});
  L.fusion_b[1] = P.add("fusion.conv2.bias", {D});
  const auto pair = [&](const std::string& head, std::array<int, 2>& w, std::array<int, 2>& b) {
    for (int k = 0; k < 2; ++k) {
      const std::string base = head + ".fc" + std::to_string(k + 1);
      w[static_cast<std::size_t>(k)] = P.add(base + ".weight", {D, D});
      b[static_cast<std::size_t>(k)] = P.add(base + ".bias", {D});
    }
  };
  pair("semantic", L.semantic_w, L.semantic_b);
  pair("distortion", L.distortion_w, L.distortion_b);
  pair("attention", L.attention_w, L.attention_b);
  L.regressor_w = P.add("regressor.fc.weight", {1, D});
  L.regressor_b = P.add("regressor.fc.bias", {1});
  L.classifier_w = P.add("classifier.fc.weight", {config.num_classes, D});
  L.classifier_b = P.add("classifier.fc.bias", {config.num_classes});
  return m;
}

template <typename S>
Model<S> Model<S>::initialized(const ModelConfig& config, std::uint64_t seed) {
  Model m = create(config);
  Rng rng(derive_seed(seed, 0x1417));
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    const auto& shape = m.params.shapes[i];
    if (shape.size() < 2) continue;  // biases stay zero
    Index fan_in = 1;
    for (std::size_t k = 1; k < shape.size(); ++k) fan_in *= shape[k];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    // The regressor input is non-negative; non-negative weights keep its
    // ReLU active at the start.
    const double lo = static_cast<int>(i) == m.layout.regressor_w ? 0.0 : -bound;
    auto& v = m.params.values[i];
    for (Index r = 0; r < v.rows(); ++r)
      for (Index c = 0; c < v.cols(); ++c) v(r, c) = static_cast<S>(rng.uniform(lo, bound));
  }
  return m;
}

template <typename S>
std::uint64_t TrunkCache<S>::kink_signature() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& stage : conv_outputs)
    for (const auto& m : stage) hash_mask(h, m);
  for (const auto& a : pool_argmax) hash_bytes(h, a.data(), sizeof(int) * static_cast<std::size_t>(a.size()));
  hash_mask(h, fusion1);
  hash_mask(h, fusion2);
  hash_mask(h, semantic_hidden);
  hash_mask(h, distortion_hidden);
  return h;
}

template <typename S>
std::vector<Mat<S>> multiscale_features(const Model<S>& model, const Mat<S>& input, Index patches,
                                        TrunkCache<S>* cache) {
  const auto& cfg = model.config;
  const auto& P = model.params.values;
  if (input.rows() != 3 ||
      input.cols() != patches * static_cast<Index>(cfg.patch_size) * cfg.patch_size)
    throw SizeError("network input must be 3 x (patches * patch_size^2)");
  if (!input.allFinite()) throw NumericError("non-finite network input");
  if (cache) {
    cache->patches = patches;
    cache->conv_inputs.assign(kStages, {});
    cache->conv_outputs.assign(kStages, {});
    cache->stage_geometry.assign(kStages, {});
    cache->pool_argmax.assign(kStages, {});
  }
  std::vector<Mat<S>> maps;
  Geometry g{patches, cfg.patch_size, cfg.patch_size};
  Mat<S> x = input;
  layers::IndexMap argmax;
  for (int t = 0; t < kStages; ++t) {
    const auto& ws = model.layout.stage_w[static_cast<std::size_t>(t)];
    const auto& bs = model.layout.stage_b[static_cast<std::size_t>(t)];
    for (std::size_t k = 0; k < ws.size(); ++k) {
      Mat<S> y = layers::conv3x3(x, g, P[static_cast<std::size_t>(ws[k])], P[static_cast<std::size_t>(bs[k])]);
      layers::relu_inplace(y);
      if (cache) {
        cache->conv_inputs[static_cast<std::size_t>(t)].push_back(std::move(x));
        cache->conv_outputs[static_cast<std::size_t>(t)].push_back(y);
      }
      x = std::move(y);
    }
    if (cache) cache->stage_geometry[static_cast<std::size_t>(t)] = g;
    x = layers::maxpool2x2(x, g, argmax);
    if (cache) cache->pool_argmax[static_cast<std::size_t>(t)] = argmax;
    g = {patches, g.height / 2, g.width / 2};
    maps.push_back(x);
  }
  if (cache) cache->stage_maps = maps;
  return maps;
}

template <typename S>
Mat<S> pooled_quality_feature(const Model<S>& model, const std::vector<Mat<S>>& stage_maps,
                              Index patches, TrunkCache<S>* cache) {
  const auto& cfg = model.config;
  const auto& P = model.params.values;
  const auto& L = model.layout;
  Index rows = 0;
  for (const auto& m : stage_maps) rows += 2 * m.rows();
  Mat<S> z(rows, patches * kCells);
  if (cache) {
    cache->pooled_mean.clear();
    cache->pooled_std.clear();
  }
  Index r = 0;
  int size = cfg.patch_size;
  for (const auto& m : stage_maps) {
    size /= 2;
    Mat<S> mean, stdev;
    layers::adaptive_mean_std(m, Geometry{patches, size, size}, mean, stdev);
    z.middleRows(r, m.rows()) = mean;
    z.middleRows(r + m.rows(), m.rows()) = stdev;
    r += 2 * m.rows();
    if (cache) {
      cache->pooled_mean.push_back(std::move(mean));
      cache->pooled_std.push_back(std::move(stdev));
    }
  }
  Mat<S> f1 = affine(P[static_cast<std::size_t>(L.fusion_w[0])], P[static_cast<std::size_t>(L.fusion_b[0])], z);
  layers::relu_inplace(f1);
  Mat<S> f2 = affine(P[static_cast<std::size_t>(L.fusion_w[1])], P[static_cast<std::size_t>(L.fusion_b[1])], f1);
  layers::relu_inplace(f2);
  Mat<S> q = Mat<S>::Zero(f2.rows(), patches);
  for (int c = 0; c < kCells; ++c) q += f2(Eigen::all, Eigen::seqN(c, patches, kCells));
  q /= static_cast<S>(kCells);
  if (cache) {
    cache->fused_input = std::move(z);
    cache->fusion1 = std::move(f1);
    cache->fusion2 = std::move(f2);
    cache->quality = q;
  }
  return q.transpose();
}

template <typename S>
DisentangledFeatures<S> disentangle(const Model<S>& model, const Mat<S>& quality,
                                    TrunkCache<S>* cache) {
  const auto& P = model.params.values;
  const auto& L = model.layout;
  const Mat<S> q = quality.transpose();
  const auto head = [&](const std::array<int, 2>& w, const std::array<int, 2>& b, Mat<S>& hidden) {
    hidden = affine(P[static_cast<std::size_t>(w[0])], P[static_cast<std::size_t>(b[0])], q);
    layers::relu_inplace(hidden);
    return affine(P[static_cast<std::size_t>(w[1])], P[static_cast<std::size_t>(b[1])], hidden);
  };
  Mat<S> sh, dh;
  Mat<S> s = head(L.semantic_w, L.semantic_b, sh);
  Mat<S> d = head(L.distortion_w, L.distortion_b, dh);
  DisentangledFeatures<S> out{s.transpose(), d.transpose()};
  if (cache) {
    cache->semantic_hidden = std::move(sh);
    cache->semantic = std::move(s);
    cache->distortion_hidden = std::move(dh);
    cache->distortion = std::move(d);
  }
  return out;
}

template <typename S>
DisentangledFeatures<S> forward_patches(const Model<S>& model, const Mat<S>& input, Index patches,
                                        TrunkCache<S>* cache) {
  const auto maps = multiscale_features(model, input, patches, cache);
  const Mat<S> q = pooled_quality_feature(model, maps, patches, cache);
  return disentangle(model, q, cache);
}

template <typename S>
void backward_patches(const Model<S>& model, const TrunkCache<S>& cache, const Mat<S>& d_semantic,
                      const Mat<S>& d_distortion, ParamSet<S>& grads) {
  const auto& P = model.params.values;
  const auto& L = model.layout;
  auto& G = grads.values;
  const auto at = [](int i) { return static_cast<std::size_t>(i); };
  const Index patches = cache.patches;

  // Heads.
  Mat<S> dq = Mat<S>::Zero(cache.quality.rows(), patches);
  const auto head_back = [&](const std::array<int, 2>& w, const std::array<int, 2>& b,
                             const Mat<S>& hidden, const Mat<S>& dout) {
    Mat<S> dh = affine_backward(P[at(w[1])], hidden, dout, G[at(w[1])], G[at(b[1])]);
    layers::relu_backward_inplace(hidden, dh);
    dq += affine_backward(P[at(w[0])], cache.quality, dh, G[at(w[0])], G[at(b[0])]);
  };
  head_back(L.semantic_w, L.semantic_b, cache.semantic_hidden, d_semantic.transpose());
  head_back(L.distortion_w, L.distortion_b, cache.distortion_hidden, d_distortion.transpose());

  // Spatial average and fusion.
  Mat<S> df2(cache.fusion2.rows(), cache.fusion2.cols());
  for (int c = 0; c < kCells; ++c)
    df2(Eigen::all, Eigen::seqN(c, patches, kCells)) = dq / static_cast<S>(kCells);
  layers::relu_backward_inplace(cache.fusion2, df2);
  Mat<S> df1 = affine_backward(P[at(L.fusion_w[1])], cache.fusion1, df2, G[at(L.fusion_w[1])], G[at(L.fusion_b[1])]);
  layers::relu_backward_inplace(cache.fusion1, df1);
  const Mat<S> dz = affine_backward(P[at(L.fusion_w[0])], cache.fused_input, df1, G[at(L.fusion_w[0])], G[at(L.fusion_b[0])]);

  // Pooled statistics back to stage maps.
  std::vector<Mat<S>> dmaps(kStages);
  Index r = 0;
  int size = model.config.patch_size;
  for (int t = 0; t < kStages; ++t) {
    size /= 2;
    const Mat<S>& m = cache.stage_maps[at(t)];
    const Index c = m.rows();
    dmaps[at(t)] = layers::adaptive_mean_std_backward(
        m, Geometry{patches, size, size}, cache.pooled_mean[at(t)], cache.pooled_std[at(t)],
        Mat<S>(dz.middleRows(r, c)), Mat<S>(dz.middleRows(r + c, c)));
    r += 2 * c;
  }

  // Stages in reverse; each stage's input gradient feeds the previous map.
  for (int t = kStages - 1; t >= 0; --t) {
    const Geometry& g = cache.stage_geometry[at(t)];
    Mat<S> dx = layers::maxpool2x2_backward(cache.pool_argmax[at(t)], g.pixels(), dmaps[at(t)]);
    const auto& ws = L.stage_w[at(t)];
    const auto& bs = L.stage_b[at(t)];
    for (int k = static_cast<int>(ws.size()) - 1; k >= 0; --k) {
      layers::relu_backward_inplace(cache.conv_outputs[at(t)][at(k)], dx);
      const bool need_dx = !(t == 0 && k == 0);
      dx = layers::conv3x3_backward(cache.conv_inputs[at(t)][at(k)], g, P[at(ws[at(k)])], dx,
                                    G[at(ws[at(k)])], G[at(bs[at(k)])], need_dx);
    }
    if (t > 0) dmaps[at(t - 1)] += dx;
  }
}

template <typename S>
Vec<S> attention_weights(const Model<S>& model, const Vec<S>& semantic) {
  const auto& P = model.params.values;
  const auto& L = model.layout;
  Mat<S> h = affine(P[static_cast<std::size_t>(L.attention_w[0])], P[static_cast<std::size_t>(L.attention_b[0])], Mat<S>(semantic));
  layers::relu_inplace(h);
  const Mat<S> pre = affine(P[static_cast<std::size_t>(L.attention_w[1])], P[static_cast<std::size_t>(L.attention_b[1])], h);
  return (S(1) / (S(1) + (-pre.array()).exp())).matrix();
}

template <typename S>
Vec<S> attention_backward(const Model<S>& model, const Vec<S>& semantic, const Vec<S>& d_attention,
                          ParamSet<S>& grads) {
  const auto& P = model.params.values;
  const auto& L = model.layout;
  auto& G = grads.values;
  const auto at = [](int i) { return static_cast<std::size_t>(i); };
  Mat<S> h = affine(P[at(L.attention_w[0])], P[at(L.attention_b[0])], Mat<S>(semantic));
  layers::relu_inplace(h);
  const Mat<S> pre = affine(P[at(L.attention_w[1])], P[at(L.attention_b[1])], h);
  const Mat<S> a = (S(1) / (S(1) + (-pre.array()).exp())).matrix();
  const Mat<S> dpre = (d_attention.array() * a.array() * (S(1) - a.array())).matrix();
  Mat<S> dh = affine_backward(P[at(L.attention_w[1])], h, dpre, G[at(L.attention_w[1])], G[at(L.attention_b[1])]);
  layers::relu_backward_inplace(h, dh);
  return affine_backward(P[at(L.attention_w[0])], Mat<S>(semantic), dh, G[at(L.attention_w[0])], G[at(L.attention_b[0])]);
}

template <typename S>
S regress(const Model<S>& model, const Vec<S>& z, S* pre_activation) {
  const auto& w = model.params.values[static_cast<std::size_t>(model.layout.regressor_w)];
  const auto& b = model.params.values[static_cast<std::size_t>(model.layout.regressor_b)];
  const S pre = w.row(0).dot(z) + b(0, 0);
  if (pre_activation) *pre_activation = pre;
  return pre > S(0) ? pre : S(0);
}

template <typename S>
Vec<S> regress_backward(const Model<S>& model, const Vec<S>& z, S d_out, ParamSet<S>& grads) {
  S pre;
  regress(model, z, &pre);
  const auto& w = model.params.values[static_cast<std::size_t>(model.layout.regressor_w)];
  if (!(pre > S(0))) return Vec<S>::Zero(z.size());
  grads.values[static_cast<std::size_t>(model.layout.regressor_w)].row(0) += d_out * z.transpose();
  grads.values[static_cast<std::size_t>(model.layout.regressor_b)](0, 0) += d_out;
  return d_out * w.row(0).transpose();
}

template <typename S>
Mat<S> classify_distortion(const Model<S>& model, const Mat<S>& distortion) {
  const auto& w = model.params.values[static_cast<std::size_t>(model.layout.classifier_w)];
  const auto& b = model.params.values[static_cast<std::size_t>(model.layout.classifier_b)];
  Mat<S> logits = distortion * w.transpose();
  logits.rowwise() += b.col(0).transpose();
  return logits;
}

template <typename S>
Mat<S> classify_backward(const Model<S>& model, const Mat<S>& distortion, const Mat<S>& d_logits,
                         ParamSet<S>& grads) {
  const auto& w = model.params.values[static_cast<std::size_t>(model.layout.classifier_w)];
  grads.values[static_cast<std::size_t>(model.layout.classifier_w)].noalias() += d_logits.transpose() * distortion;
  grads.values[static_cast<std::size_t>(model.layout.classifier_b)].col(0) += d_logits.colwise().sum().transpose();
  return d_logits * w;
}

template <typename S>
S predict_quality_from_patches(const Model<S>& model, const std::vector<Image>& patches,
                               QualityTrace<S>* trace) {
  if (patches.size() < 2) throw SizeError("quality prediction needs at least two patches");
  const Mat<S> input = patches_to_input<S>(patches);
  auto features = forward_patches(model, input, static_cast<Index>(patches.size()));
  auto stats = patch_stats(features.distortion);
  const Vec<S> phi = kl_to_standard_normal(stats.mu, stats.sigma);
  const Vec<S> sem = features.semantic.colwise().mean().transpose();
  const Vec<S> att = attention_weights(model, sem);
  const S score = regress(model, Vec<S>(att.cwiseProduct(phi)));
  if (trace) {
    trace->features = std::move(features);
    trace->mu = std::move(stats.mu);
    trace->sigma = std::move(stats.sigma);
    trace->phi = phi;
    trace->attention = att;
    trace->score = score;
  }
  return score;
}

template <typename S>
S predict_quality(const Model<S>& model, const Image& image, QualityTrace<S>* trace) {
  return predict_quality_from_patches(model, extract_patches(image, model.config.patch_size), trace);
}

#define SCIQ_INSTANTIATE(S)                                                                        \
  template struct ParamSet<S>;                                                                     \
  template struct Model<S>;                                                                        \
  template struct TrunkCache<S>;                                                                   \
  template std::vector<Mat<S>> multiscale_features(const Model<S>&, const Mat<S>&, Index,          \
                                                   TrunkCache<S>*);                                \
  template Mat<S> pooled_quality_feature(const Model<S>&, const std::vector<Mat<S>>&, Index,       \
                                         TrunkCache<S>*);                                          \
  template DisentangledFeatures<S> disentangle(const Model<S>&, const Mat<S>&, TrunkCache<S>*);    \
  template DisentangledFeatures<S> forward_patches(const Model<S>&, const Mat<S>&, Index,          \
                                                   TrunkCache<S>*);                                \
  template void backward_patches(const Model<S>&, const TrunkCache<S>&, const Mat<S>&,             \
                                 const Mat<S>&, ParamSet<S>&);                                     \
  template Vec<S> attention_weights(const Model<S>&, const Vec<S>&);                               \
  template Vec<S> attention_backward(const Model<S>&, const Vec<S>&, const Vec<S>&, ParamSet<S>&); \
  template S regress(const Model<S>&, const Vec<S>&, S*);                                          \
  template Vec<S> regress_backward(const Model<S>&, const Vec<S>&, S, ParamSet<S>&);               \
  template Mat<S> classify_distortion(const Model<S>&, const Mat<S>&);                             \
  template Mat<S> classify_backward(const Model<S>&, const Mat<S>&, const Mat<S>&, ParamSet<S>&);  \
  template S predict_quality_from_patches(const Model<S>&, const std::vector<Image>&,              \
                                          QualityTrace<S>*);                                       \
  template S predict_quality(const Model<S>&, const Image&, QualityTrace<S>*);

SCIQ_INSTANTIATE(float)
SCIQ_INSTANTIATE(double)

#undef SCIQ_INSTANTIATE

}  // namespace sciq
