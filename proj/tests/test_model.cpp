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


#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "sciq/gradcheck.hpp"
#include "sciq/model.hpp"
#include "sciq/patches.hpp"
#include "sciq/rng.hpp"
#include "sciq/statistics.hpp"
#include "sciq/synth.hpp"

using namespace sciq;

namespace {

Mat<double> random_mat(Index r, Index c, Rng& rng, double scale = 1.0) {
  Mat<double> m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

// Initialized weights plus small random biases so no branch is trivially off.
Model<double> random_model(const ModelConfig& cfg, std::uint64_t seed) {
  auto m = Model<double>::initialized(cfg, seed);
  Rng rng(seed + 1000);
  for (std::size_t i = 0; i < m.params.size(); ++i)
    if (m.params.names[i].ends_with(".bias"))
      m.params.values[i] = random_mat(m.params.values[i].rows(), m.params.values[i].cols(), rng, 0.05);
  return m;
}

std::vector<Image> patches_of(int count, std::uint64_t seed) {
  const Image img = synthesize_sci(64, std::max(64, 32 * ((count + 1) / 2)), seed);
  auto p = extract_patches(img, 32);
  p.resize(static_cast<std::size_t>(count));
  return p;
}

double dot(const Mat<double>& a, const Mat<double>& b) { return a.cwiseProduct(b).sum(); }

}  // namespace

TEST_CASE("stage maps halve per stage") {
  const auto m = random_model(ModelConfig::tiny(), 1);
  const auto pats = patches_of(4, 2);
  const auto maps = multiscale_features(m, patches_to_input<double>(pats), 4);
  REQUIRE(maps.size() == 5);
  const int sides[] = {16, 8, 4, 2, 1};
  for (int t = 0; t < 5; ++t) {
    CHECK(maps[static_cast<std::size_t>(t)].rows() == 4);
    CHECK(maps[static_cast<std::size_t>(t)].cols() == 4 * sides[t] * sides[t]);
  }
}

TEST_CASE("default config output shapes") {
  auto cfg = ModelConfig{};
  cfg.num_classes = 7;
  const auto m = Model<float>::initialized(cfg, 3);
  const auto pats = patches_of(2, 4);
  TrunkCache<float> cache;
  const auto f = forward_patches(m, patches_to_input<float>(pats), 2, &cache);
  CHECK(f.semantic.rows() == 2);
  CHECK(f.semantic.cols() == 512);
  CHECK(f.distortion.rows() == 2);
  CHECK(f.distortion.cols() == 512);
  CHECK(cache.quality.rows() == 512);
  CHECK(cache.quality.cols() == 2);
  const int sum_c = 32 + 64 + 128 + 256 + 256;
  CHECK(cache.fused_input.rows() == 2 * sum_c);
  CHECK(cache.fused_input.cols() == 2 * 9);
  const auto logits = classify_distortion(m, f.distortion);
  CHECK(logits.rows() == 2);
  CHECK(logits.cols() == 7);
}

TEST_CASE("parameter inventory of the tiny model") {
  const auto m = Model<double>::create(ModelConfig::tiny(4));
  CHECK(m.params.size() == 40);
  CHECK(m.params.names.front() == "generator.stage1.conv1.weight");
  CHECK(m.params.names.back() == "classifier.fc.bias");
  CHECK(m.params["generator.stage1.conv1.weight"].rows() == 4);
  CHECK(m.params["generator.stage1.conv1.weight"].cols() == 27);
  CHECK(m.params["classifier.fc.weight"].rows() == 4);
  CHECK(m.params["classifier.fc.weight"].cols() == 16);
  CHECK(m.params["regressor.fc.weight"].rows() == 1);
  CHECK(m.params.index_of("nope") == -1);
  Index total = 0;
  for (const auto& v : m.params.values) total += v.size();
  CHECK(m.params.scalar_count() == total);
  for (const auto& v : m.params.values) CHECK(v.isZero(0));
}

TEST_CASE("zero input gives the bias pattern") {
  const auto m = random_model(ModelConfig::tiny(), 5);
  const Mat<double> x = Mat<double>::Zero(3, 2 * 32 * 32);
  TrunkCache<double> cache;
  forward_patches(m, x, 2, &cache);
  const Vec<double> expect = m.params["generator.stage1.conv1.bias"].col(0).cwiseMax(0.0);
  const Mat<double>& out = cache.conv_outputs[0][0];
  for (Index c = 0; c < out.cols(); ++c) REQUIRE((out.col(c) - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adaptive windows") {
  using layers::adaptive_windows;
  const auto w4 = adaptive_windows(4, 3);
  CHECK(w4[0].begin == 0);
  CHECK(w4[0].end == 2);
  CHECK(w4[1].begin == 1);
  CHECK(w4[1].end == 3);
  CHECK(w4[2].begin == 2);
  CHECK(w4[2].end == 4);
  for (const auto& w : adaptive_windows(1, 3)) {
    CHECK(w.begin == 0);
    CHECK(w.end == 1);
  }
  const auto w2 = adaptive_windows(2, 3);
  CHECK(w2[1].begin == 0);
  CHECK(w2[1].end == 2);
  for (int n = 1; n <= 16; ++n) {
    const auto w = adaptive_windows(n, 3);
    CHECK(w.front().begin == 0);
    CHECK(w.back().end == n);
    for (const auto& c : w) CHECK(c.end > c.begin);
  }
}

TEST_CASE("adaptive pooling of constant and 3x3 maps") {
  Rng rng(7);
  const layers::Geometry g{2, 4, 4};
  Mat<double> x(3, g.pixels());
  for (Index c = 0; c < 3; ++c) x.row(c).setConstant(c - 1.5);
  Mat<double> mean, sd;
  layers::adaptive_mean_std(x, g, mean, sd);
  CHECK(mean.cols() == 18);
  CHECK(sd.isZero(0));
  for (Index c = 0; c < 3; ++c) CHECK((mean.row(c).array() == c - 1.5).all());

  const layers::Geometry g3{2, 3, 3};
  const Mat<double> y = random_mat(5, g3.pixels(), rng);
  layers::adaptive_mean_std(y, g3, mean, sd);
  CHECK((mean - y).cwiseAbs().maxCoeff() == 0.0);
  CHECK(sd.isZero(0));
}

TEST_CASE("flat cells pass no std gradient") {
  const layers::Geometry g{2, 16, 16};
  Mat<double> x = Mat<double>::Constant(3, g.pixels(), 0.1);
  x.row(1).setConstant(1.0 / 3.0);
  Mat<double> mean, sd;
  layers::adaptive_mean_std(x, g, mean, sd);
  CHECK(sd.isZero(0));
  const Mat<double> ones = Mat<double>::Ones(sd.rows(), sd.cols());
  const Mat<double> zero = Mat<double>::Zero(sd.rows(), sd.cols());
  CHECK(layers::adaptive_mean_std_backward(x, g, mean, sd, zero, ones).isZero(0));
}

TEST_CASE("pooling std is the population std of the window") {
  Rng rng(8);
  const layers::Geometry g{1, 6, 6};
  const Mat<double> x = random_mat(2, g.pixels(), rng);
  Mat<double> mean, sd;
  layers::adaptive_mean_std(x, g, mean, sd);
  // Cell (1, 2) covers rows 2..3, cols 4..5.
  for (Index c = 0; c < 2; ++c) {
    double s = 0, s2 = 0;
    for (int yy = 2; yy < 4; ++yy)
      for (int xx = 4; xx < 6; ++xx) s += x(c, yy * 6 + xx);
    const double m = s / 4;
    for (int yy = 2; yy < 4; ++yy)
      for (int xx = 4; xx < 6; ++xx) s2 += std::pow(x(c, yy * 6 + xx) - m, 2);
    CHECK(mean(c, 5) == doctest::Approx(m).epsilon(1e-12));
    CHECK(sd(c, 5) == doctest::Approx(std::sqrt(s2 / 4)).epsilon(1e-12));
  }
}

TEST_CASE("heads are isolated") {
  const auto base = random_model(ModelConfig::tiny(), 9);
  const auto pats = patches_of(2, 10);
  const Mat<double> x = patches_to_input<double>(pats);
  const auto f0 = forward_patches(base, x, 2);

  auto m = base;
  m.params["semantic.fc2.weight"].array() += 0.5;
  m.params["semantic.fc1.bias"].array() -= 0.3;
  auto f1 = forward_patches(m, x, 2);
  CHECK((f1.distortion - f0.distortion).cwiseAbs().maxCoeff() == 0.0);
  CHECK((f1.semantic - f0.semantic).cwiseAbs().maxCoeff() > 0.0);

  m = base;
  m.params["distortion.fc1.weight"].array() *= -1.0;
  f1 = forward_patches(m, x, 2);
  CHECK((f1.semantic - f0.semantic).cwiseAbs().maxCoeff() == 0.0);
  CHECK((f1.distortion - f0.distortion).cwiseAbs().maxCoeff() > 0.0);

  TrunkCache<double> cache;
  const auto f = forward_patches(base, x, 2, &cache);
  Rng rng(11);
  const Mat<double> ds = random_mat(f.semantic.rows(), f.semantic.cols(), rng);
  const Mat<double> zero = Mat<double>::Zero(f.distortion.rows(), f.distortion.cols());
  auto grads = base.params.zeros_like();
  backward_patches(base, cache, ds, zero, grads);
  for (std::size_t i = 0; i < grads.size(); ++i)
    if (grads.names[i].starts_with("distortion.")) CHECK(grads.values[i].isZero(0));
  CHECK_FALSE(grads["semantic.fc2.weight"].isZero(0));

  grads = base.params.zeros_like();
  backward_patches(base, cache, Mat<double>(Mat<double>::Zero(ds.rows(), ds.cols())), ds, grads);
  for (std::size_t i = 0; i < grads.size(); ++i)
    if (grads.names[i].starts_with("semantic.")) CHECK(grads.values[i].isZero(0));
  CHECK_FALSE(grads["distortion.fc2.weight"].isZero(0));
}

TEST_CASE("attention matches a hand evaluation") {
  const auto m = random_model(ModelConfig::tiny(), 12);
  Rng rng(13);
  const Index D = 16;
  for (int trial = 0; trial < 10; ++trial) {
    const Vec<double> s = random_mat(D, 1, rng, 3.0);
    const Vec<double> a = attention_weights(m, s);
    const auto& w1 = m.params["attention.fc1.weight"];
    const auto& b1 = m.params["attention.fc1.bias"];
    const auto& w2 = m.params["attention.fc2.weight"];
    const auto& b2 = m.params["attention.fc2.bias"];
    REQUIRE(a.size() == D);
    for (Index i = 0; i < D; ++i) {
      double pre = b2(i, 0);
      for (Index j = 0; j < D; ++j) {
        double h = b1(j, 0);
        for (Index k = 0; k < D; ++k) h += w1(j, k) * s(k);
        pre += w2(i, j) * std::max(h, 0.0);
      }
      CHECK(a(i) == doctest::Approx(1.0 / (1.0 + std::exp(-pre))).epsilon(1e-12));
      CHECK(a(i) > 0.0);
      CHECK(a(i) < 1.0);
    }
  }
}

TEST_CASE("classifier of zero features is the bias row") {
  const auto m = random_model(ModelConfig::tiny(5), 14);
  const auto logits = classify_distortion(m, Mat<double>(Mat<double>::Zero(3, 16)));
  CHECK(logits.rows() == 3);
  CHECK(logits.cols() == 5);
  for (Index r = 0; r < 3; ++r)
    CHECK((logits.row(r).transpose() - m.params["classifier.fc.bias"].col(0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("quality prediction composes the stages") {
  for (std::uint64_t seed = 20; seed < 25; ++seed) {
    auto m = random_model(ModelConfig::tiny(), seed);
    const Image img = synthesize_sci(96, 64, seed);
    QualityTrace<double> trace;
    const double q = predict_quality(m, img, &trace);
    CHECK(q >= 0.0);
    CHECK(q == trace.score);

    const auto pats = extract_patches(img, 32);
    const auto f = forward_patches(m, patches_to_input<double>(pats), static_cast<Index>(pats.size()));
    CHECK(f.distortion.rows() == 6);
    const auto st = patch_stats(f.distortion);
    const Vec<double> phi = kl_to_standard_normal(st.mu, st.sigma);
    const Vec<double> att = attention_weights(m, Vec<double>(f.semantic.colwise().mean().transpose()));
    const double pre = m.params["regressor.fc.weight"].row(0).dot(att.cwiseProduct(phi)) +
                       m.params["regressor.fc.bias"](0, 0);
    CHECK(q == doctest::Approx(std::max(pre, 0.0)).epsilon(1e-12));
    CHECK((trace.phi - phi).cwiseAbs().maxCoeff() == 0.0);
    CHECK((trace.phi.array() >= 0.0).all());

    m.params["regressor.fc.bias"](0, 0) = -1e6;
    CHECK(predict_quality(m, img) == 0.0);
  }
}

TEST_CASE("single patch and undersized images are rejected") {
  const auto m = Model<float>::initialized(ModelConfig::tiny(), 1);
  const Image img = synthesize_sci(64, 64, 1);
  CHECK_THROWS_AS(predict_quality(m, img.crop(0, 0, 32, 32)), SizeError);
  CHECK_THROWS_AS(predict_quality(m, img.crop(0, 0, 63, 31)), SizeError);
  CHECK_THROWS_AS(predict_quality(m, img.crop(0, 0, 63, 63)), SizeError);
  CHECK_NOTHROW(predict_quality(m, img.crop(0, 0, 64, 32)));
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(ModelConfig{}.validate());
  auto c = ModelConfig{};
  c.num_classes = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ModelConfig{};
  c.feature_dim = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ModelConfig{};
  c.patch_size = 48;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ModelConfig{};
  c.stage_channels[2] = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ModelConfig{};
  c.convs_per_stage[4] = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  for (int d : {256, 512, 1792, 2048}) {
    CHECK(ModelConfig::is_reference_dim(d));
    c = ModelConfig::tiny();
    c.feature_dim = d;
    CHECK_NOTHROW(c.validate());
  }
  CHECK_FALSE(ModelConfig::is_reference_dim(100));
  c = ModelConfig{};
  c.num_classes = 0;
  CHECK_THROWS_AS(Model<float>::create(c), ConfigError);
}

TEST_CASE("initialization is seeded") {
  const auto a = Model<float>::initialized(ModelConfig::tiny(), 42);
  const auto b = Model<float>::initialized(ModelConfig::tiny(), 42);
  const auto c = Model<float>::initialized(ModelConfig::tiny(), 43);
  bool differs = false;
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    CHECK((a.params.values[i] - b.params.values[i]).cwiseAbs().maxCoeff() == 0.0f);
    differs = differs || (a.params.values[i] - c.params.values[i]).cwiseAbs().maxCoeff() > 0.0f;
  }
  CHECK(differs);
  CHECK((a.params["regressor.fc.weight"].array() >= 0.0f).all());
  for (std::size_t i = 0; i < a.params.size(); ++i)
    if (a.params.names[i].ends_with(".bias")) CHECK(a.params.values[i].isZero(0));

  const Image img = synthesize_sci(64, 64, 3);
  CHECK(predict_quality(a, img) == predict_quality(b, img));
  const double qd = predict_quality(a.cast<double>(), img);
  CHECK(predict_quality(a, img) == doctest::Approx(qd).epsilon(1e-4));
}

TEST_CASE("layer gradients match central differences") {
  Rng rng(30);
  const layers::Geometry g{2, 6, 6};
  const Mat<double> x0 = random_mat(3, g.pixels(), rng);
  const Mat<double> r = random_mat(4, g.pixels(), rng);
  ParamSet<double> ps;
  ps.add("x", {3, static_cast<int>(g.pixels())});
  ps.add("w", {4, 27});
  ps.add("b", {4});
  ps.values[0] = x0;
  ps.values[1] = random_mat(4, 27, rng);
  ps.values[2] = random_mat(4, 1, rng);

  SUBCASE("conv3x3") {
    const ObjectiveFn fn = [&](const ParamSet<double>& p, bool with_grad) {
      ObjectiveEval e;
      const Mat<double> y = layers::conv3x3(p.values[0], g, p.values[1], p.values[2]);
      e.loss = dot(r, y);
      if (with_grad) {
        e.grads = p.zeros_like();
        e.grads.values[0] = layers::conv3x3_backward(p.values[0], g, p.values[1], r, e.grads.values[1],
                                                     e.grads.values[2], true);
      }
      return e;
    };
    const auto rep = gradient_check(fn, ps, {.max_params = 400, .tolerance = 1e-6});
    CHECK(rep.checked == static_cast<int>(ps.scalar_count()));
    CHECK(rep.passed());
  }

  SUBCASE("max pool and adaptive pooling") {
    const Mat<double> rp = random_mat(3, g.patches * 9, rng);
    const Mat<double> rs = random_mat(3, g.patches * 9, rng);
    const Mat<double> rm = random_mat(3, g.patches * 9, rng);
    const ObjectiveFn fn = [&](const ParamSet<double>& p, bool with_grad) {
      ObjectiveEval e;
      layers::IndexMap arg;
      const Mat<double> pooled = layers::maxpool2x2(p.values[0], g, arg);
      Mat<double> mean, sd;
      layers::adaptive_mean_std(p.values[0], g, mean, sd);
      e.loss = dot(rp, pooled) + dot(rm, mean) + dot(rs, sd);
      for (Index i = 0; i < arg.size(); ++i) e.signature = e.signature * 31 + static_cast<std::uint64_t>(arg.data()[i]);
      if (with_grad) {
        e.grads = p.zeros_like();
        e.grads.values[0] = layers::maxpool2x2_backward(arg, p.values[0].cols(), rp) +
                            layers::adaptive_mean_std_backward(p.values[0], g, mean, sd, rm, rs);
      }
      return e;
    };
    ParamSet<double> px;
    px.add("x", {3, static_cast<int>(g.pixels())});
    px.values[0] = x0;
    const auto rep = gradient_check(fn, px, {.max_params = 216, .tolerance = 1e-6});
    CHECK(rep.checked > 150);
    CHECK(rep.passed());
  }
}

TEST_CASE("trunk and heads backward matches central differences") {
  const auto m = random_model(ModelConfig::tiny(), 31);
  const auto pats = patches_of(2, 32);
  const Mat<double> x = patches_to_input<double>(pats);
  Rng rng(33);
  const Mat<double> rs = random_mat(2, 16, rng);
  const Mat<double> rd = random_mat(2, 16, rng);
  const ObjectiveFn fn = [&](const ParamSet<double>& p, bool with_grad) {
    Model<double> mm{m.config, m.layout, p};
    TrunkCache<double> cache;
    const auto f = forward_patches(mm, x, 2, &cache);
    ObjectiveEval e;
    e.loss = dot(rs, f.semantic) + dot(rd, f.distortion);
    e.signature = cache.kink_signature();
    if (with_grad) {
      e.grads = p.zeros_like();
      backward_patches(mm, cache, rs, rd, e.grads);
    }
    return e;
  };
  const auto rep = gradient_check(fn, m.params, {.max_params = 150, .seed = 4});
  INFO("max rel error " << rep.max_rel_error);
  CHECK(rep.checked >= 100);
  CHECK(rep.passed());
}
