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

#include "sciq/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "sciq/core.hpp"
#include "sciq/rng.hpp"

namespace sciq {

namespace {

using Plane = Image::Plane;

constexpr std::array<double, kMaxLevels> kNoiseSigma{0.02, 0.05, 0.1, 0.2, 0.3};
constexpr std::array<double, kMaxLevels> kBlurSigma{0.8, 1.5, 2.5, 4.0, 6.0};
constexpr std::array<double, kMaxLevels> kMotionLength{3, 7, 11, 15, 21};
constexpr std::array<double, kMaxLevels> kContrastGain{0.8, 0.65, 0.5, 1.25, 1.5};
constexpr std::array<double, kMaxLevels> kQuantStep{8, 16, 32, 48, 64};

struct Rgb {
  float r, g, b;
};

Rgb random_color(Rng& rng, double lo, double hi) {
  return {static_cast<float>(rng.uniform(lo, hi)), static_cast<float>(rng.uniform(lo, hi)),
          static_cast<float>(rng.uniform(lo, hi))};
}

void fill_rect(Image& img, int x0, int y0, int w, int h, Rgb c) {
  x0 = std::clamp(x0, 0, img.width());
  y0 = std::clamp(y0, 0, img.height());
  w = std::clamp(w, 0, img.width() - x0);
  h = std::clamp(h, 0, img.height() - y0);
  if (w == 0 || h == 0) return;
  img.planes[0].block(y0, x0, h, w).setConstant(c.r);
  img.planes[1].block(y0, x0, h, w).setConstant(c.g);
  img.planes[2].block(y0, x0, h, w).setConstant(c.b);
}

// Glyph: a 5x7 cell of random on/off strokes drawn at `scale` pixels per cell.
void draw_glyph(Image& img, Rng& rng, int x0, int y0, int scale, Rgb ink) {
  const int strokes = 2 + static_cast<int>(rng.below(3));
  for (int s = 0; s < strokes; ++s) {
    if (rng.below(2) == 0) {
      const int row = static_cast<int>(rng.below(7));
      const int c0 = static_cast<int>(rng.below(3));
      const int len = 2 + static_cast<int>(rng.below(3));
      fill_rect(img, x0 + c0 * scale, y0 + row * scale, len * scale, scale, ink);
    } else {
      const int col = static_cast<int>(rng.below(5));
      const int r0 = static_cast<int>(rng.below(3));
      const int len = 3 + static_cast<int>(rng.below(4));
      fill_rect(img, x0 + col * scale, y0 + r0 * scale, scale, len * scale, ink);
    }
  }
}

void draw_text_block(Image& img, Rng& rng, int x0, int y0, int w, int h, Rgb ink) {
  const int scale = 1 + static_cast<int>(rng.below(2));
  const int gw = 6 * scale, gh = 10 * scale;
  for (int y = y0; y + 7 * scale <= y0 + h; y += gh) {
    int x = x0;
    const int line_end = x0 + w - static_cast<int>(rng.below(static_cast<std::uint64_t>(w / 3 + 1)));
    while (x + 5 * scale <= line_end) {
      if (rng.uniform() < 0.15) {
        x += gw;  // word gap
        continue;
      }
      draw_glyph(img, rng, x, y, scale, ink);
      x += gw;
    }
  }
}

void draw_grid(Image& img, Rng& rng, int x0, int y0, int w, int h, Rgb line) {
  const int step_x = 12 + static_cast<int>(rng.below(12));
  const int step_y = 8 + static_cast<int>(rng.below(8));
  for (int x = x0; x < x0 + w; x += step_x) fill_rect(img, x, y0, 1, h, line);
  for (int y = y0; y < y0 + h; y += step_y) fill_rect(img, x0, y, w, 1, line);
  fill_rect(img, x0 + w - 1, y0, 1, h, line);
  fill_rect(img, x0, y0 + h - 1, w, 1, line);
}

// 1-D convolution along rows (horizontal) with replicated borders.
Plane convolve_horizontal(const Plane& in, const std::vector<double>& k) {
  const int r = static_cast<int>(k.size() / 2);
  const int w = static_cast<int>(in.cols());
  Plane out(in.rows(), in.cols());
  for (int x = 0; x < w; ++x) {
    Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(in.rows());
    for (int j = -r; j <= r; ++j) {
      const int sx = std::clamp(x + j, 0, w - 1);
      acc += k[j + r] * in.col(sx).cast<double>();
    }
    out.col(x) = acc.cast<float>();
  }
  return out;
}

Plane convolve_vertical(const Plane& in, const std::vector<double>& k) {
  Plane t = in.transpose();
  return convolve_horizontal(t, k).transpose();
}

std::vector<double> gaussian_kernel(double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * r + 1);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) sum += k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& v : k) v /= sum;
  return k;
}

Eigen::Matrix<double, 8, 8> dct_matrix() {
  Eigen::Matrix<double, 8, 8> c;
  for (int u = 0; u < 8; ++u)
    for (int x = 0; x < 8; ++x)
      c(u, x) = (u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0)) *
                std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
  return c;
}

Plane block_quantize(const Plane& in, double step) {
  static const Eigen::Matrix<double, 8, 8> C = dct_matrix();
  const int h = static_cast<int>(in.rows()), w = static_cast<int>(in.cols());
  Plane out(h, w);
  for (int by = 0; by < h; by += 8)
    for (int bx = 0; bx < w; bx += 8) {
      Eigen::Matrix<double, 8, 8> blk;
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
          blk(y, x) = 255.0 * in(std::min(by + y, h - 1), std::min(bx + x, w - 1)) - 128.0;
      Eigen::Matrix<double, 8, 8> coef = C * blk * C.transpose();
      coef = (coef.array() / step).round() * step;
      const Eigen::Matrix<double, 8, 8> rec = C.transpose() * coef * C;
      for (int y = 0; y < 8 && by + y < h; ++y)
        for (int x = 0; x < 8 && bx + x < w; ++x)
          out(by + y, bx + x) = static_cast<float>((rec(y, x) + 128.0) / 255.0);
    }
  return out;
}

double type_offset(Distortion d) {
  switch (d) {
    case Distortion::kGaussianNoise: return 3.0;
    case Distortion::kGaussianBlur: return -2.0;
    case Distortion::kMotionBlur: return 1.0;
    case Distortion::kContrastChange: return -4.0;
    case Distortion::kBlock: return 5.0;
  }
  return 0.0;
}

}  // namespace

const char* to_string(Distortion d) {
  switch (d) {
    case Distortion::kGaussianNoise: return "GN";
    case Distortion::kGaussianBlur: return "GB";
    case Distortion::kMotionBlur: return "MB";
    case Distortion::kContrastChange: return "CC";
    case Distortion::kBlock: return "BLOCK";
  }
  return "?";
}

Distortion distortion_from_string(const std::string& s) {
  for (Distortion d : all_distortions())
    if (s == to_string(d)) return d;
  throw ConfigError("unknown distortion type '" + s + "' (expected GN, GB, MB, CC or BLOCK)");
}

std::vector<Distortion> all_distortions() {
  return {Distortion::kGaussianNoise, Distortion::kGaussianBlur, Distortion::kMotionBlur,
          Distortion::kContrastChange, Distortion::kBlock};
}

double distortion_parameter(Distortion type, int level) {
  if (level < 1 || level > kMaxLevels)
    throw ConfigError("distortion level " + std::to_string(level) + " outside 1.." +
                      std::to_string(kMaxLevels));
  const auto i = static_cast<std::size_t>(level - 1);
  switch (type) {
    case Distortion::kGaussianNoise: return kNoiseSigma[i];
    case Distortion::kGaussianBlur: return kBlurSigma[i];
    case Distortion::kMotionBlur: return kMotionLength[i];
    case Distortion::kContrastChange: return kContrastGain[i];
    case Distortion::kBlock: return kQuantStep[i];
  }
  throw ConfigError("unknown distortion type");
}

Image synthesize_sci(int width, int height, std::uint64_t seed) {
  if (width < 64 || height < 64) throw SizeError("synthetic images must be at least 64x64");
  Rng rng(derive_seed(seed, 0x5c1));
  Image img(width, height);
  const Rgb background = random_color(rng, 0.85, 1.0);
  fill_rect(img, 0, 0, width, height, background);

  // Title bar and side panel.
  const int bar = 8 + static_cast<int>(rng.below(10));
  fill_rect(img, 0, 0, width, bar, random_color(rng, 0.1, 0.6));
  draw_text_block(img, rng, 4, 2, width / 2, bar - 2, {1.0f, 1.0f, 1.0f});
  if (rng.below(2) == 0) {
    const int panel = width / 5 + static_cast<int>(rng.below(static_cast<std::uint64_t>(width / 6)));
    fill_rect(img, 0, bar, panel, height - bar, random_color(rng, 0.6, 0.9));
  }

  // Flat rectangles (buttons, images, panels).
  const int rects = 3 + static_cast<int>(rng.below(5));
  for (int i = 0; i < rects; ++i) {
    const int w = 10 + static_cast<int>(rng.below(static_cast<std::uint64_t>(width / 2)));
    const int h = 6 + static_cast<int>(rng.below(static_cast<std::uint64_t>(height / 3)));
    const int x = static_cast<int>(rng.below(static_cast<std::uint64_t>(width)));
    const int y = bar + static_cast<int>(rng.below(static_cast<std::uint64_t>(height - bar)));
    fill_rect(img, x, y, w, h, random_color(rng, 0.0, 1.0));
  }

  // Text paragraphs.
  const int blocks = 2 + static_cast<int>(rng.below(3));
  for (int i = 0; i < blocks; ++i) {
    const int w = width / 3 + static_cast<int>(rng.below(static_cast<std::uint64_t>(width / 2)));
    const int h = 14 + static_cast<int>(rng.below(static_cast<std::uint64_t>(height / 3)));
    const int x = static_cast<int>(rng.below(static_cast<std::uint64_t>(width / 2)));
    const int y = bar + static_cast<int>(rng.below(static_cast<std::uint64_t>(height - bar)));
    const Rgb ink = rng.below(4) == 0 ? random_color(rng, 0.0, 0.5) : Rgb{0.05f, 0.05f, 0.05f};
    draw_text_block(img, rng, x, y, w, h, ink);
  }

  // Table grid.
  {
    const int w = width / 3 + static_cast<int>(rng.below(static_cast<std::uint64_t>(width / 3)));
    const int h = height / 4 + static_cast<int>(rng.below(static_cast<std::uint64_t>(height / 4)));
    const int x = static_cast<int>(rng.below(static_cast<std::uint64_t>(width - w + 1)));
    const int y = bar + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, height - bar - h))));
    draw_grid(img, rng, x, y, w, h, random_color(rng, 0.2, 0.5));
  }
  img.clip();
  return img;
}

Image apply_distortion(const Image& image, Distortion type, int level, std::uint64_t seed,
                       int levels) {
  if (levels < 1 || levels > kMaxLevels)
    throw ConfigError("level ladder must have 1.." + std::to_string(kMaxLevels) + " levels");
  if (level < 1 || level > levels)
    throw ConfigError("distortion level " + std::to_string(level) + " outside 1.." +
                      std::to_string(levels));
  const double p = distortion_parameter(type, level);
  Image out = image;
  switch (type) {
    case Distortion::kGaussianNoise: {
      Rng rng(derive_seed(seed, 0x6e, static_cast<std::uint64_t>(level)));
      for (auto& plane : out.planes)
        for (Index i = 0; i < plane.size(); ++i)
          plane(i) += static_cast<float>(p * rng.normal());
      break;
    }
    case Distortion::kGaussianBlur: {
      const auto k = gaussian_kernel(p);
      for (auto& plane : out.planes) plane = convolve_vertical(convolve_horizontal(plane, k), k);
      break;
    }
    case Distortion::kMotionBlur: {
      const int len = static_cast<int>(p);
      const std::vector<double> k(static_cast<std::size_t>(len), 1.0 / len);
      for (auto& plane : out.planes) plane = convolve_horizontal(plane, k);
      break;
    }
    case Distortion::kContrastChange: {
      const float g = static_cast<float>(p);
      for (auto& plane : out.planes) plane = 0.5f + g * (plane - 0.5f);
      break;
    }
    case Distortion::kBlock: {
      for (auto& plane : out.planes) plane = block_quantize(plane, p);
      break;
    }
  }
  out.clip();
  return out;
}

double synthetic_score(Distortion type, int level, int levels) {
  if (level < 1 || level > levels) throw ConfigError("level outside ladder");
  return std::clamp(100.0 * level / levels + type_offset(type), 0.0, 100.0);
}

DatasetManifest write_synthetic_corpus(const std::filesystem::path& out_dir,
                                       const SynthOptions& options) {
  if (options.refs < 1) throw ConfigError("need at least one reference image");
  if (options.types.empty()) throw ConfigError("need at least one distortion type");
  if (options.levels < 1 || options.levels > kMaxLevels)
    throw ConfigError("levels must be within 1.." + std::to_string(kMaxLevels));
  std::filesystem::create_directories(out_dir / "reference");
  std::filesystem::create_directories(out_dir / "distorted");

  DatasetManifest m;
  m.name = options.name;
  m.score_polarity = ScorePolarity::kImpairmentDmos;
  m.base_dir = std::filesystem::absolute(out_dir);
  char buf[64];
  for (int r = 0; r < options.refs; ++r) {
    std::snprintf(buf, sizeof buf, "ref%03d", r);
    const std::string ref_id = buf;
    const Image pristine =
        quantize8(synthesize_sci(options.width, options.height, derive_seed(options.seed, 0x7e, r)));
    const std::string ref_path = "reference/" + ref_id + ".png";
    save_image(pristine, out_dir / ref_path);
    m.records.push_back({ref_path, ref_id, kPristine, 0, std::nullopt});
    for (Distortion t : options.types)
      for (int l = 1; l <= options.levels; ++l) {
        const auto seed = derive_seed(options.seed, static_cast<std::uint64_t>(r),
                                      static_cast<std::uint64_t>(t) * 16 + l);
        const Image dist = apply_distortion(pristine, t, l, seed, options.levels);
        const std::string path = "distorted/" + ref_id + "_" + to_string(t) + "_" +
                                 std::to_string(l) + ".png";
        save_image(dist, out_dir / path);
        m.records.push_back({path, ref_id, to_string(t), l, synthetic_score(t, l, options.levels)});
      }
  }
  save_manifest(m, out_dir / "manifest.csv");
  return m;
}

}  // namespace sciq
