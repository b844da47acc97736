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

#ifndef SCIQ_SYNTH_HPP_
#define SCIQ_SYNTH_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sciq/image.hpp"
#include "sciq/manifest.hpp"

namespace sciq {

/// Synthetic distortion families. BLOCK stands in for block-based coding
/// artifacts (8x8 transform quantization).
enum class Distortion { kGaussianNoise, kGaussianBlur, kMotionBlur, kContrastChange, kBlock };

inline constexpr int kMaxLevels = 5;

const char* to_string(Distortion d);
/// Accepts the short codes GN, GB, MB, CC, BLOCK.
Distortion distortion_from_string(const std::string& s);
std::vector<Distortion> all_distortions();

/// Strength parameter of a level (1-based) on the ladder: noise sigma, blur
/// sigma, motion length in pixels, contrast gain, or quantization step.
double distortion_parameter(Distortion type, int level);

/// Deterministic pseudo screen-content image: flat panels, sharp rectangles,
/// glyph-like strokes and thin table grids. Values in [0, 1].
Image synthesize_sci(int width, int height, std::uint64_t seed);

/// Applies one distortion at `level` in [1, levels]. Only GN consumes `seed`.
Image apply_distortion(const Image& image, Distortion type, int level, std::uint64_t seed,
                       int levels = kMaxLevels);

/// Ground-truth DMOS-like score for synthetic data: 100 * level / levels plus
/// a small per-type offset, clamped to [0, 100].
double synthetic_score(Distortion type, int level, int levels);

struct SynthOptions {
  int refs = 8;
  std::vector<Distortion> types = all_distortions();
  int levels = kMaxLevels;
  int width = 128;
  int height = 128;
  std::uint64_t seed = 0;
  std::string name = "synthetic";
};

/// Writes pristine and distorted PNGs under `out_dir` plus `manifest.csv`;
/// returns the manifest.
DatasetManifest write_synthetic_corpus(const std::filesystem::path& out_dir,
                                       const SynthOptions& options);

}  // namespace sciq

#endif  // SCIQ_SYNTH_HPP_
