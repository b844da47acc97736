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

#ifndef SCIQ_IMAGE_HPP_
#define SCIQ_IMAGE_HPP_

#include <Eigen/Dense>

#include <array>
#include <filesystem>

namespace sciq {

/// Planar RGB image with values in [0, 1]. Each plane is height x width.
struct Image {
  using Plane = Eigen::ArrayXXf;

  std::array<Plane, 3> planes;

  Image() = default;
  Image(int width, int height) {
    for (auto& p : planes) p = Plane::Zero(height, width);
  }

  int width() const { return static_cast<int>(planes[0].cols()); }
  int height() const { return static_cast<int>(planes[0].rows()); }
  bool empty() const { return planes[0].size() == 0; }

  float& at(int c, int y, int x) { return planes[c](y, x); }
  float at(int c, int y, int x) const { return planes[c](y, x); }

  Image crop(int x0, int y0, int w, int h) const;
  void clip();
  double mean() const;

  bool operator==(const Image& other) const;
};

/// Reads an 8-bit RGB PNG or 24-bit BMP. Format is detected from the file
/// signature.
Image load_image(const std::filesystem::path& path);
/// Writes PNG or BMP depending on the extension (default PNG).
void save_image(const Image& image, const std::filesystem::path& path);

/// Peak signal-to-noise ratio in dB for unit-range images. Infinite when equal.
double psnr(const Image& a, const Image& b);

/// Quantizes to 8 bits and back, matching what a save/load cycle produces.
Image quantize8(const Image& image);

}  // namespace sciq

#endif  // SCIQ_IMAGE_HPP_
