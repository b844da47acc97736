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

#ifndef SCIQ_PATCHES_HPP_
#define SCIQ_PATCHES_HPP_

#include <span>
#include <vector>

#include "sciq/core.hpp"
#include "sciq/image.hpp"

namespace sciq {

inline constexpr int kPatchSize = 32;

struct PatchGrid {
  int rows = 0;
  int cols = 0;
  int size() const { return rows * cols; }
};

/// Non-overlapping grid anchored at the top-left corner. Throws SizeError
/// when the image is smaller than one patch.
PatchGrid patch_grid(const Image& image, int patch_size = kPatchSize);

/// Cell (row, col) of the grid.
Image patch_at(const Image& image, int row, int col, int patch_size = kPatchSize);

/// All grid cells in row-major order. Trailing partial rows/columns are dropped.
std::vector<Image> extract_patches(const Image& image, int patch_size = kPatchSize);

/// Packs patches into the network input layout: 3 rows (RGB), one column per
/// pixel, pixels ordered patch-major then row-major.
template <typename Scalar>
Mat<Scalar> patches_to_input(std::span<const Image> patches) {
  if (patches.empty()) return Mat<Scalar>(3, 0);
  const int h = patches.front().height(), w = patches.front().width();
  const Index hw = static_cast<Index>(h) * w;
  Mat<Scalar> x(3, hw * static_cast<Index>(patches.size()));
  for (std::size_t p = 0; p < patches.size(); ++p) {
    const Image& img = patches[p];
    if (img.height() != h || img.width() != w) throw SizeError("patches differ in size");
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) {
        const Index col = static_cast<Index>(p) * hw + static_cast<Index>(y) * w + xx;
        for (int c = 0; c < 3; ++c) x(c, col) = static_cast<Scalar>(img.at(c, y, xx));
      }
  }
  return x;
}

}  // namespace sciq

#endif  // SCIQ_PATCHES_HPP_
