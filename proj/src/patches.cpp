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

#include "sciq/patches.hpp"

#include <string>

namespace sciq {

PatchGrid patch_grid(const Image& image, int patch_size) {
  if (patch_size <= 0) throw SizeError("patch size must be positive");
  if (image.height() < patch_size || image.width() < patch_size)
    throw SizeError("image " + std::to_string(image.width()) + "x" +
                    std::to_string(image.height()) + " is smaller than one " +
                    std::to_string(patch_size) + "x" + std::to_string(patch_size) + " patch");
  return {image.height() / patch_size, image.width() / patch_size};
}

Image patch_at(const Image& image, int row, int col, int patch_size) {
  return image.crop(col * patch_size, row * patch_size, patch_size, patch_size);
}

std::vector<Image> extract_patches(const Image& image, int patch_size) {
  const PatchGrid grid = patch_grid(image, patch_size);
  std::vector<Image> out;
  out.reserve(static_cast<std::size_t>(grid.size()));
  for (int r = 0; r < grid.rows; ++r)
    for (int c = 0; c < grid.cols; ++c) out.push_back(patch_at(image, r, c, patch_size));
  return out;
}

}  // namespace sciq
