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

#ifndef SCIQ_TRIPLET_HPP_
#define SCIQ_TRIPLET_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sciq/image.hpp"
#include "sciq/manifest.hpp"

namespace sciq {

/// Loads images on first access and keeps them in memory.
class ImageCache {
 public:
  const Image& get(const std::filesystem::path& path);
  const Image& get(const DatasetManifest& m, std::size_t record) {
    return get(m.resolve(m.records[record]));
  }
  std::size_t size() const { return images_.size(); }

 private:
  std::map<std::string, Image> images_;
};

/// B triplets (distorted, reference, auxiliary), each image contributing N
/// patches. Patch vectors are image-major: patch p belongs to image p / N.
struct TripletBatch {
  int batch = 0;
  int patches_per_image = 0;
  std::vector<Image> distorted_patches;
  std::vector<Image> reference_patches;
  std::vector<Image> auxiliary_patches;
  std::vector<int> distortion_labels;  // B class indices
  std::vector<double> scores;          // B ground-truth scores
  std::vector<int> group_index;        // patch -> image index in [0, B)
  // Manifest record indices of the images forming each triplet.
  std::vector<std::size_t> distorted_records;
  std::vector<std::size_t> reference_records;
  std::vector<std::size_t> auxiliary_records;
};

struct BatchShape {
  int triplets = 32;
  int patches_per_image = 16;
};

/// Draws B distinct distorted images, pairs each with its pristine reference
/// and a pristine auxiliary of different content, and samples N patch cells per
/// image. Reference cells are aligned with the distorted cells. Cells are
/// drawn without replacement unless the grid has fewer than N cells.
TripletBatch sample_triplet_batch(const DatasetManifest& manifest, ImageCache& images,
                                  const LabelMap& labels, BatchShape shape, std::uint64_t seed);

}  // namespace sciq

#endif  // SCIQ_TRIPLET_HPP_
