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

#include "sciq/triplet.hpp"

#include <algorithm>

#include "sciq/core.hpp"
#include "sciq/patches.hpp"
#include "sciq/rng.hpp"

namespace sciq {

namespace {

struct Cell {
  int row, col;
};

std::vector<Cell> draw_cells(const PatchGrid& grid, int n, Rng& rng) {
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(n));
  if (grid.size() >= n) {
    std::vector<int> idx(static_cast<std::size_t>(grid.size()));
    for (int i = 0; i < grid.size(); ++i) idx[static_cast<std::size_t>(i)] = i;
    // Partial Fisher-Yates: first n entries become a uniform sample.
    for (int i = 0; i < n; ++i) {
      const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(grid.size() - i)));
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
      cells.push_back({idx[static_cast<std::size_t>(i)] / grid.cols, idx[static_cast<std::size_t>(i)] % grid.cols});
    }
  } else {
    for (int i = 0; i < n; ++i) {
      const int k = static_cast<int>(rng.below(static_cast<std::uint64_t>(grid.size())));
      cells.push_back({k / grid.cols, k % grid.cols});
    }
  }
  return cells;
}

}  // namespace

const Image& ImageCache::get(const std::filesystem::path& path) {
  const std::string key = path.string();
  auto it = images_.find(key);
  if (it == images_.end()) it = images_.emplace(key, load_image(path)).first;
  return it->second;
}

TripletBatch sample_triplet_batch(const DatasetManifest& manifest, ImageCache& images,
                                  const LabelMap& labels, BatchShape shape, std::uint64_t seed) {
  const int B = shape.triplets, N = shape.patches_per_image;
  if (B < 1 || N < 1) throw ConfigError("batch shape must be positive");

  std::vector<std::size_t> distorted, pristine;
  for (std::size_t i = 0; i < manifest.records.size(); ++i)
    (manifest.records[i].pristine() ? pristine : distorted).push_back(i);
  if (manifest.reference_ids().size() < 2 || pristine.size() < 2)
    throw SampleError("triplet sampling needs at least two reference images");
  if (distorted.size() < static_cast<std::size_t>(B))
    throw SampleError("need " + std::to_string(B) + " distorted images, manifest has " +
                      std::to_string(distorted.size()));

  Rng rng(derive_seed(seed, 0x7b));
  TripletBatch batch;
  batch.batch = B;
  batch.patches_per_image = N;
  const auto total = static_cast<std::size_t>(B) * static_cast<std::size_t>(N);
  batch.distorted_patches.reserve(total);
  batch.reference_patches.reserve(total);
  batch.auxiliary_patches.reserve(total);

  // Partial shuffle selects B distinct distorted images.
  for (int i = 0; i < B; ++i) {
    const auto j = static_cast<std::size_t>(i) + rng.below(distorted.size() - static_cast<std::size_t>(i));
    std::swap(distorted[static_cast<std::size_t>(i)], distorted[j]);
  }

  for (int i = 0; i < B; ++i) {
    const std::size_t d = distorted[static_cast<std::size_t>(i)];
    const ImageRecord& rec = manifest.records[d];
    const std::size_t r = *manifest.pristine_index(rec.reference_id);
    std::vector<std::size_t> candidates;
    for (std::size_t p : pristine)
      if (manifest.records[p].reference_id != rec.reference_id) candidates.push_back(p);
    const std::size_t a = candidates[rng.below(candidates.size())];

    const Image& img_d = images.get(manifest, d);
    const Image& img_r = images.get(manifest, r);
    const Image& img_a = images.get(manifest, a);
    const PatchGrid gd = patch_grid(img_d), gr = patch_grid(img_r);
    const PatchGrid aligned{std::min(gd.rows, gr.rows), std::min(gd.cols, gr.cols)};
    for (const Cell& c : draw_cells(aligned, N, rng)) {
      batch.distorted_patches.push_back(patch_at(img_d, c.row, c.col));
      batch.reference_patches.push_back(patch_at(img_r, c.row, c.col));
    }
    for (const Cell& c : draw_cells(patch_grid(img_a), N, rng))
      batch.auxiliary_patches.push_back(patch_at(img_a, c.row, c.col));

    batch.distortion_labels.push_back(labels.index(rec.distortion_type));
    batch.scores.push_back(*rec.score);
    batch.distorted_records.push_back(d);
    batch.reference_records.push_back(r);
    batch.auxiliary_records.push_back(a);
    for (int n = 0; n < N; ++n) batch.group_index.push_back(i);
  }
  return batch;
}

}  // namespace sciq
