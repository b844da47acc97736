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

#ifndef SCIQ_MANIFEST_HPP_
#define SCIQ_MANIFEST_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sciq {

inline constexpr const char* kPristine = "PRISTINE";

enum class ScorePolarity { kQualityMos, kImpairmentDmos };

const char* to_string(ScorePolarity p);
ScorePolarity polarity_from_string(const std::string& s);

struct ImageRecord {
  std::string image_path;  // as written in the manifest
  std::string reference_id;
  std::string distortion_type;  // kPristine for reference images
  int distortion_level = 0;     // 0 iff pristine
  std::optional<double> score;  // absent for pristine rows

  bool pristine() const { return distortion_level == 0; }
};

/// Ordered list of image records plus score metadata. Relative image paths
/// resolve against `base_dir`.
struct DatasetManifest {
  std::string name;
  ScorePolarity score_polarity = ScorePolarity::kImpairmentDmos;
  std::vector<ImageRecord> records;
  std::filesystem::path base_dir;
  /// Scores already mapped onto [0, 100] DMOS; normalizing again is a no-op.
  bool normalized = false;

  std::filesystem::path resolve(const ImageRecord& r) const;

  /// Index of the pristine record for a reference id, if any.
  std::optional<std::size_t> pristine_index(const std::string& reference_id) const;
  std::vector<std::string> reference_ids() const;  // sorted, unique
  std::vector<std::string> distortion_types() const;  // sorted, unique, no PRISTINE
  std::size_t distorted_count() const;

  /// Throws IntegrityError when a record violates the manifest invariants.
  void validate() const;
};

/// Parses the CSV manifest format. Leading `# key: value` lines carry
/// optional metadata (`name`, `polarity`, `normalized`); the name defaults to
/// the file stem.
DatasetManifest load_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(const std::string& text, const std::string& name,
                               const std::filesystem::path& base_dir);
/// Writes the manifest with paths rewritten relative to the new location.
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
std::string format_manifest(const DatasetManifest& manifest,
                            const std::filesystem::path& target_dir);

/// Affine map of the scores onto [0, 100], DMOS-like (higher is worse).
/// Returns a normalized manifest unchanged.
DatasetManifest normalize_scores(const DatasetManifest& manifest);

struct ManifestSplit {
  DatasetManifest train, val, test;
};

/// Partitions reference ids (and all their records) by shuffled ratio.
/// Per-split counts are floored and leftovers go to train.
ManifestSplit split_by_reference(const DatasetManifest& manifest,
                                 const std::array<double, 3>& ratios,
                                 std::uint64_t seed);

/// Counts of references assigned to train/val/test for `n` references.
std::array<std::size_t, 3> split_counts(std::size_t n, const std::array<double, 3>& ratios);

/// Maps distortion-type labels to contiguous class indices (sorted order).
class LabelMap {
 public:
  LabelMap() = default;
  explicit LabelMap(std::vector<std::string> labels);
  static LabelMap from_manifest(const DatasetManifest& manifest);

  int index(const std::string& label) const;
  bool contains(const std::string& label) const { return lookup_.count(label) > 0; }
  const std::vector<std::string>& labels() const { return labels_; }
  int size() const { return static_cast<int>(labels_.size()); }

 private:
  std::vector<std::string> labels_;
  std::map<std::string, int> lookup_;
};

}  // namespace sciq

#endif  // SCIQ_MANIFEST_HPP_
