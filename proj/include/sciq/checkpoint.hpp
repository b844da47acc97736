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

#ifndef SCIQ_CHECKPOINT_HPP_
#define SCIQ_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sciq/model.hpp"

namespace sciq {

/// Container layout (little endian):
///   "SCIQCKPT" | u32 version | u32 n | n bytes JSON metadata
///   | u32 arrays | per array: u32 len, name, u32 ndim, u32 dims[ndim],
///     f32 values in row-major order of the logical shape
///   | u64 FNV-1a of every preceding byte
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  std::vector<std::string> labels;  // distortion-type class names
  std::string dataset;              // name of the training manifest
};

struct Checkpoint {
  Model<float> model;
  CheckpointMeta meta;
};

std::string serialize_checkpoint(const Model<float>& model, const CheckpointMeta& meta);
/// Throws CorruptionError on truncation, bad magic, bad checksum or a
/// parameter set that does not match the stored config; VersionError on an
/// unknown version.
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const Model<float>& model, const CheckpointMeta& meta,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sciq

#endif  // SCIQ_CHECKPOINT_HPP_
