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

#ifndef SCIQ_CONFIG_HPP_
#define SCIQ_CONFIG_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "sciq/training.hpp"

namespace sciq {

/// Flat `key = value` text with `[section]` headers that prefix the keys
/// (`[train]` + `seed` -> `train.seed`). `#` starts a comment line.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text);
KeyValues load_key_values(const std::filesystem::path& path);

/// Everything a training run needs besides the output location.
struct RunConfig {
  TrainConfig train;
  std::string manifest;  // dataset manifest path
  std::array<double, 3> split{0.6, 0.2, 0.2};
  std::uint64_t split_seed = 0;
};

/// Applies keys on top of `base`. `model.preset` (default, compact, tiny) is
/// applied before the individual model keys. Unknown keys and malformed
/// values throw ConfigError.
RunConfig apply_key_values(RunConfig base, const KeyValues& kv);

/// Every key in a fixed order; parses back to the same configuration.
std::string dump_run_config(const RunConfig& config);

}  // namespace sciq

#endif  // SCIQ_CONFIG_HPP_
