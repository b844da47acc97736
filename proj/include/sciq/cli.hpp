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

#ifndef SCIQ_CLI_HPP_
#define SCIQ_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace sciq {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Environment variable naming the default parent of run directories.
inline constexpr const char* kOutputRootEnv = "SCIQ_OUTPUT_ROOT";

/// Entry point of the `sciq` tool; `args` excludes the program name.
/// Commands: synth, train, eval, stats, check-grads.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sciq

#endif  // SCIQ_CLI_HPP_
