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

#ifndef SCIQ_GRADCHECK_HPP_
#define SCIQ_GRADCHECK_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sciq/model.hpp"
#include "sciq/objective.hpp"

namespace sciq {

struct GradCheckOptions {
  int max_params = 200;
  double relative_step = 1e-5;  // h = relative_step * max(1, |theta|)
  double tolerance = 1e-4;
  /// Gradients smaller than this are compared absolutely.
  double abs_floor = 1e-6;
  std::uint64_t seed = 0;
  /// Probes whose +/-h evaluations take a different branch are skipped and
  /// replaced; this bounds the total number of draws.
  int max_draws = 2000;
};

struct GradCheckEntry {
  std::string param;
  Index index = 0;  // flat index inside the array
  double analytic = 0;
  double numeric = 0;
  double rel_error = 0;
  bool skipped = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0;
  int checked = 0;
  int skipped = 0;
  double tolerance = 0;
  bool passed() const { return checked > 0 && max_rel_error < tolerance; }
};

/// Loss, optional gradient, and branch signature at a parameter point.
struct ObjectiveEval {
  double loss = 0;
  ParamSet<double> grads;
  std::uint64_t signature = 0;
};
using ObjectiveFn = std::function<ObjectiveEval(const ParamSet<double>&, bool with_grad)>;

/// Compares analytic gradients against central differences on up to
/// `max_params` randomly drawn scalars (without replacement).
GradCheckReport gradient_check(const ObjectiveFn& objective, const ParamSet<double>& params,
                               const GradCheckOptions& options = {});

/// Checks the full training objective of `model` on `batch` in 64-bit.
/// MMD bandwidths are frozen at the base point.
GradCheckReport check_model_gradients(const Model<double>& model, const TripletBatch& batch,
                                      const ObjectiveOptions& objective,
                                      const GradCheckOptions& options = {});

}  // namespace sciq

#endif  // SCIQ_GRADCHECK_HPP_
