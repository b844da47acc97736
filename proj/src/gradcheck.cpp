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

#include "sciq/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sciq/rng.hpp"

namespace sciq {

GradCheckReport gradient_check(const ObjectiveFn& objective, const ParamSet<double>& params,
                               const GradCheckOptions& options) {
  GradCheckReport report;
  report.tolerance = options.tolerance;
  const ObjectiveEval base = objective(params, true);
  const Index total = params.scalar_count();

  // Flat index -> (array, offset).
  std::vector<Index> offsets(params.size() + 1, 0);
  for (std::size_t i = 0; i < params.size(); ++i) offsets[i + 1] = offsets[i] + params.values[i].size();

  std::vector<Index> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(derive_seed(options.seed, 0x6c));
  rng.shuffle(order);

  ParamSet<double> probe = params;
  int draws = 0;
  for (Index flat : order) {
    if (report.checked >= options.max_params || draws >= options.max_draws) break;
    ++draws;
    const auto it = std::upper_bound(offsets.begin(), offsets.end(), flat);
    const auto arr = static_cast<std::size_t>(std::distance(offsets.begin(), it) - 1);
    const Index local = flat - offsets[arr];
    double& theta = probe.values[arr].data()[local];
    const double saved = theta;
    const double h = options.relative_step * std::max(1.0, std::abs(saved));

    theta = saved + h;
    const ObjectiveEval plus = objective(probe, false);
    theta = saved - h;
    const ObjectiveEval minus = objective(probe, false);
    theta = saved;

    GradCheckEntry e;
    e.param = params.names[arr];
    e.index = local;
    e.analytic = base.grads.values[arr].data()[local];
    e.numeric = (plus.loss - minus.loss) / (2.0 * h);
    if (plus.signature != base.signature || minus.signature != base.signature) {
      e.skipped = true;
      ++report.skipped;
    } else {
      const double denom = std::max({std::abs(e.analytic), std::abs(e.numeric), options.abs_floor});
      e.rel_error = std::abs(e.analytic - e.numeric) / denom;
      report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
      ++report.checked;
    }
    report.entries.push_back(std::move(e));
  }
  return report;
}

GradCheckReport check_model_gradients(const Model<double>& model, const TripletBatch& batch,
                                      const ObjectiveOptions& objective,
                                      const GradCheckOptions& options) {
  ObjectiveOptions frozen = objective;
  if (!frozen.bandwidths)
    frozen.bandwidths = evaluate_objective(model, batch, objective, false).bandwidths;
  Model<double> work = model;
  const ObjectiveFn fn = [&](const ParamSet<double>& p, bool with_grad) {
    work.params = p;
    auto r = evaluate_objective(work, batch, frozen, with_grad);
    return ObjectiveEval{r.losses.total, std::move(r.grads), r.signature};
  };
  return gradient_check(fn, model.params, options);
}

}  // namespace sciq
