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

#ifndef SCIQ_METRICS_HPP_
#define SCIQ_METRICS_HPP_

#include <array>
#include <span>
#include <vector>

namespace sciq {

/// Ranks starting at 1; tied values share the average of their ranks.
std::vector<double> average_ranks(std::span<const double> values);

/// Spearman rank correlation (Pearson on average ranks). Throws MetricError
/// for length < 2, mismatched lengths, or constant input.
double srcc(std::span<const double> pred, std::span<const double> gt);

/// Pearson linear correlation on raw values.
double plcc(std::span<const double> pred, std::span<const double> gt);

double rmse(std::span<const double> pred, std::span<const double> gt);

/// Monotone logistic f(x) = (b1 - b2) / (1 + exp(-(x - b3) / |b4|)) + b2
/// fitted by Levenberg-Marquardt to map predictions onto the target scale.
struct Logistic4 {
  std::array<double, 4> beta{};
  double operator()(double x) const;
};
Logistic4 fit_logistic4(std::span<const double> pred, std::span<const double> gt);

}  // namespace sciq

#endif  // SCIQ_METRICS_HPP_
