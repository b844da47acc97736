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

#ifndef SCIQ_EVALUATION_HPP_
#define SCIQ_EVALUATION_HPP_

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sciq/manifest.hpp"
#include "sciq/metrics.hpp"
#include "sciq/model.hpp"

namespace sciq {

/// SRCC/PLCC/RMSE over `count` images. A metric that is undefined for the
/// sample (constant predictions, fewer than two images) is NaN.
struct MetricSummary {
  double srcc = 0, plcc = 0, rmse = 0;
  std::size_t count = 0;
};

MetricSummary summarize(const std::vector<double>& pred, const std::vector<double>& gt);

struct ImagePrediction {
  std::size_t record = 0;
  std::string image;
  std::string distortion_type;
  int distortion_level = 0;
  double predicted = 0;
  double ground_truth = 0;
};

struct SkippedImage {
  std::string image;
  std::string reason;
};

struct EvalOptions {
  bool group_by_type = true;
  /// Also report PLCC/RMSE after a 4-parameter logistic mapping.
  bool logistic = false;
  /// Name of the training set; the report is labeled "train→eval" when it
  /// differs from the evaluated manifest.
  std::string train_dataset;
  /// Images are predicted on up to this many threads.
  int workers = 1;
};

struct EvalReport {
  std::string dataset;
  std::string label;
  MetricSummary overall;
  std::map<std::string, MetricSummary> per_type;
  std::optional<MetricSummary> logistic;
  std::vector<ImagePrediction> predictions;  // manifest order
  std::vector<SkippedImage> skipped;
};

/// Predicts every distorted record of a normalized manifest.
EvalReport evaluate(const Model<float>& model, const DatasetManifest& manifest,
                    const EvalOptions& options = {});

std::string report_json(const EvalReport& report);
/// image,type,level,predicted,ground_truth
std::string report_csv(const EvalReport& report);

struct HistogramSpec {
  int bins = 40;
  double lo = 0, hi = 1;
  std::vector<double> edges() const;
};

/// Bin counts plus values falling outside [lo, hi].
struct Histogram {
  HistogramSpec spec;
  std::vector<std::size_t> counts;
  std::size_t underflow = 0, overflow = 0;
  void add(double v);
};

struct StatsConfig {
  HistogramSpec mu{40, -4.0, 4.0};
  HistogramSpec sigma{40, 0.0, 4.0};
  HistogramSpec phi{40, 0.0, 8.0};  // per-dimension KL
  int workers = 1;
};

struct ImageStats {
  std::size_t record = 0;
  std::string image;
  std::string distortion_type;
  int distortion_level = 0;
  std::vector<double> mu, sigma, phi;  // per feature dimension
  double phi_sum = 0;
};

struct StatsGroup {
  Histogram mu, sigma, phi;
  std::vector<double> phi_sums;
  double median_phi_sum = 0;  // NaN for an empty group
};

struct StatsReport {
  std::string dataset;
  std::vector<ImageStats> images;
  StatsGroup pristine, distorted;
  std::map<int, double> median_phi_sum_by_level;
  std::vector<SkippedImage> skipped;
};

/// Distortion-feature statistics of every image (pristine included).
StatsReport stats_report(const Model<float>& model, const DatasetManifest& manifest,
                         const StatsConfig& config = {});
std::string stats_json(const StatsReport& report);

double median(std::vector<double> v);

}  // namespace sciq

#endif  // SCIQ_EVALUATION_HPP_
