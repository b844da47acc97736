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

#ifndef SCIQ_TRAINING_HPP_
#define SCIQ_TRAINING_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sciq/checkpoint.hpp"
#include "sciq/losses.hpp"
#include "sciq/manifest.hpp"
#include "sciq/model.hpp"

namespace sciq {

struct TrainConfig {
  double learning_rate = 1e-4;
  double weight_decay = 1e-4;
  int batch_triplets = 32;
  int patches_per_image = 16;
  int max_epochs = 200;
  std::uint64_t seed = 0;
  int eval_every = 1;
  int early_stop_patience = 20;
  HyperParams hyper;
  ModelConfig model;
  double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
  /// Learning-rate multiplier for the regressor parameters, whose output
  /// lives on the 0..100 score scale.
  double regressor_lr_scale = 1.0;

  /// Throws ConfigError unless every size and rate is positive and the
  /// moment coefficients lie in [0, 1).
  void validate() const;
};

/// First and second moment estimates of the adaptive optimizer.
struct AdamState {
  ParamSet<float> m, v;
  long step = 0;
};

AdamState adam_state(const ParamSet<float>& params);

/// One update with decoupled weight decay:
///   theta -= lr * wd * theta;  theta -= lr * m_hat / (sqrt(v_hat) + eps)
/// `lr_scale`, when non-empty, holds one learning-rate multiplier per array.
void adamw_step(ParamSet<float>& params, const ParamSet<float>& grads, AdamState& state,
                const TrainConfig& config, std::span<const double> lr_scale = {});

struct StepRecord {
  long step = 0;
  int epoch = 0;
  LossBundle losses;
};

struct EvalRecord {
  int epoch = 0;
  double srcc = 0, plcc = 0, rmse = 0;  // NaN when undefined
};

struct TrainHistory {
  std::vector<StepRecord> steps;
  std::vector<EvalRecord> evals;
  std::vector<double> epoch_mae;  // mean training MAE per epoch
  int best_epoch = 0;
  double best_srcc = 0;
  std::filesystem::path best_checkpoint;  // empty without an output dir
};

struct TrainResult {
  Model<float> best;
  Model<float> last;
  CheckpointMeta meta;
  TrainHistory history;
};

struct TrainOutput {
  /// When set: train_log.jsonl, history.json and best.ckpt are written here.
  std::optional<std::filesystem::path> dir;
  /// Progress lines (one per epoch).
  std::function<void(const std::string&)> progress;
  /// Stop after this many optimizer steps (for probes and tests).
  std::optional<long> max_steps;
  /// Threads used for validation prediction.
  int workers = 1;
};

/// Trains from a seeded initialization. The classifier width is taken from
/// the training manifest's distortion types. Throws NumericError with step
/// diagnostics on a non-finite loss or gradient.
TrainResult train(const DatasetManifest& train_set, const DatasetManifest& val_set,
                  TrainConfig config, const TrainOutput& output = {});

std::string step_json(const StepRecord& r);
std::string eval_json(const EvalRecord& r);
std::string history_json(const TrainHistory& h);

}  // namespace sciq

#endif  // SCIQ_TRAINING_HPP_
