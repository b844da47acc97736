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

#include "sciq/training.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "sciq/evaluation.hpp"
#include "sciq/json_io.hpp"
#include "sciq/objective.hpp"
#include "sciq/rng.hpp"
#include "sciq/triplet.hpp"

namespace sciq {

namespace {

// Seed streams.
constexpr std::uint64_t kInitStream = 1, kBatchStream = 2, kGaussStream = 3;

bool all_finite(const ParamSet<float>& g, std::string* which) {
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!g.values[i].allFinite()) {
      *which = g.names[i];
      return false;
    }
  return true;
}

std::string describe(const StepRecord& r) {
  std::ostringstream os;
  os << "step " << r.step << " (epoch " << r.epoch << ")";
  return os.str();
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0) || !(weight_decay >= 0)) throw ConfigError("learning rate must be > 0 and weight decay >= 0");
  if (batch_triplets < 1 || patches_per_image < 2 || max_epochs < 1 || eval_every < 1 ||
      early_stop_patience < 1)
    throw ConfigError("batch, epochs, eval interval and patience must be positive; patches per image >= 2");
  if (!(regressor_lr_scale > 0)) throw ConfigError("regressor learning-rate scale must be > 0");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1) || !(epsilon > 0))
    throw ConfigError("optimizer moments must lie in [0, 1) and epsilon must be > 0");
  if (!(hyper.alpha >= 0) || !(hyper.lambda1 >= 0) || !(hyper.lambda2 >= 0) || !(hyper.lambda3 >= 0))
    throw ConfigError("loss weights and margin must be non-negative");
  model.validate();
}

AdamState adam_state(const ParamSet<float>& params) {
  return AdamState{params.zeros_like(), params.zeros_like(), 0};
}

void adamw_step(ParamSet<float>& params, const ParamSet<float>& grads, AdamState& state,
                const TrainConfig& config, std::span<const double> lr_scale) {
  if (!lr_scale.empty() && lr_scale.size() != params.size())
    throw SizeError("one learning-rate multiplier per parameter array expected");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const auto b1 = static_cast<float>(config.beta1), b2 = static_cast<float>(config.beta2);
  const auto c1 = static_cast<float>(1.0 - std::pow(config.beta1, t));
  const auto c2 = static_cast<float>(1.0 - std::pow(config.beta2, t));
  const auto eps = static_cast<float>(config.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double rate = config.learning_rate * (lr_scale.empty() ? 1.0 : lr_scale[i]);
    const auto lr = static_cast<float>(rate);
    const auto decay = static_cast<float>(rate * config.weight_decay);
    auto& p = params.values[i];
    const auto& g = grads.values[i];
    auto& m = state.m.values[i];
    auto& v = state.v.values[i];
    m = b1 * m + (1.0f - b1) * g;
    v = b2 * v + (1.0f - b2) * g.cwiseProduct(g);
    p -= decay * p;
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
}

std::string step_json(const StepRecord& r) {
  return Json{{"kind", "step"}, {"step", r.step}, {"epoch", r.epoch}, {"losses", r.losses}}.dump();
}

std::string eval_json(const EvalRecord& r) {
  return Json{{"kind", "eval"},
              {"epoch", r.epoch},
              {"srcc", finite_or_null(r.srcc)},
              {"plcc", finite_or_null(r.plcc)},
              {"rmse", finite_or_null(r.rmse)}}
      .dump();
}

std::string history_json(const TrainHistory& h) {
  Json evals = Json::array();
  for (const auto& e : h.evals) evals.push_back(Json::parse(eval_json(e)));
  Json mae = Json::array();
  for (double v : h.epoch_mae) mae.push_back(finite_or_null(v));
  return Json{{"steps", h.steps.size()},
              {"epoch_mae", mae},
              {"evals", evals},
              {"best_epoch", h.best_epoch},
              {"best_srcc", finite_or_null(h.best_srcc)},
              {"best_checkpoint", h.best_checkpoint.filename().string()}}
             .dump(2) +
         "\n";
}

TrainResult train(const DatasetManifest& train_set, const DatasetManifest& val_set,
                  TrainConfig config, const TrainOutput& output) {
  const LabelMap labels = LabelMap::from_manifest(train_set);
  config.model.num_classes = labels.size();
  config.validate();
  if (train_set.distorted_count() < static_cast<std::size_t>(config.batch_triplets))
    throw SampleError("training set has " + std::to_string(train_set.distorted_count()) +
                      " distorted images, fewer than the batch size " +
                      std::to_string(config.batch_triplets));

  TrainResult res;
  res.meta = CheckpointMeta{labels.labels(), train_set.name};
  Model<float> model = Model<float>::initialized(config.model, derive_seed(config.seed, kInitStream));
  AdamState adam = adam_state(model.params);
  std::vector<double> lr_scale(model.params.size(), 1.0);
  lr_scale[static_cast<std::size_t>(model.layout.regressor_w)] = config.regressor_lr_scale;
  lr_scale[static_cast<std::size_t>(model.layout.regressor_b)] = config.regressor_lr_scale;
  ImageCache cache;

  std::ofstream log;
  if (output.dir) {
    std::filesystem::create_directories(*output.dir);
    log.open(*output.dir / "train_log.jsonl", std::ios::trunc);
    if (!log) throw IoError("cannot write training log in " + output.dir->string());
    res.history.best_checkpoint = *output.dir / "best.ckpt";
  }

  const long steps_per_epoch =
      static_cast<long>((train_set.distorted_count() + static_cast<std::size_t>(config.batch_triplets) - 1) /
                        static_cast<std::size_t>(config.batch_triplets));
  const BatchShape shape{config.batch_triplets, config.patches_per_image};
  ObjectiveOptions objopts;
  objopts.hyper = config.hyper;

  double best = -std::numeric_limits<double>::infinity();
  bool have_best = false;
  int stale = 0;
  long step = 0;
  bool stop = false;
  for (int epoch = 1; epoch <= config.max_epochs && !stop; ++epoch) {
    double mae_sum = 0;
    long mae_n = 0;
    for (long s = 0; s < steps_per_epoch; ++s, ++step) {
      if (output.max_steps && step >= *output.max_steps) {
        stop = true;
        break;
      }
      StepRecord rec{step, epoch, {}};
      const TripletBatch batch =
          sample_triplet_batch(train_set, cache, labels, shape, derive_seed(config.seed, kBatchStream, static_cast<std::uint64_t>(step)));
      objopts.gaussian_seed = derive_seed(config.seed, kGaussStream, static_cast<std::uint64_t>(step));
      ObjectiveResult<float> obj;
      try {
        obj = evaluate_objective(model, batch, objopts, true);
      } catch (const NumericError& e) {
        throw NumericError(describe(rec) + ": " + e.what());
      }
      rec.losses = obj.losses;
      if (!rec.losses.identity_holds())
        throw NumericError(describe(rec) + ": loss total differs from its weighted components");
      std::string bad;
      if (!all_finite(obj.grads, &bad))
        throw NumericError(describe(rec) + ": non-finite gradient in '" + bad + "'");
      adamw_step(model.params, obj.grads, adam, config, lr_scale);
      mae_sum += rec.losses.mae;
      ++mae_n;
      if (log.is_open()) log << step_json(rec) << "\n";
      res.history.steps.push_back(rec);
    }
    if (mae_n == 0) break;
    res.history.epoch_mae.push_back(mae_sum / static_cast<double>(mae_n));
    std::ostringstream line;
    line << "epoch " << epoch << " mae " << res.history.epoch_mae.back();

    if (epoch % config.eval_every == 0 || epoch == config.max_epochs || stop) {
      const EvalReport rep = evaluate(model, val_set, EvalOptions{false, false, train_set.name, output.workers});
      const EvalRecord ev{epoch, rep.overall.srcc, rep.overall.plcc, rep.overall.rmse};
      res.history.evals.push_back(ev);
      if (log.is_open()) log << eval_json(ev) << "\n";
      line << " val_srcc " << ev.srcc;
      if (std::isfinite(ev.srcc) && ev.srcc > best) {
        best = ev.srcc;
        have_best = true;
        stale = 0;
        res.best = model;
        res.history.best_epoch = epoch;
        res.history.best_srcc = ev.srcc;
        if (output.dir) save_checkpoint(model, res.meta, res.history.best_checkpoint);
      } else if (++stale >= config.early_stop_patience) {
        stop = true;
        line << " (early stop)";
      }
    }
    if (output.progress) output.progress(line.str());
  }
  res.last = model;
  if (!have_best) {
    // Validation never produced a defined SRCC; fall back to the final model.
    res.best = model;
    res.history.best_epoch = static_cast<int>(res.history.epoch_mae.size());
    res.history.best_srcc = std::numeric_limits<double>::quiet_NaN();
    if (output.dir) save_checkpoint(model, res.meta, res.history.best_checkpoint);
  }
  if (output.dir) {
    std::ofstream h(*output.dir / "history.json", std::ios::trunc);
    h << history_json(res.history);
    if (!h) throw IoError("cannot write history in " + output.dir->string());
  }
  return res;
}

}  // namespace sciq
