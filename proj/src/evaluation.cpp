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

#include "sciq/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <thread>

#include "sciq/json_io.hpp"
#include "sciq/triplet.hpp"

namespace sciq {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <typename F>
double or_nan(F&& f) {
  try {
    return f();
  } catch (const MetricError&) {
    return kNaN;
  }
}

Json metrics_json(const MetricSummary& m) {
  return Json{{"srcc", finite_or_null(m.srcc)},
              {"plcc", finite_or_null(m.plcc)},
              {"rmse", finite_or_null(m.rmse)},
              {"count", m.count}};
}

// Fixed-precision text so reports compare byte for byte across runs.
std::string fmt(double v) {
  if (!std::isfinite(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(9) << v;
  return os.str();
}

Json histogram_json(const Histogram& h) {
  return Json{{"edges", h.spec.edges()},
              {"counts", h.counts},
              {"underflow", h.underflow},
              {"overflow", h.overflow}};
}

Json group_json(const StatsGroup& g) {
  return Json{{"count", g.phi_sums.size()},
              {"median_phi_sum", finite_or_null(g.median_phi_sum)},
              {"mu", histogram_json(g.mu)},
              {"sigma", histogram_json(g.sigma)},
              {"phi", histogram_json(g.phi)}};
}

// Runs fn(0..n-1) on up to `workers` threads. Each index is visited once.
template <typename F>
void parallel_for(std::size_t n, int workers, F&& fn) {
  const auto k = static_cast<std::size_t>(std::max(1, workers));
  if (k == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(k, n); ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

MetricSummary summarize(const std::vector<double>& pred, const std::vector<double>& gt) {
  MetricSummary m;
  m.count = pred.size();
  m.srcc = or_nan([&] { return srcc(pred, gt); });
  m.plcc = or_nan([&] { return plcc(pred, gt); });
  m.rmse = or_nan([&] { return rmse(pred, gt); });
  return m;
}

EvalReport evaluate(const Model<float>& model, const DatasetManifest& manifest,
                    const EvalOptions& options) {
  EvalReport rep;
  rep.dataset = manifest.name;
  rep.label = options.train_dataset.empty() || options.train_dataset == manifest.name
                  ? manifest.name
                  : options.train_dataset + "→" + manifest.name;
  struct Outcome {
    double q = 0;
    std::string error;
  };
  std::vector<Outcome> results(manifest.records.size());
  parallel_for(manifest.records.size(), options.workers, [&](std::size_t i) {
    const ImageRecord& r = manifest.records[i];
    if (r.pristine()) return;
    try {
      if (!r.score) throw IntegrityError("distorted record without a score");
      const Image img = load_image(manifest.resolve(r));
      results[i].q = static_cast<double>(predict_quality(model, img));
      if (!std::isfinite(results[i].q)) throw NumericError("non-finite prediction");
    } catch (const Error& e) {
      results[i].error = e.what();
    }
  });
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const ImageRecord& r = manifest.records[i];
    if (r.pristine()) continue;
    if (!results[i].error.empty())
      rep.skipped.push_back({r.image_path, results[i].error});
    else
      rep.predictions.push_back({i, r.image_path, r.distortion_type, r.distortion_level, results[i].q, *r.score});
  }

  std::vector<double> pred, gt;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_type;
  for (const auto& p : rep.predictions) {
    pred.push_back(p.predicted);
    gt.push_back(p.ground_truth);
    auto& [tp, tg] = by_type[p.distortion_type];
    tp.push_back(p.predicted);
    tg.push_back(p.ground_truth);
  }
  rep.overall = summarize(pred, gt);
  if (options.group_by_type)
    for (const auto& [type, v] : by_type) rep.per_type[type] = summarize(v.first, v.second);
  if (options.logistic && pred.size() >= 4) {
    try {
      const Logistic4 f = fit_logistic4(pred, gt);
      std::vector<double> mapped;
      for (double p : pred) mapped.push_back(f(p));
      rep.logistic = summarize(mapped, gt);
    } catch (const MetricError&) {
      rep.logistic = MetricSummary{kNaN, kNaN, kNaN, pred.size()};
    }
  }
  return rep;
}

std::string report_json(const EvalReport& rep) {
  Json j;
  j["dataset"] = rep.dataset;
  j["label"] = rep.label;
  j["overall"] = metrics_json(rep.overall);
  Json per = Json::object();
  for (const auto& [type, m] : rep.per_type) per[type] = metrics_json(m);
  j["per_type"] = per;
  if (rep.logistic) j["logistic"] = metrics_json(*rep.logistic);
  Json preds = Json::array();
  for (const auto& p : rep.predictions)
    preds.push_back({{"image", p.image},
                     {"type", p.distortion_type},
                     {"level", p.distortion_level},
                     {"predicted", p.predicted},
                     {"ground_truth", p.ground_truth}});
  j["predictions"] = preds;
  Json skipped = Json::array();
  for (const auto& s : rep.skipped) skipped.push_back({{"image", s.image}, {"reason", s.reason}});
  j["skipped"] = skipped;
  j["skipped_count"] = rep.skipped.size();
  return j.dump(2) + "\n";
}

std::string report_csv(const EvalReport& rep) {
  std::string out = "image,type,level,predicted,ground_truth\n";
  for (const auto& p : rep.predictions)
    out += p.image + "," + p.distortion_type + "," + std::to_string(p.distortion_level) + "," +
           fmt(p.predicted) + "," + fmt(p.ground_truth) + "\n";
  return out;
}

std::vector<double> HistogramSpec::edges() const {
  std::vector<double> e(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) e[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / bins;
  return e;
}

void Histogram::add(double v) {
  if (counts.empty()) counts.assign(static_cast<std::size_t>(spec.bins), 0);
  if (!(v >= spec.lo)) {
    ++underflow;
  } else if (v > spec.hi) {
    ++overflow;
  } else {
    const auto b = static_cast<int>((v - spec.lo) / (spec.hi - spec.lo) * spec.bins);
    ++counts[static_cast<std::size_t>(std::min(b, spec.bins - 1))];
  }
}

StatsReport stats_report(const Model<float>& model, const DatasetManifest& manifest,
                         const StatsConfig& config) {
  if (config.mu.bins < 1 || config.sigma.bins < 1 || config.phi.bins < 1 ||
      !(config.mu.hi > config.mu.lo) || !(config.sigma.hi > config.sigma.lo) ||
      !(config.phi.hi > config.phi.lo))
    throw ConfigError("histogram needs at least one bin and hi > lo");
  StatsReport rep;
  rep.dataset = manifest.name;
  for (StatsGroup* g : {&rep.pristine, &rep.distorted}) {
    g->mu.spec = config.mu;
    g->sigma.spec = config.sigma;
    g->phi.spec = config.phi;
    for (Histogram* h : {&g->mu, &g->sigma, &g->phi}) h->counts.assign(static_cast<std::size_t>(h->spec.bins), 0);
  }
  struct Outcome {
    ImageStats stats;
    std::string error;
  };
  std::vector<Outcome> results(manifest.records.size());
  parallel_for(manifest.records.size(), config.workers, [&](std::size_t i) {
    const ImageRecord& r = manifest.records[i];
    try {
      QualityTrace<float> trace;
      predict_quality(model, load_image(manifest.resolve(r)), &trace);
      ImageStats s{i, r.image_path, r.distortion_type, r.distortion_level, {}, {}, {}, 0.0};
      for (Index j = 0; j < trace.mu.size(); ++j) {
        s.mu.push_back(trace.mu(j));
        s.sigma.push_back(trace.sigma(j));
        s.phi.push_back(trace.phi(j));
        s.phi_sum += trace.phi(j);
      }
      if (!std::isfinite(s.phi_sum)) throw NumericError("non-finite feature statistics");
      results[i].stats = std::move(s);
    } catch (const Error& e) {
      results[i].error = e.what();
    }
  });
  std::map<int, std::vector<double>> by_level;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const ImageRecord& r = manifest.records[i];
    if (!results[i].error.empty()) {
      rep.skipped.push_back({r.image_path, results[i].error});
      continue;
    }
    ImageStats& s = results[i].stats;
    StatsGroup& g = r.pristine() ? rep.pristine : rep.distorted;
    for (std::size_t j = 0; j < s.mu.size(); ++j) {
      g.mu.add(s.mu[j]);
      g.sigma.add(s.sigma[j]);
      g.phi.add(s.phi[j]);
    }
    g.phi_sums.push_back(s.phi_sum);
    by_level[r.distortion_level].push_back(s.phi_sum);
    rep.images.push_back(std::move(s));
  }
  rep.pristine.median_phi_sum = median(rep.pristine.phi_sums);
  rep.distorted.median_phi_sum = median(rep.distorted.phi_sums);
  for (const auto& [level, v] : by_level) rep.median_phi_sum_by_level[level] = median(v);
  return rep;
}

std::string stats_json(const StatsReport& rep) {
  Json j;
  j["dataset"] = rep.dataset;
  j["pristine"] = group_json(rep.pristine);
  j["distorted"] = group_json(rep.distorted);
  Json levels = Json::object();
  for (const auto& [level, m] : rep.median_phi_sum_by_level) levels[std::to_string(level)] = finite_or_null(m);
  j["median_phi_sum_by_level"] = levels;
  Json images = Json::array();
  for (const auto& s : rep.images)
    images.push_back({{"image", s.image},
                      {"type", s.distortion_type},
                      {"level", s.distortion_level},
                      {"mu", s.mu},
                      {"sigma", s.sigma},
                      {"phi", s.phi},
                      {"phi_sum", s.phi_sum}});
  j["images"] = images;
  Json skipped = Json::array();
  for (const auto& s : rep.skipped) skipped.push_back({{"image", s.image}, {"reason", s.reason}});
  j["skipped"] = skipped;
  return j.dump(2) + "\n";
}

}  // namespace sciq
