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


#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include "oracles.hpp"
#include "sciq/evaluation.hpp"
#include "sciq/json_io.hpp"
#include "sciq/metrics.hpp"
#include "sciq/rng.hpp"
#include "sciq/synth.hpp"

using namespace sciq;
namespace fs = std::filesystem;

namespace {

std::vector<double> draw(std::size_t n, Rng& rng, bool ties) {
  std::vector<double> v(n);
  for (auto& x : v) x = ties ? static_cast<double>(rng.below(8)) : rng.normal();
  return v;
}

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

bool same(const MetricSummary& a, const MetricSummary& b) {
  return same(a.srcc, b.srcc) && same(a.plcc, b.plcc) && same(a.rmse, b.rmse) && a.count == b.count;
}

DatasetManifest corpus(const std::string& dir, std::vector<Distortion> types, const std::string& name) {
  SynthOptions so;
  so.refs = 3;
  so.types = std::move(types);
  so.levels = 3;
  so.width = 64;
  so.height = 64;
  so.seed = 9;
  so.name = name;
  return normalize_scores(write_synthetic_corpus(fs::temp_directory_path() / dir, so));
}

Model<float> model() { return Model<float>::initialized(ModelConfig::tiny(), 5); }

}  // namespace

TEST_CASE("metric examples") {
  const std::vector<double> gt{10, 20, 30};
  CHECK(srcc(std::vector<double>{1, 2, 3}, gt) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(srcc(std::vector<double>{3, 2, 1}, gt) == doctest::Approx(-1.0).epsilon(1e-15));
  std::vector<double> affine, neg;
  for (double g : gt) {
    affine.push_back(2 * g + 5);
    neg.push_back(-g);
  }
  CHECK(plcc(affine, gt) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(plcc(neg, gt) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(rmse(gt, gt) == 0.0);
  CHECK(rmse(std::vector<double>{0, 0}, std::vector<double>{3, 4}) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));
  const auto r = average_ranks(std::vector<double>{5, 1, 5, 3});
  CHECK(r == std::vector<double>{3.5, 1, 3.5, 2});
}

TEST_CASE("metric errors") {
  const std::vector<double> two{1, 2}, three{1, 2, 3}, flat{4, 4, 4}, one{1};
  CHECK_THROWS_AS(srcc(two, three), MetricError);
  CHECK_THROWS_AS(srcc(one, one), MetricError);
  CHECK_THROWS_AS(srcc(three, flat), MetricError);
  CHECK_THROWS_AS(plcc(flat, three), MetricError);
  CHECK_THROWS_AS(plcc(three, flat), MetricError);
  CHECK_THROWS_AS(rmse(two, three), MetricError);
  const auto s = summarize({1, 1, 1}, {1, 2, 3});
  CHECK(std::isnan(s.srcc));
  CHECK(std::isnan(s.plcc));
  CHECK(s.rmse == doctest::Approx(std::sqrt(5.0 / 3)));
  CHECK(s.count == 3);
}

TEST_CASE("metrics agree with direct definitions") {
  Rng rng(2026);
  for (int trial = 0; trial < 100; ++trial) {
    const bool ties = trial % 2 == 1;
    const auto p = draw(50, rng, ties);
    const auto g = draw(50, rng, ties);
    CHECK(std::abs(srcc(p, g) - oracle::spearman(p, g)) < 1e-9);
    CHECK(std::abs(plcc(p, g) - oracle::pearson(p, g)) < 1e-9);
    CHECK(std::abs(rmse(p, g) - oracle::rmse(p, g)) < 1e-9);
    CHECK(average_ranks(p) == oracle::ranks(p));
  }
}

TEST_CASE("metric invariances") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = draw(40, rng, trial % 3 == 0);
    const auto g = draw(40, rng, false);
    std::vector<double> e, c, a, sp, sg, eg;
    const double k = rng.uniform(0.1, 5.0), b = rng.normal();
    for (double x : p) {
      e.push_back(std::exp(x));
      c.push_back(x * x * x);
      a.push_back(k * x + b);
      sp.push_back(-3.0 * x);
    }
    for (double x : g) {
      sg.push_back(-3.0 * x);
      eg.push_back(std::exp(x));
    }
    const double s = srcc(p, g), r = plcc(p, g);
    CHECK(std::abs(srcc(e, g) - s) < 1e-9);
    CHECK(std::abs(srcc(c, g) - s) < 1e-9);
    CHECK(std::abs(srcc(p, eg) - s) < 1e-9);
    CHECK(std::abs(plcc(a, g) - r) < 1e-9);
    CHECK(std::abs(plcc(p, a) - 1.0) < 1e-9);
    CHECK(std::abs(rmse(sp, sg) - 3.0 * rmse(p, g)) < 1e-9);
    CHECK(std::abs(srcc(p, g) - srcc(g, p)) < 1e-12);
  }
}

TEST_CASE("perfect predictions summarize to one, one, zero") {
  const std::vector<double> g{3, 1, 4, 1, 5, 9, 2, 6};
  const auto s = summarize(g, g);
  CHECK(s.srcc == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s.plcc == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s.rmse == 0.0);
}

TEST_CASE("logistic fit is monotone and improves the fit") {
  std::vector<double> x, y;
  for (int i = 0; i < 40; ++i) {
    x.push_back(i / 4.0);
    y.push_back(80.0 / (1.0 + std::exp(-(i / 4.0 - 5.0))) + 10.0);
  }
  const auto f = fit_logistic4(x, y);
  std::vector<double> mapped;
  for (double v : x) mapped.push_back(f(v));
  for (std::size_t i = 1; i < mapped.size(); ++i) CHECK(mapped[i] >= mapped[i - 1]);
  CHECK(rmse(mapped, y) < rmse(x, y));
  CHECK(plcc(mapped, y) > plcc(x, y));
}

TEST_CASE("single-type report equals its overall metrics") {
  const auto m = corpus("sciq_test_eval_gn", {Distortion::kGaussianNoise}, "gn");
  const auto rep = evaluate(model(), m);
  REQUIRE(rep.per_type.size() == 1);
  CHECK(rep.per_type.begin()->first == "GN");
  CHECK(same(rep.per_type.begin()->second, rep.overall));
  CHECK(rep.overall.count == m.distorted_count());
  CHECK(rep.predictions.size() == m.distorted_count());
  CHECK(rep.label == "gn");
  CHECK_FALSE(rep.logistic.has_value());
  const auto flat = evaluate(model(), m, {.group_by_type = false});
  CHECK(flat.per_type.empty());
}

TEST_CASE("report contents and determinism") {
  const auto m = corpus("sciq_test_eval_multi", {Distortion::kGaussianBlur, Distortion::kBlock}, "multi");
  const auto a = evaluate(model(), m, {.logistic = true, .train_dataset = "other"});
  const auto b = evaluate(model(), m, {.logistic = true, .train_dataset = "other"});
  CHECK(a.label == "other→multi");
  CHECK(report_json(a) == report_json(b));
  CHECK(report_csv(a) == report_csv(b));
  CHECK(a.logistic.has_value());
  CHECK(a.per_type.size() == 2);
  std::size_t n = 0;
  for (const auto& [type, s] : a.per_type) n += s.count;
  CHECK(n == a.overall.count);
  for (const auto& p : a.predictions) {
    CHECK(p.predicted >= 0.0);
    CHECK(m.records[p.record].score.value() == p.ground_truth);
    CHECK(p.distortion_level >= 1);
  }
  const auto j = Json::parse(report_json(a));
  CHECK(j["label"] == "other→multi");
  CHECK(j["predictions"].size() == a.predictions.size());
  const std::string csv = report_csv(a);
  CHECK(csv.rfind("image,type,level,predicted,ground_truth\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == a.predictions.size() + 1);
  const auto same_name = evaluate(model(), m, {.train_dataset = "multi"});
  CHECK(same_name.label == "multi");
}

TEST_CASE("unreadable images are skipped and counted") {
  auto m = corpus("sciq_test_eval_gn", {Distortion::kGaussianNoise}, "gn");
  std::size_t broken = 0;
  for (std::size_t i = 0; i < m.records.size(); ++i)
    if (!m.records[i].pristine()) {
      m.records[i].image_path = "missing/nowhere.png";
      broken = i;
      break;
    }
  const auto rep = evaluate(model(), m);
  REQUIRE(rep.skipped.size() == 1);
  CHECK(rep.skipped[0].image == m.records[broken].image_path);
  CHECK_FALSE(rep.skipped[0].reason.empty());
  CHECK(rep.overall.count == m.distorted_count() - 1);
}

TEST_CASE("histograms") {
  const HistogramSpec spec{4, -1.0, 1.0};
  const auto e = spec.edges();
  CHECK(e == std::vector<double>{-1.0, -0.5, 0.0, 0.5, 1.0});
  CHECK(e == spec.edges());
  Histogram h{spec, std::vector<std::size_t>(4, 0)};
  for (double v : {-2.0, -1.0, -0.6, 0.0, 0.49, 0.5, 1.0, 3.0}) h.add(v);
  CHECK(h.underflow == 1);
  CHECK(h.overflow == 1);
  CHECK(h.counts == std::vector<std::size_t>{2, 0, 2, 2});
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 2, 3}) == 2.5);
  CHECK(std::isnan(median({})));
}

TEST_CASE("stats report is well formed for an untrained model") {
  const auto m = corpus("sciq_test_eval_gn", {Distortion::kGaussianNoise}, "gn");
  const auto rep = stats_report(model(), m);
  CHECK(rep.images.size() == m.records.size());
  CHECK(rep.pristine.phi_sums.size() == 3);
  CHECK(rep.distorted.phi_sums.size() == m.distorted_count());
  CHECK(rep.median_phi_sum_by_level.size() == 4);
  CHECK(rep.median_phi_sum_by_level.at(0) == rep.pristine.median_phi_sum);
  CHECK(rep.pristine.median_phi_sum == median(rep.pristine.phi_sums));
  for (const auto& im : rep.images) {
    CHECK(im.mu.size() == 16);
    CHECK(im.phi_sum >= 0.0);
    double s = 0;
    for (double p : im.phi) s += p;
    CHECK(im.phi_sum == doctest::Approx(s).epsilon(1e-9));
  }
  std::size_t total = rep.pristine.phi.underflow + rep.pristine.phi.overflow;
  for (auto c : rep.pristine.phi.counts) total += c;
  CHECK(total == 3 * 16);
  CHECK(stats_json(rep) == stats_json(stats_report(model(), m)));
  const auto j = Json::parse(stats_json(rep));
  CHECK(j["pristine"]["mu"]["edges"].size() == 41);
  StatsConfig bad;
  bad.phi.bins = 0;
  CHECK_THROWS_AS(stats_report(model(), m, bad), ConfigError);
}

TEST_CASE("worker count does not change reports") {
  const auto m = corpus("sciq_test_eval_multi", {Distortion::kGaussianBlur, Distortion::kBlock}, "multi");
  const auto serial = evaluate(model(), m);
  const auto threaded = evaluate(model(), m, {.workers = 4});
  CHECK(report_json(serial) == report_json(threaded));
  StatsConfig sc;
  sc.workers = 3;
  CHECK(stats_json(stats_report(model(), m)) == stats_json(stats_report(model(), m, sc)));
}
