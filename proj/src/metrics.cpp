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

#include "sciq/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sciq/core.hpp"

namespace sciq {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw MetricError("metric inputs differ in length");
  if (a.size() < 2) throw MetricError("metric needs at least two samples");
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw MetricError("correlation undefined for constant input");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

double srcc(std::span<const double> pred, std::span<const double> gt) {
  check_pair(pred, gt);
  const auto rp = average_ranks(pred), rg = average_ranks(gt);
  return pearson(rp, rg);
}

double plcc(std::span<const double> pred, std::span<const double> gt) {
  check_pair(pred, gt);
  return pearson(pred, gt);
}

double rmse(std::span<const double> pred, std::span<const double> gt) {
  if (pred.size() != gt.size()) throw MetricError("metric inputs differ in length");
  if (pred.empty()) throw MetricError("RMSE of empty input");
  double se = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) se += (pred[i] - gt[i]) * (pred[i] - gt[i]);
  return std::sqrt(se / static_cast<double>(pred.size()));
}

double Logistic4::operator()(double x) const {
  const double scale = std::max(std::abs(beta[3]), 1e-12);
  return (beta[0] - beta[1]) / (1.0 + std::exp(-(x - beta[2]) / scale)) + beta[1];
}

Logistic4 fit_logistic4(std::span<const double> pred, std::span<const double> gt) {
  check_pair(pred, gt);
  const auto n = static_cast<Eigen::Index>(pred.size());
  const auto [gmin, gmax] = std::minmax_element(gt.begin(), gt.end());
  const double mean = std::accumulate(pred.begin(), pred.end(), 0.0) / static_cast<double>(n);
  double var = 0;
  for (double p : pred) var += (p - mean) * (p - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  Logistic4 f;
  // Orient the initial curve along the sign of the linear correlation.
  const bool increasing = plcc(pred, gt) >= 0.0;
  f.beta = {increasing ? *gmax : *gmin, increasing ? *gmin : *gmax, mean, sd > 0 ? sd : 1.0};

  const auto residuals = [&](const Logistic4& g) {
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) r(i) = g(pred[static_cast<std::size_t>(i)]) - gt[static_cast<std::size_t>(i)];
    return r;
  };
  double lambda = 1e-3;
  Eigen::VectorXd r = residuals(f);
  double cost = r.squaredNorm();
  for (int it = 0; it < 200; ++it) {
    Eigen::MatrixXd J(n, 4);
    for (int k = 0; k < 4; ++k) {
      Logistic4 g = f;
      const double h = 1e-6 * std::max(1.0, std::abs(f.beta[static_cast<std::size_t>(k)]));
      g.beta[static_cast<std::size_t>(k)] += h;
      J.col(k) = (residuals(g) - r) / h;
    }
    const Eigen::Matrix4d A = J.transpose() * J;
    const Eigen::Vector4d g = J.transpose() * r;
    Eigen::Matrix4d damped = A;
    damped.diagonal() += lambda * A.diagonal().cwiseMax(1e-12);
    const Eigen::Vector4d step = damped.ldlt().solve(-g);
    Logistic4 trial = f;
    for (int k = 0; k < 4; ++k) trial.beta[static_cast<std::size_t>(k)] += step(k);
    const Eigen::VectorXd rt = residuals(trial);
    const double ct = rt.squaredNorm();
    if (std::isfinite(ct) && ct < cost) {
      const double gain = (cost - ct) / std::max(cost, 1e-300);
      f = trial;
      r = rt;
      cost = ct;
      lambda = std::max(lambda * 0.3, 1e-12);
      if (gain < 1e-12) break;
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }
  return f;
}

}  // namespace sciq
