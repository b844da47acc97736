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

#ifndef SCIQ_JSON_IO_HPP_
#define SCIQ_JSON_IO_HPP_

#include <cmath>

#include "json.hpp"
#include "sciq/losses.hpp"
#include "sciq/model.hpp"

namespace sciq {

using Json = nlohmann::json;

inline void to_json(Json& j, const ModelConfig& c) {
  j = Json{{"stage_channels", c.stage_channels},
           {"convs_per_stage", c.convs_per_stage},
           {"feature_dim", c.feature_dim},
           {"num_classes", c.num_classes},
           {"patch_size", c.patch_size}};
}

inline void from_json(const Json& j, ModelConfig& c) {
  j.at("stage_channels").get_to(c.stage_channels);
  j.at("convs_per_stage").get_to(c.convs_per_stage);
  j.at("feature_dim").get_to(c.feature_dim);
  j.at("num_classes").get_to(c.num_classes);
  j.at("patch_size").get_to(c.patch_size);
}

inline void to_json(Json& j, const HyperParams& h) {
  j = Json{{"alpha", h.alpha}, {"lambda1", h.lambda1}, {"lambda2", h.lambda2}, {"lambda3", h.lambda3}};
}

inline void from_json(const Json& j, HyperParams& h) {
  j.at("alpha").get_to(h.alpha);
  j.at("lambda1").get_to(h.lambda1);
  j.at("lambda2").get_to(h.lambda2);
  j.at("lambda3").get_to(h.lambda3);
}

inline void to_json(Json& j, const LossBundle& b) {
  j = Json{{"mae", b.mae},       {"trip", b.trip},     {"mmd", b.mmd},
           {"cls", b.cls},       {"reg_rd", b.reg_rd}, {"reg_ad", b.reg_ad},
           {"reg_diff", b.reg_diff}, {"total", b.total}};
}

inline void from_json(const Json& j, LossBundle& b) {
  j.at("mae").get_to(b.mae);
  j.at("trip").get_to(b.trip);
  j.at("mmd").get_to(b.mmd);
  j.at("cls").get_to(b.cls);
  j.at("reg_rd").get_to(b.reg_rd);
  j.at("reg_ad").get_to(b.reg_ad);
  j.at("reg_diff").get_to(b.reg_diff);
  j.at("total").get_to(b.total);
}

/// NaN and infinities become null.
inline Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace sciq

#endif  // SCIQ_JSON_IO_HPP_
