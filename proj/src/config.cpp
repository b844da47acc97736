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

#include "sciq/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace sciq {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("invalid value '" + v + "' for " + key);
  return out;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

template <typename T, std::size_t N>
std::array<T, N> parse_array(const std::string& key, const std::string& v) {
  const auto items = split_list(v);
  if (items.size() != N) throw ConfigError(key + " expects " + std::to_string(N) + " comma-separated values");
  std::array<T, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = parse_number<T>(key, items[i]);
  return out;
}

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);  // shortest round-trip form
  return std::string(buf, res.ptr);
}

template <typename T, std::size_t N>
std::string join(const std::array<T, N>& a) {
  std::string out;
  for (std::size_t i = 0; i < N; ++i) {
    if (i) out += ",";
    if constexpr (std::is_floating_point_v<T>)
      out += num(a[i]);
    else
      out += std::to_string(a[i]);
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

template <typename T, typename F>
Setter number_setter(F field) {
  return [field](RunConfig& c, const std::string& k, const std::string& v) { field(c) = parse_number<T>(k, v); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> s = {
      {"data.manifest", [](RunConfig& c, const std::string&, const std::string& v) { c.manifest = v; }},
      {"data.split", [](RunConfig& c, const std::string& k, const std::string& v) { c.split = parse_array<double, 3>(k, v); }},
      {"data.split_seed", number_setter<std::uint64_t>([](RunConfig& c) -> auto& { return c.split_seed; })},
      {"train.learning_rate", number_setter<double>([](RunConfig& c) -> auto& { return c.train.learning_rate; })},
      {"train.weight_decay", number_setter<double>([](RunConfig& c) -> auto& { return c.train.weight_decay; })},
      {"train.batch_triplets", number_setter<int>([](RunConfig& c) -> auto& { return c.train.batch_triplets; })},
      {"train.patches_per_image", number_setter<int>([](RunConfig& c) -> auto& { return c.train.patches_per_image; })},
      {"train.max_epochs", number_setter<int>([](RunConfig& c) -> auto& { return c.train.max_epochs; })},
      {"train.seed", number_setter<std::uint64_t>([](RunConfig& c) -> auto& { return c.train.seed; })},
      {"train.eval_every", number_setter<int>([](RunConfig& c) -> auto& { return c.train.eval_every; })},
      {"train.early_stop_patience", number_setter<int>([](RunConfig& c) -> auto& { return c.train.early_stop_patience; })},
      {"train.beta1", number_setter<double>([](RunConfig& c) -> auto& { return c.train.beta1; })},
      {"train.beta2", number_setter<double>([](RunConfig& c) -> auto& { return c.train.beta2; })},
      {"train.epsilon", number_setter<double>([](RunConfig& c) -> auto& { return c.train.epsilon; })},
      {"train.regressor_lr_scale", number_setter<double>([](RunConfig& c) -> auto& { return c.train.regressor_lr_scale; })},
      {"loss.alpha", number_setter<double>([](RunConfig& c) -> auto& { return c.train.hyper.alpha; })},
      {"loss.lambda1", number_setter<double>([](RunConfig& c) -> auto& { return c.train.hyper.lambda1; })},
      {"loss.lambda2", number_setter<double>([](RunConfig& c) -> auto& { return c.train.hyper.lambda2; })},
      {"loss.lambda3", number_setter<double>([](RunConfig& c) -> auto& { return c.train.hyper.lambda3; })},
      {"model.stage_channels", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.model.stage_channels = parse_array<int, kStages>(k, v);
       }},
      {"model.convs_per_stage", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.model.convs_per_stage = parse_array<int, kStages>(k, v);
       }},
      {"model.feature_dim", number_setter<int>([](RunConfig& c) -> auto& { return c.train.model.feature_dim; })},
      {"model.patch_size", number_setter<int>([](RunConfig& c) -> auto& { return c.train.model.patch_size; })},
  };
  return s;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::stringstream ss(text);
  std::string line, section;
  int n = 0;
  while (std::getline(ss, line)) {
    ++n;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) throw ParseError("malformed section header", n);
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", n);
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", n);
    const std::string full = section.empty() ? key : section + "." + key;
    if (kv.count(full)) throw ParseError("duplicate key '" + full + "'", n);
    kv[full] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues load_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

RunConfig apply_key_values(RunConfig base, const KeyValues& kv) {
  if (auto it = kv.find("model.preset"); it != kv.end()) {
    const int k = base.train.model.num_classes;
    if (it->second == "default")
      base.train.model = ModelConfig{};
    else if (it->second == "compact")
      base.train.model = ModelConfig::compact(k);
    else if (it->second == "tiny")
      base.train.model = ModelConfig::tiny(k);
    else
      throw ConfigError("unknown model preset '" + it->second + "'");
    base.train.model.num_classes = k;
  }
  const auto& s = setters();
  for (const auto& [key, value] : kv) {
    if (key == "model.preset") continue;
    const auto it = s.find(key);
    if (it == s.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(base, key, value);
  }
  return base;
}

std::string dump_run_config(const RunConfig& c) {
  const TrainConfig& t = c.train;
  std::ostringstream os;
  os << "[data]\n"
     << "manifest = " << c.manifest << "\n"
     << "split = " << join(c.split) << "\n"
     << "split_seed = " << c.split_seed << "\n\n"
     << "[train]\n"
     << "learning_rate = " << num(t.learning_rate) << "\n"
     << "weight_decay = " << num(t.weight_decay) << "\n"
     << "batch_triplets = " << t.batch_triplets << "\n"
     << "patches_per_image = " << t.patches_per_image << "\n"
     << "max_epochs = " << t.max_epochs << "\n"
     << "seed = " << t.seed << "\n"
     << "eval_every = " << t.eval_every << "\n"
     << "early_stop_patience = " << t.early_stop_patience << "\n"
     << "beta1 = " << num(t.beta1) << "\n"
     << "beta2 = " << num(t.beta2) << "\n"
     << "epsilon = " << num(t.epsilon) << "\n"
     << "regressor_lr_scale = " << num(t.regressor_lr_scale) << "\n\n"
     << "[loss]\n"
     << "alpha = " << num(t.hyper.alpha) << "\n"
     << "lambda1 = " << num(t.hyper.lambda1) << "\n"
     << "lambda2 = " << num(t.hyper.lambda2) << "\n"
     << "lambda3 = " << num(t.hyper.lambda3) << "\n\n"
     << "[model]\n"
     << "stage_channels = " << join(t.model.stage_channels) << "\n"
     << "convs_per_stage = " << join(t.model.convs_per_stage) << "\n"
     << "feature_dim = " << t.model.feature_dim << "\n"
     << "patch_size = " << t.model.patch_size << "\n";
  return os.str();
}

}  // namespace sciq
