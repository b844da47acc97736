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

#include "sciq/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "sciq/checkpoint.hpp"
#include "sciq/config.hpp"
#include "sciq/evaluation.hpp"
#include "sciq/gradcheck.hpp"
#include "sciq/json_io.hpp"
#include "sciq/synth.hpp"
#include "sciq/training.hpp"
#include "sciq/triplet.hpp"

namespace sciq {

namespace fs = std::filesystem;

namespace {

/// Bad invocation: reported with exit status 2.
class UsageError : public Error {
  using Error::Error;
};

fs::path output_root() {
  const char* env = std::getenv(kOutputRootEnv);
  return env && *env ? fs::path(env) : fs::path("runs");
}

fs::path run_dir(const std::string& explicit_dir, const std::string& name) {
  return explicit_dir.empty() ? output_root() / name : fs::path(explicit_dir);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os << text;
  os.flush();
  if (!os) throw IoError("cannot write " + path.string());
}

// Timestamps live only here so that every other output is reproducible.
void write_meta(const fs::path& dir, const std::string& command, const std::vector<std::string>& args) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::ostringstream ts;
  ts << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
  write_text(dir / "meta.json", Json{{"command", command}, {"args", args}, {"created", ts.str()}}.dump(2) + "\n");
}

std::string echo(const std::vector<std::pair<std::string, std::string>>& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw UsageError(std::string("missing ") + what);
  if (!fs::is_regular_file(path)) throw UsageError(std::string(what) + " not found: " + path);
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

// Turns leftover `--section.key value` / `--section.key=value` tokens into
// config overrides.
KeyValues overrides_from(const std::vector<std::string>& extras) {
  KeyValues kv;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& t = extras[i];
    if (t.rfind("--", 0) != 0 || t.size() < 3) throw UsageError("unexpected argument '" + t + "'");
    std::string key = t.substr(2), value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else {
      if (i + 1 >= extras.size()) throw UsageError("override --" + key + " needs a value");
      value = extras[++i];
    }
    if (key.find('.') == std::string::npos) throw UsageError("unknown option --" + key);
    kv[key] = value;
  }
  return kv;
}

void render_histograms(const StatsReport& rep, const fs::path& dir) {
  const std::pair<const char*, const Histogram StatsGroup::*> kinds[] = {
      {"mu", &StatsGroup::mu}, {"sigma", &StatsGroup::sigma}, {"phi", &StatsGroup::phi}};
  for (const auto& [name, member] : kinds) {
    const Histogram& p = rep.pristine.*member;
    const Histogram& d = rep.distorted.*member;
    const int bins = p.spec.bins, bw = 8, h = 160;
    Image img;
    for (auto& plane : img.planes) plane = Eigen::ArrayXXf::Ones(h, bins * bw);
    // Normalized bin frequencies; pristine in blue, distorted in red.
    const auto draw = [&](const Histogram& hist, int channel_off) {
      std::size_t total = hist.underflow + hist.overflow;
      for (auto c : hist.counts) total += c;
      if (total == 0) return;
      double peak = 0;
      for (auto c : hist.counts) peak = std::max(peak, static_cast<double>(c) / static_cast<double>(total));
      for (int b = 0; b < bins; ++b) {
        const double f = static_cast<double>(hist.counts[static_cast<std::size_t>(b)]) / static_cast<double>(total);
        const int bar = peak > 0 ? static_cast<int>(f / peak * (h - 4)) : 0;
        for (int y = h - bar; y < h; ++y)
          for (int x = b * bw + 1; x < (b + 1) * bw - 1; ++x) img.planes[static_cast<std::size_t>(channel_off)](y, x) *= 0.45f;
      }
    };
    draw(p, 0);  // darkens red and green below -> blue bars
    draw(d, 2);
    save_image(img, dir / (std::string("hist_") + name + ".png"));
  }
}

int cmd_synth(const SynthOptions& so, const std::string& types, const std::string& out_dir,
              const std::vector<std::string>& args, std::ostream& out) {
  SynthOptions opts = so;
  if (!types.empty()) {
    opts.types.clear();
    try {
      for (const auto& t : split_csv(types)) opts.types.push_back(distortion_from_string(t));
    } catch (const ConfigError& e) {
      throw UsageError(e.what());
    }
  }
  const fs::path dir = run_dir(out_dir, "synth-" + opts.name + "-s" + std::to_string(opts.seed));
  const DatasetManifest m = write_synthetic_corpus(dir, opts);
  std::string type_list;
  for (auto t : opts.types) type_list += (type_list.empty() ? "" : ",") + std::string(to_string(t));
  write_text(dir / "synth.conf", echo({{"refs", std::to_string(opts.refs)},
                                       {"types", type_list},
                                       {"levels", std::to_string(opts.levels)},
                                       {"width", std::to_string(opts.width)},
                                       {"height", std::to_string(opts.height)},
                                       {"seed", std::to_string(opts.seed)},
                                       {"name", opts.name}}));
  write_meta(dir, "synth", args);
  out << "wrote " << m.records.size() << " records (" << m.distorted_count() << " distorted) to "
      << (dir / "manifest.csv").string() << "\n";
  return kExitOk;
}

int cmd_train(const std::string& config_path, const std::string& manifest, const std::string& out_dir,
              const std::optional<std::uint64_t>& seed, int workers, const std::vector<std::string>& extras,
              const std::vector<std::string>& args, std::ostream& out) {
  KeyValues kv;
  if (!config_path.empty()) {
    require_file(config_path, "config file");
    kv = load_key_values(config_path);
  }
  for (const auto& [k, v] : overrides_from(extras)) kv[k] = v;
  if (!manifest.empty()) kv["data.manifest"] = manifest;
  if (seed) kv["train.seed"] = std::to_string(*seed);
  RunConfig rc;
  try {
    rc = apply_key_values(rc, kv);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  require_file(rc.manifest, "manifest (data.manifest)");

  const DatasetManifest full = normalize_scores(load_manifest(rc.manifest));
  const ManifestSplit split = split_by_reference(full, rc.split, rc.split_seed);
  rc.train.model.num_classes = LabelMap::from_manifest(split.train).size();

  const fs::path dir = run_dir(out_dir, "train-" + full.name + "-s" + std::to_string(rc.train.seed));
  fs::create_directories(dir);
  write_text(dir / "config.conf", dump_run_config(rc));
  write_meta(dir, "train", args);
  save_manifest(split.train, dir / "train.csv");
  save_manifest(split.val, dir / "val.csv");
  save_manifest(split.test, dir / "test.csv");

  TrainOutput to;
  to.dir = dir;
  to.progress = [&out](const std::string& line) { out << line << std::endl; };
  to.workers = workers;
  const TrainResult res = train(split.train, split.val, rc.train, to);

  EvalOptions eo;
  eo.train_dataset = split.train.name;
  eo.workers = workers;
  const EvalReport rep = evaluate(res.best, split.test, eo);
  write_text(dir / "test_report.json", report_json(rep));
  write_text(dir / "test_predictions.csv", report_csv(rep));
  out << "best epoch " << res.history.best_epoch << " val srcc " << fmt(res.history.best_srcc) << "; test srcc "
      << fmt(rep.overall.srcc) << " plcc " << fmt(rep.overall.plcc) << " rmse " << fmt(rep.overall.rmse) << "\n"
      << "run directory: " << dir.string() << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint, manifest, out, train_name;
  bool no_group = false, logistic = false, render = false;
  int bins = 40;
  int workers = 1;
};

std::pair<Checkpoint, DatasetManifest> load_inputs(const EvalArgs& a) {
  require_file(a.checkpoint, "checkpoint");
  require_file(a.manifest, "manifest");
  Checkpoint ck = load_checkpoint(a.checkpoint);
  DatasetManifest m = normalize_scores(load_manifest(a.manifest));
  return {std::move(ck), std::move(m)};
}

int cmd_eval(const EvalArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  const auto [ck, m] = load_inputs(a);
  EvalOptions eo;
  eo.group_by_type = !a.no_group;
  eo.logistic = a.logistic;
  eo.train_dataset = a.train_name.empty() ? ck.meta.dataset : a.train_name;
  eo.workers = a.workers;
  const EvalReport rep = evaluate(ck.model, m, eo);
  const fs::path dir = run_dir(a.out, "eval-" + m.name);
  fs::create_directories(dir);
  write_text(dir / "eval.conf", echo({{"checkpoint", fs::absolute(a.checkpoint).string()},
                                      {"manifest", fs::absolute(a.manifest).string()},
                                      {"group_by_type", eo.group_by_type ? "true" : "false"},
                                      {"logistic", eo.logistic ? "true" : "false"},
                                      {"train_dataset", eo.train_dataset}}));
  write_meta(dir, "eval", args);
  write_text(dir / "report.json", report_json(rep));
  write_text(dir / "predictions.csv", report_csv(rep));
  out << rep.label << ": srcc " << fmt(rep.overall.srcc) << " plcc " << fmt(rep.overall.plcc) << " rmse "
      << fmt(rep.overall.rmse) << " over " << rep.overall.count << " images";
  if (!rep.skipped.empty()) out << " (" << rep.skipped.size() << " skipped)";
  out << "\n";
  for (const auto& [type, s] : rep.per_type)
    out << "  " << type << ": srcc " << fmt(s.srcc) << " plcc " << fmt(s.plcc) << " rmse " << fmt(s.rmse)
        << " (" << s.count << ")\n";
  return kExitOk;
}

int cmd_stats(const EvalArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  if (a.bins < 1) throw UsageError("--bins must be positive");
  const auto [ck, m] = load_inputs(a);
  StatsConfig sc;
  sc.mu.bins = sc.sigma.bins = sc.phi.bins = a.bins;
  sc.workers = a.workers;
  const StatsReport rep = stats_report(ck.model, m, sc);
  const fs::path dir = run_dir(a.out, "stats-" + m.name);
  fs::create_directories(dir);
  write_text(dir / "stats.conf", echo({{"checkpoint", fs::absolute(a.checkpoint).string()},
                                       {"manifest", fs::absolute(a.manifest).string()},
                                       {"bins", std::to_string(a.bins)}}));
  write_meta(dir, "stats", args);
  write_text(dir / "stats.json", stats_json(rep));
  if (a.render) render_histograms(rep, dir);
  out << "median summed KL: pristine " << fmt(rep.pristine.median_phi_sum) << ", distorted "
      << fmt(rep.distorted.median_phi_sum) << "\n";
  for (const auto& [level, med] : rep.median_phi_sum_by_level) out << "  level " << level << ": " << fmt(med) << "\n";
  return kExitOk;
}

struct GradArgs {
  std::uint64_t seed = 0;
  int max_params = 200;
  double tolerance = 1e-4;
  std::string out;
};

int cmd_check_grads(const GradArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  const fs::path dir = run_dir(a.out, "check-grads-s" + std::to_string(a.seed));
  SynthOptions so;
  so.refs = 3;
  so.types = {Distortion::kGaussianNoise, Distortion::kGaussianBlur, Distortion::kContrastChange};
  so.levels = 2;
  so.width = so.height = 64;
  so.seed = a.seed;
  so.name = "probe";
  const DatasetManifest m = normalize_scores(write_synthetic_corpus(dir / "probe", so));
  ImageCache cache;
  const LabelMap labels = LabelMap::from_manifest(m);
  const TripletBatch batch = sample_triplet_batch(m, cache, labels, {2, 4}, a.seed);
  const auto model = Model<double>::initialized(ModelConfig::tiny(labels.size()), a.seed);
  GradCheckOptions go;
  go.max_params = a.max_params;
  go.tolerance = a.tolerance;
  go.seed = a.seed;
  const GradCheckReport rep = check_model_gradients(model, batch, ObjectiveOptions{}, go);

  Json entries = Json::array();
  for (const auto& e : rep.entries)
    entries.push_back({{"param", e.param},
                       {"index", e.index},
                       {"analytic", e.analytic},
                       {"numeric", e.numeric},
                       {"rel_error", e.rel_error},
                       {"skipped", e.skipped}});
  write_text(dir / "check-grads.conf", echo({{"seed", std::to_string(a.seed)},
                                             {"max_params", std::to_string(a.max_params)},
                                             {"tolerance", fmt(a.tolerance)}}));
  write_meta(dir, "check-grads", args);
  write_text(dir / "gradcheck.json", Json{{"checked", rep.checked},
                                          {"skipped", rep.skipped},
                                          {"max_rel_error", rep.max_rel_error},
                                          {"tolerance", rep.tolerance},
                                          {"passed", rep.passed()},
                                          {"entries", entries}}
                                             .dump(2) +
                                         "\n");
  out << (rep.passed() ? "PASS" : "FAIL") << ": " << rep.checked << " checked, " << rep.skipped
      << " skipped, max relative error " << std::scientific << std::setprecision(3) << rep.max_rel_error
      << std::defaultfloat << " (tolerance " << a.tolerance << ")\n";
  return rep.passed() ? kExitOk : kExitRuntime;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Screen-content image quality: synthesis, training and evaluation", "sciq"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  SynthOptions so;
  std::string synth_types, synth_out;
  auto* synth = app.add_subcommand("synth", "Write a synthetic screen-content corpus and manifest");
  synth->add_option("--refs", so.refs, "Number of pristine images")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--types", synth_types, "Comma-separated distortion types (GN,GB,MB,CC,BLOCK); default all");
  synth->add_option("--levels", so.levels, "Levels per type")->capture_default_str()->check(CLI::Range(1, kMaxLevels));
  synth->add_option("--width", so.width, "Image width")->capture_default_str();
  synth->add_option("--height", so.height, "Image height")->capture_default_str();
  synth->add_option("--seed", so.seed, "Random seed")->capture_default_str();
  synth->add_option("--name", so.name, "Dataset name")->capture_default_str();
  synth->add_option("--out", synth_out, "Output directory (default: $" + std::string(kOutputRootEnv) + "/synth-...)");

  std::string config_path, train_manifest, train_out;
  std::optional<std::uint64_t> train_seed;
  auto* trainc = app.add_subcommand(
      "train", "Train on a manifest split by reference; any config key can be overridden with --section.key value");
  trainc->add_option("--config", config_path, "Key-value config file");
  trainc->add_option("--manifest", train_manifest, "Dataset manifest (overrides data.manifest)");
  trainc->add_option("--seed", train_seed, "Training seed (overrides train.seed)");
  trainc->add_option("--out", train_out, "Run directory");
  int train_workers = 1;
  trainc->add_option("--workers", train_workers, "Threads for validation and test prediction")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  trainc->allow_extras();

  EvalArgs ea;
  auto* evalc = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest");
  evalc->add_option("--checkpoint", ea.checkpoint, "Checkpoint file")->required();
  evalc->add_option("--manifest", ea.manifest, "Dataset manifest");
  evalc->add_option("--out", ea.out, "Report directory");
  evalc->add_option("--train-name", ea.train_name, "Training dataset name for the report label");
  evalc->add_flag("--no-group", ea.no_group, "Skip the per-distortion-type breakdown");
  evalc->add_flag("--logistic", ea.logistic, "Also report metrics after a 4-parameter logistic mapping");
  evalc->add_option("--workers", ea.workers, "Prediction threads")->capture_default_str()->check(CLI::PositiveNumber);

  EvalArgs sa;
  auto* statsc = app.add_subcommand("stats", "Distortion-feature statistics and histograms");
  statsc->add_option("--checkpoint", sa.checkpoint, "Checkpoint file")->required();
  statsc->add_option("--manifest", sa.manifest, "Dataset manifest");
  statsc->add_option("--out", sa.out, "Report directory");
  statsc->add_option("--bins", sa.bins, "Histogram bins")->capture_default_str();
  statsc->add_flag("--render", sa.render, "Also write histogram PNGs");
  statsc->add_option("--workers", sa.workers, "Prediction threads")->capture_default_str()->check(CLI::PositiveNumber);

  GradArgs ga;
  auto* gradc = app.add_subcommand("check-grads", "Finite-difference check of the training objective on a tiny model");
  gradc->add_option("--seed", ga.seed, "Random seed")->capture_default_str();
  gradc->add_option("--max-params", ga.max_params, "Parameters to probe")->capture_default_str()->check(CLI::PositiveNumber);
  gradc->add_option("--tolerance", ga.tolerance, "Maximum relative error")->capture_default_str();
  gradc->add_option("--out", ga.out, "Report directory");

  std::vector<std::string> argv(args.rbegin(), args.rend());  // CLI11 consumes a reversed vector
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (e.get_exit_code() == 0) return kExitOk;
    err << "run 'sciq --help' for usage\n";
    return kExitUsage;
  }

  try {
    if (*synth) return cmd_synth(so, synth_types, synth_out, args, out);
    if (*trainc) return cmd_train(config_path, train_manifest, train_out, train_seed, train_workers, trainc->remaining(), args, out);
    if (*evalc) return cmd_eval(ea, args, out);
    if (*statsc) return cmd_stats(sa, args, out);
    if (*gradc) return cmd_check_grads(ga, args, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace sciq
