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

#include "sciq/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "sciq/core.hpp"
#include "sciq/rng.hpp"

namespace sciq {

namespace {

constexpr const char* kHeader = "image_path,reference_id,distortion_type,distortion_level,score";

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line, int line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError("unterminated quote", line_no);
  fields.push_back(trim(cur));
  return fields;
}

std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_score(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

const char* to_string(ScorePolarity p) {
  return p == ScorePolarity::kQualityMos ? "quality_mos" : "impairment_dmos";
}

ScorePolarity polarity_from_string(const std::string& s) {
  if (s == "quality_mos" || s == "mos") return ScorePolarity::kQualityMos;
  if (s == "impairment_dmos" || s == "dmos") return ScorePolarity::kImpairmentDmos;
  throw ConfigError("unknown score polarity '" + s + "'");
}

std::filesystem::path DatasetManifest::resolve(const ImageRecord& r) const {
  std::filesystem::path p(r.image_path);
  return p.is_absolute() ? p : base_dir / p;
}

std::optional<std::size_t> DatasetManifest::pristine_index(const std::string& reference_id) const {
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].pristine() && records[i].reference_id == reference_id) return i;
  return std::nullopt;
}

std::vector<std::string> DatasetManifest::reference_ids() const {
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.reference_id);
  return {ids.begin(), ids.end()};
}

std::vector<std::string> DatasetManifest::distortion_types() const {
  std::set<std::string> types;
  for (const auto& r : records)
    if (!r.pristine()) types.insert(r.distortion_type);
  return {types.begin(), types.end()};
}

std::size_t DatasetManifest::distorted_count() const {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(), [](const ImageRecord& r) { return !r.pristine(); }));
}

void DatasetManifest::validate() const {
  std::set<std::string> pristine_ids;
  for (const auto& r : records) {
    if ((r.distortion_level == 0) != (r.distortion_type == kPristine))
      throw IntegrityError("record " + r.image_path +
                           ": distortion_level 0 must coincide with PRISTINE");
    if (r.distortion_level < 0)
      throw IntegrityError("record " + r.image_path + ": negative distortion level");
    if (r.pristine() && !pristine_ids.insert(r.reference_id).second)
      throw IntegrityError("duplicate pristine record for reference '" + r.reference_id + "'");
    if (!r.pristine() && !r.score)
      throw IntegrityError("distorted record " + r.image_path + " has no score");
  }
  for (const auto& r : records)
    if (!r.pristine() && !pristine_ids.count(r.reference_id))
      throw IntegrityError("record " + r.image_path + " references unknown reference_id '" +
                           r.reference_id + "'");
}

DatasetManifest parse_manifest(const std::string& text, const std::string& name,
                               const std::filesystem::path& base_dir) {
  DatasetManifest m;
  m.name = name;
  m.base_dir = base_dir;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      if (have_header) continue;
      const auto colon = t.find(':');
      if (colon == std::string::npos) continue;
      const std::string key = trim(t.substr(1, colon - 1));
      const std::string value = trim(t.substr(colon + 1));
      if (key == "name") {
        m.name = value;
      } else if (key == "polarity") {
        try {
          m.score_polarity = polarity_from_string(value);
        } catch (const ConfigError& e) {
          throw ParseError(e.what(), line_no);
        }
      } else if (key == "normalized") {
        if (value != "true" && value != "false") throw ParseError("normalized must be true or false", line_no);
        m.normalized = value == "true";
      }
      continue;
    }
    if (!have_header) {
      if (t != kHeader) throw ParseError(std::string("expected header '") + kHeader + "'", line_no);
      have_header = true;
      continue;
    }
    const auto f = split_csv(t, line_no);
    if (f.size() != 5)
      throw ParseError("expected 5 fields, got " + std::to_string(f.size()), line_no);
    ImageRecord r;
    r.image_path = f[0];
    r.reference_id = f[1];
    r.distortion_type = f[2];
    if (r.image_path.empty() || r.reference_id.empty() || r.distortion_type.empty())
      throw ParseError("empty path, reference_id or distortion_type", line_no);
    try {
      std::size_t pos = 0;
      r.distortion_level = std::stoi(f[3], &pos);
      if (pos != f[3].size()) throw std::invalid_argument(f[3]);
    } catch (const std::exception&) {
      throw ParseError("bad distortion_level '" + f[3] + "'", line_no);
    }
    if (r.distortion_level < 0) throw ParseError("negative distortion_level", line_no);
    if ((r.distortion_level == 0) != (r.distortion_type == kPristine))
      throw ParseError("PRISTINE rows must have level 0 and vice versa", line_no);
    if (r.pristine()) {
      if (!f[4].empty()) throw ParseError("pristine rows must leave score empty", line_no);
    } else {
      try {
        std::size_t pos = 0;
        const double s = std::stod(f[4], &pos);
        if (pos != f[4].size() || !std::isfinite(s)) throw std::invalid_argument(f[4]);
        r.score = s;
      } catch (const std::exception&) {
        throw ParseError("bad score '" + f[4] + "'", line_no);
      }
    }
    m.records.push_back(std::move(r));
  }
  if (!have_header) throw ParseError("empty manifest (no header)", line_no);
  if (m.records.empty()) throw ParseError("manifest has no records", line_no);
  m.validate();
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.stem().string(),
                        std::filesystem::absolute(path).parent_path());
}

std::string format_manifest(const DatasetManifest& m, const std::filesystem::path& target_dir) {
  std::ostringstream os;
  os << "# name: " << m.name << "\n";
  os << "# polarity: " << to_string(m.score_polarity) << "\n";
  if (m.normalized) os << "# normalized: true\n";
  os << kHeader << "\n";
  for (const auto& r : m.records) {
    std::filesystem::path p = m.resolve(r);
    if (!target_dir.empty()) p = std::filesystem::relative(p, target_dir);
    os << quote_csv(p.generic_string()) << ',' << quote_csv(r.reference_id) << ','
       << quote_csv(r.distortion_type) << ',' << r.distortion_level << ','
       << (r.score ? format_score(*r.score) : "") << "\n";
  }
  return os.str();
}

void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  const auto dir = std::filesystem::absolute(path).parent_path();
  std::filesystem::create_directories(dir);
  std::ofstream os(path, std::ios::binary);
  os << format_manifest(m, dir);
  if (!os) throw IoError("cannot write manifest " + path.string());
}

DatasetManifest normalize_scores(const DatasetManifest& manifest) {
  DatasetManifest out = manifest;
  if (manifest.normalized) return out;
  const double sign = manifest.score_polarity == ScorePolarity::kQualityMos ? -1.0 : 1.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& r : out.records) {
    if (!r.score) continue;
    lo = std::min(lo, sign * *r.score);
    hi = std::max(hi, sign * *r.score);
  }
  if (!(hi > lo)) throw ConfigError("degenerate score range: need at least two distinct scores");
  for (auto& r : out.records) {
    if (!r.score) continue;
    const double v = 100.0 * (sign * *r.score - lo) / (hi - lo);
    r.score = std::clamp(v, 0.0, 100.0);
  }
  out.score_polarity = ScorePolarity::kImpairmentDmos;
  out.normalized = true;
  return out;
}

std::array<std::size_t, 3> split_counts(std::size_t n, const std::array<double, 3>& ratios) {
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r >= 0.0)) throw ConfigError("split ratios must be non-negative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
  std::array<std::size_t, 3> counts{};
  std::size_t used = 0;
  for (int k = 0; k < 3; ++k) {
    counts[k] = static_cast<std::size_t>(std::floor(ratios[k] * static_cast<double>(n) + 1e-9));
    used += counts[k];
  }
  counts[0] += n - used;
  return counts;
}

ManifestSplit split_by_reference(const DatasetManifest& manifest,
                                 const std::array<double, 3>& ratios, std::uint64_t seed) {
  auto ids = manifest.reference_ids();
  const auto counts = split_counts(ids.size(), ratios);
  if (ids.size() < 5)
    throw SampleError("need at least 5 distinct reference ids to split, got " +
                      std::to_string(ids.size()));
  Rng rng(derive_seed(seed, 0x5b117));
  rng.shuffle(ids);
  std::map<std::string, int> assign;
  std::size_t k = 0;
  for (int s = 0; s < 3; ++s)
    for (std::size_t j = 0; j < counts[s]; ++j) assign[ids[k++]] = s;

  ManifestSplit out;
  DatasetManifest* parts[3] = {&out.train, &out.val, &out.test};
  for (auto* p : parts) {
    p->name = manifest.name;
    p->score_polarity = manifest.score_polarity;
    p->base_dir = manifest.base_dir;
    p->normalized = manifest.normalized;
  }
  for (const auto& r : manifest.records) parts[assign.at(r.reference_id)]->records.push_back(r);
  return out;
}

LabelMap::LabelMap(std::vector<std::string> labels) : labels_(std::move(labels)) {
  std::sort(labels_.begin(), labels_.end());
  labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());
  for (std::size_t i = 0; i < labels_.size(); ++i) lookup_[labels_[i]] = static_cast<int>(i);
}

LabelMap LabelMap::from_manifest(const DatasetManifest& manifest) {
  return LabelMap(manifest.distortion_types());
}

int LabelMap::index(const std::string& label) const {
  const auto it = lookup_.find(label);
  if (it == lookup_.end()) throw ConfigError("unknown distortion type '" + label + "'");
  return it->second;
}

}  // namespace sciq
