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
#include <set>
#include <sstream>

#include "sciq/image.hpp"
#include "sciq/manifest.hpp"
#include "sciq/patches.hpp"
#include "sciq/rng.hpp"
#include "sciq/synth.hpp"
#include "sciq/triplet.hpp"

using namespace sciq;
namespace fs = std::filesystem;

namespace {

const char* kHeader = "image_path,reference_id,distortion_type,distortion_level,score\n";

std::string manifest_text(int refs, int types, int levels, double base = 10.0) {
  std::ostringstream os;
  os << kHeader;
  for (int r = 0; r < refs; ++r) {
    os << "ref" << r << ".png,r" << r << ",PRISTINE,0,\n";
    for (int t = 0; t < types; ++t)
      for (int l = 1; l <= levels; ++l)
        os << "d" << r << "_" << t << "_" << l << ".png,r" << r << ",T" << t << "," << l << ","
           << base + t + 10 * l << "\n";
  }
  return os.str();
}

Image noise_image(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  Image img(w, h);
  for (auto& p : img.planes)
    for (Index i = 0; i < p.size(); ++i) p(i) = static_cast<float>(rng.uniform());
  return img;
}

// Shared small corpus for sampling tests.
const DatasetManifest& corpus() {
  static const DatasetManifest m = [] {
    SynthOptions so;
    so.refs = 4;
    so.types = {Distortion::kGaussianNoise, Distortion::kGaussianBlur};
    so.levels = 2;
    so.width = 96;
    so.height = 64;
    so.seed = 3;
    return write_synthetic_corpus(fs::temp_directory_path() / "sciq_test_pipeline_corpus", so);
  }();
  return m;
}

}  // namespace

TEST_CASE("manifest in the SIQAD layout") {
  const auto m = parse_manifest(manifest_text(20, 7, 7), "siqad", ".");
  CHECK(m.records.size() == 1000);
  CHECK(m.distorted_count() == 980);
  CHECK(m.reference_ids().size() == 20);
  CHECK(m.distortion_types().size() == 7);
  CHECK(m.name == "siqad");
}

TEST_CASE("manifest errors") {
  CHECK_THROWS_AS(parse_manifest("", "x", "."), ParseError);
  CHECK_THROWS_AS(parse_manifest(std::string(kHeader) + "a.png,r1,GN,1,30\n", "x", "."), IntegrityError);
  try {
    parse_manifest(std::string(kHeader) + "r.png,r1,PRISTINE,0,\nd.png,r1,GN,oops,3\n", "x", ".");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).rfind("line 3:", 0) == 0);
  }
  // Level and type must agree on pristine-ness.
  CHECK_THROWS(parse_manifest(std::string(kHeader) + "r.png,r1,PRISTINE,2,\n", "x", "."));
  CHECK_THROWS(parse_manifest(std::string(kHeader) + "r.png,r1,GN,0,\n", "x", "."));
}

TEST_CASE("manifest metadata and round trip") {
  const std::string text = "# name: demo\n# polarity: quality_mos\n" + manifest_text(3, 2, 2);
  const auto m = parse_manifest(text, "ignored", "/data");
  CHECK(m.name == "demo");
  CHECK(m.score_polarity == ScorePolarity::kQualityMos);
  const auto back = parse_manifest(format_manifest(m, "/data"), "other", "/data");
  REQUIRE(back.records.size() == m.records.size());
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    CHECK(back.records[i].image_path == m.records[i].image_path);
    CHECK(back.records[i].reference_id == m.records[i].reference_id);
    CHECK(back.records[i].distortion_type == m.records[i].distortion_type);
    CHECK(back.records[i].distortion_level == m.records[i].distortion_level);
    CHECK(back.records[i].score == m.records[i].score);
  }
  CHECK(back.name == "demo");
}

TEST_CASE("manifest file round trip keeps paths resolvable") {
  const fs::path dir = fs::temp_directory_path() / "sciq_test_manifest_rt";
  fs::create_directories(dir / "sub");
  const auto m = parse_manifest(manifest_text(2, 1, 1), "rt", dir);
  save_manifest(m, dir / "sub" / "copy.csv");
  const auto back = load_manifest(dir / "sub" / "copy.csv");
  CHECK(back.name == "rt");
  CHECK(fs::weakly_canonical(back.resolve(back.records[1])) == fs::weakly_canonical(m.resolve(m.records[1])));
}

TEST_CASE("normalize_scores examples") {
  const std::string dmos = std::string(kHeader) + "r.png,r,PRISTINE,0,\na,r,GN,1,20\nb,r,GN,2,60\nc,r,GN,3,80\n";
  const auto n = normalize_scores(parse_manifest(dmos, "x", "."));
  CHECK(*n.records[1].score == 0.0);
  CHECK(*n.records[2].score == doctest::Approx(66.667).epsilon(1e-4));
  CHECK(*n.records[3].score == 100.0);
  CHECK(n.normalized);
  CHECK(normalize_scores(n).records[2].score == n.records[2].score);

  const std::string mos = "# polarity: quality_mos\n" + std::string(kHeader) + "r.png,r,PRISTINE,0,\na,r,GN,1,1\nb,r,GN,2,5\n";
  const auto q = normalize_scores(parse_manifest(mos, "x", "."));
  CHECK(*q.records[1].score == 100.0);
  CHECK(*q.records[2].score == 0.0);
  CHECK(q.score_polarity == ScorePolarity::kImpairmentDmos);

  const std::string flat = std::string(kHeader) + "r.png,r,PRISTINE,0,\na,r,GN,1,42\nb,r,GN,2,42\n";
  CHECK_THROWS_AS(normalize_scores(parse_manifest(flat, "x", ".")), ConfigError);
}

TEST_CASE("normalize_scores preserves the score order") {
  const auto m = parse_manifest(manifest_text(3, 3, 4, -7.5), "x", ".");
  const auto n = normalize_scores(m);
  for (std::size_t i = 0; i < m.records.size(); ++i)
    for (std::size_t j = 0; j < m.records.size(); ++j) {
      if (!m.records[i].score || !m.records[j].score) continue;
      CHECK((*m.records[i].score < *m.records[j].score) == (*n.records[i].score < *n.records[j].score));
      CHECK(*n.records[i].score >= 0.0);
      CHECK(*n.records[i].score <= 100.0);
    }
}

TEST_CASE("split counts") {
  CHECK(split_counts(20, {0.6, 0.2, 0.2}) == std::array<std::size_t, 3>{12, 4, 4});
  CHECK(split_counts(5, {0.6, 0.2, 0.2}) == std::array<std::size_t, 3>{3, 1, 1});
  CHECK(split_counts(8, {0.6, 0.2, 0.2}) == std::array<std::size_t, 3>{6, 1, 1});
  CHECK_THROWS_AS(split_counts(10, {0.6, 0.2, 0.3}), ConfigError);
  // Enumerate the floor-then-leftovers-to-train rule.
  for (std::size_t n = 5; n < 60; ++n) {
    const auto c = split_counts(n, {0.6, 0.2, 0.2});
    CHECK(c[0] + c[1] + c[2] == n);
    CHECK(c[1] == static_cast<std::size_t>(std::floor(0.2 * static_cast<double>(n) + 1e-9)));
    CHECK(c[2] == c[1]);
  }
}

TEST_CASE("split_by_reference partitions references") {
  const auto m = parse_manifest(manifest_text(20, 2, 2), "x", ".");
  const auto s = split_by_reference(m, {0.6, 0.2, 0.2}, 7);
  CHECK(s.train.reference_ids().size() == 12);
  CHECK(s.val.reference_ids().size() == 4);
  CHECK(s.test.reference_ids().size() == 4);
  CHECK(s.train.records.size() + s.val.records.size() + s.test.records.size() == m.records.size());
  const auto again = split_by_reference(m, {0.6, 0.2, 0.2}, 7);
  CHECK(again.test.reference_ids() == s.test.reference_ids());
  const auto five = split_by_reference(parse_manifest(manifest_text(5, 1, 1), "x", "."), {0.6, 0.2, 0.2}, 1);
  CHECK(five.train.reference_ids().size() == 3);
  CHECK(five.val.reference_ids().size() == 1);
  CHECK(five.test.reference_ids().size() == 1);
  CHECK_THROWS_AS(split_by_reference(parse_manifest(manifest_text(4, 1, 1), "x", "."), {0.6, 0.2, 0.2}, 1),
                  SampleError);
  CHECK_THROWS_AS(split_by_reference(m, {0.5, 0.2, 0.2}, 1), ConfigError);
}

TEST_CASE("split disjointness over many seeds") {
  const auto m = parse_manifest(manifest_text(13, 1, 2), "x", ".");
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto s = split_by_reference(m, {0.6, 0.2, 0.2}, seed);
    std::set<std::string> seen;
    std::size_t total = 0;
    for (const auto* part : {&s.train, &s.val, &s.test}) {
      const auto ids = part->reference_ids();
      total += ids.size();
      seen.insert(ids.begin(), ids.end());
      for (const auto& r : part->records) CHECK(std::binary_search(ids.begin(), ids.end(), r.reference_id));
    }
    CHECK(seen.size() == total);
    CHECK(total == 13);
  }
}

TEST_CASE("patch extraction counts and errors") {
  CHECK(extract_patches(Image(64, 64)).size() == 4);
  CHECK(extract_patches(Image(70, 70)).size() == 4);
  CHECK(extract_patches(Image(100, 64)).size() == 6);
  CHECK_THROWS_AS(extract_patches(Image(64, 31)), SizeError);
  CHECK_THROWS_AS(extract_patches(Image(31, 64)), SizeError);
}

TEST_CASE("patches reassemble the cropped region bit-exactly") {
  const Image img = noise_image(133, 71, 5);
  const auto patches = extract_patches(img);
  const auto grid = patch_grid(img);
  REQUIRE(grid.rows == 2);
  REQUIRE(grid.cols == 4);
  Image re(grid.cols * kPatchSize, grid.rows * kPatchSize);
  for (int k = 0; k < grid.size(); ++k) {
    const int r = k / grid.cols, c = k % grid.cols;
    for (int ch = 0; ch < 3; ++ch)
      re.planes[ch].block(r * kPatchSize, c * kPatchSize, kPatchSize, kPatchSize) = patches[static_cast<std::size_t>(k)].planes[ch];
  }
  CHECK(re == img.crop(0, 0, grid.cols * kPatchSize, grid.rows * kPatchSize));
}

TEST_CASE("network input layout") {
  const Image img = noise_image(64, 64, 9);
  const auto patches = extract_patches(img);
  const Mat<float> x = patches_to_input<float>(patches);
  CHECK(x.rows() == 3);
  CHECK(x.cols() == 4 * 32 * 32);
  // Patch 1 is the top-right cell; pixel (y=2, x=5) inside it.
  CHECK(x(1, 1 * 1024 + 2 * 32 + 5) == img.at(1, 2, 32 + 5));
}

TEST_CASE("image files round trip") {
  const fs::path dir = fs::temp_directory_path() / "sciq_test_images";
  fs::create_directories(dir);
  const Image img = quantize8(noise_image(37, 23, 4));
  save_image(img, dir / "a.png");
  save_image(img, dir / "a.bmp");
  CHECK(load_image(dir / "a.png") == img);
  CHECK(load_image(dir / "a.bmp") == img);
  CHECK_THROWS_AS(load_image(dir / "missing.png"), IoError);
}

TEST_CASE("psnr") {
  const Image a = noise_image(16, 16, 1);
  CHECK(std::isinf(psnr(a, a)));
  Image b = a;
  for (auto& p : b.planes) p += 0.1f;
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-5));
}

TEST_CASE("synthetic screen content is deterministic and seeded") {
  const Image a = synthesize_sci(256, 256, 7);
  CHECK(a == synthesize_sci(256, 256, 7));
  CHECK(!(a == synthesize_sci(256, 256, 8)));
  for (const auto& p : a.planes) {
    CHECK(p.minCoeff() >= 0.0f);
    CHECK(p.maxCoeff() <= 1.0f);
  }
  CHECK_THROWS_AS(synthesize_sci(63, 128, 1), SizeError);
}

TEST_CASE("synthetic screen content has a multimodal histogram") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Image a = synthesize_sci(128, 128, seed);
    std::array<int, 16> hist{};
    for (int y = 0; y < a.height(); ++y)
      for (int x = 0; x < a.width(); ++x) {
        const double l = (a.at(0, y, x) + a.at(1, y, x) + a.at(2, y, x)) / 3.0;
        ++hist[static_cast<std::size_t>(std::min(15, static_cast<int>(l * 16)))];
      }
    // A mode is a bin holding >= 2% of the pixels and more than both neighbours.
    int modes = 0;
    const int floor = a.width() * a.height() / 50;
    for (int b = 0; b < 16; ++b) {
      const int left = b > 0 ? hist[static_cast<std::size_t>(b - 1)] : -1;
      const int right = b < 15 ? hist[static_cast<std::size_t>(b + 1)] : -1;
      const int h = hist[static_cast<std::size_t>(b)];
      if (h >= floor && h > left && h > right) ++modes;
    }
    CHECK(modes >= 2);
  }
}

TEST_CASE("distortion ladders grow in strength") {
  for (Distortion t : {Distortion::kGaussianNoise, Distortion::kGaussianBlur, Distortion::kMotionBlur, Distortion::kBlock})
    for (int l = 2; l <= kMaxLevels; ++l) CHECK(distortion_parameter(t, l) > distortion_parameter(t, l - 1));
  // Contrast gain departs further from 1 within each direction.
  CHECK(distortion_parameter(Distortion::kContrastChange, 1) == 0.8);
  CHECK(distortion_parameter(Distortion::kContrastChange, 3) == 0.5);
  CHECK(distortion_parameter(Distortion::kContrastChange, 5) == 1.5);
  CHECK_THROWS_AS(distortion_parameter(Distortion::kGaussianNoise, 0), ConfigError);
  CHECK_THROWS_AS(distortion_from_string("JPEG"), ConfigError);
}

TEST_CASE("noise severity lowers PSNR at every level") {
  const Image img = quantize8(synthesize_sci(128, 128, 2));
  double prev = INFINITY;
  for (int l = 1; l <= kMaxLevels; ++l) {
    const double p = psnr(img, apply_distortion(img, Distortion::kGaussianNoise, l, 9));
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("blur, motion and block severity lower PSNR") {
  const Image img = quantize8(synthesize_sci(128, 128, 4));
  for (Distortion t : {Distortion::kGaussianBlur, Distortion::kMotionBlur, Distortion::kBlock}) {
    double prev = INFINITY;
    for (int l = 1; l <= kMaxLevels; ++l) {
      const double p = psnr(img, apply_distortion(img, t, l, 0));
      CHECK(p < prev);
      prev = p;
    }
  }
}

TEST_CASE("contrast change keeps the mean within the gain bound") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Image img = synthesize_sci(96, 96, seed);
    double dev = 0;  // mean |x - 0.5|
    for (const auto& p : img.planes) dev += (p - 0.5f).abs().cast<double>().mean() / 3.0;
    for (int l = 1; l <= kMaxLevels; ++l) {
      const double g = distortion_parameter(Distortion::kContrastChange, l);
      const Image out = apply_distortion(img, Distortion::kContrastChange, l, 0);
      CHECK(std::abs(out.mean() - img.mean()) <= std::abs(g - 1.0) * dev + 1e-6);
    }
  }
}

TEST_CASE("distortions are deterministic, clipped and validated") {
  const Image img = synthesize_sci(64, 64, 1);
  for (Distortion t : all_distortions())
    for (int l = 1; l <= kMaxLevels; ++l) {
      const Image a = apply_distortion(img, t, l, 5);
      CHECK(a == apply_distortion(img, t, l, 5));
      for (const auto& p : a.planes) {
        CHECK(p.minCoeff() >= 0.0f);
        CHECK(p.maxCoeff() <= 1.0f);
      }
    }
  CHECK_THROWS_AS(apply_distortion(img, Distortion::kGaussianBlur, 0, 1), ConfigError);
  CHECK_THROWS_AS(apply_distortion(img, Distortion::kGaussianBlur, 4, 1, 3), ConfigError);
}

TEST_CASE("synthetic scores follow the level map") {
  CHECK(synthetic_score(Distortion::kGaussianNoise, 1, 3) == doctest::Approx(100.0 / 3 + 3));
  CHECK(synthetic_score(Distortion::kContrastChange, 3, 3) == 96.0);
  CHECK(synthetic_score(Distortion::kBlock, 5, 5) == 100.0);
  for (Distortion t : all_distortions())
    for (int l = 2; l <= 5; ++l) CHECK(synthetic_score(t, l, 5) > synthetic_score(t, l - 1, 5));
}

TEST_CASE("synthetic corpus layout") {
  const auto& m = corpus();
  CHECK(m.records.size() == 4 * (1 + 2 * 2));
  CHECK(m.distorted_count() == 16);
  const auto back = load_manifest(fs::temp_directory_path() / "sciq_test_pipeline_corpus" / "manifest.csv");
  CHECK(back.records.size() == m.records.size());
  CHECK(load_image(back.resolve(back.records[1])).width() == 96);
}

TEST_CASE("triplet batch shape and invariants") {
  const auto& m = corpus();
  ImageCache cache;
  const LabelMap labels = LabelMap::from_manifest(m);
  const auto b = sample_triplet_batch(m, cache, labels, {4, 5}, 1);
  CHECK(b.batch == 4);
  CHECK(b.patches_per_image == 5);
  CHECK(b.distorted_patches.size() == 20);
  CHECK(b.reference_patches.size() == 20);
  CHECK(b.auxiliary_patches.size() == 20);
  CHECK(b.group_index.size() == 20);
  CHECK(b.group_index[7] == 1);
  std::set<std::size_t> distinct(b.distorted_records.begin(), b.distorted_records.end());
  CHECK(distinct.size() == 4);
  for (const auto& p : b.distorted_patches) {
    CHECK(p.width() == kPatchSize);
    CHECK(p.height() == kPatchSize);
  }
}

TEST_CASE("default batch: 32 triplets of 16 patches") {
  SynthOptions so;
  so.refs = 6;
  so.types = {Distortion::kGaussianNoise, Distortion::kGaussianBlur, Distortion::kContrastChange};
  so.levels = 2;
  so.width = so.height = 64;
  const auto m = write_synthetic_corpus(fs::temp_directory_path() / "sciq_test_batch96", so);
  ImageCache cache;
  const auto b = sample_triplet_batch(m, cache, LabelMap::from_manifest(m), {32, 16}, 2);
  CHECK(b.distorted_records.size() + b.reference_records.size() + b.auxiliary_records.size() == 96);
  CHECK(b.distorted_patches.size() + b.reference_patches.size() + b.auxiliary_patches.size() == 1536);
}

TEST_CASE("triplet integrity over 1000 batches") {
  const auto& m = corpus();
  ImageCache cache;
  const LabelMap labels = LabelMap::from_manifest(m);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto b = sample_triplet_batch(m, cache, labels, {3, 2}, seed);
    for (int i = 0; i < 3; ++i) {
      const auto& d = m.records[b.distorted_records[static_cast<std::size_t>(i)]];
      const auto& r = m.records[b.reference_records[static_cast<std::size_t>(i)]];
      const auto& a = m.records[b.auxiliary_records[static_cast<std::size_t>(i)]];
      CHECK(!d.pristine());
      CHECK(r.pristine());
      CHECK(a.pristine());
      CHECK(r.reference_id == d.reference_id);
      CHECK(a.reference_id != d.reference_id);
      CHECK(b.distortion_labels[static_cast<std::size_t>(i)] == labels.index(d.distortion_type));
      CHECK(b.scores[static_cast<std::size_t>(i)] == *d.score);
    }
  }
}

TEST_CASE("reference patches are aligned with distorted patches") {
  // Contrast change is a pointwise map, so aligned crops satisfy it exactly.
  const fs::path dir = fs::temp_directory_path() / "sciq_test_align";
  SynthOptions so;
  so.refs = 2;
  so.types = {Distortion::kContrastChange};
  so.levels = 1;
  so.width = so.height = 128;
  const auto m = write_synthetic_corpus(dir, so);
  ImageCache cache;
  const auto b = sample_triplet_batch(m, cache, LabelMap::from_manifest(m), {2, 16}, 4);
  for (std::size_t p = 0; p < b.distorted_patches.size(); ++p) {
    const Image& d = b.distorted_patches[p];
    const Image& r = b.reference_patches[p];
    for (int c = 0; c < 3; ++c) {
      const Eigen::ArrayXXf expect = (0.5f + 0.8f * (r.planes[c] - 0.5f));
      CHECK((d.planes[c] - expect).abs().maxCoeff() < 1.0f / 255.0f + 1e-6f);
    }
  }
  // 16 cells drawn from a 16-cell grid without replacement cover it once.
  const auto flat = [](const Image& img) {
    std::vector<float> v;
    for (const auto& pl : img.planes) v.insert(v.end(), pl.data(), pl.data() + pl.size());
    return v;
  };
  std::multiset<std::vector<float>> drawn, grid;
  for (int p = 0; p < 16; ++p) drawn.insert(flat(b.reference_patches[static_cast<std::size_t>(p)]));
  for (const auto& cell : extract_patches(cache.get(m, b.reference_records[0]))) grid.insert(flat(cell));
  CHECK(drawn == grid);
}

TEST_CASE("triplet sampling is deterministic and validated") {
  const auto& m = corpus();
  ImageCache cache;
  const LabelMap labels = LabelMap::from_manifest(m);
  const auto a = sample_triplet_batch(m, cache, labels, {2, 3}, 11);
  const auto b = sample_triplet_batch(m, cache, labels, {2, 3}, 11);
  CHECK(a.distorted_records == b.distorted_records);
  CHECK(a.auxiliary_records == b.auxiliary_records);
  for (std::size_t i = 0; i < a.distorted_patches.size(); ++i) {
    CHECK(a.distorted_patches[i] == b.distorted_patches[i]);
    CHECK(a.auxiliary_patches[i] == b.auxiliary_patches[i]);
  }
  CHECK_THROWS_AS(sample_triplet_batch(m, cache, labels, {17, 2}, 1), SampleError);

  // One triplet on a two-reference manifest still finds a different auxiliary.
  DatasetManifest two = m;
  two.records.erase(std::remove_if(two.records.begin(), two.records.end(),
                                   [](const ImageRecord& r) { return r.reference_id > "ref001"; }),
                    two.records.end());
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto c = sample_triplet_batch(two, cache, labels, {1, 4}, seed);
    CHECK(two.records[c.auxiliary_records[0]].reference_id != two.records[c.distorted_records[0]].reference_id);
  }
  DatasetManifest one = m;
  one.records.erase(std::remove_if(one.records.begin(), one.records.end(),
                                   [](const ImageRecord& r) { return r.reference_id != "ref000"; }),
                    one.records.end());
  CHECK_THROWS_AS(sample_triplet_batch(one, cache, labels, {1, 4}, 1), SampleError);
}
