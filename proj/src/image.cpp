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

#include "sciq/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

#include "sciq/core.hpp"

namespace sciq {

namespace {

std::uint8_t to_byte(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

Image from_interleaved(const std::vector<std::uint8_t>& rgb, int w, int h) {
  Image img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(c, y, x) = rgb[(static_cast<std::size_t>(y) * w + x) * 3 + c] / 255.0f;
  return img;
}

std::vector<std::uint8_t> to_interleaved(const Image& img) {
  const int w = img.width(), h = img.height();
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        rgb[(static_cast<std::size_t>(y) * w + x) * 3 + c] = to_byte(img.at(c, y, x));
  return rgb;
}

Image read_png(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str()))
    throw IoError("cannot read PNG " + path.string() + ": " + png.message);
  png.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&png);
    throw IoError("cannot decode PNG " + path.string() + ": " + png.message);
  }
  return from_interleaved(buf, static_cast<int>(png.width), static_cast<int>(png.height));
}

void write_png(const Image& img, const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width());
  png.height = static_cast<png_uint_32>(img.height());
  png.format = PNG_FORMAT_RGB;
  const auto rgb = to_interleaved(img);
  if (!png_image_write_to_file(&png, path.c_str(), 0, rgb.data(), 0, nullptr))
    throw IoError("cannot write PNG " + path.string() + ": " + png.message);
}

std::uint32_t le32(const std::uint8_t* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put32(std::vector<std::uint8_t>& out, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

Image read_bmp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (data.size() < 54 || data[0] != 'B' || data[1] != 'M')
    throw IoError("not a BMP file: " + path.string());
  const std::uint32_t offset = le32(&data[10]);
  const auto width = static_cast<std::int32_t>(le32(&data[18]));
  auto height = static_cast<std::int32_t>(le32(&data[22]));
  const int bpp = data[28] | (data[29] << 8);
  const std::uint32_t compression = le32(&data[30]);
  if (bpp != 24 || compression != 0 || width <= 0 || height == 0)
    throw IoError("unsupported BMP (need uncompressed 24-bit): " + path.string());
  const bool top_down = height < 0;
  height = std::abs(height);
  const std::size_t stride = (static_cast<std::size_t>(width) * 3 + 3) & ~std::size_t{3};
  if (data.size() < offset + stride * height)
    throw IoError("truncated BMP: " + path.string());
  Image img(width, height);
  for (int y = 0; y < height; ++y) {
    const int row = top_down ? y : height - 1 - y;
    const std::uint8_t* p = &data[offset + stride * row];
    for (int x = 0; x < width; ++x) {
      img.at(2, y, x) = p[3 * x + 0] / 255.0f;
      img.at(1, y, x) = p[3 * x + 1] / 255.0f;
      img.at(0, y, x) = p[3 * x + 2] / 255.0f;
    }
  }
  return img;
}

void write_bmp(const Image& img, const std::filesystem::path& path) {
  const int w = img.width(), h = img.height();
  const std::size_t stride = (static_cast<std::size_t>(w) * 3 + 3) & ~std::size_t{3};
  std::vector<std::uint8_t> out(54 + stride * h, 0);
  out[0] = 'B';
  out[1] = 'M';
  put32(out, 2, static_cast<std::uint32_t>(out.size()));
  put32(out, 10, 54);
  put32(out, 14, 40);
  put32(out, 18, static_cast<std::uint32_t>(w));
  put32(out, 22, static_cast<std::uint32_t>(h));
  out[26] = 1;
  out[28] = 24;
  put32(out, 34, static_cast<std::uint32_t>(stride * h));
  for (int y = 0; y < h; ++y) {
    std::uint8_t* p = &out[54 + stride * (h - 1 - y)];
    for (int x = 0; x < w; ++x) {
      p[3 * x + 0] = to_byte(img.at(2, y, x));
      p[3 * x + 1] = to_byte(img.at(1, y, x));
      p[3 * x + 2] = to_byte(img.at(0, y, x));
    }
  }
  std::ofstream os(path, std::ios::binary);
  os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!os) throw IoError("cannot write BMP " + path.string());
}

}  // namespace

Image Image::crop(int x0, int y0, int w, int h) const {
  Image out;
  for (int c = 0; c < 3; ++c) out.planes[c] = planes[c].block(y0, x0, h, w);
  return out;
}

void Image::clip() {
  for (auto& p : planes) p = p.max(0.0f).min(1.0f);
}

double Image::mean() const {
  double s = 0.0;
  for (const auto& p : planes) s += p.cast<double>().sum();
  return s / (3.0 * static_cast<double>(planes[0].size()));
}

bool Image::operator==(const Image& other) const {
  for (int c = 0; c < 3; ++c) {
    if (planes[c].rows() != other.planes[c].rows() ||
        planes[c].cols() != other.planes[c].cols())
      return false;
    if ((planes[c] != other.planes[c]).any()) return false;
  }
  return true;
}

Image load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path.string());
  char sig[2] = {0, 0};
  in.read(sig, 2);
  in.close();
  if (sig[0] == 'B' && sig[1] == 'M') return read_bmp(path);
  return read_png(path);
}

void save_image(const Image& image, const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  if (ext == ".bmp")
    write_bmp(image, path);
  else
    write_png(image, path);
}

double psnr(const Image& a, const Image& b) {
  double se = 0.0;
  for (int c = 0; c < 3; ++c)
    se += (a.planes[c].cast<double>() - b.planes[c].cast<double>()).square().sum();
  const double mse = se / (3.0 * static_cast<double>(a.planes[0].size()));
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

Image quantize8(const Image& image) {
  Image out = image;
  for (auto& p : out.planes)
    p = p.unaryExpr([](float v) { return to_byte(v) / 255.0f; });
  return out;
}

}  // namespace sciq
