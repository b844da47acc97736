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

#include "sciq/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sciq/json_io.hpp"

namespace sciq {

namespace {

constexpr char kMagic[8] = {'S', 'C', 'I', 'Q', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little endian");

std::uint64_t fnv1a(const char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  Reader(const std::string& bytes, std::size_t end) : bytes_(bytes), end_(end) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void floats(float* dst, std::size_t n) {
    need(n * sizeof(float));
    std::memcpy(dst, bytes_.data() + pos_, n * sizeof(float));
    pos_ += n * sizeof(float);
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > end_) throw CorruptionError("checkpoint truncated");
  }
  const std::string& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Model<float>& model, const CheckpointMeta& meta) {
  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  const std::string json =
      Json{{"config", model.config}, {"labels", meta.labels}, {"dataset", meta.dataset}}.dump();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(json.size()));
  out += json;
  const auto& P = model.params;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(P.size()));
  for (std::size_t i = 0; i < P.size(); ++i) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(P.names[i].size()));
    out += P.names[i];
    put<std::uint32_t>(out, static_cast<std::uint32_t>(P.shapes[i].size()));
    for (int d : P.shapes[i]) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    // Row-major: transpose of the column-major storage.
    const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = P.values[i];
    out.append(reinterpret_cast<const char*>(rm.data()), sizeof(float) * static_cast<std::size_t>(rm.size()));
  }
  put<std::uint64_t>(out, fnv1a(out.data(), out.size()));
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof kMagic + 4 + 8) throw CorruptionError("checkpoint truncated");
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw CorruptionError("not a checkpoint (bad magic)");
  std::uint32_t version;
  std::memcpy(&version, bytes.data() + sizeof kMagic, 4);
  if (version != kCheckpointVersion)
    throw VersionError("checkpoint version " + std::to_string(version) + " is incompatible (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  const std::size_t body = bytes.size() - 8;
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body, 8);
  if (stored != fnv1a(bytes.data(), body)) throw CorruptionError("checkpoint checksum mismatch");

  Reader in(bytes, body);
  in.str(sizeof kMagic);
  in.get<std::uint32_t>();
  const auto json_len = in.get<std::uint32_t>();
  Checkpoint ck;
  try {
    const Json meta = Json::parse(in.str(json_len));
    ck.model = Model<float>::create(meta.at("config").get<ModelConfig>());
    ck.meta.labels = meta.at("labels").get<std::vector<std::string>>();
    ck.meta.dataset = meta.at("dataset").get<std::string>();
  } catch (const Json::exception& e) {
    throw CorruptionError(std::string("checkpoint metadata unreadable: ") + e.what());
  } catch (const ConfigError& e) {
    throw CorruptionError(std::string("checkpoint config invalid: ") + e.what());
  }
  auto& P = ck.model.params;
  const auto count = in.get<std::uint32_t>();
  if (count != P.size()) throw CorruptionError("checkpoint parameter count does not match its config");
  for (std::size_t i = 0; i < P.size(); ++i) {
    const std::string name = in.str(in.get<std::uint32_t>());
    const auto ndim = in.get<std::uint32_t>();
    std::vector<int> shape;
    for (std::uint32_t d = 0; d < ndim; ++d) shape.push_back(static_cast<int>(in.get<std::uint32_t>()));
    if (name != P.names[i] || shape != P.shapes[i])
      throw CorruptionError("checkpoint parameter '" + name + "' does not match the model layout");
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(P.values[i].rows(), P.values[i].cols());
    in.floats(rm.data(), static_cast<std::size_t>(rm.size()));
    P.values[i] = rm;
  }
  if (in.pos() != body) throw CorruptionError("trailing bytes in checkpoint");
  return ck;
}

void save_checkpoint(const Model<float>& model, const CheckpointMeta& meta,
                     const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(model, meta);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  os.flush();
  if (!os) throw IoError("cannot write checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace sciq
