// Copyright 2026 The vflsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vflsim/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "vflsim/error.hpp"
#include "vflsim/rng.hpp"

namespace vfl {

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'F', 'U', 'D', '1'};

class Writer {
 public:
  template <typename T>
  void pod(const T& v) {
    buf_.append(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    buf_.append(s);
  }
  void doubles(std::span<const double> v) {
    buf_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
  }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::vector<double> doubles(std::uint64_t n) {
    if (n > (bytes_.size() - pos_) / sizeof(double)) truncated();
    std::vector<double> v(n);
    std::memcpy(v.data(), bytes_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return v;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::uint64_t n) const {
    if (n > bytes_.size() - pos_) truncated();
  }
  [[noreturn]] static void truncated() { throw CheckpointError("checkpoint is truncated"); }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

std::int64_t Checkpoint::counter(const std::string& name, std::int64_t fallback) const {
  for (const auto& [n, v] : counters) {
    if (n == name) return v;
  }
  return fallback;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.pod<std::uint32_t>(Checkpoint::kVersion);
  w.pod<std::uint64_t>(ckpt.config_digest);
  w.str(ckpt.config_text);
  w.str(ckpt.method);
  w.str(ckpt.phase);
  w.pod<std::int64_t>(ckpt.epoch);
  w.pod<std::uint64_t>(ckpt.validation_history.size());
  w.doubles(ckpt.validation_history);
  w.pod<std::uint64_t>(ckpt.counters.size());
  for (const auto& [name, value] : ckpt.counters) {
    w.str(name);
    w.pod<std::int64_t>(value);
  }
  w.pod<std::uint64_t>(ckpt.tensors.size());
  for (const auto& [name, t] : ckpt.tensors) {
    w.str(name);
    w.pod<std::uint64_t>(t.rank());
    for (std::size_t d : t.shape()) w.pod<std::uint64_t>(d);
    w.doubles(t.values());
  }
  std::string body = w.take();
  const std::uint64_t checksum = fnv1a64(body);
  std::string out(kMagic, sizeof(kMagic));
  out += body;
  out.append(reinterpret_cast<const char*>(&checksum), sizeof(checksum));
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) + sizeof(std::uint64_t)) {
    throw CheckpointError("checkpoint is truncated");
  }
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("not a checkpoint file (bad magic)");
  }
  const std::string_view body(bytes.data() + sizeof(kMagic),
                              bytes.size() - sizeof(kMagic) - sizeof(std::uint64_t));
  Reader r(body);
  // Check the version before the checksum so old files get a clear message.
  const auto version = r.pod<std::uint32_t>();
  if (version != Checkpoint::kVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + bytes.size() - sizeof(stored), sizeof(stored));
  if (stored != fnv1a64(body)) throw CheckpointError("checkpoint checksum mismatch (corrupt or truncated)");

  Checkpoint c;
  c.config_digest = r.pod<std::uint64_t>();
  c.config_text = r.str();
  c.method = r.str();
  c.phase = r.str();
  c.epoch = r.pod<std::int64_t>();
  c.validation_history = r.doubles(r.pod<std::uint64_t>());
  const auto n_counters = r.pod<std::uint64_t>();
  for (std::uint64_t i = 0; i < n_counters; ++i) {
    std::string name = r.str();
    c.counters.emplace_back(std::move(name), r.pod<std::int64_t>());
  }
  const auto n_tensors = r.pod<std::uint64_t>();
  for (std::uint64_t i = 0; i < n_tensors; ++i) {
    std::string name = r.str();
    const auto rank = r.pod<std::uint64_t>();
    if (rank == 0 || rank > 8) throw CheckpointError("tensor '" + name + "' has invalid rank");
    std::vector<std::size_t> shape;
    std::uint64_t count = 1;
    for (std::uint64_t k = 0; k < rank; ++k) {
      const auto d = r.pod<std::uint64_t>();
      if (d == 0) throw CheckpointError("tensor '" + name + "' has a zero dimension");
      shape.push_back(d);
      count *= d;
    }
    c.tensors.emplace_back(std::move(name), Tensor(std::move(shape), r.doubles(count)));
  }
  if (r.remaining() != 0) throw CheckpointError("trailing bytes after checkpoint payload");
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing checkpoint '" + path.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace vfl
