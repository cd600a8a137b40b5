// Copyright 2026 The vrads Authors.
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

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "vrads/errors.hpp"
#include "vrads/nn.hpp"

namespace vrads {
namespace {

constexpr char kMagic[8] = {'V', 'R', 'A', 'D', 'S', 'C', 'K', '1'};

template <class T>
void put(std::string& buf, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

class Reader {
 public:
  Reader(std::string data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}

  template <class T>
  T get() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return v;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw DataError("truncated checkpoint " + path_);
  }

  std::string data_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t hash_params(const ParamList& params) {
  std::uint64_t h = 1469598103934665603ULL;
  auto feed = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  for (const Param* p : params) {
    feed(p->name.data(), p->name.size());
    for (std::size_t d : p->value.shape()) {
      const std::uint64_t d64 = d;
      feed(&d64, sizeof d64);
    }
    feed(p->value.data(), p->value.size() * sizeof(double));
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

void save_tensors(const std::string& path, const NamedTensors& tensors) {
  std::string buf(kMagic, sizeof kMagic);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(name.size()));
    buf += name;
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put<std::uint64_t>(buf, d);
    for (double v : t.values()) put<std::uint64_t>(buf, std::bit_cast<std::uint64_t>(v));
  }
  // Write to a temporary name first so an interrupted save never leaves a
  // truncated checkpoint behind.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw DataError("cannot write checkpoint " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw DataError("cannot move checkpoint into place: " + path);
  }
}

NamedTensors load_tensors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  Reader r(ss.str(), path);
  if (r.bytes(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) {
    throw DataError("not a checkpoint file: " + path);
  }
  const std::uint32_t count = r.get<std::uint32_t>();
  NamedTensors out;
  for (std::uint32_t k = 0; k < count; ++k) {
    std::string name = r.bytes(r.get<std::uint32_t>());
    const std::uint32_t rank = r.get<std::uint32_t>();
    if (rank > Shape::kMaxRank) throw DataError("checkpoint tensor rank too large in " + path);
    std::vector<std::size_t> dims(rank);
    for (auto& d : dims) d = r.get<std::uint64_t>();
    const Shape shape{std::span<const std::size_t>(dims)};
    std::vector<double> values(shape.numel());
    for (double& v : values) v = std::bit_cast<double>(r.get<std::uint64_t>());
    out.emplace_back(std::move(name), Tensor(shape, std::move(values)));
  }
  if (!r.done()) throw DataError("trailing bytes in checkpoint " + path);
  return out;
}

NamedTensors snapshot(const ParamList& params) {
  NamedTensors out;
  out.reserve(params.size());
  for (const Param* p : params) out.emplace_back(p->name, p->value);
  return out;
}

void restore(const ParamList& params, const NamedTensors& tensors) {
  for (Param* p : params) {
    bool found = false;
    for (const auto& [name, t] : tensors) {
      if (name != p->name) continue;
      if (t.shape() != p->value.shape()) {
        throw DataError("checkpoint shape mismatch for " + name + ": " + t.shape().str() +
                        " vs " + p->value.shape().str());
      }
      p->value = t.detach();
      found = true;
      break;
    }
    if (!found) throw DataError("checkpoint is missing parameter " + p->name);
  }
}

}  // namespace vrads
