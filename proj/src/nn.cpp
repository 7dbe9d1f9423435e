// Copyright (c) the hdcsvc authors
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

#include "hdc/nn.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace hdc::nn {
namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("checkpoint: truncated");
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
}

void put_f64(std::ostream& os, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) os.put(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double get_f64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("checkpoint: truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

Var& ParamStore::add(const std::string& name, Tensor init) {
  if (index_.count(name)) throw std::invalid_argument("param: duplicate name " + name);
  index_[name] = params_.size();
  params_.emplace_back(name, Var(std::move(init), true));
  return params_.back().second;
}

Var& ParamStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("param: unknown " + name);
  return params_[it->second].second;
}

const Var& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("param: unknown " + name);
  return params_[it->second].second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, v] : params_) n += v.numel();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [name, v] : params_) v.zero_grad();
}

std::uint32_t ParamStore::fingerprint() const {
  uLong crc = crc32(0L, Z_NULL, 0);
  for (const auto& [name, v] : params_) {
    crc = crc32(crc, reinterpret_cast<const Bytef*>(name.data()), uInt(name.size()));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(v.value().data()), uInt(v.numel() * sizeof(double)));
  }
  return static_cast<std::uint32_t>(crc);
}

void ParamStore::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot write " + path.string());
  os.write("HDCK", 4);
  put_u32(os, kCheckpointVersion);
  put_u32(os, std::uint32_t(params_.size()));
  for (const auto& [name, v] : params_) {
    put_u32(os, std::uint32_t(name.size()));
    os.write(name.data(), std::streamsize(name.size()));
    put_u32(os, std::uint32_t(v.value().rank()));
    for (std::size_t d : v.shape()) put_u32(os, std::uint32_t(d));
    for (double x : v.value().values()) put_f64(os, x);
  }
  if (!os) throw std::runtime_error("checkpoint: write failed " + path.string());
}

std::size_t ParamStore::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot read " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "HDCK", 4) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  }
  const std::uint32_t version = get_u32(is);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  const std::uint32_t count = get_u32(is);
  std::size_t loaded = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(get_u32(is), '\0');
    if (!is.read(name.data(), std::streamsize(name.size()))) throw std::runtime_error("checkpoint: truncated");
    Shape shape(get_u32(is));
    for (auto& d : shape) d = get_u32(is);
    std::vector<double> values(shape_numel(shape));
    for (auto& x : values) x = get_f64(is);
    auto it = index_.find(name);
    if (it == index_.end()) continue;
    Var& dst = params_[it->second].second;
    if (dst.shape() != shape) {
      throw std::runtime_error("checkpoint: shape mismatch for " + name + ": file " + shape_str(shape) +
                               " model " + shape_str(dst.shape()));
    }
    dst.mutable_value() = Tensor(shape, std::move(values));
    ++loaded;
  }
  return loaded;
}

void ParamStore::copy_from(const ParamStore& other) {
  for (auto& [name, v] : params_) {
    if (other.contains(name)) v.mutable_value() = other.get(name).value();
  }
}

Tensor uniform_fan_in(std::mt19937_64& rng, Shape shape, std::size_t fan_in, double gain) {
  const double bound = gain / std::sqrt(double(std::max<std::size_t>(fan_in, 1)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

Conv2d::Conv2d(ParamStore& store, const std::string& name, int in_c, int out_c, int kernel, int stride_,
               Init init, bool with_bias)
    : stride(stride_), pad(kernel / 2) {
  const Shape wshape{std::size_t(out_c), std::size_t(in_c), std::size_t(kernel), std::size_t(kernel)};
  const std::size_t fan_in = std::size_t(in_c) * kernel * kernel;
  weight = store.add(name + ".w", init == Init::kZero ? Tensor(wshape)
                                                      : uniform_fan_in(store.rng(), wshape, fan_in, std::sqrt(3.0)));
  if (with_bias) bias = store.add(name + ".b", Tensor({std::size_t(out_c)}));
}

ConvTranspose2d::ConvTranspose2d(ParamStore& store, const std::string& name, int in_c, int out_c, bool with_bias,
                                 Init init) {
  const Shape wshape{std::size_t(in_c), std::size_t(out_c), 4, 4};
  // Each output sees in_c * 4 taps of the 4x4 kernel at stride 2.
  const std::size_t fan_in = std::size_t(in_c) * 4;
  weight = store.add(name + ".w", init == Init::kZero ? Tensor(wshape)
                                                      : uniform_fan_in(store.rng(), wshape, fan_in, std::sqrt(3.0)));
  if (with_bias) bias = store.add(name + ".b", Tensor({std::size_t(out_c)}));
}

}  // namespace hdc::nn
