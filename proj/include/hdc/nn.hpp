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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "hdc/autograd.hpp"

namespace hdc::nn {

// Named, ordered collection of learnable tensors. Layers hold Var handles
// into the store, so loading a checkpoint updates every layer in place.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed = 0x5eed) : rng_(seed) {}

  Var& add(const std::string& name, Tensor init);
  Var& get(const std::string& name);
  const Var& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  const std::vector<std::pair<std::string, Var>>& items() const { return params_; }
  std::vector<std::pair<std::string, Var>>& items() { return params_; }
  std::size_t count() const { return params_.size(); }
  std::size_t scalar_count() const;

  std::mt19937_64& rng() { return rng_; }

  void zero_grad();
  // CRC32 over names and values; tags bitstreams with the weights they need.
  std::uint32_t fingerprint() const;

  // Checkpoint layout (little-endian):
  //   "HDCK" | u32 version | u32 count |
  //   count x { u32 name_len | name bytes | u32 rank | rank x u32 dims | f64 values }
  void save(const std::filesystem::path& path) const;
  // Loads every tensor present in the file whose name exists in the store;
  // returns the number of tensors loaded. Shape mismatches throw.
  std::size_t load(const std::filesystem::path& path);
  void copy_from(const ParamStore& other);

 private:
  std::vector<std::pair<std::string, Var>> params_;
  std::map<std::string, std::size_t> index_;
  std::mt19937_64 rng_;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class Init { kUniformFanIn, kZero };

struct Conv2d {
  Var weight, bias;
  int stride = 1, pad = 0;

  Conv2d() = default;
  Conv2d(ParamStore& store, const std::string& name, int in_c, int out_c, int kernel, int stride,
         Init init = Init::kUniformFanIn, bool with_bias = true);
  Var operator()(const Var& x) const { return conv2d(x, weight, bias, stride, pad); }
};

// Kernel 4, stride 2, pad 1: exact 2x upsampling.
struct ConvTranspose2d {
  Var weight, bias;
  int stride = 2, pad = 1, out_pad = 0;

  ConvTranspose2d() = default;
  ConvTranspose2d(ParamStore& store, const std::string& name, int in_c, int out_c, bool with_bias = true,
                  Init init = Init::kUniformFanIn);
  Var operator()(const Var& x) const { return conv_transpose2d(x, weight, bias, stride, pad, out_pad); }
};

Tensor uniform_fan_in(std::mt19937_64& rng, Shape shape, std::size_t fan_in, double gain = 1.0);

}  // namespace hdc::nn
