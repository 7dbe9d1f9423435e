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

// Per-slice symbol serializers. The bypass serializer is self-contained;
// the range coder serializer forwards to the C interface in rangecoder_c.h.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hdc/rangecoder_c.h"

namespace hdc::bits {

class SliceSerializer {
 public:
  virtual ~SliceSerializer() = default;
  virtual std::uint8_t id() const = 0;
  // sigma has one entry per symbol.
  virtual std::vector<std::uint8_t> encode(std::span<const std::int32_t> symbols, std::span<const double> sigma) const = 0;
  virtual std::vector<std::int32_t> decode(std::span<const std::uint8_t> data, std::size_t n,
                                           std::span<const double> sigma, int slice) const = 0;
};

inline constexpr std::uint8_t kBypassSerializer = 0;
inline constexpr std::uint8_t kRangeSerializer = 1;

class BypassSerializer final : public SliceSerializer {
 public:
  std::uint8_t id() const override { return kBypassSerializer; }
  std::vector<std::uint8_t> encode(std::span<const std::int32_t> symbols, std::span<const double> sigma) const override;
  std::vector<std::int32_t> decode(std::span<const std::uint8_t> data, std::size_t n, std::span<const double> sigma,
                                   int slice) const override;
};

struct RangeCoderFns {
  int (*encode)(const int16_t*, size_t, const float*, const float*, uint8_t*, size_t*) = nullptr;
  int (*decode)(const uint8_t*, size_t, size_t, const float*, const float*, int16_t*) = nullptr;
};

// Symbols must fit in int16. The C coder sees mu = 0 (slices are already
// mean-subtracted) and sigma narrowed to float.
class RangeSerializer final : public SliceSerializer {
 public:
  explicit RangeSerializer(RangeCoderFns fns);
  std::uint8_t id() const override { return kRangeSerializer; }
  std::vector<std::uint8_t> encode(std::span<const std::int32_t> symbols, std::span<const double> sigma) const override;
  std::vector<std::int32_t> decode(std::span<const std::uint8_t> data, std::size_t n, std::span<const double> sigma,
                                   int slice) const override;

 private:
  RangeCoderFns fns_;
};

bool range_coder_linked();
// Functions of the linked coder; throws when built without it.
RangeCoderFns linked_range_coder();
std::unique_ptr<SliceSerializer> make_serializer(std::uint8_t id);
const char* status_name(int status);

// File mode, little-endian:
//   .sym  u32 n | n x i16 symbol
//   .gau  u32 n | n x f32 mu | n x f32 sigma
//   .rcs  u32 n | u32 byte_count | bytes
void write_sym(const std::filesystem::path& p, std::span<const std::int16_t> symbols);
std::vector<std::int16_t> read_sym(const std::filesystem::path& p);
void write_gau(const std::filesystem::path& p, std::span<const float> mu, std::span<const float> sigma);
void read_gau(const std::filesystem::path& p, std::vector<float>& mu, std::vector<float>& sigma);
void write_rcs(const std::filesystem::path& p, std::uint32_t n, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_rcs(const std::filesystem::path& p, std::uint32_t& n);

// File mode through a coder: .sym + .gau -> .rcs, and back. Status
// failures throw with the status name.
void encode_files(const std::filesystem::path& sym, const std::filesystem::path& gau,
                  const std::filesystem::path& rcs, RangeCoderFns fns);
void decode_files(const std::filesystem::path& rcs, const std::filesystem::path& gau,
                  const std::filesystem::path& sym, RangeCoderFns fns);

}  // namespace hdc::bits
