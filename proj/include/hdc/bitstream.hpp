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

// Bit-level I/O and the bypass symbol serializer: every symbol is an
// order-0 Exp-Golomb magnitude followed by a sign bit when nonzero.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hdc::bits {

class DecodeError : public std::runtime_error {
 public:
  DecodeError(const std::string& what, int slice = -1) : std::runtime_error(what), slice_(slice) {}
  // Index of the segment that failed, -1 if not tied to one.
  int slice() const noexcept { return slice_; }

 private:
  int slice_;
};

class BitWriter {
 public:
  void put_bit(unsigned b);
  void put_bits(std::uint64_t value, int count);  // MSB first
  void put_exp_golomb(std::uint64_t v);
  void put_signed(std::int64_t v);
  // Pads the last byte with zeros and returns the buffer.
  std::vector<std::uint8_t> finish();
  std::size_t bit_count() const { return bytes_.size() * 8 - (free_ == 8 ? 0 : std::size_t(free_)); }

 private:
  std::vector<std::uint8_t> bytes_;
  int free_ = 8;  // unused bits in the last byte
};

class BitReader {
 public:
  BitReader(std::span<const std::uint8_t> data, int slice = -1) : data_(data), slice_(slice) {}
  unsigned get_bit();
  std::uint64_t get_bits(int count);
  std::uint64_t get_exp_golomb();
  std::int64_t get_signed();
  std::size_t bits_left() const { return data_.size() * 8 - pos_; }
  // Throws unless only zero padding (< 8 bits) remains.
  void expect_end() const;

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  int slice_;
};

std::vector<std::uint8_t> encode_bypass(std::span<const std::int32_t> symbols);
// Reads exactly n symbols; slice tags any DecodeError raised.
std::vector<std::int32_t> decode_bypass(std::span<const std::uint8_t> data, std::size_t n, int slice = -1);
// Exact size in bits of the bypass code for one symbol.
std::size_t bypass_bits(std::int32_t symbol);

}  // namespace hdc::bits
