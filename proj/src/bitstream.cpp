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

#include "hdc/bitstream.hpp"

#include <bit>
#include <cstdlib>

namespace hdc::bits {

void BitWriter::put_bit(unsigned b) {
  if (free_ == 8) bytes_.push_back(0);
  --free_;
  if (b) bytes_.back() |= std::uint8_t(1u << free_);
  if (free_ == 0) free_ = 8;
}

void BitWriter::put_bits(std::uint64_t value, int count) {
  for (int i = count - 1; i >= 0; --i) put_bit(unsigned(value >> i) & 1u);
}

void BitWriter::put_exp_golomb(std::uint64_t v) {
  const std::uint64_t x = v + 1;
  const int len = std::bit_width(x);
  put_bits(0, len - 1);
  put_bits(x, len);
}

void BitWriter::put_signed(std::int64_t v) {
  put_exp_golomb(std::uint64_t(v < 0 ? -v : v));
  if (v != 0) put_bit(v < 0);
}

std::vector<std::uint8_t> BitWriter::finish() {
  free_ = 8;
  return std::move(bytes_);
}

unsigned BitReader::get_bit() {
  if (pos_ >= data_.size() * 8) throw DecodeError("bitstream exhausted", slice_);
  const unsigned b = (data_[pos_ >> 3] >> (7 - (pos_ & 7))) & 1u;
  ++pos_;
  return b;
}

std::uint64_t BitReader::get_bits(int count) {
  std::uint64_t v = 0;
  for (int i = 0; i < count; ++i) v = (v << 1) | get_bit();
  return v;
}

std::uint64_t BitReader::get_exp_golomb() {
  int zeros = 0;
  while (get_bit() == 0) {
    if (++zeros > 40) throw DecodeError("exp-golomb prefix too long", slice_);
  }
  const std::uint64_t x = (std::uint64_t{1} << zeros) | get_bits(zeros);
  return x - 1;
}

std::int64_t BitReader::get_signed() {
  const auto mag = std::int64_t(get_exp_golomb());
  if (mag == 0) return 0;
  return get_bit() ? -mag : mag;
}

void BitReader::expect_end() const {
  const std::size_t left = bits_left();
  if (left >= 8) throw DecodeError("trailing data in segment", slice_);
  for (std::size_t p = pos_; p < data_.size() * 8; ++p) {
    if ((data_[p >> 3] >> (7 - (p & 7))) & 1u) throw DecodeError("nonzero padding", slice_);
  }
}

std::vector<std::uint8_t> encode_bypass(std::span<const std::int32_t> symbols) {
  BitWriter w;
  for (std::int32_t s : symbols) w.put_signed(s);
  return w.finish();
}

std::vector<std::int32_t> decode_bypass(std::span<const std::uint8_t> data, std::size_t n, int slice) {
  BitReader r(data, slice);
  std::vector<std::int32_t> out(n);
  for (auto& s : out) {
    const std::int64_t v = r.get_signed();
    if (v > INT32_MAX || v < -INT32_MAX) throw DecodeError("symbol out of range", slice);
    s = std::int32_t(v);
  }
  r.expect_end();
  return out;
}

std::size_t bypass_bits(std::int32_t symbol) {
  const std::uint64_t mag = std::uint64_t(std::llabs(symbol));
  return 2 * std::size_t(std::bit_width(mag + 1)) - 1 + (mag != 0);
}

}  // namespace hdc::bits
