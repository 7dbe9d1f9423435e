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

#include "hdc/serializer.hpp"

#include <cstring>
#include <fstream>
#include <limits>

#include "hdc/bitstream.hpp"

namespace hdc::bits {

std::vector<std::uint8_t> BypassSerializer::encode(std::span<const std::int32_t> symbols,
                                                   std::span<const double>) const {
  return encode_bypass(symbols);
}

std::vector<std::int32_t> BypassSerializer::decode(std::span<const std::uint8_t> data, std::size_t n,
                                                   std::span<const double>, int slice) const {
  return decode_bypass(data, n, slice);
}

RangeSerializer::RangeSerializer(RangeCoderFns fns) : fns_(fns) {
  if (!fns_.encode || !fns_.decode) throw std::invalid_argument("range serializer: missing coder functions");
}

namespace {
void narrow_params(std::span<const double> sigma, std::vector<float>& mu, std::vector<float>& sg) {
  mu.assign(sigma.size(), 0.0f);
  sg.resize(sigma.size());
  for (std::size_t i = 0; i < sigma.size(); ++i) sg[i] = float(sigma[i]);
}
}  // namespace

std::vector<std::uint8_t> RangeSerializer::encode(std::span<const std::int32_t> symbols,
                                                  std::span<const double> sigma) const {
  if (sigma.size() != symbols.size()) throw std::invalid_argument("range serializer: sigma count mismatch");
  std::vector<std::int16_t> s(symbols.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (symbols[i] > INT16_MAX || symbols[i] < -INT16_MAX) throw std::out_of_range("range serializer: symbol exceeds int16");
    s[i] = std::int16_t(symbols[i]);
  }
  std::vector<float> mu, sg;
  narrow_params(sigma, mu, sg);
  // Escapes cost at most 2 bytes on top of the table-coded part; grow on demand.
  std::vector<std::uint8_t> out(64 + 4 * s.size());
  for (;;) {
    std::size_t len = out.size();
    const int st = fns_.encode(s.data(), s.size(), mu.data(), sg.data(), out.data(), &len);
    if (st == HDC_RC_OK) {
      out.resize(len);
      return out;
    }
    if (st != HDC_RC_BUFFER_TOO_SMALL) throw std::runtime_error(std::string("range encode: ") + status_name(st));
    out.resize(out.size() * 2);
  }
}

std::vector<std::int32_t> RangeSerializer::decode(std::span<const std::uint8_t> data, std::size_t n,
                                                  std::span<const double> sigma, int slice) const {
  if (sigma.size() != n) throw std::invalid_argument("range serializer: sigma count mismatch");
  std::vector<float> mu, sg;
  narrow_params(sigma, mu, sg);
  std::vector<std::int16_t> s(n);
  const int st = fns_.decode(data.data(), data.size(), n, mu.data(), sg.data(), s.data());
  if (st != HDC_RC_OK) throw DecodeError(std::string("range decode: ") + status_name(st), slice);
  return {s.begin(), s.end()};
}

#ifdef HDC_WITH_RANGECODER
bool range_coder_linked() { return true; }
RangeCoderFns linked_range_coder() { return {&hdc_rc_encode, &hdc_rc_decode}; }
#else
bool range_coder_linked() { return false; }
RangeCoderFns linked_range_coder() { throw std::runtime_error("built without the range coder"); }
#endif

std::unique_ptr<SliceSerializer> make_serializer(std::uint8_t id) {
  if (id == kBypassSerializer) return std::make_unique<BypassSerializer>();
  if (id == kRangeSerializer) return std::make_unique<RangeSerializer>(linked_range_coder());
  throw DecodeError("unknown serializer id " + std::to_string(id));
}

const char* status_name(int status) {
  switch (status) {
    case HDC_RC_OK: return "ok";
    case HDC_RC_BAD_ARGUMENT: return "bad argument";
    case HDC_RC_BUFFER_TOO_SMALL: return "buffer too small";
    case HDC_RC_INVALID_SIGMA: return "invalid sigma";
    case HDC_RC_STREAM_EXHAUSTED: return "stream exhausted";
    case HDC_RC_CORRUPT_STREAM: return "corrupt stream";
    default: return "unknown status";
  }
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  const std::uint8_t b[4] = {std::uint8_t(v), std::uint8_t(v >> 8), std::uint8_t(v >> 16), std::uint8_t(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  std::uint8_t b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("truncated file");
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
}

void put_f32(std::ostream& os, float f) {
  std::uint32_t u;
  std::memcpy(&u, &f, 4);
  put_u32(os, u);
}

float get_f32(std::istream& is) {
  const std::uint32_t u = get_u32(is);
  float f;
  std::memcpy(&f, &u, 4);
  return f;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + p.string());
  return is;
}

void expect_eof(std::istream& is, const std::filesystem::path& p) {
  if (is.peek() != std::char_traits<char>::eof()) throw std::runtime_error("trailing bytes in " + p.string());
}

}  // namespace

void write_sym(const std::filesystem::path& p, std::span<const std::int16_t> symbols) {
  auto os = open_out(p);
  put_u32(os, std::uint32_t(symbols.size()));
  for (std::int16_t s : symbols) {
    const auto u = std::uint16_t(s);
    const std::uint8_t b[2] = {std::uint8_t(u), std::uint8_t(u >> 8)};
    os.write(reinterpret_cast<const char*>(b), 2);
  }
}

std::vector<std::int16_t> read_sym(const std::filesystem::path& p) {
  auto is = open_in(p);
  std::vector<std::int16_t> out(get_u32(is));
  for (auto& s : out) {
    std::uint8_t b[2];
    if (!is.read(reinterpret_cast<char*>(b), 2)) throw std::runtime_error("truncated " + p.string());
    s = std::int16_t(std::uint16_t(b[0] | b[1] << 8));
  }
  expect_eof(is, p);
  return out;
}

void write_gau(const std::filesystem::path& p, std::span<const float> mu, std::span<const float> sigma) {
  if (mu.size() != sigma.size()) throw std::invalid_argument("write_gau: mu/sigma length mismatch");
  auto os = open_out(p);
  put_u32(os, std::uint32_t(mu.size()));
  for (float f : mu) put_f32(os, f);
  for (float f : sigma) put_f32(os, f);
}

void read_gau(const std::filesystem::path& p, std::vector<float>& mu, std::vector<float>& sigma) {
  auto is = open_in(p);
  const std::uint32_t n = get_u32(is);
  mu.resize(n);
  sigma.resize(n);
  for (auto& f : mu) f = get_f32(is);
  for (auto& f : sigma) f = get_f32(is);
  expect_eof(is, p);
}

void write_rcs(const std::filesystem::path& p, std::uint32_t n, std::span<const std::uint8_t> bytes) {
  auto os = open_out(p);
  put_u32(os, n);
  put_u32(os, std::uint32_t(bytes.size()));
  os.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

std::vector<std::uint8_t> read_rcs(const std::filesystem::path& p, std::uint32_t& n) {
  auto is = open_in(p);
  n = get_u32(is);
  std::vector<std::uint8_t> out(get_u32(is));
  if (!is.read(reinterpret_cast<char*>(out.data()), std::streamsize(out.size()))) {
    throw std::runtime_error("truncated " + p.string());
  }
  expect_eof(is, p);
  return out;
}

void encode_files(const std::filesystem::path& sym, const std::filesystem::path& gau,
                  const std::filesystem::path& rcs, RangeCoderFns fns) {
  if (!fns.encode) throw std::invalid_argument("encode_files: no coder");
  const auto s = read_sym(sym);
  std::vector<float> mu, sigma;
  read_gau(gau, mu, sigma);
  if (mu.size() != s.size()) throw std::invalid_argument("encode_files: .sym and .gau disagree on n");
  std::vector<std::uint8_t> out(64 + 4 * s.size());
  for (;;) {
    std::size_t len = out.size();
    const int st = fns.encode(s.data(), s.size(), mu.data(), sigma.data(), out.data(), &len);
    if (st == HDC_RC_OK) {
      out.resize(len);
      break;
    }
    if (st != HDC_RC_BUFFER_TOO_SMALL) throw std::runtime_error(std::string("range encode: ") + status_name(st));
    out.resize(out.size() * 2);
  }
  write_rcs(rcs, std::uint32_t(s.size()), out);
}

void decode_files(const std::filesystem::path& rcs, const std::filesystem::path& gau,
                  const std::filesystem::path& sym, RangeCoderFns fns) {
  if (!fns.decode) throw std::invalid_argument("decode_files: no coder");
  std::uint32_t n = 0;
  const auto bytes = read_rcs(rcs, n);
  std::vector<float> mu, sigma;
  read_gau(gau, mu, sigma);
  if (mu.size() != n) throw std::invalid_argument("decode_files: .rcs and .gau disagree on n");
  std::vector<std::int16_t> s(n);
  const int st = fns.decode(bytes.data(), bytes.size(), n, mu.data(), sigma.data(), s.data());
  if (st != HDC_RC_OK) throw DecodeError(std::string("range decode: ") + status_name(st));
  write_sym(sym, s);
}

}  // namespace hdc::bits
