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

#include "hdc/codec/gop.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <stdexcept>

#include "hdc/bitstream.hpp"
#include "hdc/serializer.hpp"

namespace hdc::codec {

namespace {

using bits::DecodeError;

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void bytes(std::span<const std::uint8_t> b) { buf.insert(buf.end(), b.begin(), b.end()); }
  std::vector<std::uint8_t> buf;

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf.push_back(std::uint8_t(v >> (8 * i)));
  }
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> d) : d_(d) {}
  std::uint8_t u8() { return std::uint8_t(get(1)); }
  std::uint16_t u16() { return std::uint16_t(get(2)); }
  std::uint32_t u32() { return std::uint32_t(get(4)); }
  std::span<const std::uint8_t> bytes(std::size_t n) {
    need(n);
    auto s = d_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t left() const { return d_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (left() < n) throw DecodeError("container truncated");
  }
  std::uint64_t get(int n) {
    need(std::size_t(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t(d_[pos_ + std::size_t(i)]) << (8 * i);
    pos_ += std::size_t(n);
    return v;
  }
  std::span<const std::uint8_t> d_;
  std::size_t pos_ = 0;
};

std::uint32_t crc(std::span<const std::uint8_t> b) {
  uLong c = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t off = 0;
  while (off < b.size()) {
    const std::size_t n = std::min<std::size_t>(b.size() - off, 1u << 30);
    c = crc32(c, b.data() + off, uInt(n));
    off += n;
  }
  return std::uint32_t(c);
}

constexpr char kMagic[4] = {'H', 'D', 'S', 'V'};

std::size_t slice_pos(View v, int n) { return std::size_t(2 * (n - 1) + (v == View::kRight ? 1 : 0)); }

std::size_t p_segments(int slices) { return std::size_t(2 * (2 + 2 * slices)); }

}  // namespace

std::vector<std::uint8_t> Container::serialize() const {
  ByteWriter w;
  for (char c : kMagic) w.u8(std::uint8_t(c));
  w.u16(header.version);
  w.u16(header.gop);
  w.u32(header.width);
  w.u32(header.height);
  w.u32(header.frames);
  w.u8(header.intra);
  w.u8(header.flags);
  w.u8(header.serializer);
  w.u8(0);
  w.u16(header.slices);
  w.u32(header.fingerprint);
  for (const auto& f : frames) {
    if (f.segments.size() > 0xffff) throw std::length_error("container: too many segments");
    w.u8(std::uint8_t(f.type));
    w.u8(0);
    w.u16(std::uint16_t(f.segments.size()));
    for (const auto& s : f.segments) {
      if (s.size() > 0xffffffffu) throw std::length_error("container: segment too large");
      w.u32(std::uint32_t(s.size()));
    }
    for (const auto& s : f.segments) w.bytes(s);
  }
  w.u32(crc(w.buf));
  return std::move(w.buf);
}

Container Container::parse(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes + 4) throw DecodeError("container truncated");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw DecodeError("container: bad magic");
  const auto body = bytes.first(bytes.size() - 4);
  ByteReader tail(bytes.last(4));
  if (tail.u32() != crc(body)) throw DecodeError("container: checksum mismatch");

  ByteReader r(body);
  r.bytes(4);
  Container c;
  auto& h = c.header;
  h.version = r.u16();
  if (h.version != kContainerVersion) throw DecodeError("container: unsupported version " + std::to_string(h.version));
  h.gop = r.u16();
  h.width = r.u32();
  h.height = r.u32();
  h.frames = r.u32();
  h.intra = r.u8();
  h.flags = r.u8();
  h.serializer = r.u8();
  if (r.u8() != 0) throw DecodeError("container: reserved byte set");
  h.slices = r.u16();
  h.fingerprint = r.u32();
  if (h.gop == 0) throw DecodeError("container: zero gop");
  for (std::uint32_t t = 0; t < h.frames; ++t) {
    FrameRecord f;
    const std::uint8_t type = r.u8();
    if (type > 1) throw DecodeError("container: unknown frame type");
    f.type = FrameType(type);
    if (r.u8() != 0) throw DecodeError("container: reserved byte set");
    const std::uint16_t count = r.u16();
    std::vector<std::uint32_t> len(count);
    for (auto& l : len) l = r.u32();
    for (std::uint32_t l : len) {
      auto s = r.bytes(l);
      f.segments.emplace_back(s.begin(), s.end());
    }
    c.frames.push_back(std::move(f));
  }
  if (r.left() != 0) throw DecodeError("container: trailing bytes");
  return c;
}

std::size_t Container::payload_bytes() const {
  std::size_t n = 0;
  for (const auto& f : frames)
    for (const auto& s : f.segments) n += s.size();
  return n;
}

std::size_t Container::overhead_bytes() const {
  std::size_t n = kHeaderBytes + 4;
  for (const auto& f : frames) n += 4 + 4 * f.segments.size();
  return n;
}

std::uint8_t switches_to_flags(const ModelSwitches& sw) {
  std::uint8_t f = 0;
  if (sw.ablation == fer::Ablation::kNoAttention) f |= kFlagNoAttention;
  if (sw.ablation == fer::Ablation::kNoShift) f |= kFlagNoShift;
  if (!sw.fer) f |= kFlagNoFer;
  if (!sw.cross_view) f |= kFlagNoCrossView;
  return f;
}

ModelSwitches flags_to_switches(std::uint8_t flags) {
  if ((flags & kFlagNoAttention) && (flags & kFlagNoShift)) throw DecodeError("container: conflicting ablation flags");
  if (flags & ~std::uint8_t(0x0f)) throw DecodeError("container: unknown flags");
  ModelSwitches sw;
  if (flags & kFlagNoAttention) sw.ablation = fer::Ablation::kNoAttention;
  if (flags & kFlagNoShift) sw.ablation = fer::Ablation::kNoShift;
  sw.fer = !(flags & kFlagNoFer);
  sw.cross_view = !(flags & kFlagNoCrossView);
  return sw;
}

Tensor pad_to_multiple(const Tensor& x, std::size_t m) {
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t hp = (h + m - 1) / m * m, wp = (w + m - 1) / m * m;
  if (hp == h && wp == w) return x;
  Tensor out({c, hp, wp});
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t i = 0; i < hp; ++i)
      for (std::size_t j = 0; j < wp; ++j) out.at(k, i, j) = x.at(k, std::min(i, h - 1), std::min(j, w - 1));
  return out;
}

Tensor crop(const Tensor& x, std::size_t h, std::size_t w) {
  if (x.dim(1) == h && x.dim(2) == w) return x;
  Tensor out({x.dim(0), h, w});
  for (std::size_t k = 0; k < x.dim(0); ++k)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) out.at(k, i, j) = x.at(k, i, j);
  return out;
}

EncodeResult encode_gop(const StereoModel& model, std::span<const StereoFrame> clip, const EncodeOptions& opt) {
  if (clip.empty()) throw std::invalid_argument("encode_gop: empty clip");
  if (opt.gop < 1 || opt.gop > 0xffff) throw std::invalid_argument("encode_gop: gop out of range");
  const Shape shape = clip[0].left.shape();
  if (shape.size() != 3 || shape[0] != 3 || shape[1] == 0 || shape[2] == 0)
    throw std::invalid_argument("encode_gop: frames must be [3, H, W]");
  for (const auto& f : clip) {
    if (f.left.shape() != shape || f.right.shape() != shape) throw std::invalid_argument("encode_gop: frame shape mismatch");
    if (!f.left.all_finite() || !f.right.all_finite()) throw std::invalid_argument("encode_gop: non-finite input");
  }
  std::shared_ptr<const bits::SliceSerializer> ser = opt.serializer_impl;
  if (!ser) ser = bits::make_serializer(opt.serializer);
  const CodecConfig& cfg = model.config();
  const std::size_t h = shape[1], w = shape[2];
  NoGradGuard ng;

  EncodeResult res;
  auto& hdr = res.container.header;
  hdr.gop = std::uint16_t(opt.gop);
  hdr.width = std::uint32_t(w);
  hdr.height = std::uint32_t(h);
  hdr.frames = std::uint32_t(clip.size());
  hdr.intra = std::uint8_t(model.intra().kind());
  hdr.flags = switches_to_flags(opt.switches);
  hdr.serializer = ser->id();
  hdr.slices = std::uint16_t(cfg.slices);
  hdr.fingerprint = model.fingerprint();

  DecodedBuffer buf;
  for (std::size_t t = 0; t < clip.size(); ++t) {
    const Pair x{constant(pad_to_multiple(clip[t].left, 64)), constant(pad_to_multiple(clip[t].right, 64))};
    FrameRecord rec;
    LatentTrace trace;
    if (t % std::size_t(opt.gop) == 0) {
      rec.type = FrameType::kIntra;
      for (int v = 0; v < 2; ++v) {
        IntraCoded ic = model.intra().encode(x[v].value());
        rec.segments.push_back(std::move(ic.bytes));
        buf.x_hat[v] = constant(std::move(ic.x_hat));
        buf.features[v] = model.intra_features(buf.x_hat[v]);
      }
    } else {
      rec.type = FrameType::kPredicted;
      const std::size_t ns = std::size_t(2 * cfg.slices);
      std::vector<std::vector<std::uint8_t>> mv_seg(ns), ctx_seg(ns);
      auto channel = [&](std::vector<std::vector<std::uint8_t>>& dst) {
        em::SymbolChannel ch;
        ch.put = [&dst, &ser](View v, int n, const std::vector<std::int32_t>& sym, const Tensor& sigma) {
          dst[slice_pos(v, n)] = ser->encode(sym, sigma.values());
        };
        return ch;
      };
      const em::SymbolChannel mv_io = channel(mv_seg), ctx_io = channel(ctx_seg);
      const StreamIO io{&mv_io, &ctx_io, nullptr, nullptr};
      PFrameOut out = model.p_frame(em::CoderMode::kEncode, x, buf, opt.switches, &io);
      for (const em::EmOutput* e : {&out.mv_em, &out.ctx_em}) {
        for (int v = 0; v < 2; ++v) rec.segments.push_back(bits::encode_bypass(e->view[v].z_symbols));
        for (auto& s : (e == &out.mv_em ? mv_seg : ctx_seg)) rec.segments.push_back(std::move(s));
        res.estimated_bits += e->total_bits().value()[0];
      }
      for (int v = 0; v < 2; ++v) {
        trace.mv_y_hat[v] = out.mv_em.view[v].y_hat.value();
        trace.ctx_y_hat[v] = out.ctx_em.view[v].y_hat.value();
      }
      buf.x_hat = out.x_hat;
      buf.features = out.features;
    }
    res.container.frames.push_back(std::move(rec));
    res.latents.push_back(std::move(trace));
    res.reconstruction.push_back({crop(buf.x_hat[0].value(), h, w), crop(buf.x_hat[1].value(), h, w)});
  }
  return res;
}

DecodeResult decode_gop(const StereoModel& model, const Container& c, const bits::SliceSerializer* serializer) {
  const auto& hdr = c.header;
  const CodecConfig& cfg = model.config();
  if (hdr.fingerprint != model.fingerprint()) throw DecodeError("decode: stream was made with different weights");
  if (hdr.slices != cfg.slices) throw DecodeError("decode: slice count mismatch");
  if (hdr.intra != std::uint8_t(model.intra().kind())) throw DecodeError("decode: intra codec mismatch");
  if (hdr.frames != c.frames.size() || hdr.width == 0 || hdr.height == 0 || hdr.gop == 0)
    throw DecodeError("decode: inconsistent header");
  const ModelSwitches sw = flags_to_switches(hdr.flags);
  std::unique_ptr<bits::SliceSerializer> owned;
  const bits::SliceSerializer* ser = serializer;
  if (ser && ser->id() != hdr.serializer) throw DecodeError("decode: serializer id mismatch");
  if (!ser) {
    try {
      owned = bits::make_serializer(hdr.serializer);
    } catch (const std::exception& e) {
      throw DecodeError(std::string("decode: ") + e.what());
    }
    ser = owned.get();
  }
  const std::size_t h = hdr.height, w = hdr.width;
  const std::size_t hp = (h + 63) / 64 * 64, wp = (w + 63) / 64 * 64;
  NoGradGuard ng;

  DecodeResult res;
  DecodedBuffer buf;
  for (std::size_t t = 0; t < c.frames.size(); ++t) {
    const FrameRecord& rec = c.frames[t];
    const bool intra = t % hdr.gop == 0;
    if ((rec.type == FrameType::kIntra) != intra) throw DecodeError("decode: unexpected frame type");
    LatentTrace trace;
    if (intra) {
      if (rec.segments.size() != 2) throw DecodeError("decode: intra record needs two segments");
      for (int v = 0; v < 2; ++v) {
        buf.x_hat[v] = constant(model.intra().decode(rec.segments[std::size_t(v)], hp, wp, v));
        buf.features[v] = model.intra_features(buf.x_hat[v]);
      }
    } else {
      const std::size_t ns = std::size_t(2 * cfg.slices);
      if (rec.segments.size() != p_segments(cfg.slices)) throw DecodeError("decode: wrong segment count");
      const std::size_t mv_base = 0, ctx_base = 2 + ns;
      auto hyper = [&](std::size_t base, int channels) {
        const std::size_t n = std::size_t(channels) * (hp / 64) * (wp / 64);
        std::array<std::vector<std::int32_t>, 2> z;
        for (std::size_t v = 0; v < 2; ++v) z[v] = bits::decode_bypass(rec.segments[base + v], n, int(base + v));
        return z;
      };
      const auto mv_z = hyper(mv_base, cfg.mv_hyper_channels);
      const auto ctx_z = hyper(ctx_base, cfg.hyper_channels);
      auto channel = [&](std::size_t base) {
        em::SymbolChannel ch;
        ch.get = [&rec, ser, base](View v, int n, std::size_t count, const Tensor& sigma) {
          const std::size_t idx = base + 2 + slice_pos(v, n);
          return ser->decode(rec.segments[idx], count, sigma.values(), int(idx));
        };
        return ch;
      };
      const em::SymbolChannel mv_io = channel(mv_base), ctx_io = channel(ctx_base);
      const StreamIO io{&mv_io, &ctx_io, &mv_z, &ctx_z};
      PFrameOut out = model.p_frame(em::CoderMode::kDecode, {}, buf, sw, &io, hp, wp);
      for (int v = 0; v < 2; ++v) {
        trace.mv_y_hat[v] = out.mv_em.view[v].y_hat.value();
        trace.ctx_y_hat[v] = out.ctx_em.view[v].y_hat.value();
      }
      buf.x_hat = out.x_hat;
      buf.features = out.features;
    }
    res.latents.push_back(std::move(trace));
    res.frames.push_back({crop(buf.x_hat[0].value(), h, w), crop(buf.x_hat[1].value(), h, w)});
  }
  return res;
}

double container_bpp(const Container& c) {
  const double px = double(c.header.frames) * 2.0 * double(c.header.width) * double(c.header.height);
  if (px <= 0) throw std::invalid_argument("bpp: empty container");
  return double(c.total_bytes()) * 8.0 / px;
}

}  // namespace hdc::codec
