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

// GOP orchestration and the bitstream container.
//
// Container layout, little-endian:
//   header (30 bytes)
//     "HDSV" | u16 version | u16 gop | u32 width | u32 height | u32 frames |
//     u8 intra kind | u8 flags | u8 serializer | u8 reserved | u16 slices |
//     u32 weight fingerprint
//   frames x record
//     u8 type (0 intra, 1 predicted) | u8 reserved | u16 segment count |
//     count x u32 length | payloads
//   u32 CRC-32 of everything before it
//
// Intra records hold two segments (left, right). Predicted records hold
//   mv z L, mv z R, mv slices in coding order (L1 R1 L2 R2 ...),
//   ctx z L, ctx z R, ctx slices in coding order.

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "hdc/codec/model.hpp"
#include "hdc/serializer.hpp"

namespace hdc::codec {

inline constexpr std::uint16_t kContainerVersion = 1;
inline constexpr std::size_t kHeaderBytes = 30;

enum class FrameType : std::uint8_t { kIntra = 0, kPredicted = 1 };

enum Flags : std::uint8_t {
  kFlagNoAttention = 1 << 0,
  kFlagNoShift = 1 << 1,
  kFlagNoFer = 1 << 2,
  kFlagNoCrossView = 1 << 3,
};

struct ContainerHeader {
  std::uint16_t version = kContainerVersion;
  std::uint16_t gop = 1;
  std::uint32_t width = 0, height = 0, frames = 0;
  std::uint8_t intra = 0, flags = 0, serializer = 0;
  std::uint16_t slices = 0;
  std::uint32_t fingerprint = 0;
  bool operator==(const ContainerHeader&) const = default;
};

struct FrameRecord {
  FrameType type = FrameType::kIntra;
  std::vector<std::vector<std::uint8_t>> segments;
  bool operator==(const FrameRecord&) const = default;
};

struct Container {
  ContainerHeader header;
  std::vector<FrameRecord> frames;

  std::vector<std::uint8_t> serialize() const;
  // Throws bits::DecodeError on bad magic, version, checksum or layout.
  static Container parse(std::span<const std::uint8_t> bytes);

  std::size_t payload_bytes() const;
  // Header, record headers and checksum.
  std::size_t overhead_bytes() const;
  std::size_t total_bytes() const { return payload_bytes() + overhead_bytes(); }
  bool operator==(const Container&) const = default;
};

std::uint8_t switches_to_flags(const ModelSwitches& sw);
ModelSwitches flags_to_switches(std::uint8_t flags);

struct StereoFrame {
  Tensor left, right;  // [3, H, W] in [0, 1]
};

// Replicates the last row/column up to the next multiple of m.
Tensor pad_to_multiple(const Tensor& x, std::size_t m);
Tensor crop(const Tensor& x, std::size_t h, std::size_t w);

struct EncodeOptions {
  int gop = 21;
  ModelSwitches switches;
  std::uint8_t serializer = 0;
  // Overrides the serializer picked by id; its id() is what the header records.
  std::shared_ptr<const bits::SliceSerializer> serializer_impl;
};

// Latents seen by one side of the codec for one P-frame, per view.
struct LatentTrace {
  std::array<Tensor, 2> mv_y_hat, ctx_y_hat;
};

struct EncodeResult {
  Container container;
  std::vector<StereoFrame> reconstruction;  // cropped
  std::vector<LatentTrace> latents;         // one per frame, empty for intra
  double estimated_bits = 0.0;              // entropy-model estimate over P-frame slices and hyper latents
};

struct DecodeResult {
  std::vector<StereoFrame> frames;
  std::vector<LatentTrace> latents;
};

EncodeResult encode_gop(const StereoModel& model, std::span<const StereoFrame> clip, const EncodeOptions& opt);
// serializer overrides the one named in the header; ids must agree.
DecodeResult decode_gop(const StereoModel& model, const Container& c, const bits::SliceSerializer* serializer = nullptr);

// Total container bits / (frames * 2 * H * W), H and W unpadded.
double container_bpp(const Container& c);

}  // namespace hdc::codec
