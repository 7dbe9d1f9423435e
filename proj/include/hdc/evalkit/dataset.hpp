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

// Dataset preprocessing: YUV 4:2:0 to RGB (BT.709, limited range) and the
// per-dataset crops and GOP sizes.

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "hdc/tensor.hpp"

namespace hdc::evalkit {

struct Yuv420Frame {
  std::size_t width = 0, height = 0;
  std::vector<std::uint8_t> y, cb, cr;  // chroma planes are ceil(w/2) x ceil(h/2)
};

// Chroma is upsampled bilinearly with samples co-sited at the top-left luma
// sample of each 2x2 block, then the limited-range BT.709 matrix is applied.
// Returns [3, H, W] rounded to integers on [0, 255].
Tensor yuv420_to_rgb_bt709(const Yuv420Frame& f);

// Reads one planar I420 frame; returns nullopt at a clean end of stream.
std::optional<Yuv420Frame> read_yuv420(std::istream& is, std::size_t width, std::size_t height);

struct CropRule {
  enum class Kind { kIdentity, kMargins, kBottomRight };
  Kind kind = Kind::kIdentity;
  std::size_t top = 0, bottom = 0, left = 0, right = 0;  // kMargins
  std::size_t width = 0, height = 0;                      // kBottomRight
};

struct DatasetSpec {
  std::string name;
  CropRule crop;
  int gop = 0;
  int frames = 0;  // frames evaluated per sequence, 0 = all
  std::vector<int> views;  // source view indices used as (left, right)
};

DatasetSpec cityscapes();
DatasetSpec kitti();
DatasetSpec nagoya();
// By name: "cityscapes", "kitti" (either KITTI release) or "nagoya".
DatasetSpec dataset_by_name(const std::string& name);

// Crops a [C, H, W] frame per the rule.
Tensor crop_frame(const Tensor& frame, const CropRule& rule);

}  // namespace hdc::evalkit
