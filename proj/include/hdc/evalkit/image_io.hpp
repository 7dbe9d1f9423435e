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

// 8-bit RGB PNG files and stereo frame sequences on disk.
//
// A stereo directory holds left/ and right/ subdirectories with one PNG per
// frame; frames pair up by sorted file name. A stereo video is a raw I420
// file of side-by-side frames (left half, right half).

#include <cstdint>
#include <filesystem>
#include <vector>

#include "hdc/codec/gop.hpp"

namespace hdc::evalkit {

// [3, H, W] with values 0..255.
Tensor read_png(const std::filesystem::path& p);
void write_png(const std::filesystem::path& p, const Tensor& rgb255);
// Interleaved RGB bytes.
void write_png_rgb8(const std::filesystem::path& p, int width, int height, const std::vector<std::uint8_t>& px);

// Frames scaled to [0, 1].
std::vector<codec::StereoFrame> load_stereo_dir(const std::filesystem::path& dir, std::size_t max_frames = 0);
std::vector<codec::StereoFrame> load_stereo_yuv(const std::filesystem::path& file, std::size_t width,
                                                std::size_t height, std::size_t max_frames = 0);
// Rounds to 8 bits; frame t goes to left/NNNNNN.png and right/NNNNNN.png.
void save_stereo_dir(const std::filesystem::path& dir, const std::vector<codec::StereoFrame>& frames);

}  // namespace hdc::evalkit
