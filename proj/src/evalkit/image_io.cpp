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

#include "hdc/evalkit/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "hdc/evalkit/dataset.hpp"

namespace hdc::evalkit {

namespace fs = std::filesystem;

Tensor read_png(const fs::path& p) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, p.string().c_str()))
    throw std::runtime_error("cannot read " + p.string() + ": " + img.message);
  img.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> px(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, px.data(), 0, nullptr)) {
    png_image_free(&img);
    throw std::runtime_error("cannot decode " + p.string() + ": " + img.message);
  }
  const std::size_t h = img.height, w = img.width;
  Tensor t({3, h, w});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < h * w; ++i) t[c * h * w + i] = px[i * 3 + c];
  return t;
}

void write_png_rgb8(const fs::path& p, int width, int height, const std::vector<std::uint8_t>& px) {
  if (width <= 0 || height <= 0 || px.size() != std::size_t(width) * std::size_t(height) * 3)
    throw std::invalid_argument("write_png: bad image size");
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = png_uint_32(width);
  img.height = png_uint_32(height);
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, p.string().c_str(), 0, px.data(), 0, nullptr))
    throw std::runtime_error("cannot write " + p.string() + ": " + img.message);
}

void write_png(const fs::path& p, const Tensor& rgb255) {
  if (rgb255.shape().size() != 3 || rgb255.dim(0) != 3) throw std::invalid_argument("write_png: expected [3, H, W]");
  const std::size_t h = rgb255.dim(1), w = rgb255.dim(2);
  std::vector<std::uint8_t> px(h * w * 3);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < h * w; ++i)
      px[i * 3 + c] = std::uint8_t(std::clamp(std::nearbyint(rgb255[c * h * w + i]), 0.0, 255.0));
  write_png_rgb8(p, int(w), int(h), px);
}

namespace {

std::vector<fs::path> pngs_in(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("missing directory " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    if (e.is_regular_file() && ext == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Tensor unit(Tensor t) {
  for (double& v : t.values()) v /= 255.0;
  return t;
}

}  // namespace

std::vector<codec::StereoFrame> load_stereo_dir(const fs::path& dir, std::size_t max_frames) {
  const auto l = pngs_in(dir / "left"), r = pngs_in(dir / "right");
  if (l.size() != r.size()) throw std::runtime_error(dir.string() + ": left and right frame counts differ");
  if (l.empty()) throw std::runtime_error(dir.string() + ": no frames");
  std::size_t n = l.size();
  if (max_frames) n = std::min(n, max_frames);
  std::vector<codec::StereoFrame> out;
  for (std::size_t t = 0; t < n; ++t) {
    codec::StereoFrame f{unit(read_png(l[t])), unit(read_png(r[t]))};
    if (f.left.shape() != f.right.shape()) throw std::runtime_error(l[t].string() + ": views differ in size");
    if (!out.empty() && f.left.shape() != out.front().left.shape())
      throw std::runtime_error(l[t].string() + ": frame size changes mid-sequence");
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<codec::StereoFrame> load_stereo_yuv(const fs::path& file, std::size_t width, std::size_t height,
                                                std::size_t max_frames) {
  if (width == 0 || height == 0 || width % 2) throw std::invalid_argument("stereo yuv: width must be even and nonzero");
  std::ifstream is(file, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + file.string());
  std::vector<codec::StereoFrame> out;
  const std::size_t half = width / 2;
  while (!max_frames || out.size() < max_frames) {
    const auto f = read_yuv420(is, width, height);
    if (!f) break;
    const Tensor rgb = yuv420_to_rgb_bt709(*f);
    CropRule left{CropRule::Kind::kMargins, 0, 0, 0, half, 0, 0};
    CropRule right{CropRule::Kind::kMargins, 0, 0, half, 0, 0, 0};
    out.push_back({unit(crop_frame(rgb, left)), unit(crop_frame(rgb, right))});
  }
  if (out.empty()) throw std::runtime_error(file.string() + ": no frames");
  return out;
}

void save_stereo_dir(const fs::path& dir, const std::vector<codec::StereoFrame>& frames) {
  fs::create_directories(dir / "left");
  fs::create_directories(dir / "right");
  char name[32];
  for (std::size_t t = 0; t < frames.size(); ++t) {
    std::snprintf(name, sizeof name, "%06zu.png", t);
    Tensor l = frames[t].left, r = frames[t].right;
    for (double& v : l.values()) v *= 255.0;
    for (double& v : r.values()) v *= 255.0;
    write_png(dir / "left" / name, l);
    write_png(dir / "right" / name, r);
  }
}

}  // namespace hdc::evalkit
