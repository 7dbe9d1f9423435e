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

#include "hdc/evalkit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hdc::evalkit {

namespace {

constexpr double kKr = 0.2126, kKb = 0.0722, kKg = 1.0 - kKr - kKb;

// Bilinear sample of a chroma plane at chroma coordinates (cy, cx), clamped.
double sample(const std::vector<std::uint8_t>& p, std::size_t cw, std::size_t ch, double cy, double cx) {
  const std::size_t y0 = std::size_t(cy), x0 = std::size_t(cx);
  const std::size_t y1 = std::min(y0 + 1, ch - 1), x1 = std::min(x0 + 1, cw - 1);
  const double ay = cy - double(y0), ax = cx - double(x0);
  return (1 - ay) * ((1 - ax) * p[y0 * cw + x0] + ax * p[y0 * cw + x1]) +
         ay * ((1 - ax) * p[y1 * cw + x0] + ax * p[y1 * cw + x1]);
}

}  // namespace

Tensor yuv420_to_rgb_bt709(const Yuv420Frame& f) {
  const std::size_t w = f.width, h = f.height, cw = (w + 1) / 2, ch = (h + 1) / 2;
  if (w == 0 || h == 0 || f.y.size() != w * h || f.cb.size() != cw * ch || f.cr.size() != cw * ch)
    throw std::invalid_argument("yuv420: plane sizes do not match the frame dimensions");
  Tensor rgb({3, h, w});
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j) {
      const double yn = (double(f.y[i * w + j]) - 16.0) / 219.0;
      const double cy = std::min(double(i) / 2.0, double(ch - 1)), cx = std::min(double(j) / 2.0, double(cw - 1));
      const double pb = (sample(f.cb, cw, ch, cy, cx) - 128.0) / 224.0;
      const double pr = (sample(f.cr, cw, ch, cy, cx) - 128.0) / 224.0;
      const double r = yn + 2.0 * (1.0 - kKr) * pr;
      const double b = yn + 2.0 * (1.0 - kKb) * pb;
      const double g = yn - (2.0 * kKb * (1.0 - kKb) / kKg) * pb - (2.0 * kKr * (1.0 - kKr) / kKg) * pr;
      const double c[3] = {r, g, b};
      for (std::size_t k = 0; k < 3; ++k) rgb.at(k, i, j) = std::clamp(std::nearbyint(c[k] * 255.0), 0.0, 255.0);
    }
  return rgb;
}

std::optional<Yuv420Frame> read_yuv420(std::istream& is, std::size_t width, std::size_t height) {
  Yuv420Frame f;
  f.width = width;
  f.height = height;
  const std::size_t cn = ((width + 1) / 2) * ((height + 1) / 2);
  f.y.resize(width * height);
  f.cb.resize(cn);
  f.cr.resize(cn);
  if (is.peek() == std::char_traits<char>::eof()) return std::nullopt;
  for (auto* p : {&f.y, &f.cb, &f.cr}) {
    if (!is.read(reinterpret_cast<char*>(p->data()), std::streamsize(p->size())))
      throw std::runtime_error("yuv420: truncated frame");
  }
  return f;
}

DatasetSpec cityscapes() {
  DatasetSpec d;
  d.name = "cityscapes";
  d.crop.kind = CropRule::Kind::kMargins;
  d.crop.top = 64;
  d.crop.bottom = 256;
  d.crop.left = 128;
  d.gop = 30;
  d.views = {0, 1};
  return d;
}

DatasetSpec kitti() {
  DatasetSpec d;
  d.name = "kitti";
  d.crop.kind = CropRule::Kind::kBottomRight;
  d.crop.width = 1216;
  d.crop.height = 320;
  d.gop = 21;
  d.views = {0, 1};
  return d;
}

DatasetSpec nagoya() {
  DatasetSpec d;
  d.name = "nagoya";
  d.gop = 32;
  d.frames = 96;
  d.views = {0, 2};
  return d;
}

DatasetSpec dataset_by_name(const std::string& name) {
  if (name == "cityscapes") return cityscapes();
  if (name == "kitti" || name == "kitti2012" || name == "kitti2015") return kitti();
  if (name == "nagoya") return nagoya();
  throw std::invalid_argument("unknown dataset '" + name + "'");
}

Tensor crop_frame(const Tensor& frame, const CropRule& rule) {
  if (frame.rank() != 3) throw std::invalid_argument("crop: expected [C, H, W]");
  const std::size_t c = frame.dim(0), h = frame.dim(1), w = frame.dim(2);
  std::size_t top = 0, left = 0, oh = h, ow = w;
  switch (rule.kind) {
    case CropRule::Kind::kIdentity:
      return frame;
    case CropRule::Kind::kMargins:
      if (rule.top + rule.bottom >= h || rule.left + rule.right >= w) throw std::invalid_argument("crop: source too small");
      top = rule.top;
      left = rule.left;
      oh = h - rule.top - rule.bottom;
      ow = w - rule.left - rule.right;
      break;
    case CropRule::Kind::kBottomRight:
      if (rule.height == 0 || rule.width == 0 || rule.height > h || rule.width > w)
        throw std::invalid_argument("crop: source too small");
      top = h - rule.height;
      left = w - rule.width;
      oh = rule.height;
      ow = rule.width;
      break;
  }
  Tensor out({c, oh, ow});
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j) out.at(k, i, j) = frame.at(k, top + i, left + j);
  return out;
}

}  // namespace hdc::evalkit
