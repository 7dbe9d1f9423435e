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

#include "hdc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace hdc {

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, std::size_t b) { return a * b; });
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), data_(std::move(values)) {
  if (data_.size() != shape_numel(shape_)) {
    throw std::invalid_argument("tensor: " + std::to_string(data_.size()) + " values do not fill shape " +
                                shape_str(shape_));
  }
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != numel()) {
    throw std::invalid_argument("reshape: " + shape_str(shape_) + " -> " + shape_str(shape));
  }
  return Tensor(std::move(shape), data_);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool Tensor::bitwise_equal(const Tensor& other) const noexcept {
  return shape_ == other.shape_ &&
         (data_.empty() || std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(double)) == 0);
}

double Tensor::sum() const noexcept {
  double s = 0.0;
  for (double v : data_) s += v;
  return s;
}

double Tensor::max_abs_diff(const Tensor& other) const {
  if (!same_shape(other)) throw std::invalid_argument("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) m = std::max(m, std::abs(data_[i] - other.data_[i]));
  return m;
}

Tensor channel_slice(const Tensor& x, std::size_t begin, std::size_t count) {
  if (x.rank() != 3 || begin + count > x.dim(0)) {
    throw std::invalid_argument("channel_slice: bad range for " + shape_str(x.shape()));
  }
  const std::size_t plane = x.dim(1) * x.dim(2);
  std::vector<double> out(x.data() + begin * plane, x.data() + (begin + count) * plane);
  return Tensor({count, x.dim(1), x.dim(2)}, std::move(out));
}

Tensor concat_channels(std::span<const Tensor> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_channels: no inputs");
  const std::size_t h = parts[0].dim(1), w = parts[0].dim(2);
  std::size_t c = 0;
  for (const auto& p : parts) {
    if (p.rank() != 3 || p.dim(1) != h || p.dim(2) != w) {
      throw std::invalid_argument("concat_channels: spatial mismatch " + shape_str(p.shape()));
    }
    c += p.dim(0);
  }
  std::vector<double> out;
  out.reserve(c * h * w);
  for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
  return Tensor({c, h, w}, std::move(out));
}

}  // namespace hdc
