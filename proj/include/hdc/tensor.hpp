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

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace hdc {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

// Dense row-major array of doubles. Rank is whatever the shape says; the
// codec uses rank 1 (scalars/biases), 3 ([C, H, W]) and 4 ([D, C, H, W]).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double v) { return Tensor({1}, v); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t numel() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  const std::vector<double>& vec() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t c, std::size_t h, std::size_t w) {
    return data_[(c * shape_[1] + h) * shape_[2] + w];
  }
  double at(std::size_t c, std::size_t h, std::size_t w) const {
    return data_[(c * shape_[1] + h) * shape_[2] + w];
  }
  double& at(std::size_t d, std::size_t c, std::size_t h, std::size_t w) {
    return data_[((d * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  double at(std::size_t d, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[((d * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  // Same data, new shape with equal element count.
  Tensor reshaped(Shape shape) const;
  void fill(double v);

  bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }
  bool all_finite() const noexcept;
  // Bitwise comparison of the payload (distinguishes -0.0 and NaN payloads).
  bool bitwise_equal(const Tensor& other) const noexcept;

  double sum() const noexcept;
  double max_abs_diff(const Tensor& other) const;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Channel-range view copies for [C, H, W] tensors.
Tensor channel_slice(const Tensor& x, std::size_t begin, std::size_t count);
Tensor concat_channels(std::span<const Tensor> parts);

}  // namespace hdc
