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

#include "hdc/tensor.hpp"

namespace hdc::conv {

// x: [Ci, H, W], weight: [Co, Ci, k, k], bias: [Co] or empty.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride, int pad);

// Any of the output pointers may be null. Gradients are accumulated.
void conv2d_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out, int stride, int pad,
                     Tensor* grad_x, Tensor* grad_weight, Tensor* grad_bias);

// x: [Ci, H, W], weight: [Ci, Co, k, k]. Output spatial size is
// (H - 1) * stride - 2 * pad + k + out_pad.
Tensor conv_transpose2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride, int pad,
                        int out_pad);

void conv_transpose2d_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out, int stride,
                               int pad, Tensor* grad_x, Tensor* grad_weight, Tensor* grad_bias);

int conv_out_size(int in, int kernel, int stride, int pad);
int conv_transpose_out_size(int in, int kernel, int stride, int pad, int out_pad);

}  // namespace hdc::conv
