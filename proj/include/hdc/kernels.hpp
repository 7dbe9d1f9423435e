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

// Inner loops of the codec, in a scalar reference flavour and SIMD flavours
// selected at runtime. Every variant vectorizes only across independent
// output elements and performs the per-element arithmetic in the same order
// as the scalar code, so gather/scatter/elementwise results are bitwise
// identical across variants. Only dot-product reductions (weight gradients)
// reassociate and differ in the last bits.

#include <cstddef>
#include <string_view>

namespace hdc::simd {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

// Phase-split padded layout used by the strided convolution kernels:
// element (c, r, ph, j) holds padded sample (row r, column j * stride + ph).
struct PhaseGeom {
  int channels = 0;
  int rows = 0;    // padded rows
  int stride = 1;  // number of column phases
  int cols = 0;    // entries per phase row
  std::size_t size() const { return std::size_t(channels) * rows * stride * cols; }
  std::size_t row_offset(int c, int r, int ph) const {
    return ((std::size_t(c) * rows + r) * stride + ph) * cols;
  }
};

// dst[o][h][w] = bias[o] + sum_{a,kh,kw} W(o,a,kh,kw) * src(a, h*s+kh, w*s+kw)
// with W(o,a,kh,kw) = weight[o*w_stride_out + a*w_stride_in + kh*k + kw].
struct GatherArgs {
  const double* src;
  PhaseGeom src_geom;
  const double* weight;
  std::ptrdiff_t w_stride_out;
  std::ptrdiff_t w_stride_in;
  int kernel;
  const double* bias;  // may be null
  double* dst;
  int out_channels, out_h, out_w;
};

// dst(o, h*s+kh, w*s+kw) += W(o,a,kh,kw) * src[a][h][w]; dst is phase-split
// and is accumulated into (caller initializes).
struct ScatterArgs {
  const double* src;
  int in_channels, in_h, in_w;
  const double* weight;
  std::ptrdiff_t w_stride_out;
  std::ptrdiff_t w_stride_in;
  int kernel;
  double* dst;
  PhaseGeom dst_geom;
};

// grad[a*ga + b*gb + kh*k + kw] += sum_{h,w} rows[a][h][w] * phase(b, h*s+kh, w*s+kw)
struct WeightGradArgs {
  const double* rows;
  int rows_channels, rows_h, rows_w;
  const double* phase;
  PhaseGeom phase_geom;
  int kernel;
  double* grad;
  std::ptrdiff_t g_stride_a;
  std::ptrdiff_t g_stride_b;
};

struct KernelTable {
  Isa isa;
  void (*gather)(const GatherArgs&);
  void (*scatter)(const ScatterArgs&);
  void (*weight_grad)(const WeightGradArgs&);
  // y[i] = y[i] + a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // z[i] = x[i] * y[i]
  void (*mul)(const double* x, const double* y, double* z, std::size_t n);
  // z[i] = x[i] + y[i]
  void (*add)(const double* x, const double* y, double* z, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
};

bool isa_supported(Isa isa);
const KernelTable& kernels(Isa isa);
// The active table: best supported ISA unless pinned with set_active_isa or
// the HDC_ISA environment variable ("scalar" / "avx2").
const KernelTable& kernels();
void set_active_isa(Isa isa);
Isa active_isa();

// Scoped pin of the active ISA, restoring the previous one on exit.
class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa) : prev_(active_isa()) { set_active_isa(isa); }
  ~ScopedIsa() { set_active_isa(prev_); }
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  Isa prev_;
};

}  // namespace hdc::simd
