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

// Included inside a per-ISA anonymous namespace. `Ops` supplies axpy/dot
// for one instruction set; the loop nests are shared so every variant
// accumulates each output element in the same (a, kh, kw) order.

template <class Ops>
void GatherImpl(const GatherArgs& g) {
  const int k = g.kernel;
  const int s = g.src_geom.stride;
  const std::size_t plane = std::size_t(g.out_h) * g.out_w;
  for (int o = 0; o < g.out_channels; ++o) {
    double* out = g.dst + o * plane;
    const double b = g.bias ? g.bias[o] : 0.0;
    for (std::size_t i = 0; i < plane; ++i) out[i] = b;
    for (int a = 0; a < g.src_geom.channels; ++a) {
      const double* wk = g.weight + o * g.w_stride_out + a * g.w_stride_in;
      for (int kh = 0; kh < k; ++kh) {
        for (int h = 0; h < g.out_h; ++h) {
          double* out_row = out + std::size_t(h) * g.out_w;
          for (int kw = 0; kw < k; ++kw) {
            const double wv = wk[kh * k + kw];
            const double* src_row = g.src + g.src_geom.row_offset(a, h * s + kh, kw % s) + kw / s;
            Ops::axpy(wv, src_row, out_row, std::size_t(g.out_w));
          }
        }
      }
    }
  }
}

template <class Ops>
void ScatterImpl(const ScatterArgs& sa) {
  const int k = sa.kernel;
  const int s = sa.dst_geom.stride;
  const std::size_t plane = std::size_t(sa.in_h) * sa.in_w;
  for (int o = 0; o < sa.dst_geom.channels; ++o) {
    for (int a = 0; a < sa.in_channels; ++a) {
      const double* wk = sa.weight + o * sa.w_stride_out + a * sa.w_stride_in;
      const double* in = sa.src + a * plane;
      for (int kh = 0; kh < k; ++kh) {
        for (int h = 0; h < sa.in_h; ++h) {
          const double* in_row = in + std::size_t(h) * sa.in_w;
          for (int kw = 0; kw < k; ++kw) {
            double* dst_row = sa.dst + sa.dst_geom.row_offset(o, h * s + kh, kw % s) + kw / s;
            Ops::axpy(wk[kh * k + kw], in_row, dst_row, std::size_t(sa.in_w));
          }
        }
      }
    }
  }
}

template <class Ops>
void WeightGradImpl(const WeightGradArgs& wg) {
  const int k = wg.kernel;
  const int s = wg.phase_geom.stride;
  const std::size_t plane = std::size_t(wg.rows_h) * wg.rows_w;
  for (int a = 0; a < wg.rows_channels; ++a) {
    const double* rows = wg.rows + a * plane;
    for (int b = 0; b < wg.phase_geom.channels; ++b) {
      double* gk = wg.grad + a * wg.g_stride_a + b * wg.g_stride_b;
      for (int kh = 0; kh < k; ++kh) {
        for (int kw = 0; kw < k; ++kw) {
          double acc = 0.0;
          for (int h = 0; h < wg.rows_h; ++h) {
            const double* p = wg.phase + wg.phase_geom.row_offset(b, h * s + kh, kw % s) + kw / s;
            acc += Ops::dot(rows + std::size_t(h) * wg.rows_w, p, std::size_t(wg.rows_w));
          }
          gk[kh * k + kw] += acc;
        }
      }
    }
  }
}
