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

// Compiled with -mavx2. Only raw pointers cross this file's boundary so no
// inline library code built for AVX2 can leak into the generic objects.
#include <immintrin.h>

#include "kernels_internal.hpp"

namespace hdc::simd {
namespace {

struct Avx2Ops {
  static void axpy(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
      const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
      _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) y[i] = y[i] + a * x[i];
  }
  static double dot(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
  }
};

#include "conv_impl.inl"

void Gather(const GatherArgs& a) { GatherImpl<Avx2Ops>(a); }
void Scatter(const ScatterArgs& a) { ScatterImpl<Avx2Ops>(a); }
void WeightGrad(const WeightGradArgs& a) { WeightGradImpl<Avx2Ops>(a); }

void Axpy(double a, const double* x, double* y, std::size_t n) { Avx2Ops::axpy(a, x, y, n); }

void Mul(const double* x, const double* y, double* z, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(z + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) z[i] = x[i] * y[i];
}

void Add(const double* x, const double* y, double* z, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(z + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) z[i] = x[i] + y[i];
}

double Dot(const double* x, const double* y, std::size_t n) { return Avx2Ops::dot(x, y, n); }

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{Isa::kAvx2, Gather, Scatter, WeightGrad, Axpy, Mul, Add, Dot};
  return table;
}

}  // namespace hdc::simd
