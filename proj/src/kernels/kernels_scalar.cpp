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

#include "kernels_internal.hpp"

namespace hdc::simd {
namespace {

struct ScalarOps {
  static void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
  }
  static double dot(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
  }
};

#include "conv_impl.inl"

void Gather(const GatherArgs& a) { GatherImpl<ScalarOps>(a); }
void Scatter(const ScatterArgs& a) { ScatterImpl<ScalarOps>(a); }
void WeightGrad(const WeightGradArgs& a) { WeightGradImpl<ScalarOps>(a); }

void Axpy(double a, const double* x, double* y, std::size_t n) { ScalarOps::axpy(a, x, y, n); }

void Mul(const double* x, const double* y, double* z, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) z[i] = x[i] * y[i];
}

void Add(const double* x, const double* y, double* z, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) z[i] = x[i] + y[i];
}

double Dot(const double* x, const double* y, std::size_t n) { return ScalarOps::dot(x, y, n); }

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::kScalar, Gather, Scatter, WeightGrad, Axpy, Mul, Add, Dot};
  return table;
}

}  // namespace hdc::simd
