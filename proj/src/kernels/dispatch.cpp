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

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernels_internal.hpp"

namespace hdc::simd {
namespace {

Isa detect_best() {
#if defined(HDC_HAVE_AVX2)
  if (isa_supported(Isa::kAvx2)) return Isa::kAvx2;
#endif
  return Isa::kScalar;
}

Isa initial_isa() {
  if (const char* env = std::getenv("HDC_ISA")) {
    const std::string v(env);
    if (v == "scalar") return Isa::kScalar;
    if (v == "avx2" && isa_supported(Isa::kAvx2)) return Isa::kAvx2;
  }
  return detect_best();
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(HDC_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::runtime_error("kernel set not supported on this CPU: " + std::string(isa_name(isa)));
  }
#if defined(HDC_HAVE_AVX2)
  if (isa == Isa::kAvx2) return avx2_table();
#endif
  return scalar_table();
}

const KernelTable& kernels() { return kernels(active().load(std::memory_order_relaxed)); }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::runtime_error("kernel set not supported on this CPU: " + std::string(isa_name(isa)));
  }
  active().store(isa, std::memory_order_relaxed);
}

Isa active_isa() { return active().load(std::memory_order_relaxed); }

}  // namespace hdc::simd
