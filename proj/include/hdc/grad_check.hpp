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

#include <functional>
#include <string>
#include <vector>

#include "hdc/autograd.hpp"

namespace hdc::train {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_input;
  std::vector<double> per_input;  // relative error per checked input
};

// Compares reverse-mode gradients of a scalar function against central
// finite differences with step h. The relative error of one input is
// ||analytic - numeric||_2 / max(||analytic||_2, ||numeric||_2, 1e-12);
// the report carries the maximum over inputs. Inputs are modified during
// probing and restored before returning.
GradCheckReport grad_check(const std::function<Var(std::vector<Var>&)>& fn, std::vector<Var>& inputs,
                           double h = 1e-4, const std::vector<std::string>& names = {});

}  // namespace hdc::train
