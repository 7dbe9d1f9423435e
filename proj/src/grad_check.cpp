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

#include "hdc/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace hdc::train {

GradCheckReport grad_check(const std::function<Var(std::vector<Var>&)>& fn, std::vector<Var>& inputs, double h,
                           const std::vector<std::string>& names) {
  for (auto& v : inputs) {
    v.set_requires_grad(true);
    v.zero_grad();
  }
  fn(inputs).backward();
  std::vector<Tensor> analytic;
  for (auto& v : inputs) analytic.push_back(v.grad());

  GradCheckReport report;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Tensor& x = inputs[i].mutable_value();
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t j = 0; j < x.numel(); ++j) {
      const double saved = x[j];
      double fp, fm;
      {
        NoGradGuard no_grad;
        x[j] = saved + h;
        fp = fn(inputs).value()[0];
        x[j] = saved - h;
        fm = fn(inputs).value()[0];
      }
      x[j] = saved;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic[i][j];
      diff2 += (a - numeric) * (a - numeric);
      a2 += a * a;
      n2 += numeric * numeric;
    }
    const double rel = std::sqrt(diff2) / std::max({std::sqrt(a2), std::sqrt(n2), 1e-12});
    report.per_input.push_back(rel);
    if (rel >= report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_input = i < names.size() ? names[i] : "input " + std::to_string(i);
    }
  }
  return report;
}

}  // namespace hdc::train
