// Copyright 2026 The Cloudadapt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cloudadapt/numerics/gradcheck.h"

#include <algorithm>
#include <cmath>

#include "cloudadapt/common/error.h"

namespace cloudadapt::numerics {
namespace {

double Evaluate(const ScalarFn& fn, const std::vector<Tensor>& inputs) {
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const Tensor& t : inputs) vars.push_back(Var::View(t));
  return fn(vars).value().item();
}

}  // namespace

GradCheckResult CheckGradients(const ScalarFn& fn, std::span<const Tensor> inputs,
                               double step, double floor) {
  Tape tape;
  std::vector<Var> leaves;
  for (const Tensor& t : inputs) leaves.push_back(tape.Parameter(t));
  Var loss = fn(leaves);
  Require(loss.on_tape(), ErrorKind::kContract,
          "gradient check: loss does not depend on any input");
  tape.Backward(loss);

  GradCheckResult result;
  std::vector<Tensor> work(inputs.begin(), inputs.end());
  for (std::size_t i = 0; i < work.size(); ++i) {
    const Tensor analytic = tape.Grad(leaves[i]);
    for (std::size_t k = 0; k < work[i].size(); ++k) {
      const double saved = work[i][k];
      work[i][k] = saved + step;
      const double plus = Evaluate(fn, work);
      work[i][k] = saved - step;
      const double minus = Evaluate(fn, work);
      work[i][k] = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      const double scale =
          std::max({std::abs(analytic[k]), std::abs(numeric), floor});
      result.max_relative_error = std::max(
          result.max_relative_error, std::abs(analytic[k] - numeric) / scale);
      ++result.coordinates;
    }
  }
  return result;
}

}  // namespace cloudadapt::numerics
