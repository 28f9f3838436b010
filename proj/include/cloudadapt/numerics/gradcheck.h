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

// Central finite-difference verification of tape gradients.

#ifndef CLOUDADAPT_NUMERICS_GRADCHECK_H_
#define CLOUDADAPT_NUMERICS_GRADCHECK_H_

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "cloudadapt/numerics/tape.h"
#include "cloudadapt/numerics/tensor.h"

namespace cloudadapt::numerics {

// Builds a scalar from the given inputs. It is called once with tape leaves
// and many times with eager constants, and must be a pure function of them.
using ScalarFn = std::function<Var(std::span<const Var>)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
};

// Compares the tape gradient of fn with (f(x+h) - f(x-h)) / 2h for every
// coordinate of every input. The relative error of one coordinate is
// |analytic - numeric| / max(|analytic|, |numeric|, floor).
GradCheckResult CheckGradients(const ScalarFn& fn, std::span<const Tensor> inputs,
                               double step = 1e-5, double floor = 1e-6);

}  // namespace cloudadapt::numerics

#endif  // CLOUDADAPT_NUMERICS_GRADCHECK_H_
