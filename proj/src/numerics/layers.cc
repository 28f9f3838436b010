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

#include "cloudadapt/numerics/layers.h"

#include <cmath>

#include "cloudadapt/numerics/ops.h"

namespace cloudadapt::numerics {

Dense Dense::Init(std::size_t in, std::size_t out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  Dense d = Zeros(in, out);
  for (double& v : d.weight.data()) v = rng.Uniform(-bound, bound);
  for (double& v : d.bias.data()) v = rng.Uniform(-bound, bound);
  return d;
}

Dense Dense::Zeros(std::size_t in, std::size_t out) {
  return Dense{Tensor::Zeros({out, in}), Tensor::Zeros({out})};
}

Var Dense::Apply(const Binder& bind, const Var& x) const {
  return Linear(x, bind(weight), bind(bias));
}

Norm Norm::Init(std::size_t dim) {
  return Norm{Tensor::Full({dim}, 1.0), Tensor::Zeros({dim})};
}

Var Norm::Apply(const Binder& bind, const Var& x) const {
  return LayerNorm(x, bind(gamma), bind(beta), eps);
}

}  // namespace cloudadapt::numerics
