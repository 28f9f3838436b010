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

#ifndef CLOUDADAPT_NUMERICS_OPTIM_H_
#define CLOUDADAPT_NUMERICS_OPTIM_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cloudadapt/numerics/tensor.h"

namespace cloudadapt::numerics {

struct AdamWOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  // Polynomial decay: lr_t = learning_rate * (1 - t / total_steps)^power.
  double power = 1.0;
  std::uint64_t total_steps = 1;
};

// AdamW with decoupled weight decay and a polynomial learning-rate schedule.
// Owns the moment buffers; the parameters are updated in place.
class AdamW {
 public:
  AdamW(std::vector<Tensor*> params, AdamWOptions options);

  // Learning rate applied by the next Step().
  double CurrentLearningRate() const;

  // grads[i] pairs with params[i]. Past total_steps the rate is zero and the
  // parameters do not move.
  void Step(std::span<const Tensor> grads);

  std::uint64_t step() const { return step_; }
  const AdamWOptions& options() const { return options_; }

 private:
  std::vector<Tensor*> params_;
  std::vector<Tensor> first_moment_;
  std::vector<Tensor> second_moment_;
  AdamWOptions options_;
  std::uint64_t step_ = 0;
};

}  // namespace cloudadapt::numerics

#endif  // CLOUDADAPT_NUMERICS_OPTIM_H_
