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

#include "cloudadapt/numerics/optim.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "cloudadapt/common/error.h"

namespace cloudadapt::numerics {

AdamW::AdamW(std::vector<Tensor*> params, AdamWOptions options)
    : params_(std::move(params)), options_(options) {
  Require(options_.total_steps > 0, ErrorKind::kConfiguration,
          "optimizer needs at least one scheduled step");
  Require(options_.learning_rate >= 0.0 && options_.weight_decay >= 0.0,
          ErrorKind::kConfiguration, "negative learning rate or weight decay");
  for (const Tensor* p : params_) {
    first_moment_.push_back(Tensor::Zeros(p->shape()));
    second_moment_.push_back(Tensor::Zeros(p->shape()));
  }
}

double AdamW::CurrentLearningRate() const {
  const double progress =
      static_cast<double>(step_) / static_cast<double>(options_.total_steps);
  const double remaining = std::max(0.0, 1.0 - progress);
  return options_.learning_rate * std::pow(remaining, options_.power);
}

void AdamW::Step(std::span<const Tensor> grads) {
  Require(grads.size() == params_.size(), ErrorKind::kDimension,
          "{} gradients for {} parameters", grads.size(), params_.size());
  const double lr = CurrentLearningRate();
  const double t = static_cast<double>(step_ + 1);
  ++step_;
  if (lr == 0.0) return;

  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  // m_hat / (sqrt(v_hat) + eps) == (sqrt(c2) / c1) * m / (sqrt(v) + eps * sqrt(c2))
  // with c1, c2 the bias corrections; the right side avoids two divisions
  // per coordinate.
  const double root_c2 = std::sqrt(1.0 - std::pow(b2, t));
  const double step_size = lr * root_c2 / (1.0 - std::pow(b1, t));
  const double eps = options_.eps * root_c2;
  const double decay = 1.0 - lr * options_.weight_decay;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Require(grads[i].size() == params_[i]->size(), ErrorKind::kDimension,
            "gradient {} for parameter {}", ShapeString(grads[i].shape()),
            ShapeString(params_[i]->shape()));
    double* p = params_[i]->data().data();
    const double* g = grads[i].data().data();
    double* m = first_moment_[i].data().data();
    double* v = second_moment_[i].data().data();
    const std::size_t n = params_[i]->size();
    for (std::size_t k = 0; k < n; ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      p[k] = p[k] * decay - step_size * m[k] / (std::sqrt(v[k]) + eps);
    }
  }
}

}  // namespace cloudadapt::numerics
