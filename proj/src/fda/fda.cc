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

#include "cloudadapt/fda/fda.h"

#include <algorithm>

#include "cloudadapt/common/error.h"
#include "cloudadapt/numerics/ops.h"

namespace cloudadapt::fda {

using namespace numerics;  // NOLINT: op vocabulary

FdaParams FdaParams::Init(const FdaConfig& config, Rng& rng) {
  Require(config.slot.in_dim >= 1 && config.slot.out_dim >= 1,
          ErrorKind::kConfiguration, "head slot dimensions must be positive");
  Require(config.proj_dim >= 2, ErrorKind::kConfiguration,
          "projection width must be >= 2");
  FdaParams p;
  p.config = config;
  p.proj_in = Dense::Init(config.model_dim, config.model_dim, rng);
  p.proj_out = Dense::Init(config.model_dim, config.proj_dim, rng);
  p.proj_norm = Norm::Init(config.proj_dim);
  p.hyper_in = Dense::Init(config.proj_dim, config.hyper_hidden, rng);
  p.hyper_out = Dense::Zeros(config.hyper_hidden, config.slot.ParameterCount());
  for (double& v : p.hyper_out.weight.data()) v = config.final_init_std * rng.Normal();
  return p;
}

GeneratedHead GeneratedHead::Unpack(std::span<const double> packed,
                                    const HeadSlot& slot) {
  Require(packed.size() == slot.ParameterCount(), ErrorKind::kConfiguration,
          "{} generated values for slot ({}, {}) needing {}", packed.size(),
          slot.in_dim, slot.out_dim, slot.ParameterCount());
  GeneratedHead head;
  head.in_dim = slot.in_dim;
  head.out_dim = slot.out_dim;
  const std::size_t nw = slot.in_dim * slot.out_dim;
  head.weights.assign(packed.begin(), packed.begin() + nw);
  head.bias.assign(packed.begin() + nw, packed.end());
  return head;
}

std::vector<double> GeneratedHead::Pack() const {
  std::vector<double> out = weights;
  out.insert(out.end(), bias.begin(), bias.end());
  return out;
}

std::vector<std::size_t> SampleFrames(std::size_t num_frames, std::size_t count,
                                      Rng& rng) {
  Require(count > 1 && count <= num_frames, ErrorKind::kContract,
          "frame sample count D={} must satisfy 1 < D <= {}", count, num_frames);
  return rng.SampleWithoutReplacement(num_frames, count);
}

Tensor AggregateFrames(const Tensor& per_frame, std::size_t count, Rng& rng) {
  Require(per_frame.rank() == 2, ErrorKind::kDimension,
          "per-frame features must be a matrix");
  return AggregateFrames(Var::View(per_frame), per_frame.rows(), count, rng).value();
}

Var AggregateFrames(const Var& fused, std::size_t num_frames, std::size_t count,
                    Rng& rng) {
  Require(num_frames > 0 && fused.value().rank() == 2 &&
              fused.value().rows() % num_frames == 0,
          ErrorKind::kDimension, "fused features {} for {} frames",
          ShapeString(fused.shape()), num_frames);
  const std::size_t n = fused.value().rows() / num_frames;
  std::vector<std::size_t> rows;
  rows.reserve(n * count);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f : SampleFrames(num_frames, count, rng)) {
      rows.push_back(i * num_frames + f);
    }
  }
  return GroupMean(GatherRows(fused, rows), count);
}

Var PoolFrames(const Var& fused, std::size_t num_frames) {
  return GroupMean(fused, num_frames);
}

Var ProjectEmbedding(const FdaParams& params, const Binder& bind, const Var& global) {
  Require(global.value().rank() == 2 && global.value().cols() == params.config.model_dim,
          ErrorKind::kDimension, "projection input {} for model dimension {}",
          ShapeString(global.shape()), params.config.model_dim);
  Var h = Relu(params.proj_in.Apply(bind, global));
  return params.proj_norm.Apply(bind, params.proj_out.Apply(bind, h));
}

Var GenerateParameters(const FdaParams& params, const Binder& bind,
                       const Var& embedding) {
  Require(params.hyper_out.out_dim() == params.config.slot.ParameterCount(),
          ErrorKind::kConfiguration,
          "generator emits {} values but slot ({}, {}) needs {}",
          params.hyper_out.out_dim(), params.config.slot.in_dim,
          params.config.slot.out_dim, params.config.slot.ParameterCount());
  Var h = Relu(params.hyper_in.Apply(bind, embedding));
  return Scale(params.hyper_out.Apply(bind, h), params.config.output_scale);
}

Var Generate(const FdaParams& params, const Binder& bind, const Var& global) {
  return GenerateParameters(params, bind, ProjectEmbedding(params, bind, global));
}

std::vector<double> HeadLogits(const GeneratedHead& head, std::span<const double> x) {
  Require(x.size() == head.in_dim, ErrorKind::kDimension,
          "head input of {} values for in_dim {}", x.size(), head.in_dim);
  std::vector<double> logits(head.bias);
  for (std::size_t o = 0; o < head.out_dim; ++o) {
    const double* w = head.weights.data() + o * head.in_dim;
    double acc = 0.0;
    for (std::size_t k = 0; k < head.in_dim; ++k) acc += w[k] * x[k];
    logits[o] += acc;
  }
  return logits;
}

std::size_t Predict(const GeneratedHead& head, std::span<const double> x) {
  std::vector<double> logits = HeadLogits(head, x);
  return static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) -
                                  logits.begin());
}

}  // namespace cloudadapt::fda
