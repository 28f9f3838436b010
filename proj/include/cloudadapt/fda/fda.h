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

// Hypernetwork that turns an aggregated multi-modal feature into the
// parameters of the device's final linear layer.
//
//   F_g   = mean of D randomly chosen frame features
//   E_g   = LayerNorm(W2 relu(W1 F_g + b1) + b2)          (projection)
//   theta = scale * (V2 relu(V1 E_g + c1) + c2)           (generator)
//   theta = [row-major weights (out x in), bias (out)]

#ifndef CLOUDADAPT_FDA_FDA_H_
#define CLOUDADAPT_FDA_FDA_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cloudadapt/numerics/layers.h"
#include "cloudadapt/numerics/rng.h"
#include "cloudadapt/numerics/tape.h"
#include "cloudadapt/numerics/tensor.h"

namespace cloudadapt::fda {

using numerics::Binder;
using numerics::Tensor;
using numerics::Var;

struct HeadSlot {
  std::size_t in_dim = 192;
  std::size_t out_dim = 10;

  std::size_t ParameterCount() const { return in_dim * out_dim + out_dim; }
  bool operator==(const HeadSlot&) const = default;
};

struct FdaConfig {
  std::size_t model_dim = 192;
  std::size_t proj_dim = 192;
  std::size_t hyper_hidden = 96;
  HeadSlot slot;
  double output_scale = 0.1;
  double final_init_std = 1e-2;
};

struct FdaParams {
  FdaConfig config;
  numerics::Dense proj_in;   // model_dim -> model_dim
  numerics::Dense proj_out;  // model_dim -> proj_dim
  numerics::Norm proj_norm;
  numerics::Dense hyper_in;   // proj_dim -> hyper_hidden
  numerics::Dense hyper_out;  // hyper_hidden -> slot.ParameterCount()

  static FdaParams Init(const FdaConfig& config, numerics::Rng& rng);

  template <typename Self, typename Fn>
  static void VisitParams(Self& self, const std::string& prefix, Fn&& fn) {
    numerics::Dense::VisitParams(self.proj_in, prefix + "proj_in", fn);
    numerics::Dense::VisitParams(self.proj_out, prefix + "proj_out", fn);
    numerics::Norm::VisitParams(self.proj_norm, prefix + "proj_norm", fn);
    numerics::Dense::VisitParams(self.hyper_in, prefix + "hyper_in", fn);
    numerics::Dense::VisitParams(self.hyper_out, prefix + "hyper_out", fn);
  }
};

// Parameters of one linear layer produced for one input.
struct GeneratedHead {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<double> weights;  // out_dim x in_dim, row-major
  std::vector<double> bias;     // out_dim

  // Splits a packed parameter vector; throws kConfiguration on a length that
  // does not match the slot.
  static GeneratedHead Unpack(std::span<const double> packed, const HeadSlot& slot);
  std::vector<double> Pack() const;
  HeadSlot slot() const { return {in_dim, out_dim}; }
};

// Indices of D distinct frames out of num_frames; requires 1 < D <= num_frames.
std::vector<std::size_t> SampleFrames(std::size_t num_frames, std::size_t count,
                                      numerics::Rng& rng);

// per_frame [num_frames, d] -> [1, d].
Tensor AggregateFrames(const Tensor& per_frame, std::size_t count, numerics::Rng& rng);
// fused [n * num_frames, d] -> [n, d], an independent draw per sample.
Var AggregateFrames(const Var& fused, std::size_t num_frames, std::size_t count,
                    numerics::Rng& rng);

// Mean over all frames: [n * num_frames, d] -> [n, d]. Feeds the device head.
Var PoolFrames(const Var& fused, std::size_t num_frames);

Var ProjectEmbedding(const FdaParams& params, const Binder& bind, const Var& global);
// [n, proj_dim] -> [n, slot.ParameterCount()].
Var GenerateParameters(const FdaParams& params, const Binder& bind,
                       const Var& embedding);
// Projection then generation.
Var Generate(const FdaParams& params, const Binder& bind, const Var& global);

// Device-side inference. Plain arithmetic: no tape is ever involved.
std::vector<double> HeadLogits(const GeneratedHead& head, std::span<const double> x);
std::size_t Predict(const GeneratedHead& head, std::span<const double> x);

}  // namespace cloudadapt::fda

#endif  // CLOUDADAPT_FDA_FDA_H_
