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

// Toy-scale multi-modal feature extraction and fusion.
//
// Visual: a two-layer MLP applied to every raw frame. Text: mean of token
// embeddings. Fusion: per-frame positional and modality-type embeddings,
// then stacked residual blocks
//   H <- LayerNorm(H + relu(W_f H + W_t E_t + b))
// which is a linear map over the concatenation [H; E_t] followed by a
// nonlinearity and normalization.

#ifndef CLOUDADAPT_ENCODER_ENCODER_H_
#define CLOUDADAPT_ENCODER_ENCODER_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cloudadapt/numerics/layers.h"
#include "cloudadapt/numerics/rng.h"
#include "cloudadapt/numerics/tape.h"
#include "cloudadapt/numerics/tensor.h"
#include "cloudadapt/synthdata/corpus.h"

namespace cloudadapt::encoder {

using numerics::Binder;
using numerics::Tensor;
using numerics::Var;

struct EncoderConfig {
  std::size_t raw_dim = 32;
  std::size_t model_dim = 192;
  std::size_t vocab_size = 64;
  std::size_t max_frames = 8;
  std::size_t fusion_blocks = 1;
};

struct FusionBlock {
  numerics::Dense frame;  // model_dim -> model_dim, carries the block bias
  Tensor text_weight;     // [model_dim, model_dim], no bias
  numerics::Norm norm;

  template <typename Self, typename Fn>
  static void VisitParams(Self& self, const std::string& prefix, Fn&& fn) {
    numerics::Dense::VisitParams(self.frame, prefix + ".frame", fn);
    fn(prefix + ".text_weight", self.text_weight);
    numerics::Norm::VisitParams(self.norm, prefix + ".norm", fn);
  }
};

struct EncoderParams {
  EncoderConfig config;
  numerics::Dense visual_in;   // raw_dim -> model_dim
  numerics::Dense visual_out;  // model_dim -> model_dim
  Tensor token_embedding;      // [vocab_size, model_dim]
  Tensor positional;           // [max_frames, model_dim]
  Tensor modality;             // [2, model_dim]; row 0 visual, row 1 text
  std::vector<FusionBlock> blocks;

  static EncoderParams Init(const EncoderConfig& config, numerics::Rng& rng);

  template <typename Self, typename Fn>
  static void VisitParams(Self& self, const std::string& prefix, Fn&& fn) {
    numerics::Dense::VisitParams(self.visual_in, prefix + "visual_in", fn);
    numerics::Dense::VisitParams(self.visual_out, prefix + "visual_out", fn);
    fn(prefix + "token_embedding", self.token_embedding);
    fn(prefix + "positional", self.positional);
    fn(prefix + "modality", self.modality);
    for (std::size_t i = 0; i < self.blocks.size(); ++i) {
      FusionBlock::VisitParams(self.blocks[i], prefix + "block" + std::to_string(i),
                               fn);
    }
  }
};

// A batch of n samples: frames stacked as [n * num_frames, raw_dim] with each
// sample's frames consecutive, and one token bag per sample.
struct EncoderBatch {
  std::size_t num_samples = 0;
  std::size_t num_frames = 0;
  Tensor frames;
  std::vector<std::vector<std::uint32_t>> tokens;
};

EncoderBatch MakeBatch(std::span<const synthdata::LabeledSample* const> samples);
EncoderBatch MakeBatch(const synthdata::LabeledSample& sample);

// F_v: [n * num_frames, model_dim].
Var EncodeVideo(const EncoderParams& params, const Binder& bind, const Tensor& frames);
// F_t: [n, model_dim]. Out-of-vocabulary tokens raise ErrorKind::kInput.
Var EncodeText(const EncoderParams& params, const Binder& bind,
               const std::vector<std::vector<std::uint32_t>>& tokens);
// F_m: [n * num_frames, model_dim]. num_frames above the positional table
// raises ErrorKind::kInput.
Var Fuse(const EncoderParams& params, const Binder& bind, const Var& visual,
         const Var& text, std::size_t num_frames);

Var EncodeBatch(const EncoderParams& params, const Binder& bind,
                const EncoderBatch& batch);

struct FusedFeature {
  Tensor per_frame;  // [num_frames, model_dim]
  Tensor text;       // [1, model_dim]
  Tensor visual;     // [num_frames, model_dim]
};

// Tapeless single-sample path.
FusedFeature Encode(const EncoderParams& params,
                    const synthdata::LabeledSample& sample);

}  // namespace cloudadapt::encoder

#endif  // CLOUDADAPT_ENCODER_ENCODER_H_
