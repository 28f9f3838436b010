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

#include "cloudadapt/encoder/encoder.h"

#include <numeric>

#include "cloudadapt/common/error.h"
#include "cloudadapt/numerics/ops.h"

namespace cloudadapt::encoder {

using namespace numerics;  // NOLINT: op vocabulary

EncoderParams EncoderParams::Init(const EncoderConfig& config, Rng& rng) {
  Require(config.fusion_blocks >= 1, ErrorKind::kConfiguration,
          "need at least one fusion block");
  Require(config.model_dim >= 2 && config.raw_dim >= 1 && config.vocab_size >= 1 &&
              config.max_frames >= 1,
          ErrorKind::kConfiguration, "encoder dimensions must be positive");
  const std::size_t d = config.model_dim;
  EncoderParams p;
  p.config = config;
  p.visual_in = Dense::Init(config.raw_dim, d, rng);
  p.visual_out = Dense::Init(d, d, rng);
  auto normal = [&rng](Shape shape, double stddev) {
    Tensor t = Tensor::Zeros(std::move(shape));
    for (double& v : t.data()) v = stddev * rng.Normal();
    return t;
  };
  p.token_embedding = normal({config.vocab_size, d}, 0.1);
  p.positional = normal({config.max_frames, d}, 0.02);
  p.modality = normal({2, d}, 0.02);
  for (std::size_t i = 0; i < config.fusion_blocks; ++i) {
    FusionBlock b;
    b.frame = Dense::Init(d, d, rng);
    b.text_weight = Dense::Init(d, d, rng).weight;
    b.norm = Norm::Init(d);
    p.blocks.push_back(std::move(b));
  }
  return p;
}

EncoderBatch MakeBatch(std::span<const synthdata::LabeledSample* const> samples) {
  Require(!samples.empty(), ErrorKind::kContract, "empty encoder batch");
  EncoderBatch batch;
  batch.num_samples = samples.size();
  batch.num_frames = samples[0]->video.num_frames;
  const std::size_t raw = samples[0]->video.raw_dim;
  batch.frames = Tensor::Zeros({batch.num_samples * batch.num_frames, raw});
  auto out = batch.frames.data();
  std::size_t k = 0;
  for (const synthdata::LabeledSample* s : samples) {
    Require(s->video.num_frames == batch.num_frames && s->video.raw_dim == raw,
            ErrorKind::kDimension, "batch mixes video shapes");
    for (float f : s->video.frames) out[k++] = f;
    batch.tokens.push_back(s->query.tokens);
  }
  return batch;
}

EncoderBatch MakeBatch(const synthdata::LabeledSample& sample) {
  const synthdata::LabeledSample* one[] = {&sample};
  return MakeBatch(one);
}

Var EncodeVideo(const EncoderParams& params, const Binder& bind, const Tensor& frames) {
  Require(frames.rank() == 2 && frames.cols() == params.config.raw_dim,
          ErrorKind::kDimension, "frames {} for raw dimension {}",
          ShapeString(frames.shape()), params.config.raw_dim);
  // Owning copy: the backward pass may outlive the caller's batch.
  Var h = Relu(params.visual_in.Apply(bind, Var::Constant(frames)));
  return params.visual_out.Apply(bind, h);
}

Var EncodeText(const EncoderParams& params, const Binder& bind,
               const std::vector<std::vector<std::uint32_t>>& tokens) {
  return EmbeddingBagMean(bind(params.token_embedding), tokens);
}

Var Fuse(const EncoderParams& params, const Binder& bind, const Var& visual,
         const Var& text, std::size_t num_frames) {
  Require(num_frames >= 1 && num_frames <= params.config.max_frames,
          ErrorKind::kInput, "{} frames exceed the positional table of {}", num_frames,
          params.config.max_frames);
  Require(visual.value().rank() == 2 && text.value().rank() == 2 &&
              visual.value().rows() == text.value().rows() * num_frames &&
              visual.value().cols() == params.config.model_dim &&
              text.value().cols() == params.config.model_dim,
          ErrorKind::kDimension, "fuse: visual {} and text {} for {} frames",
          ShapeString(visual.shape()), ShapeString(text.shape()), num_frames);

  std::vector<std::size_t> frame_ids(num_frames);
  std::iota(frame_ids.begin(), frame_ids.end(), std::size_t{0});
  const std::size_t visual_row[] = {0};
  const std::size_t text_row[] = {1};
  Var modality = bind(params.modality);
  Var positional = GatherRows(bind(params.positional), frame_ids);
  Var h = AddRow(AddTiled(visual, positional),
                 Reshape(GatherRows(modality, visual_row), {params.config.model_dim}));
  Var e_text = AddRow(text, Reshape(GatherRows(modality, text_row),
                                    {params.config.model_dim}));
  for (const FusionBlock& block : params.blocks) {
    Var text_term = RepeatRows(Linear(e_text, bind(block.text_weight)), num_frames);
    Var update = Relu(Add(block.frame.Apply(bind, h), text_term));
    h = block.norm.Apply(bind, Add(h, update));
  }
  return h;
}

Var EncodeBatch(const EncoderParams& params, const Binder& bind,
                const EncoderBatch& batch) {
  Var visual = EncodeVideo(params, bind, batch.frames);
  Var text = EncodeText(params, bind, batch.tokens);
  return Fuse(params, bind, visual, text, batch.num_frames);
}

FusedFeature Encode(const EncoderParams& params,
                    const synthdata::LabeledSample& sample) {
  Binder bind;
  EncoderBatch batch = MakeBatch(sample);
  Var visual = EncodeVideo(params, bind, batch.frames);
  Var text = EncodeText(params, bind, batch.tokens);
  Var fused = Fuse(params, bind, visual, text, batch.num_frames);
  return {fused.value(), text.value(), visual.value()};
}

}  // namespace cloudadapt::encoder
