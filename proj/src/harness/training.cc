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

#include "cloudadapt/harness/training.h"

#include <malloc.h>

#include <cmath>
#include <mutex>
#include <numeric>

#include "cloudadapt/common/error.h"
#include "cloudadapt/numerics/layers.h"
#include "cloudadapt/numerics/ops.h"

namespace cloudadapt::harness {

using namespace numerics;  // NOLINT: op vocabulary

Rng StreamRng(const ExperimentConfig& config, Stream stream, std::uint64_t index) {
  return Rng(config.seed).Split(static_cast<std::uint64_t>(stream) * 1000003ULL + index);
}

synthdata::CorpusOptions CorpusFor(const ExperimentConfig& config) {
  synthdata::CorpusOptions o = config.corpus;
  o.seed = config.seed;
  return o;
}

CloudModel InitModel(const ExperimentConfig& config) {
  Validate(config);
  Rng enc_rng = StreamRng(config, Stream::kEncoderInit);
  Rng fda_rng = StreamRng(config, Stream::kFdaInit);
  Rng adr_rng = StreamRng(config, Stream::kAdrInit);
  return {encoder::EncoderParams::Init(config.EncoderConfig(), enc_rng),
          fda::FdaParams::Init(config.FdaConfig(), fda_rng),
          adr::AdrParams::Init(config.AdrConfig(), adr_rng)};
}

Tensor EncodeAll(const encoder::EncoderParams& encoder,
                 std::span<const synthdata::LabeledSample> samples) {
  Require(!samples.empty(), ErrorKind::kContract, "nothing to encode");
  const std::size_t frames = samples[0].video.num_frames;
  const std::size_t d = encoder.config.model_dim;
  Tensor out = Tensor::Zeros({samples.size() * frames, d});
  constexpr std::size_t kChunk = 256;
  Binder bind;
  std::vector<const synthdata::LabeledSample*> ptrs;
  for (std::size_t begin = 0; begin < samples.size(); begin += kChunk) {
    const std::size_t end = std::min(samples.size(), begin + kChunk);
    ptrs.clear();
    for (std::size_t i = begin; i < end; ++i) ptrs.push_back(&samples[i]);
    Var fused = encoder::EncodeBatch(encoder, bind, encoder::MakeBatch(ptrs));
    std::copy(fused.value().data().begin(), fused.value().data().end(),
              out.data().begin() + begin * frames * d);
  }
  return out;
}

Tensor PoolAll(const Tensor& fused, std::size_t num_frames) {
  return GroupMean(Var::View(fused), num_frames).value();
}

AdamWOptions OptimizerOptions(const ExperimentConfig& config, double learning_rate,
                              std::size_t epochs, std::size_t num_samples) {
  AdamWOptions o;
  o.learning_rate = learning_rate;
  o.weight_decay = config.weight_decay;
  o.power = config.schedule_power;
  const std::size_t per_epoch = (num_samples + config.batch_size - 1) / config.batch_size;
  o.total_steps = std::max<std::uint64_t>(1, epochs * per_epoch);
  return o;
}

namespace {

// Training allocates and frees the same large activation and gradient
// buffers every step. Keeping them on the heap instead of fresh mmap()
// regions avoids page-faulting them in again each time.
void KeepLargeBuffersOnHeap() {
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    mallopt(M_TOP_PAD, 64 << 20);
  });
}

}  // namespace

std::vector<double> Train(const std::string& label, std::size_t num_samples,
                          std::size_t epochs, std::size_t batch_size,
                          const AdamWOptions& options, std::vector<Tensor*> params,
                          const BatchLoss& loss_fn, Rng& rng) {
  Require(num_samples > 0 && batch_size > 0, ErrorKind::kContract,
          "{}: empty training set or batch", label);
  KeepLargeBuffersOnHeap();
  AdamW optimizer(params, options);
  std::vector<std::size_t> order(num_samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> curve;
  std::vector<Tensor> grads(params.size());
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    rng.Shuffle(std::span<std::size_t>(order));
    double sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < num_samples; begin += batch_size) {
      const std::size_t end = std::min(num_samples, begin + batch_size);
      std::span<const std::size_t> idx(order.data() + begin, end - begin);
      Tape tape;
      Binder bind(&tape);
      for (Tensor* p : params) bind.MarkTrainable(*p);
      Var loss = loss_fn(idx, bind);
      const double value = loss.value().item();
      Require(std::isfinite(value), ErrorKind::kDivergence,
              "{}: non-finite loss {} at epoch {}, step {}", label, value, epoch + 1,
              optimizer.step() + 1);
      Require(loss.on_tape(), ErrorKind::kContract,
              "{}: loss does not depend on any trainable parameter", label);
      tape.Backward(loss);
      for (std::size_t i = 0; i < params.size(); ++i) grads[i] = bind.TakeGrad(*params[i]);
      optimizer.Step(grads);
      sum += value;
      ++batches;
    }
    curve.push_back(sum / static_cast<double>(batches));
  }
  return curve;
}

std::vector<std::size_t> AnchorRows(const ExperimentConfig& config, std::size_t n,
                                    Rng& rng) {
  const std::size_t frames = config.corpus.num_frames;
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    rows[i] = i * frames + adr::SelectAnchor(frames, config.anchor_policy, rng);
  }
  return rows;
}

void TrainReasoner(const ExperimentConfig& config, const Tensor& fused,
                   adr::AdrParams& adr, LossCurves& curves) {
  const std::size_t frames = config.corpus.num_frames;
  const std::size_t n = fused.rows() / frames;
  Rng rng = StreamRng(config, Stream::kAdrTrain);
  std::vector<double> kl, rec, ag;
  std::vector<std::size_t> rows;
  auto loss_fn = [&](std::span<const std::size_t> idx, const Binder& bind) {
    rows.clear();
    for (std::size_t i : idx) {
      for (std::size_t f = 0; f < frames; ++f) rows.push_back(i * frames + f);
    }
    Var batch = GatherRows(Var::View(fused), rows);
    Var global = fda::AggregateFrames(batch, frames, config.frame_samples, rng);
    Var anchor = GatherRows(batch, AnchorRows(config, idx.size(), rng));
    adr::AdrLosses l = adr::TrainingLosses(adr, bind, global, anchor, rng);
    kl.push_back(l.kl.value().item());
    rec.push_back(l.rec.value().item());
    ag.push_back(l.ag.value().item());
    return l.total;
  };
  const std::size_t per_epoch = (n + config.batch_size - 1) / config.batch_size;
  curves.adr_total = Train("reasoner", n, config.adr_epochs, config.batch_size,
                           OptimizerOptions(config, config.adr_learning_rate,
                                            config.adr_epochs, n),
                           ParamList(adr), loss_fn, rng);
  auto epoch_means = [per_epoch](const std::vector<double>& steps) {
    std::vector<double> out;
    for (std::size_t b = 0; b < steps.size(); b += per_epoch) {
      const std::size_t e = std::min(steps.size(), b + per_epoch);
      out.push_back(std::accumulate(steps.begin() + b, steps.begin() + e, 0.0) /
                    static_cast<double>(e - b));
    }
    return out;
  };
  curves.adr_kl = epoch_means(kl);
  curves.adr_rec = epoch_means(rec);
  curves.adr_ag = epoch_means(ag);
}

void TrainTask(const ExperimentConfig& config,
               std::span<const synthdata::LabeledSample> history, CloudModel& model,
               LossCurves& curves) {
  const std::size_t frames = config.corpus.num_frames;
  const std::size_t d_in = model.fda.config.slot.in_dim;
  const std::size_t d_out = model.fda.config.slot.out_dim;
  Rng rng = StreamRng(config, Stream::kTaskTrain);
  std::vector<const synthdata::LabeledSample*> batch;
  std::vector<std::size_t> labels;
  auto loss_fn = [&](std::span<const std::size_t> idx, const Binder& bind) {
    batch.clear();
    labels.clear();
    for (std::size_t i : idx) {
      batch.push_back(&history[i]);
      labels.push_back(history[i].label);
    }
    Var fused = encoder::EncodeBatch(model.encoder, bind, encoder::MakeBatch(batch));
    Var anchor = GatherRows(fused, AnchorRows(config, idx.size(), rng));
    Var adapted = adr::ReasonInference(model.adr, bind, anchor, rng);
    Var theta = fda::Generate(model.fda, bind, adapted);
    Var logits = GeneratedLinear(theta, fda::PoolFrames(fused, frames), d_in, d_out);
    return SoftmaxCrossEntropy(logits, labels);
  };
  std::vector<Tensor*> params = ParamList(model.encoder);
  for (Tensor* p : ParamList(model.fda)) params.push_back(p);
  curves.task = Train("task", history.size(), config.epochs, config.batch_size,
                      OptimizerOptions(config, config.learning_rate, config.epochs,
                                       history.size()),
                      params, loss_fn, rng);
}

Phase1Result RunPhase1Train(const ExperimentConfig& config,
                            std::span<const synthdata::LabeledSample> history) {
  Phase1Result result{InitModel(config), {}};
  if (config.adr_epochs > 0) {
    const Tensor fused = EncodeAll(result.model.encoder, history);
    TrainReasoner(config, fused, result.model.adr, result.curves);
  }
  if (config.epochs > 0) TrainTask(config, history, result.model, result.curves);
  return result;
}

}  // namespace cloudadapt::harness
