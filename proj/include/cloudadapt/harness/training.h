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

// Cloud-side training: reasoner pre-training (stage 1) and joint
// encoder + adaptor training with the reasoner frozen (stage 2).

#ifndef CLOUDADAPT_HARNESS_TRAINING_H_
#define CLOUDADAPT_HARNESS_TRAINING_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cloudadapt/adr/adr.h"
#include "cloudadapt/encoder/encoder.h"
#include "cloudadapt/fda/fda.h"
#include "cloudadapt/harness/config.h"
#include "cloudadapt/numerics/optim.h"
#include "cloudadapt/numerics/tape.h"
#include "cloudadapt/synthdata/corpus.h"

namespace cloudadapt::harness {

struct CloudModel {
  encoder::EncoderParams encoder;
  fda::FdaParams fda;
  adr::AdrParams adr;

  template <typename Self, typename Fn>
  static void VisitParams(Self& self, const std::string& prefix, Fn&& fn) {
    encoder::EncoderParams::VisitParams(self.encoder, prefix + "encoder.", fn);
    fda::FdaParams::VisitParams(self.fda, prefix + "fda.", fn);
    adr::AdrParams::VisitParams(self.adr, prefix + "adr.", fn);
  }
};

// Named Rng streams derived from the experiment seed.
enum class Stream : std::uint64_t {
  kCorpus = 0,
  kEncoderInit = 10,
  kFdaInit = 11,
  kAdrInit = 12,
  kHyperBaselineInit = 13,
  kLinearHeadInit = 14,
  kAdrTrain = 20,
  kTaskTrain = 21,
  kLinearTrain = 22,
  kFineTuneTrain = 23,
  kHyperBaselineTrain = 24,
  kEvalOurs = 30,
  kEvalHyperBaseline = 31,
};

numerics::Rng StreamRng(const ExperimentConfig& config, Stream stream,
                        std::uint64_t index = 0);

// Corpus options with the experiment seed applied.
synthdata::CorpusOptions CorpusFor(const ExperimentConfig& config);

CloudModel InitModel(const ExperimentConfig& config);

struct LossCurves {
  std::vector<double> adr_kl;
  std::vector<double> adr_rec;
  std::vector<double> adr_ag;
  std::vector<double> adr_total;
  std::vector<double> task;
};

struct Phase1Result {
  CloudModel model;
  LossCurves curves;
};

// Frozen-encoder features for many samples, [n * num_frames, model_dim].
numerics::Tensor EncodeAll(const encoder::EncoderParams& encoder,
                           std::span<const synthdata::LabeledSample> samples);

// Mean frame feature per sample, [n, model_dim].
numerics::Tensor PoolAll(const numerics::Tensor& fused, std::size_t num_frames);

// One minibatch objective: builds the loss for the given sample indices on
// the binder's tape.
using BatchLoss = std::function<numerics::Var(std::span<const std::size_t> indices,
                                              const numerics::Binder& bind)>;

// Shuffled minibatch AdamW training with the polynomial schedule. Returns
// the mean loss of every epoch. A non-finite loss raises kDivergence.
std::vector<double> Train(const std::string& label, std::size_t num_samples,
                          std::size_t epochs, std::size_t batch_size,
                          const numerics::AdamWOptions& options,
                          std::vector<numerics::Tensor*> params,
                          const BatchLoss& loss, numerics::Rng& rng);

numerics::AdamWOptions OptimizerOptions(const ExperimentConfig& config,
                                        double learning_rate, std::size_t epochs,
                                        std::size_t num_samples);

// Stage 1 on features of the frozen initial encoder. Returns per-epoch means.
void TrainReasoner(const ExperimentConfig& config, const numerics::Tensor& fused,
                   adr::AdrParams& adr, LossCurves& curves);

// Anchor row of every sample under the configured policy.
std::vector<std::size_t> AnchorRows(const ExperimentConfig& config, std::size_t n,
                                    numerics::Rng& rng);

// Stage 2: encoder and adaptor trained with cross-entropy through the frozen
// reasoner.
void TrainTask(const ExperimentConfig& config,
               std::span<const synthdata::LabeledSample> history, CloudModel& model,
               LossCurves& curves);

Phase1Result RunPhase1Train(const ExperimentConfig& config,
                            std::span<const synthdata::LabeledSample> history);

}  // namespace cloudadapt::harness

#endif  // CLOUDADAPT_HARNESS_TRAINING_H_
