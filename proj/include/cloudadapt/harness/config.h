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

// Experiment configuration: a flat key=value text format with every default
// spelled out, plus a stable hash embedded in reports and checkpoints.

#ifndef CLOUDADAPT_HARNESS_CONFIG_H_
#define CLOUDADAPT_HARNESS_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cloudadapt/adr/adr.h"
#include "cloudadapt/encoder/encoder.h"
#include "cloudadapt/fda/fda.h"
#include "cloudadapt/protocol/delay.h"
#include "cloudadapt/synthdata/corpus.h"

namespace cloudadapt::harness {

using Scenario = protocol::NetworkScenario;

std::vector<Scenario> DefaultScenarios();

struct ExperimentConfig {
  synthdata::CorpusOptions corpus;
  std::size_t model_dim = 192;
  std::size_t fusion_blocks = 1;
  std::size_t frame_samples = 3;  // D
  double lambda = 0.1;
  std::size_t hyper_hidden = 96;
  std::size_t adr_hidden = 128;
  std::size_t adr_latent = 64;
  double adr_learning_rate = 2e-5;
  std::size_t adr_epochs = 10;
  double learning_rate = 1e-4;
  std::size_t epochs = 40;
  std::size_t batch_size = 32;
  double weight_decay = 0.01;
  double schedule_power = 1.0;
  adr::AnchorPolicy anchor_policy = adr::AnchorPolicy::kFirst;
  adr::StyleSource style_source = adr::StyleSource::kReconstructed;
  adr::SamplingMode sampling = adr::SamplingMode::kMean;
  std::uint64_t seed = 1;
  std::vector<Scenario> scenarios = DefaultScenarios();
  // Added to every simulated transfer; 0 reproduces pure size / bandwidth.
  double fixed_rtt_ms = 0.0;
  // Nominal retraining delay printed for the retraining baselines.
  double retrain_reference_ms = 60000.0;

  encoder::EncoderConfig EncoderConfig() const;
  fda::FdaConfig FdaConfig() const;
  adr::AdrConfig AdrConfig() const;
};

// Throws kConfiguration on inconsistent values.
void Validate(const ExperimentConfig& config);

// Canonical text, one key=value per line in a fixed order.
std::string ToText(const ExperimentConfig& config);
// Starts from the defaults and applies every key present. Unknown keys and
// malformed values raise kConfiguration.
ExperimentConfig FromText(const std::string& text);
ExperimentConfig LoadConfig(const std::filesystem::path& path);
void ApplyOverride(ExperimentConfig& config, const std::string& key,
                   const std::string& value);

// CRC-32 of the canonical text, as 8 hex digits.
std::string ConfigHash(const ExperimentConfig& config);

// "4G: 5MB/s=5" style lines.
std::vector<Scenario> ParseScenarios(const std::string& text);
std::string ScenariosToText(const std::vector<Scenario>& scenarios);

}  // namespace cloudadapt::harness

#endif  // CLOUDADAPT_HARNESS_CONFIG_H_
