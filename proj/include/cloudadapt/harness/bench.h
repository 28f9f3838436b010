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

// The four-method comparison: a shared static head, per-device fine-tuned
// heads, a hypernetwork fed by frame averages, and the full reasoner +
// hypernetwork pipeline. Devices only ever run forward passes; every
// device-side evaluation happens with gradient recording switched off.

#ifndef CLOUDADAPT_HARNESS_BENCH_H_
#define CLOUDADAPT_HARNESS_BENCH_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "cloudadapt/adr/adr.h"
#include "cloudadapt/encoder/encoder.h"
#include "cloudadapt/fda/fda.h"
#include "cloudadapt/harness/config.h"
#include "cloudadapt/harness/training.h"
#include "cloudadapt/protocol/client.h"
#include "cloudadapt/synthdata/corpus.h"

namespace cloudadapt::harness {

enum class Method { kLinear, kFineTune, kHyper, kOurs };
inline constexpr Method kAllMethods[] = {Method::kLinear, Method::kFineTune,
                                         Method::kHyper, Method::kOurs};

std::string_view MethodName(Method method);

struct ParameterCounts {
  std::uint64_t device = 0;
  std::uint64_t cloud = 0;
  bool operator==(const ParameterCounts&) const = default;
};

// Closed forms from the configuration alone.
std::uint64_t EncoderParameterCount(const ExperimentConfig& config);
std::uint64_t AdaptorParameterCount(const ExperimentConfig& config);
std::uint64_t ReasonerParameterCount(const ExperimentConfig& config);
// Device: backbone plus one head slot for every method. Cloud: nothing for
// the retraining methods, the adaptor for F-hyper, adaptor plus reasoner
// for the full pipeline.
ParameterCounts MethodParameterCounts(Method method, const ExperimentConfig& config);

enum class TransportKind { kInProcess, kTcp };

struct MethodResult {
  Method method = Method::kLinear;
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy = 0.0;
  std::vector<double> device_accuracy;
  ParameterCounts params;
  // Retraining methods adapt by training, not by an exchange.
  bool retrains = false;
  // The reported delay: the reference retraining time for retraining
  // methods, otherwise the simulated exchange on the last scenario.
  double time_delay_ms = 0.0;
  std::size_t upload_payload_bytes = 0;
  std::size_t download_payload_bytes = 0;
  std::vector<protocol::ScenarioDelay> simulated;
  // Wall-clock measurements; they vary between runs.
  double measured_train_ms = 0.0;
  double measured_round_trip_ms = 0.0;  // mean per request
};

struct RunReport {
  std::string config_hash;
  std::uint64_t seed = 0;
  double shift_strength = 0.0;
  std::vector<Scenario> scenarios;
  std::vector<MethodResult> methods;
  LossCurves curves;
  // Tape nodes allocated while devices were evaluated; always 0.
  std::uint64_t device_tape_nodes = 0;

  const MethodResult& Find(Method method) const;
};

using Progress = std::function<void(const std::string&)>;

struct BenchOptions {
  TransportKind transport = TransportKind::kInProcess;
  Progress progress;
};

// A hypernetwork method as seen from the devices.
struct HypernetSetup {
  Method method = Method::kOurs;
  const encoder::EncoderParams* device_encoder = nullptr;
  const fda::FdaParams* adaptor = nullptr;
  // Null: the device uploads the average of D random frames and the service
  // feeds it to the adaptor directly. Otherwise the device uploads one
  // anchor frame and the service reasons over it first.
  const adr::AdrParams* reasoner = nullptr;
};

// Phases II and III for every realtime sample: encode on the device, upload,
// generate on the service, download, predict locally. Runs under a
// NoGradGuard and raises kBackpropFree if any tape node appears.
MethodResult EvaluateHypernet(const ExperimentConfig& config, const HypernetSetup& setup,
                              const std::vector<std::vector<synthdata::LabeledSample>>& realtime,
                              TransportKind transport);

// The full pipeline with a trained model.
MethodResult RunPhase2Phase3Eval(
    const ExperimentConfig& config, const CloudModel& model,
    const std::vector<std::vector<synthdata::LabeledSample>>& realtime,
    TransportKind transport);

// Trains and evaluates all four methods on one corpus.
RunReport RunBaselineSuite(const ExperimentConfig& config, const synthdata::Corpus& corpus,
                           const BenchOptions& options = {});

// Deterministic for a fixed configuration: no wall-clock values.
std::string ReportCsv(const RunReport& report);
// Everything, including measured times.
std::string ReportJson(const RunReport& report);

}  // namespace cloudadapt::harness

#endif  // CLOUDADAPT_HARNESS_BENCH_H_
