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

#include "cloudadapt/harness/bench.h"

#include <chrono>
#include <memory>
#include <optional>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cloudadapt/common/error.h"
#include "cloudadapt/numerics/layers.h"
#include "cloudadapt/numerics/ops.h"
#include "cloudadapt/protocol/service.h"
#include "cloudadapt/protocol/transport.h"

namespace cloudadapt::harness {

using numerics::Binder;
using numerics::Dense;
using numerics::Rng;
using numerics::Tensor;
using numerics::Var;
using synthdata::LabeledSample;
using Realtime = std::vector<std::vector<LabeledSample>>;

std::string_view MethodName(Method method) {
  switch (method) {
    case Method::kLinear:
      return "F-linear";
    case Method::kFineTune:
      return "Fine-tuning";
    case Method::kHyper:
      return "F-hyper";
    case Method::kOurs:
      return "Ours";
  }
  return "unknown";
}

namespace {

std::uint64_t DenseCount(std::uint64_t in, std::uint64_t out) { return in * out + out; }

}  // namespace

std::uint64_t EncoderParameterCount(const ExperimentConfig& config) {
  const std::uint64_t d = config.model_dim;
  const std::uint64_t block = DenseCount(d, d) + d * d + 2 * d;
  return DenseCount(config.corpus.raw_dim, d) + DenseCount(d, d) +
         config.corpus.vocab_size * d + config.corpus.num_frames * d + 2 * d +
         config.fusion_blocks * block;
}

std::uint64_t AdaptorParameterCount(const ExperimentConfig& config) {
  const fda::FdaConfig f = config.FdaConfig();
  return DenseCount(f.model_dim, f.model_dim) + DenseCount(f.model_dim, f.proj_dim) +
         2 * f.proj_dim + DenseCount(f.proj_dim, f.hyper_hidden) +
         DenseCount(f.hyper_hidden, f.slot.ParameterCount());
}

std::uint64_t ReasonerParameterCount(const ExperimentConfig& config) {
  const adr::AdrConfig a = config.AdrConfig();
  return DenseCount(a.model_dim, a.hidden_dim) + DenseCount(a.hidden_dim, 2 * a.latent_dim) +
         DenseCount(a.latent_dim, a.hidden_dim) + DenseCount(a.hidden_dim, a.model_dim);
}

ParameterCounts MethodParameterCounts(Method method, const ExperimentConfig& config) {
  ParameterCounts c;
  c.device = EncoderParameterCount(config) + config.FdaConfig().slot.ParameterCount();
  switch (method) {
    case Method::kLinear:
    case Method::kFineTune:
      c.cloud = 0;
      break;
    case Method::kHyper:
      c.cloud = AdaptorParameterCount(config);
      break;
    case Method::kOurs:
      c.cloud = AdaptorParameterCount(config) + ReasonerParameterCount(config);
      break;
  }
  return c;
}

const MethodResult& RunReport::Find(Method method) const {
  for (const MethodResult& m : methods) {
    if (m.method == method) return m;
  }
  Fail(ErrorKind::kContract, "report has no row for {}", MethodName(method));
}

namespace {

using Clock = std::chrono::steady_clock;

double MillisecondsSince(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Fails the run if the guarded region allocated any tape node.
class DeviceSentinel {
 public:
  DeviceSentinel() : before_(numerics::Tape::TotalNodesAllocated()) {}
  std::uint64_t Check(std::string_view what) const {
    const std::uint64_t n = numerics::Tape::TotalNodesAllocated() - before_;
    Require(n == 0, ErrorKind::kBackpropFree, "{}: {} tape nodes allocated on the device path",
            what, n);
    return n;
  }

 private:
  numerics::NoGradGuard guard_;
  std::uint64_t before_;
};

void Finish(MethodResult& r, const std::vector<std::size_t>& correct,
            const std::vector<std::size_t>& totals) {
  for (std::size_t d = 0; d < correct.size(); ++d) {
    r.correct += correct[d];
    r.total += totals[d];
    r.device_accuracy.push_back(totals[d] == 0 ? 0.0
                                               : static_cast<double>(correct[d]) /
                                                     static_cast<double>(totals[d]));
  }
  r.accuracy = r.total == 0 ? 0.0 : static_cast<double>(r.correct) / static_cast<double>(r.total);
}

fda::GeneratedHead HeadFromDense(const Dense& dense) {
  fda::GeneratedHead head;
  head.in_dim = dense.in_dim();
  head.out_dim = dense.out_dim();
  head.weights.assign(dense.weight.data().begin(), dense.weight.data().end());
  head.bias.assign(dense.bias.data().begin(), dense.bias.data().end());
  return head;
}

std::vector<double> RowMean(const Tensor& per_frame) {
  const std::size_t frames = per_frame.rows();
  const std::size_t d = per_frame.cols();
  std::vector<double> out(d, 0.0);
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t j = 0; j < d; ++j) out[j] += per_frame[f * d + j];
  }
  for (double& v : out) v /= static_cast<double>(frames);
  return out;
}

// Mean of the listed frame rows.
std::vector<double> FrameAverage(const Tensor& per_frame,
                                 const std::vector<std::size_t>& rows) {
  const std::size_t d = per_frame.cols();
  std::vector<double> out(d, 0.0);
  for (std::size_t f : rows) {
    for (std::size_t j = 0; j < d; ++j) out[j] += per_frame[f * d + j];
  }
  for (double& v : out) v /= static_cast<double>(rows.size());
  return out;
}

// Owns whatever sits between the device client and the service.
class Link {
 public:
  Link(const protocol::AdaptService& service, TransportKind kind) {
    protocol::FrameHandler handler = [&service](std::span<const std::uint8_t> frame) {
      return service.Handle(frame);
    };
    if (kind == TransportKind::kInProcess) {
      transport_ = std::make_unique<protocol::InProcessTransport>(std::move(handler));
      return;
    }
    server_ = std::make_unique<protocol::TcpServer>(std::move(handler),
                                                    protocol::ServerOptions{});
    protocol::ClientOptions client;
    client.port = server_->port();
    transport_ = std::make_unique<protocol::TcpTransport>(client);
  }
  ~Link() {
    transport_.reset();
    if (server_) server_->Stop();
  }
  protocol::Transport& transport() { return *transport_; }

 private:
  std::unique_ptr<protocol::TcpServer> server_;
  std::unique_ptr<protocol::Transport> transport_;
};

}  // namespace

MethodResult EvaluateHypernet(const ExperimentConfig& config, const HypernetSetup& setup,
                              const Realtime& realtime, TransportKind transport) {
  Require(setup.device_encoder != nullptr && setup.adaptor != nullptr, ErrorKind::kContract,
          "hypernetwork evaluation needs an encoder and an adaptor");
  const bool reasons = setup.reasoner != nullptr;
  protocol::AdaptService service(*setup.adaptor, setup.reasoner, config.seed);
  Link link(service, transport);
  protocol::DeviceClient client(link.transport(), config.scenarios, config.fixed_rtt_ms);

  MethodResult r;
  r.method = setup.method;
  r.params = MethodParameterCounts(setup.method, config);
  std::vector<std::size_t> correct(realtime.size(), 0), totals(realtime.size(), 0);
  double round_trip_ms = 0.0;
  std::size_t requests = 0;
  const Stream stream = reasons ? Stream::kEvalOurs : Stream::kEvalHyperBaseline;

  DeviceSentinel sentinel;
  for (std::size_t d = 0; d < realtime.size(); ++d) {
    Rng rng = StreamRng(config, stream, d);
    for (std::size_t i = 0; i < realtime[d].size(); ++i) {
      const LabeledSample& sample = realtime[d][i];
      const Tensor per_frame = encoder::Encode(*setup.device_encoder, sample).per_frame;
      const std::size_t frames = per_frame.rows();
      std::vector<double> upload;
      if (reasons) {
        const std::size_t a = adr::SelectAnchor(frames, config.anchor_policy, rng);
        upload = FrameAverage(per_frame, {a});
      } else {
        upload = FrameAverage(per_frame, fda::SampleFrames(frames, config.frame_samples, rng));
      }
      protocol::Adaptation adaptation;
      try {
        adaptation = client.RequestAdaptation(static_cast<std::uint32_t>(sample.device()),
                                              0, upload);
      } catch (const Error& e) {
        Fail(e.kind(), "device {} sample {}: {}", d, i, e.what());
      }
      const std::vector<double> pooled = RowMean(per_frame);
      if (fda::Predict(adaptation.head, pooled) == sample.label) ++correct[d];
      ++totals[d];
      round_trip_ms += adaptation.timing.wall_clock_ms;
      ++requests;
      if (r.simulated.empty()) {
        r.simulated = adaptation.timing.simulated;
        r.upload_payload_bytes = adaptation.timing.upload_payload_bytes;
        r.download_payload_bytes = adaptation.timing.download_payload_bytes;
      }
    }
  }
  sentinel.Check(MethodName(setup.method));
  Finish(r, correct, totals);
  r.measured_round_trip_ms = requests == 0 ? 0.0 : round_trip_ms / static_cast<double>(requests);
  r.time_delay_ms = r.simulated.empty() ? 0.0 : r.simulated.back().total_ms;
  return r;
}

MethodResult RunPhase2Phase3Eval(const ExperimentConfig& config, const CloudModel& model,
                                 const Realtime& realtime, TransportKind transport) {
  return EvaluateHypernet(config, {Method::kOurs, &model.encoder, &model.fda, &model.adr},
                          realtime, transport);
}

namespace {

// A head trained on frozen pooled features; rows selects the training set.
Dense TrainStaticHead(const ExperimentConfig& config, const Tensor& pooled,
                      const std::vector<std::uint32_t>& labels,
                      const std::vector<std::size_t>& rows, Stream stream,
                      std::uint64_t index, const std::string& label) {
  const fda::HeadSlot slot = config.FdaConfig().slot;
  Dense head = Dense::Zeros(slot.in_dim, slot.out_dim);
  Rng rng = StreamRng(config, stream, index);
  std::vector<std::size_t> batch_rows, batch_labels;
  auto loss = [&](std::span<const std::size_t> idx, const Binder& bind) {
    batch_rows.clear();
    batch_labels.clear();
    for (std::size_t i : idx) {
      batch_rows.push_back(rows[i]);
      batch_labels.push_back(labels[rows[i]]);
    }
    Var x = numerics::GatherRows(Var::View(pooled), batch_rows);
    return numerics::SoftmaxCrossEntropy(head.Apply(bind, x), batch_labels);
  };
  Train(label, rows.size(), config.epochs, config.batch_size,
        OptimizerOptions(config, config.learning_rate, config.epochs, rows.size()),
        numerics::ParamList(head), loss, rng);
  return head;
}

// Adaptor trained on frozen features with the D-frame average as input.
fda::FdaParams TrainFrameAverageAdaptor(const ExperimentConfig& config, const Tensor& fused,
                                        const std::vector<std::uint32_t>& labels) {
  Rng init = StreamRng(config, Stream::kHyperBaselineInit);
  fda::FdaParams adaptor = fda::FdaParams::Init(config.FdaConfig(), init);
  const std::size_t frames = config.corpus.num_frames;
  const fda::HeadSlot slot = adaptor.config.slot;
  Rng rng = StreamRng(config, Stream::kHyperBaselineTrain);
  std::vector<std::size_t> rows, batch_labels;
  auto loss = [&](std::span<const std::size_t> idx, const Binder& bind) {
    rows.clear();
    batch_labels.clear();
    for (std::size_t i : idx) {
      for (std::size_t f = 0; f < frames; ++f) rows.push_back(i * frames + f);
      batch_labels.push_back(labels[i]);
    }
    Var batch = numerics::GatherRows(Var::View(fused), rows);
    Var global = fda::AggregateFrames(batch, frames, config.frame_samples, rng);
    Var theta = fda::Generate(adaptor, bind, global);
    Var logits = numerics::GeneratedLinear(theta, fda::PoolFrames(batch, frames),
                                           slot.in_dim, slot.out_dim);
    return numerics::SoftmaxCrossEntropy(logits, batch_labels);
  };
  Train("frame-average adaptor", labels.size(), config.epochs, config.batch_size,
        OptimizerOptions(config, config.learning_rate, config.epochs, labels.size()),
        numerics::ParamList(adaptor), loss, rng);
  return adaptor;
}

// Static heads evaluated on frozen features; head_for(d) picks device d's head.
template <typename HeadFor>
MethodResult EvaluateStatic(Method method, const ExperimentConfig& config,
                            const encoder::EncoderParams& frozen, const Realtime& realtime,
                            HeadFor head_for) {
  MethodResult r;
  r.method = method;
  r.params = MethodParameterCounts(method, config);
  r.retrains = true;
  r.time_delay_ms = config.retrain_reference_ms;
  std::vector<std::size_t> correct(realtime.size(), 0), totals(realtime.size(), 0);
  DeviceSentinel sentinel;
  for (std::size_t d = 0; d < realtime.size(); ++d) {
    const fda::GeneratedHead& head = head_for(d);
    for (const LabeledSample& sample : realtime[d]) {
      const std::vector<double> pooled = RowMean(encoder::Encode(frozen, sample).per_frame);
      if (fda::Predict(head, pooled) == sample.label) ++correct[d];
      ++totals[d];
    }
  }
  sentinel.Check(MethodName(method));
  Finish(r, correct, totals);
  return r;
}

void CheckCorpusMatches(const ExperimentConfig& config, const synthdata::CorpusOptions& o) {
  const synthdata::CorpusOptions& c = config.corpus;
  Require(o.num_frames == c.num_frames && o.raw_dim == c.raw_dim &&
              o.vocab_size == c.vocab_size && o.num_answers == c.num_answers,
          ErrorKind::kConfiguration,
          "corpus shape (frames {}, raw {}, vocab {}, answers {}) does not match the "
          "configuration (frames {}, raw {}, vocab {}, answers {})",
          o.num_frames, o.raw_dim, o.vocab_size, o.num_answers, c.num_frames, c.raw_dim,
          c.vocab_size, c.num_answers);
}

}  // namespace

RunReport RunBaselineSuite(const ExperimentConfig& config, const synthdata::Corpus& corpus,
                           const BenchOptions& options) {
  Validate(config);
  CheckCorpusMatches(config, corpus.options);
  auto say = [&](const std::string& msg) {
    if (options.progress) options.progress(msg);
  };
  const synthdata::SplitCorpus split = synthdata::SplitHistoryRealtime(corpus);
  RunReport report;
  report.config_hash = ConfigHash(config);
  report.seed = config.seed;
  report.shift_strength = corpus.options.shift_strength;
  report.scenarios = config.scenarios;

  CloudModel model = InitModel(config);
  const encoder::EncoderParams frozen = model.encoder;
  std::vector<std::uint32_t> labels;
  for (const LabeledSample& s : split.history) labels.push_back(s.label);
  const std::size_t frames = config.corpus.num_frames;
  const Tensor fused = EncodeAll(frozen, split.history);
  const Tensor pooled = PoolAll(fused, frames);

  say("training shared head");
  auto start = Clock::now();
  std::vector<std::size_t> all(labels.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const fda::GeneratedHead shared = HeadFromDense(
      TrainStaticHead(config, pooled, labels, all, Stream::kLinearTrain, 0, "shared head"));
  const double linear_ms = MillisecondsSince(start);

  say("fine-tuning per-device heads");
  std::vector<fda::GeneratedHead> device_heads;
  double tune_ms = 0.0;
  for (std::size_t d = 0; d < split.realtime.size(); ++d) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < split.history.size(); ++i) {
      if (split.history[i].device() == d) rows.push_back(i);
    }
    start = Clock::now();
    device_heads.push_back(HeadFromDense(TrainStaticHead(
        config, pooled, labels, rows, Stream::kFineTuneTrain, d, fmt::format("device {} head", d))));
    tune_ms += MillisecondsSince(start);
  }

  say("training frame-average adaptor");
  start = Clock::now();
  const fda::FdaParams hyper = TrainFrameAverageAdaptor(config, fused, labels);
  const double hyper_ms = MillisecondsSince(start);

  say("training reasoner");
  start = Clock::now();
  if (config.adr_epochs > 0) TrainReasoner(config, fused, model.adr, report.curves);
  say("training encoder and adaptor through the reasoner");
  if (config.epochs > 0) TrainTask(config, split.history, model, report.curves);
  const double ours_ms = MillisecondsSince(start);

  say("evaluating on realtime streams");
  const std::uint64_t nodes_before = numerics::Tape::TotalNodesAllocated();
  MethodResult linear = EvaluateStatic(Method::kLinear, config, frozen, split.realtime,
                                       [&](std::size_t) -> const fda::GeneratedHead& {
                                         return shared;
                                       });
  linear.measured_train_ms = linear_ms;
  MethodResult tuned = EvaluateStatic(Method::kFineTune, config, frozen, split.realtime,
                                      [&](std::size_t d) -> const fda::GeneratedHead& {
                                        return device_heads[d];
                                      });
  tuned.measured_train_ms = tune_ms / static_cast<double>(device_heads.size());
  MethodResult hyper_result = EvaluateHypernet(
      config, {Method::kHyper, &frozen, &hyper, nullptr}, split.realtime, options.transport);
  hyper_result.measured_train_ms = hyper_ms;
  MethodResult ours = RunPhase2Phase3Eval(config, model, split.realtime, options.transport);
  ours.measured_train_ms = ours_ms;
  report.device_tape_nodes = numerics::Tape::TotalNodesAllocated() - nodes_before;

  report.methods = {std::move(linear), std::move(tuned), std::move(hyper_result),
                    std::move(ours)};
  return report;
}

std::string ReportCsv(const RunReport& report) {
  std::string out =
      "method,accuracy,device_params,cloud_params,time_delay_ms,config_hash,seed\n";
  for (const MethodResult& m : report.methods) {
    out += fmt::format("{},{:.4f},{},{},{:.4f},{},{}\n", MethodName(m.method), m.accuracy,
                       m.params.device, m.params.cloud, m.time_delay_ms, report.config_hash,
                       report.seed);
  }
  return out;
}

std::string ReportJson(const RunReport& report) {
  using nlohmann::json;
  json methods = json::array();
  for (const MethodResult& m : report.methods) {
    json delays = json::array();
    for (const protocol::ScenarioDelay& s : m.simulated) {
      delays.push_back({{"scenario", s.scenario},
                        {"up_ms", s.up_ms},
                        {"down_ms", s.down_ms},
                        {"total_ms", s.total_ms}});
    }
    methods.push_back({{"method", MethodName(m.method)},
                       {"accuracy", m.accuracy},
                       {"correct", m.correct},
                       {"total", m.total},
                       {"device_accuracy", m.device_accuracy},
                       {"device_params", m.params.device},
                       {"cloud_params", m.params.cloud},
                       {"retrains", m.retrains},
                       {"time_delay_ms", m.time_delay_ms},
                       {"upload_payload_bytes", m.upload_payload_bytes},
                       {"download_payload_bytes", m.download_payload_bytes},
                       {"simulated_delays", delays},
                       {"measured_train_ms", m.measured_train_ms},
                       {"measured_round_trip_ms", m.measured_round_trip_ms}});
  }
  json scenarios = json::array();
  for (const Scenario& s : report.scenarios) {
    scenarios.push_back({{"name", s.name}, {"megabytes_per_second", s.megabytes_per_second}});
  }
  const LossCurves& c = report.curves;
  json doc = {{"config_hash", report.config_hash},
              {"seed", report.seed},
              {"shift_strength", report.shift_strength},
              {"scenarios", scenarios},
              {"methods", methods},
              {"device_tape_nodes", report.device_tape_nodes},
              {"loss_curves",
               {{"reasoner_kl", c.adr_kl},
                {"reasoner_rec", c.adr_rec},
                {"reasoner_ag", c.adr_ag},
                {"reasoner_total", c.adr_total},
                {"task", c.task}}}};
  return doc.dump(2) + "\n";
}

}  // namespace cloudadapt::harness
