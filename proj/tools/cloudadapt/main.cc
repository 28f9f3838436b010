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

// Command-line front end: corpus generation, training, serving, the device
// client, the four-method bench, and the delay table.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cloudadapt/common/error.h"
#include "cloudadapt/common/file.h"
#include "cloudadapt/harness/bench.h"
#include "cloudadapt/harness/checkpoint.h"
#include "cloudadapt/harness/config.h"
#include "cloudadapt/harness/delay_table.h"
#include "cloudadapt/harness/training.h"
#include "cloudadapt/protocol/service.h"
#include "cloudadapt/protocol/transport.h"
#include "cloudadapt/synthdata/corpus.h"

namespace cloudadapt {
namespace {

namespace fs = std::filesystem;
using harness::ExperimentConfig;

int ExitCode(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage:
      return 2;
    case ErrorKind::kConfiguration:
      return 3;
    case ErrorKind::kIo:
      return 4;
    case ErrorKind::kFormat:
      return 5;
    case ErrorKind::kInput:
      return 6;
    case ErrorKind::kTransport:
      return 7;
    case ErrorKind::kDivergence:
      return 8;
    case ErrorKind::kBackpropFree:
      return 9;
    case ErrorKind::kDimension:
      return 10;
    case ErrorKind::kContract:
      return 11;
    case ErrorKind::kDegenerate:
      return 12;
  }
  return 1;
}

struct GlobalFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
};

ExperimentConfig ResolveConfig(const GlobalFlags& flags) {
  ExperimentConfig config;
  if (!flags.config_path.empty()) config = harness::LoadConfig(flags.config_path);
  for (const std::string& entry : flags.overrides) {
    const auto eq = entry.find('=');
    Require(eq != std::string::npos, ErrorKind::kUsage, "--set expects key=value, got '{}'",
            entry);
    harness::ApplyOverride(config, entry.substr(0, eq), entry.substr(eq + 1));
  }
  if (flags.seed) config.seed = *flags.seed;
  harness::Validate(config);
  return config;
}

std::string OutOr(const GlobalFlags& flags, const char* fallback) {
  return flags.out.empty() ? fallback : flags.out;
}

void Note(const std::string& message) { std::fprintf(stderr, "%s\n", message.c_str()); }

synthdata::Corpus LoadOrMakeCorpus(const ExperimentConfig& config, const std::string& path) {
  if (!path.empty()) return synthdata::ReadCorpus(path);
  return synthdata::MakeCorpus(harness::CorpusFor(config));
}

// Per-sample frame-mean of the raw video, for external baselines.
std::string PooledCsv(const synthdata::Corpus& corpus) {
  std::string out = "device,split,clip,label";
  for (std::size_t j = 0; j < corpus.options.raw_dim; ++j) out += fmt::format(",x{}", j);
  out += "\n";
  auto emit = [&](const synthdata::LabeledSample& s, const char* split) {
    out += fmt::format("{},{},{},{}", s.device(), split, s.video.clip_id, s.label);
    for (std::size_t j = 0; j < s.video.raw_dim; ++j) {
      double sum = 0.0;
      for (std::size_t f = 0; f < s.video.num_frames; ++f) sum += s.video.frame(f)[j];
      out += fmt::format(",{:.9g}", sum / static_cast<double>(s.video.num_frames));
    }
    out += "\n";
  };
  for (const synthdata::DeviceCorpus& d : corpus.devices) {
    for (const auto& s : d.history) emit(s, "history");
    for (const auto& s : d.realtime) emit(s, "realtime");
  }
  return out;
}

int GenCorpus(const GlobalFlags& flags, const std::string& format) {
  const ExperimentConfig config = ResolveConfig(flags);
  const synthdata::Corpus corpus = synthdata::MakeCorpus(harness::CorpusFor(config));
  if (format == "csv") {
    const std::string out = OutOr(flags, "corpus.csv");
    WriteFileText(out, PooledCsv(corpus));
    Note(fmt::format("wrote {}", out));
  } else {
    const std::string out = OutOr(flags, "corpus.bin");
    synthdata::WriteCorpus(corpus, out);
    Note(fmt::format("wrote {}", out));
  }
  return 0;
}

std::string CurvesJson(const harness::LossCurves& c) {
  auto list = [](const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += fmt::format("{}{:.17g}", i ? ", " : "", v[i]);
    return s + "]";
  };
  return fmt::format(
      "{{\n  \"reasoner_kl\": {},\n  \"reasoner_rec\": {},\n  \"reasoner_ag\": {},\n"
      "  \"reasoner_total\": {},\n  \"task\": {}\n}}\n",
      list(c.adr_kl), list(c.adr_rec), list(c.adr_ag), list(c.adr_total), list(c.task));
}

int Train(const GlobalFlags& flags, const std::string& corpus_path) {
  const ExperimentConfig config = ResolveConfig(flags);
  const synthdata::Corpus corpus = LoadOrMakeCorpus(config, corpus_path);
  const synthdata::SplitCorpus split = synthdata::SplitHistoryRealtime(corpus);
  Note(fmt::format("training on {} history samples (config {})", split.history.size(),
                   harness::ConfigHash(config)));
  const harness::Phase1Result result = harness::RunPhase1Train(config, split.history);
  const fs::path out = OutOr(flags, "checkpoint.bin");
  harness::WriteCheckpoint(result.model, config, out);
  fs::path curves = out;
  curves += ".curves.json";
  WriteFileText(curves, CurvesJson(result.curves));
  Note(fmt::format("wrote {} and {}", out.string(), curves.string()));
  return 0;
}

std::atomic<bool> g_stop{false};
extern "C" void OnSignal(int) { g_stop = true; }

int Serve(const GlobalFlags& flags, const std::string& checkpoint,
          const protocol::ServerOptions& options, std::uint64_t max_requests) {
  const ExperimentConfig config = ResolveConfig(flags);
  const harness::CloudModel model = harness::ReadCheckpoint(checkpoint, config);
  const protocol::AdaptService service(model.fda, &model.adr, config.seed);
  std::signal(SIGINT, OnSignal);
  std::signal(SIGTERM, OnSignal);
  protocol::TcpServer server(
      [&service](std::span<const std::uint8_t> frame) { return service.Handle(frame); },
      options);
  std::printf("listening on %s:%u\n", options.host.c_str(), server.port());
  std::fflush(stdout);
  while (!g_stop.load() && (max_requests == 0 || server.requests_served() < max_requests)) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  server.Stop();
  Note(fmt::format("served {} requests", server.requests_served()));
  return 0;
}

int Adapt(const GlobalFlags& flags, const std::string& checkpoint,
          const std::string& corpus_path, const protocol::ClientOptions& client) {
  const ExperimentConfig config = ResolveConfig(flags);
  const harness::CloudModel model = harness::ReadCheckpoint(checkpoint, config);
  const synthdata::Corpus corpus = LoadOrMakeCorpus(config, corpus_path);
  const synthdata::SplitCorpus split = synthdata::SplitHistoryRealtime(corpus);

  // The device keeps its own copy of the backbone; the service is remote.
  protocol::TcpTransport transport(client);
  protocol::DeviceClient device(transport, config.scenarios, config.fixed_rtt_ms);
  std::size_t correct = 0, total = 0;
  double wall_ms = 0.0;
  protocol::TimingRecord last;
  {
    numerics::NoGradGuard guard;
    for (std::size_t d = 0; d < split.realtime.size(); ++d) {
      numerics::Rng rng = harness::StreamRng(config, harness::Stream::kEvalOurs, d);
      for (std::size_t i = 0; i < split.realtime[d].size(); ++i) {
        const synthdata::LabeledSample& s = split.realtime[d][i];
        const numerics::Tensor per_frame = encoder::Encode(model.encoder, s).per_frame;
        const std::size_t frames = per_frame.rows(), dim = per_frame.cols();
        const std::size_t a = adr::SelectAnchor(frames, config.anchor_policy, rng);
        std::vector<double> anchor(per_frame.data().begin() + a * dim,
                                   per_frame.data().begin() + (a + 1) * dim);
        protocol::Adaptation result;
        try {
          result = device.RequestAdaptation(s.device(), 0, anchor);
        } catch (const Error& e) {
          Fail(e.kind(), "device {} sample {}: {}", d, i, e.what());
        }
        std::vector<double> pooled(dim, 0.0);
        for (std::size_t f = 0; f < frames; ++f) {
          for (std::size_t j = 0; j < dim; ++j) pooled[j] += per_frame[f * dim + j];
        }
        for (double& v : pooled) v /= static_cast<double>(frames);
        correct += fda::Predict(result.head, pooled) == s.label ? 1 : 0;
        ++total;
        wall_ms += result.timing.wall_clock_ms;
        last = result.timing;
      }
    }
  }
  std::printf("accuracy %.4f (%zu/%zu)\n", total ? double(correct) / double(total) : 0.0,
              correct, total);
  std::printf("upload %zu B, download %zu B, mean round trip %.3f ms\n",
              last.upload_payload_bytes, last.download_payload_bytes,
              total ? wall_ms / double(total) : 0.0);
  for (const protocol::ScenarioDelay& s : last.simulated) {
    std::printf("  %-14s up %.4f ms  down %.4f ms  total %.4f ms\n", s.scenario.c_str(),
                s.up_ms, s.down_ms, s.total_ms);
  }
  return 0;
}

int Bench(const GlobalFlags& flags, const std::string& corpus_path,
          const std::string& transport) {
  const ExperimentConfig config = ResolveConfig(flags);
  const synthdata::Corpus corpus = LoadOrMakeCorpus(config, corpus_path);
  harness::BenchOptions options;
  options.transport = transport == "tcp" ? harness::TransportKind::kTcp
                                         : harness::TransportKind::kInProcess;
  options.progress = Note;
  const harness::RunReport report = harness::RunBaselineSuite(config, corpus, options);
  const fs::path dir = OutOr(flags, "bench_out");
  const std::string csv = harness::ReportCsv(report);
  WriteFileText(dir / "report.csv", csv);
  WriteFileText(dir / "report.json", harness::ReportJson(report));
  std::fputs(csv.c_str(), stdout);
  Note(fmt::format("wrote {}/report.csv and report.json", dir.string()));
  return 0;
}

int DelayTable(const GlobalFlags& flags, const std::string& scenario_file) {
  ExperimentConfig config = ResolveConfig(flags);
  if (!scenario_file.empty()) {
    config.scenarios = harness::ParseScenarios(ReadFileText(scenario_file));
  }
  std::vector<harness::PayloadRow> rows = harness::ReferencePayloads();
  // Reference values only apply to the networks they were measured on.
  if (config.scenarios != harness::DefaultScenarios()) {
    for (auto& r : rows) r.reference.clear();
  }
  const harness::DelayTable table = harness::ComputeDelayTable(config.scenarios, rows);
  std::fputs(harness::FormatDelayTable(table).c_str(), stdout);
  if (!flags.out.empty()) WriteFileText(flags.out, harness::DelayTableCsv(table));
  return 0;
}

int Run(int argc, char** argv) {
  CLI::App app{"Cloud-device adaptation experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags flags;
  app.add_option("--config", flags.config_path, "key=value configuration file")
      ->check(CLI::ExistingFile);
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = app.add_option("--seed", seed, "experiment seed");
  app.add_option("--out", flags.out, "output file or directory");
  app.add_option("--set", flags.overrides, "override one configuration key (key=value)");

  std::string format = "bin";
  auto* gen = app.add_subcommand("gen-corpus", "write a synthetic corpus");
  gen->add_option("--format", format, "bin or csv (frame-mean features)")
      ->check(CLI::IsMember({"bin", "csv"}));

  std::string corpus_path;
  auto* train = app.add_subcommand("train", "train the cloud model and save a checkpoint");
  train->add_option("--corpus", corpus_path, "corpus file (default: generate)")
      ->check(CLI::ExistingFile);

  std::string checkpoint;
  protocol::ServerOptions server;
  std::uint64_t max_requests = 0;
  auto* serve = app.add_subcommand("serve", "serve adaptation requests over TCP");
  serve->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  serve->add_option("--host", server.host);
  serve->add_option("--port", server.port);
  serve->add_option("--max-concurrent", server.max_concurrent);
  serve->add_option("--max-requests", max_requests, "exit after this many (0: run until signalled)");

  protocol::ClientOptions client;
  auto* adapt = app.add_subcommand("adapt", "run the devices' realtime streams against a server");
  adapt->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  adapt->add_option("--corpus", corpus_path)->check(CLI::ExistingFile);
  adapt->add_option("--host", client.host);
  adapt->add_option("--port", client.port)->required();
  adapt->add_option("--timeout-ms", client.timeout_ms);
  adapt->add_option("--attempts", client.max_attempts);

  std::string transport = "inproc";
  auto* bench = app.add_subcommand("bench", "train and compare all four methods");
  bench->add_option("--corpus", corpus_path)->check(CLI::ExistingFile);
  bench->add_option("--transport", transport)->check(CLI::IsMember({"inproc", "tcp"}));

  std::string scenario_file;
  auto* delay = app.add_subcommand("delay-table", "print transfer delays per network");
  delay->add_option("--scenarios", scenario_file, "file of name=MBps lines")
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    Fail(ErrorKind::kUsage, "{}", e.what());
  }
  if (seed_opt->count() > 0) flags.seed = seed;

  if (gen->parsed()) return GenCorpus(flags, format);
  if (train->parsed()) return Train(flags, corpus_path);
  if (serve->parsed()) return Serve(flags, checkpoint, server, max_requests);
  if (adapt->parsed()) return Adapt(flags, checkpoint, corpus_path, client);
  if (bench->parsed()) return Bench(flags, corpus_path, transport);
  if (delay->parsed()) return DelayTable(flags, scenario_file);
  Fail(ErrorKind::kUsage, "no subcommand");
}

}  // namespace
}  // namespace cloudadapt

int main(int argc, char** argv) {
  try {
    return cloudadapt::Run(argc, argv);
  } catch (const cloudadapt::Error& e) {
    std::fprintf(stderr, "error[%s]: %s\n",
                 std::string(cloudadapt::ErrorKindName(e.kind())).c_str(), e.what());
    return cloudadapt::ExitCode(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error[internal]: %s\n", e.what());
    return 1;
  }
}
