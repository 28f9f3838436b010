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

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cloudadapt/common/error.h"
#include "cloudadapt/harness/bench.h"
#include "cloudadapt/harness/checkpoint.h"
#include "cloudadapt/harness/config.h"
#include "cloudadapt/harness/delay_table.h"
#include "cloudadapt/harness/training.h"
#include "cloudadapt/numerics/layers.h"
#include "cloudadapt/numerics/tape.h"
#include "cloudadapt/synthdata/corpus.h"

namespace cloudadapt::harness {
namespace {

// Minutes-scale defaults shrunk to milliseconds.
ExperimentConfig Tiny() {
  ExperimentConfig c;
  c.corpus.history_per_device = 24;
  c.corpus.realtime_per_device = 8;
  c.model_dim = 12;
  c.hyper_hidden = 6;
  c.adr_hidden = 8;
  c.adr_latent = 4;
  c.epochs = 2;
  c.adr_epochs = 2;
  c.batch_size = 8;
  return c;
}

std::vector<std::string> Lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

TEST(ConfigTest, TextRoundTripKeepsHash) {
  ExperimentConfig c = Tiny();
  c.anchor_policy = adr::AnchorPolicy::kRandom;
  c.scenarios = {{"a", 1.5}, {"b b", 20.0}};
  ExperimentConfig back = FromText(ToText(c));
  EXPECT_EQ(ToText(back), ToText(c));
  EXPECT_EQ(ConfigHash(back), ConfigHash(c));
  EXPECT_EQ(ConfigHash(c).size(), 8u);
}

TEST(ConfigTest, OverridesChangeHash) {
  ExperimentConfig c;
  const std::string before = ConfigHash(c);
  ApplyOverride(c, "seed", "2");
  EXPECT_EQ(c.seed, 2u);
  EXPECT_NE(ConfigHash(c), before);
  ApplyOverride(c, "corpus.shift_strength", "1.5");
  EXPECT_EQ(c.corpus.shift_strength, 1.5);
  ApplyOverride(c, "sampling", "stochastic");
  EXPECT_EQ(c.sampling, adr::SamplingMode::kStochastic);
}

TEST(ConfigTest, BadOverridesAreConfigurationErrors) {
  ExperimentConfig c;
  for (auto [key, value] : {std::pair{"no_such_key", "1"}, std::pair{"epochs", "many"},
                            std::pair{"anchor_policy", "middle"}}) {
    try {
      ApplyOverride(c, key, value);
      FAIL() << key;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kConfiguration) << key;
    }
  }
}

TEST(ConfigTest, ValidateRejectsInconsistentValues) {
  ExperimentConfig c;
  c.frame_samples = 1;
  EXPECT_THROW(Validate(c), Error);
  c = ExperimentConfig{};
  c.frame_samples = 9;
  EXPECT_THROW(Validate(c), Error);
  c = ExperimentConfig{};
  c.scenarios.clear();
  EXPECT_THROW(Validate(c), Error);
  EXPECT_NO_THROW(Validate(ExperimentConfig{}));
}

TEST(ConfigTest, ScenarioTextRoundTrip) {
  std::vector<Scenario> s = ParseScenarios("4G=5\n# comment\n5G fast = 100\n");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[1].name, "5G fast");
  EXPECT_EQ(s[1].megabytes_per_second, 100.0);
  EXPECT_EQ(ParseScenarios(ScenariosToText(s)), s);
  EXPECT_EQ(ParseScenarios(ScenariosToText(DefaultScenarios())), DefaultScenarios());
  EXPECT_THROW(ParseScenarios("broken line"), Error);
}

TEST(CheckpointTest, RoundTripIsExact) {
  ExperimentConfig c = Tiny();
  CloudModel model = InitModel(c);
  Bytes bytes = SerializeCheckpoint(model, ConfigHash(c));
  CloudModel back = DeserializeCheckpoint(bytes, c);
  EXPECT_EQ(SerializeCheckpoint(back, ConfigHash(c)), bytes);
  EXPECT_EQ(back.fda.hyper_out.weight, model.fda.hyper_out.weight);
}

TEST(CheckpointTest, FileRoundTrip) {
  ExperimentConfig c = Tiny();
  CloudModel model = InitModel(c);
  const auto path = std::filesystem::temp_directory_path() / "harness_test_ckpt.bin";
  WriteCheckpoint(model, c, path);
  EXPECT_EQ(SerializeCheckpoint(ReadCheckpoint(path, c), ConfigHash(c)),
            SerializeCheckpoint(model, ConfigHash(c)));
  std::filesystem::remove(path);
}

TEST(CheckpointTest, ConfigMismatchAndCorruptionAreFormatErrors) {
  ExperimentConfig c = Tiny();
  Bytes bytes = SerializeCheckpoint(InitModel(c), ConfigHash(c));
  ExperimentConfig other = c;
  other.seed = 9;
  try {
    DeserializeCheckpoint(bytes, other);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFormat);
  }
  Bytes bad = bytes;
  bad[bad.size() / 2] ^= 1;
  try {
    DeserializeCheckpoint(bad, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFormat);
  }
  // Same hash, different shapes: the header matches but sections do not.
  ExperimentConfig wide = c;
  wide.model_dim = 16;
  Bytes mislabeled = SerializeCheckpoint(InitModel(wide), ConfigHash(c));
  EXPECT_THROW(DeserializeCheckpoint(mislabeled, c), Error);
}

TEST(CheckpointTest, SameSeedTrainsIdenticalBytes) {
  ExperimentConfig c = Tiny();
  synthdata::SplitCorpus split =
      synthdata::SplitHistoryRealtime(synthdata::MakeCorpus(CorpusFor(c)));
  Bytes a = SerializeCheckpoint(RunPhase1Train(c, split.history).model, ConfigHash(c));
  Bytes b = SerializeCheckpoint(RunPhase1Train(c, split.history).model, ConfigHash(c));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, SerializeCheckpoint(InitModel(c), ConfigHash(c)));
}

TEST(CheckpointTest, ZeroEpochsEqualsInitialization) {
  ExperimentConfig c = Tiny();
  c.epochs = 0;
  c.adr_epochs = 0;
  synthdata::SplitCorpus split =
      synthdata::SplitHistoryRealtime(synthdata::MakeCorpus(CorpusFor(c)));
  EXPECT_EQ(SerializeCheckpoint(RunPhase1Train(c, split.history).model, ConfigHash(c)),
            SerializeCheckpoint(InitModel(c), ConfigHash(c)));
}

TEST(ParameterCountTest, ClosedFormMatchesTraversal) {
  for (ExperimentConfig c : {ExperimentConfig{}, Tiny()}) {
    CloudModel model = InitModel(c);
    EXPECT_EQ(EncoderParameterCount(c), numerics::ParamCount(model.encoder));
    EXPECT_EQ(AdaptorParameterCount(c), numerics::ParamCount(model.fda));
    EXPECT_EQ(ReasonerParameterCount(c), numerics::ParamCount(model.adr));
  }
}

TEST(ParameterCountTest, DefaultMethodCounts) {
  ExperimentConfig c;
  CloudModel model = InitModel(c);
  const std::uint64_t encoder = numerics::ParamCount(model.encoder);
  const std::uint64_t slot = c.FdaConfig().slot.ParameterCount();
  EXPECT_EQ(slot, 1930u);
  for (Method m : kAllMethods) {
    EXPECT_EQ(MethodParameterCounts(m, c).device, encoder + slot) << MethodName(m);
  }
  // The encoder runs on the device; the cloud holds only the generators.
  EXPECT_EQ(MethodParameterCounts(Method::kHyper, c).cloud,
            numerics::ParamCount(model.fda));
  EXPECT_EQ(MethodParameterCounts(Method::kOurs, c).cloud,
            numerics::ParamCount(model.fda) + numerics::ParamCount(model.adr));
  EXPECT_EQ(MethodParameterCounts(Method::kOurs, c).device, 133834u);
  EXPECT_EQ(MethodParameterCounts(Method::kOurs, c).cloud, 354538u);
}

TEST(DelayTableTest, AllReferenceCellsReproduce) {
  DelayTable t = ComputeDelayTable(DefaultScenarios(), ReferencePayloads());
  EXPECT_EQ(t.CheckedValues(), 24u);
  EXPECT_EQ(t.Mismatches(), 0u);
  // MSRVTT download at 5 MB/s prints as 111ms.
  EXPECT_NEAR(t.cells[0][0].down_ms, 111.04, 0.005);
  EXPECT_NE(FormatDelayTable(t).find("MSRVTT"), std::string::npos);
  EXPECT_EQ(Lines(DelayTableCsv(t)).size(), 1u + 3u * 4u);
}

TEST(DelayTableTest, DecimalUnitsWouldNotReproduce) {
  std::vector<PayloadRow> rows = ReferencePayloads();
  for (PayloadRow& r : rows) {
    r.up_kilobytes *= 1000.0 / 1024.0 * 1.048576;
    r.down_kilobytes *= 1000.0 / 1024.0 * 1.048576;
  }
  EXPECT_GT(ComputeDelayTable(DefaultScenarios(), rows).Mismatches(), 0u);
}

TEST(DelayTableTest, PrintedValueRounding) {
  PrintedValue v{"111"};
  EXPECT_EQ(v.decimals(), 0);
  EXPECT_TRUE(v.Matches(111.04));
  EXPECT_TRUE(v.Matches(110.5));
  EXPECT_FALSE(v.Matches(111.6));
  PrintedValue w{"0.007"};
  EXPECT_EQ(w.decimals(), 3);
  EXPECT_TRUE(w.Matches(0.00732));
  EXPECT_FALSE(w.Matches(0.0076));
}

TEST(TrainingTest, ReconstructionLossFallsOverTenEpochs) {
  ExperimentConfig c;
  synthdata::SplitCorpus split =
      synthdata::SplitHistoryRealtime(synthdata::MakeCorpus(CorpusFor(c)));
  CloudModel model = InitModel(c);
  numerics::Tensor fused = EncodeAll(model.encoder, split.history);
  LossCurves curves;
  TrainReasoner(c, fused, model.adr, curves);
  ASSERT_EQ(curves.adr_rec.size(), 10u);
  EXPECT_LT(curves.adr_rec.back(), curves.adr_rec.front());
  // Epoch means of per-batch totals; equal to the summed means up to rounding.
  for (std::size_t e = 0; e < 10; ++e) {
    EXPECT_NEAR(curves.adr_total[e],
                curves.adr_ag[e] + curves.adr_rec[e] + curves.adr_kl[e], 1e-12)
        << "epoch " << e;
  }
}

TEST(BackpropFreeTest, GuardMakesTapeAllocationThrow) {
  numerics::Tape tape;
  numerics::Tensor t = numerics::Tensor::Vector({1.0, 2.0});
  numerics::NoGradGuard guard;
  EXPECT_FALSE(numerics::NoGradGuard::GradientsEnabled());
  try {
    tape.Parameter(t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kBackpropFree);
  }
}

TEST(BackpropFreeTest, DevicePathAllocatesNothing) {
  ExperimentConfig c = Tiny();
  synthdata::Corpus corpus = synthdata::MakeCorpus(CorpusFor(c));
  synthdata::SplitCorpus split = synthdata::SplitHistoryRealtime(corpus);
  CloudModel model = InitModel(c);
  const std::uint64_t before = numerics::Tape::TotalNodesAllocated();
  MethodResult r = RunPhase2Phase3Eval(c, model, split.realtime, TransportKind::kInProcess);
  EXPECT_EQ(numerics::Tape::TotalNodesAllocated(), before);
  EXPECT_EQ(r.total, 24u);
  EXPECT_TRUE(numerics::NoGradGuard::GradientsEnabled());
}

TEST(BenchTest, SmallSuiteReportSchema) {
  ExperimentConfig c = Tiny();
  synthdata::Corpus corpus = synthdata::MakeCorpus(CorpusFor(c));
  RunReport report = RunBaselineSuite(c, corpus);
  EXPECT_EQ(report.device_tape_nodes, 0u);
  EXPECT_EQ(report.config_hash, ConfigHash(c));
  std::vector<std::string> lines = Lines(ReportCsv(report));
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0], "method,accuracy,device_params,cloud_params,time_delay_ms,"
                      "config_hash,seed");
  const char* names[] = {"F-linear", "Fine-tuning", "F-hyper", "Ours"};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(lines[i + 1].rfind(names[i], 0), 0u) << lines[i + 1];
    EXPECT_NE(lines[i + 1].find(ConfigHash(c)), std::string::npos);
  }
  const MethodResult& ours = report.Find(Method::kOurs);
  EXPECT_EQ(ours.total, 24u);
  EXPECT_FALSE(ours.retrains);
  EXPECT_EQ(ours.upload_payload_bytes, 12u * 4u);
  EXPECT_DOUBLE_EQ(ours.time_delay_ms, ours.simulated.back().total_ms);
  EXPECT_TRUE(report.Find(Method::kLinear).retrains);
  EXPECT_EQ(report.Find(Method::kLinear).time_delay_ms, c.retrain_reference_ms);
  const std::string json = ReportJson(report);
  EXPECT_NE(json.find("\"config_hash\""), std::string::npos);
  EXPECT_NE(json.find("measured"), std::string::npos);
}

TEST(BenchTest, RerunAndTcpAgreeWithInProcess) {
  ExperimentConfig c = Tiny();
  synthdata::Corpus corpus = synthdata::MakeCorpus(CorpusFor(c));
  RunReport a = RunBaselineSuite(c, corpus);
  RunReport b = RunBaselineSuite(c, corpus, {.transport = TransportKind::kTcp});
  EXPECT_EQ(ReportCsv(a), ReportCsv(b));
  for (Method m : kAllMethods) {
    EXPECT_EQ(a.Find(m).device_accuracy, b.Find(m).device_accuracy) << MethodName(m);
  }
}

TEST(BenchTest, CorpusShapeMustMatchConfig) {
  ExperimentConfig c = Tiny();
  synthdata::CorpusOptions o = CorpusFor(c);
  o.raw_dim = 16;
  try {
    RunBaselineSuite(c, synthdata::MakeCorpus(o));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfiguration);
  }
}

}  // namespace
}  // namespace cloudadapt::harness
