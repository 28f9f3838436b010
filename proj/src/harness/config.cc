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

#include "cloudadapt/harness/config.h"

#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

#include <fmt/format.h>

#include "cloudadapt/common/bytes.h"
#include "cloudadapt/common/error.h"
#include "cloudadapt/common/file.h"

namespace cloudadapt::harness {
namespace {

std::string Trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

double ParseDouble(const std::string& key, const std::string& value) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  Require(ec == std::errc() && ptr == value.data() + value.size() && std::isfinite(out),
          ErrorKind::kConfiguration, "{}: '{}' is not a finite number", key, value);
  return out;
}

std::uint64_t ParseUnsigned(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  Require(ec == std::errc() && ptr == value.data() + value.size(),
          ErrorKind::kConfiguration, "{}: '{}' is not a non-negative integer", key,
          value);
  return out;
}

// Shortest text that parses back to the same double.
std::string FormatDouble(double v) { return fmt::format("{}", v); }

struct Field {
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

template <typename T>
Field SizeField(const char* key, T ExperimentConfig::*member) {
  return {key, [member](const ExperimentConfig& c) { return std::to_string(c.*member); },
          [key, member](ExperimentConfig& c, const std::string& v) {
            c.*member = static_cast<T>(ParseUnsigned(key, v));
          }};
}

Field DoubleField(const char* key, double ExperimentConfig::*member) {
  return {key, [member](const ExperimentConfig& c) { return FormatDouble(c.*member); },
          [key, member](ExperimentConfig& c, const std::string& v) {
            c.*member = ParseDouble(key, v);
          }};
}

template <typename T>
Field CorpusSize(const char* key, T synthdata::CorpusOptions::*member) {
  return {key,
          [member](const ExperimentConfig& c) { return std::to_string(c.corpus.*member); },
          [key, member](ExperimentConfig& c, const std::string& v) {
            c.corpus.*member = static_cast<T>(ParseUnsigned(key, v));
          }};
}

Field CorpusDouble(const char* key, double synthdata::CorpusOptions::*member) {
  return {key,
          [member](const ExperimentConfig& c) { return FormatDouble(c.corpus.*member); },
          [key, member](ExperimentConfig& c, const std::string& v) {
            c.corpus.*member = ParseDouble(key, v);
          }};
}

template <typename E>
Field EnumField(const char* key, E ExperimentConfig::*member, const char* first_name,
                E first, const char* second_name, E second) {
  return {key,
          [=](const ExperimentConfig& c) {
            return std::string(c.*member == first ? first_name : second_name);
          },
          [=](ExperimentConfig& c, const std::string& v) {
            if (v == first_name) {
              c.*member = first;
            } else if (v == second_name) {
              c.*member = second;
            } else {
              Fail(ErrorKind::kConfiguration, "{}: expected '{}' or '{}', got '{}'", key,
                   first_name, second_name, v);
            }
          }};
}

const std::vector<Field>& Fields() {
  using C = ExperimentConfig;
  using O = synthdata::CorpusOptions;
  static const std::vector<Field> fields = {
      CorpusSize("corpus.num_devices", &O::num_devices),
      CorpusSize("corpus.history_per_device", &O::history_per_device),
      CorpusSize("corpus.realtime_per_device", &O::realtime_per_device),
      CorpusSize("corpus.num_answers", &O::num_answers),
      CorpusDouble("corpus.shift_strength", &O::shift_strength),
      CorpusSize("corpus.num_frames", &O::num_frames),
      CorpusSize("corpus.raw_dim", &O::raw_dim),
      CorpusSize("corpus.vocab_size", &O::vocab_size),
      CorpusSize("corpus.max_query_length", &O::max_query_length),
      CorpusSize("corpus.tokens_per_class", &O::tokens_per_class),
      CorpusDouble("corpus.informative_token_prob", &O::informative_token_prob),
      CorpusDouble("corpus.center_scale", &O::center_scale),
      CorpusDouble("corpus.clip_noise", &O::clip_noise),
      CorpusDouble("corpus.frame_noise", &O::frame_noise),
      CorpusDouble("corpus.nuisance_scale", &O::nuisance_scale),
      CorpusSize("corpus.nuisance_rank", &O::nuisance_rank),
      CorpusDouble("corpus.saturation", &O::saturation),
      SizeField("model_dim", &C::model_dim),
      SizeField("fusion_blocks", &C::fusion_blocks),
      SizeField("frame_samples", &C::frame_samples),
      DoubleField("lambda", &C::lambda),
      SizeField("hyper_hidden", &C::hyper_hidden),
      SizeField("adr_hidden", &C::adr_hidden),
      SizeField("adr_latent", &C::adr_latent),
      DoubleField("adr_learning_rate", &C::adr_learning_rate),
      SizeField("adr_epochs", &C::adr_epochs),
      DoubleField("learning_rate", &C::learning_rate),
      SizeField("epochs", &C::epochs),
      SizeField("batch_size", &C::batch_size),
      DoubleField("weight_decay", &C::weight_decay),
      DoubleField("schedule_power", &C::schedule_power),
      EnumField("anchor_policy", &C::anchor_policy, "first", adr::AnchorPolicy::kFirst,
                "random", adr::AnchorPolicy::kRandom),
      EnumField("style_source", &C::style_source, "reconstructed",
                adr::StyleSource::kReconstructed, "anchor", adr::StyleSource::kAnchor),
      EnumField("sampling", &C::sampling, "mean", adr::SamplingMode::kMean,
                "stochastic", adr::SamplingMode::kStochastic),
      SizeField("seed", &C::seed),
      DoubleField("fixed_rtt_ms", &C::fixed_rtt_ms),
      DoubleField("retrain_reference_ms", &C::retrain_reference_ms),
  };
  return fields;
}

Scenario ParseScenario(const std::string& entry) {
  const auto eq = entry.rfind('=');
  Require(eq != std::string::npos, ErrorKind::kConfiguration,
          "scenario '{}' is not name=MBps", entry);
  Scenario s{Trim(std::string_view(entry).substr(0, eq)), 0.0};
  s.megabytes_per_second = ParseDouble("scenario", Trim(entry.substr(eq + 1)));
  Require(!s.name.empty(), ErrorKind::kConfiguration, "scenario without a name");
  Require(s.megabytes_per_second > 0.0, ErrorKind::kConfiguration,
          "scenario '{}' needs a positive bandwidth", s.name);
  return s;
}

}  // namespace

std::vector<Scenario> DefaultScenarios() {
  return {{"4G: 5MB/s", 5.0}, {"4G: 15MB/s", 15.0}, {"5G: 50MB/s", 50.0},
          {"5G: 100MB/s", 100.0}};
}

encoder::EncoderConfig ExperimentConfig::EncoderConfig() const {
  return {corpus.raw_dim, model_dim, corpus.vocab_size, corpus.num_frames,
          fusion_blocks};
}

fda::FdaConfig ExperimentConfig::FdaConfig() const {
  fda::FdaConfig c;
  c.model_dim = model_dim;
  c.proj_dim = model_dim;
  c.hyper_hidden = hyper_hidden;
  c.slot = {model_dim, corpus.num_answers};
  return c;
}

adr::AdrConfig ExperimentConfig::AdrConfig() const {
  adr::AdrConfig c;
  c.model_dim = model_dim;
  c.hidden_dim = adr_hidden;
  c.latent_dim = adr_latent;
  c.lambda = lambda;
  c.style_source = style_source;
  c.anchor_policy = anchor_policy;
  c.sampling = sampling;
  return c;
}

void Validate(const ExperimentConfig& c) {
  try {
    synthdata::Validate(c.corpus);
  } catch (const Error& e) {
    Fail(ErrorKind::kConfiguration, "corpus: {}", e.what());
  }
  Require(c.model_dim >= 2, ErrorKind::kConfiguration, "model_dim must be >= 2");
  Require(c.fusion_blocks >= 1, ErrorKind::kConfiguration, "fusion_blocks must be >= 1");
  Require(c.frame_samples > 1 && c.frame_samples <= c.corpus.num_frames,
          ErrorKind::kConfiguration, "frame_samples must satisfy 1 < D <= {}",
          c.corpus.num_frames);
  Require(c.lambda >= 0.0, ErrorKind::kConfiguration, "lambda must be >= 0");
  Require(c.hyper_hidden >= 1 && c.adr_hidden >= 1 && c.adr_latent >= 1,
          ErrorKind::kConfiguration, "hidden widths must be positive");
  Require(c.adr_learning_rate >= 0.0 && c.learning_rate >= 0.0,
          ErrorKind::kConfiguration, "learning rates must be >= 0");
  Require(c.batch_size >= 1, ErrorKind::kConfiguration, "batch_size must be >= 1");
  Require(c.weight_decay >= 0.0 && c.schedule_power >= 0.0, ErrorKind::kConfiguration,
          "weight_decay and schedule_power must be >= 0");
  Require(!c.scenarios.empty(), ErrorKind::kConfiguration, "no network scenarios");
  for (const Scenario& s : c.scenarios) {
    Require(s.megabytes_per_second > 0.0, ErrorKind::kConfiguration,
            "scenario '{}' needs a positive bandwidth", s.name);
  }
  Require(c.fixed_rtt_ms >= 0.0 && c.retrain_reference_ms >= 0.0,
          ErrorKind::kConfiguration, "delays must be >= 0");
}

std::string ToText(const ExperimentConfig& config) {
  std::string out;
  for (const Field& f : Fields()) out += fmt::format("{}={}\n", f.key, f.get(config));
  for (const Scenario& s : config.scenarios) {
    out += fmt::format("scenario={}={}\n", s.name, FormatDouble(s.megabytes_per_second));
  }
  return out;
}

void ApplyOverride(ExperimentConfig& config, const std::string& key,
                   const std::string& value) {
  for (const Field& f : Fields()) {
    if (key == f.key) {
      f.set(config, value);
      return;
    }
  }
  Fail(ErrorKind::kConfiguration, "unknown configuration key '{}'", key);
}

ExperimentConfig FromText(const std::string& text) {
  ExperimentConfig config;
  std::vector<Scenario> scenarios;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    Require(eq != std::string::npos, ErrorKind::kConfiguration,
            "line {}: expected key=value, got '{}'", line_no, t);
    const std::string key = Trim(std::string_view(t).substr(0, eq));
    const std::string value = Trim(std::string_view(t).substr(eq + 1));
    if (key == "scenario") {
      scenarios.push_back(ParseScenario(value));
    } else {
      ApplyOverride(config, key, value);
    }
  }
  if (!scenarios.empty()) config.scenarios = std::move(scenarios);
  Validate(config);
  return config;
}

ExperimentConfig LoadConfig(const std::filesystem::path& path) {
  return FromText(ReadFileText(path));
}

std::string ConfigHash(const ExperimentConfig& config) {
  const std::string text = ToText(config);
  return fmt::format("{:08x}",
                     Crc32(std::span<const std::uint8_t>(
                         reinterpret_cast<const std::uint8_t*>(text.data()),
                         text.size())));
}

std::vector<Scenario> ParseScenarios(const std::string& text) {
  std::vector<Scenario> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    out.push_back(ParseScenario(t));
  }
  Require(!out.empty(), ErrorKind::kConfiguration, "scenario list is empty");
  return out;
}

std::string ScenariosToText(const std::vector<Scenario>& scenarios) {
  std::string out;
  for (const Scenario& s : scenarios) {
    out += fmt::format("{}={}\n", s.name, FormatDouble(s.megabytes_per_second));
  }
  return out;
}

}  // namespace cloudadapt::harness
