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

// Synthetic multi-modal corpora with controlled per-device distribution
// shift.
//
// Each class has a center in raw frame space. A device domain distorts that
// space with a mean offset, a rotation of the class centers, a partial
// permutation of the label map and a low-rank nuisance subspace. The size of
// every distortion grows with the shift strength; at strength 0 all devices
// share one distribution. Queries are token bags whose informative tokens
// identify the class cluster (not the device label), so both modalities carry
// signal.

#ifndef CLOUDADAPT_SYNTHDATA_CORPUS_H_
#define CLOUDADAPT_SYNTHDATA_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cloudadapt/common/bytes.h"

namespace cloudadapt::synthdata {

struct CorpusOptions {
  std::size_t num_devices = 3;
  std::size_t history_per_device = 2000;
  std::size_t realtime_per_device = 500;
  std::size_t num_answers = 10;
  double shift_strength = 3.0;
  std::uint64_t seed = 1;

  std::size_t num_frames = 8;
  std::size_t raw_dim = 32;
  std::size_t vocab_size = 64;
  std::size_t max_query_length = 8;
  std::size_t tokens_per_class = 4;
  double informative_token_prob = 0.35;
  double center_scale = 1.0;
  double clip_noise = 0.9;
  double frame_noise = 0.3;
  double nuisance_scale = 4.0;
  std::size_t nuisance_rank = 4;
  // Strength at which every distortion saturates.
  double saturation = 3.0;
};

// Raises ErrorKind::kContract / kConfiguration on unusable options.
void Validate(const CorpusOptions& options);

struct SyntheticVideo {
  std::uint32_t domain_id = 0;
  std::uint32_t clip_id = 0;
  std::uint32_t num_frames = 0;
  std::uint32_t raw_dim = 0;
  std::vector<float> frames;  // num_frames x raw_dim, row-major

  std::span<const float> frame(std::size_t i) const {
    return std::span<const float>(frames).subspan(i * raw_dim, raw_dim);
  }
};

struct SyntheticQuery {
  std::vector<std::uint32_t> tokens;
};

struct LabeledSample {
  SyntheticVideo video;
  SyntheticQuery query;
  std::uint32_t label = 0;

  std::uint32_t device() const { return video.domain_id; }
};

struct DomainParams {
  std::vector<double> offset;                // raw_dim, shift_strength * unit
  std::vector<std::uint32_t> rotation_axes;  // raw_dim, consecutive pairs
  std::vector<double> rotation_angles;       // raw_dim / 2
  std::vector<std::uint32_t> label_map;      // class -> device label
  std::vector<double> nuisance_basis;        // raw_dim x rank, orthonormal
  double nuisance_gain = 0.0;
};

struct DeviceCorpus {
  std::uint32_t device_id = 0;
  DomainParams domain;
  std::vector<LabeledSample> history;
  std::vector<LabeledSample> realtime;
};

struct Corpus {
  CorpusOptions options;
  std::vector<DeviceCorpus> devices;
};

Corpus MakeCorpus(const CorpusOptions& options);

struct SplitCorpus {
  // All devices' history, device by device; device ids stay on each sample.
  std::vector<LabeledSample> history;
  // realtime[d] is device d's stream, in generation order.
  std::vector<std::vector<LabeledSample>> realtime;
};

SplitCorpus SplitHistoryRealtime(const Corpus& corpus);

Bytes SerializeCorpus(const Corpus& corpus);
Corpus DeserializeCorpus(std::span<const std::uint8_t> bytes);
void WriteCorpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus ReadCorpus(const std::filesystem::path& path);

}  // namespace cloudadapt::synthdata

#endif  // CLOUDADAPT_SYNTHDATA_CORPUS_H_
