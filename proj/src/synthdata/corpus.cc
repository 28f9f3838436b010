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

#include "cloudadapt/synthdata/corpus.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>

#include "cloudadapt/common/error.h"
#include "cloudadapt/common/file.h"
#include "cloudadapt/numerics/rng.h"

namespace cloudadapt::synthdata {
namespace {

using numerics::Rng;

constexpr std::uint16_t kCorpusVersion = 1;

// Stream ids for Rng::Split, so every piece of the corpus has its own stream.
constexpr std::uint64_t kCenterStream = 1;
constexpr std::uint64_t kDomainStream = 1000;
constexpr std::uint64_t kHistoryStream = 2000;
constexpr std::uint64_t kRealtimeStream = 3000;

DomainParams MakeDomain(const CorpusOptions& o, Rng rng) {
  const std::size_t d = o.raw_dim;
  const double frac = std::min(o.shift_strength, o.saturation) / o.saturation;
  DomainParams dom;

  std::vector<double> unit(d);
  double norm = 0.0;
  for (double& v : unit) {
    v = rng.Normal();
    norm += v * v;
  }
  norm = std::sqrt(norm);
  dom.offset.resize(d);
  for (std::size_t j = 0; j < d; ++j) dom.offset[j] = o.shift_strength * unit[j] / norm;

  dom.rotation_axes.resize(d);
  std::iota(dom.rotation_axes.begin(), dom.rotation_axes.end(), 0u);
  rng.Shuffle(std::span<std::uint32_t>(dom.rotation_axes));
  dom.rotation_angles.resize(d / 2);
  for (double& a : dom.rotation_angles) {
    a = rng.Uniform(0.5, 1.0) * (std::numbers::pi / 2.0) * frac;
  }

  // The first round(K * frac) classes of a random order swap labels among
  // themselves.
  const std::size_t k = o.num_answers;
  std::vector<std::uint32_t> order(k);
  std::iota(order.begin(), order.end(), 0u);
  rng.Shuffle(std::span<std::uint32_t>(order));
  const auto moved = static_cast<std::size_t>(std::lround(static_cast<double>(k) * frac));
  std::vector<std::uint32_t> targets(order.begin(), order.begin() + moved);
  rng.Shuffle(std::span<std::uint32_t>(targets));
  dom.label_map.resize(k);
  std::iota(dom.label_map.begin(), dom.label_map.end(), 0u);
  for (std::size_t i = 0; i < moved; ++i) dom.label_map[order[i]] = targets[i];

  const std::size_t rank = o.nuisance_rank;
  Eigen::MatrixXd gauss(d, rank);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < rank; ++c) gauss(r, c) = rng.Normal();
  }
  Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(gauss).householderQ() *
                      Eigen::MatrixXd::Identity(d, rank);
  dom.nuisance_basis.resize(d * rank);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < rank; ++c) dom.nuisance_basis[r * rank + c] = q(r, c);
  }
  dom.nuisance_gain = o.nuisance_scale * std::min(o.shift_strength, o.saturation) /
                      o.saturation;
  return dom;
}

std::vector<double> Rotate(const DomainParams& dom, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t p = 0; p < dom.rotation_angles.size(); ++p) {
    const std::uint32_t i = dom.rotation_axes[2 * p];
    const std::uint32_t j = dom.rotation_axes[2 * p + 1];
    const double c = std::cos(dom.rotation_angles[p]);
    const double s = std::sin(dom.rotation_angles[p]);
    y[i] = c * x[i] - s * x[j];
    y[j] = s * x[i] + c * x[j];
  }
  return y;
}

std::vector<LabeledSample> MakeSamples(const CorpusOptions& o,
                                       const std::vector<std::vector<double>>& centers,
                                       const DomainParams& dom, std::uint32_t device,
                                       std::size_t count, std::uint32_t first_clip,
                                       Rng rng) {
  const std::size_t d = o.raw_dim;
  const std::size_t k = o.num_answers;
  const std::size_t rank = o.nuisance_rank;
  std::vector<std::vector<double>> moved(k);
  for (std::size_t c = 0; c < k; ++c) {
    moved[c] = Rotate(dom, centers[c]);
    for (std::size_t j = 0; j < d; ++j) moved[c][j] += dom.offset[j];
  }

  // Stratified classes keep every device's label histogram balanced.
  std::vector<std::uint32_t> classes(count);
  for (std::size_t i = 0; i < count; ++i) classes[i] = static_cast<std::uint32_t>(i % k);
  rng.Shuffle(std::span<std::uint32_t>(classes));

  const std::size_t informative = k * o.tokens_per_class;
  const std::size_t noise_tokens = o.vocab_size - informative;
  std::vector<LabeledSample> out(count);
  std::vector<double> clip(d);
  std::vector<double> latent(rank);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t c = classes[i];
    for (std::size_t j = 0; j < d; ++j) clip[j] = moved[c][j] + o.clip_noise * rng.Normal();
    for (double& z : latent) z = rng.Normal();
    for (std::size_t j = 0; j < d; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < rank; ++r) acc += dom.nuisance_basis[j * rank + r] * latent[r];
      clip[j] += dom.nuisance_gain * acc;
    }

    LabeledSample& s = out[i];
    s.label = dom.label_map[c];
    s.video.domain_id = device;
    s.video.clip_id = first_clip + static_cast<std::uint32_t>(i);
    s.video.num_frames = static_cast<std::uint32_t>(o.num_frames);
    s.video.raw_dim = static_cast<std::uint32_t>(d);
    s.video.frames.resize(o.num_frames * d);
    for (std::size_t f = 0; f < o.num_frames; ++f) {
      for (std::size_t j = 0; j < d; ++j) {
        s.video.frames[f * d + j] =
            static_cast<float>(clip[j] + o.frame_noise * rng.Normal());
      }
    }

    const std::size_t length = 2 + rng.UniformInt(o.max_query_length - 1);
    s.query.tokens.resize(length);
    for (std::uint32_t& t : s.query.tokens) {
      if (rng.Uniform() < o.informative_token_prob) {
        t = static_cast<std::uint32_t>(c * o.tokens_per_class +
                                       rng.UniformInt(o.tokens_per_class));
      } else {
        t = static_cast<std::uint32_t>(informative + rng.UniformInt(noise_tokens));
      }
    }
  }
  return out;
}

}  // namespace

void Validate(const CorpusOptions& o) {
  Require(o.num_devices >= 1, ErrorKind::kContract, "corpus needs at least one device");
  Require(o.history_per_device >= 1 && o.realtime_per_device >= 1,
          ErrorKind::kContract, "history and realtime counts must be at least 1");
  Require(o.num_answers >= 2, ErrorKind::kConfiguration,
          "need at least two answer classes");
  Require(std::isfinite(o.shift_strength) && o.shift_strength >= 0.0,
          ErrorKind::kContract, "shift strength must be a finite value >= 0");
  Require(o.num_frames >= 2, ErrorKind::kConfiguration, "need at least two frames");
  Require(o.raw_dim >= 2 && o.raw_dim % 2 == 0, ErrorKind::kConfiguration,
          "raw frame dimension must be even and >= 2");
  Require(o.max_query_length >= 2, ErrorKind::kConfiguration,
          "max query length must be >= 2");
  Require(o.tokens_per_class >= 1 &&
              o.vocab_size > o.num_answers * o.tokens_per_class,
          ErrorKind::kConfiguration,
          "vocabulary of {} leaves no noise tokens after {} x {} class tokens",
          o.vocab_size, o.num_answers, o.tokens_per_class);
  Require(o.nuisance_rank >= 1 && o.nuisance_rank <= o.raw_dim,
          ErrorKind::kConfiguration, "nuisance rank must lie in [1, raw dim]");
  Require(o.saturation > 0.0, ErrorKind::kConfiguration, "saturation must be positive");
  Require(o.informative_token_prob >= 0.0 && o.informative_token_prob <= 1.0,
          ErrorKind::kConfiguration, "informative token probability outside [0,1]");
}

Corpus MakeCorpus(const CorpusOptions& options) {
  Validate(options);
  const Rng root(options.seed);
  Corpus corpus;
  corpus.options = options;

  Rng center_rng = root.Split(kCenterStream);
  std::vector<std::vector<double>> centers(options.num_answers,
                                           std::vector<double>(options.raw_dim));
  for (auto& c : centers) {
    for (double& v : c) v = options.center_scale * center_rng.Normal();
  }

  for (std::size_t dev = 0; dev < options.num_devices; ++dev) {
    DeviceCorpus dc;
    dc.device_id = static_cast<std::uint32_t>(dev);
    dc.domain = MakeDomain(options, root.Split(kDomainStream + dev));
    dc.history = MakeSamples(options, centers, dc.domain, dc.device_id,
                             options.history_per_device, 0,
                             root.Split(kHistoryStream + dev));
    dc.realtime = MakeSamples(
        options, centers, dc.domain, dc.device_id, options.realtime_per_device,
        static_cast<std::uint32_t>(options.history_per_device),
        root.Split(kRealtimeStream + dev));
    corpus.devices.push_back(std::move(dc));
  }
  return corpus;
}

SplitCorpus SplitHistoryRealtime(const Corpus& corpus) {
  Require(!corpus.devices.empty(), ErrorKind::kContract, "empty corpus");
  SplitCorpus out;
  for (const DeviceCorpus& dc : corpus.devices) {
    out.history.insert(out.history.end(), dc.history.begin(), dc.history.end());
    out.realtime.push_back(dc.realtime);
  }
  return out;
}

namespace {

void WriteSamples(ByteWriter& w, const std::vector<LabeledSample>& samples) {
  w.U32(static_cast<std::uint32_t>(samples.size()));
  for (const LabeledSample& s : samples) {
    w.U32(s.video.clip_id);
    w.U32(s.label);
    w.U32(static_cast<std::uint32_t>(s.query.tokens.size()));
    for (std::uint32_t t : s.query.tokens) w.U32(t);
    for (float f : s.video.frames) w.F32(f);
  }
}

std::vector<LabeledSample> ReadSamples(ByteReader& r, const CorpusOptions& o,
                                       std::uint32_t device) {
  const std::uint32_t count = r.U32();
  const std::size_t min_bytes = 12 + 4 * o.num_frames * o.raw_dim;
  Require(count <= r.remaining() / min_bytes, ErrorKind::kFormat,
          "corpus: sample count {} exceeds the remaining bytes", count);
  std::vector<LabeledSample> out(count);
  for (LabeledSample& s : out) {
    s.video.domain_id = device;
    s.video.clip_id = r.U32();
    s.label = r.U32();
    Require(s.label < o.num_answers, ErrorKind::kFormat, "corpus: label {} out of range",
            s.label);
    const std::uint32_t length = r.U32();
    Require(length >= 1 && length <= o.max_query_length, ErrorKind::kFormat,
            "corpus: query length {} out of range", length);
    s.query.tokens.resize(length);
    for (std::uint32_t& t : s.query.tokens) {
      t = r.U32();
      Require(t < o.vocab_size, ErrorKind::kFormat, "corpus: token {} out of range", t);
    }
    s.video.num_frames = static_cast<std::uint32_t>(o.num_frames);
    s.video.raw_dim = static_cast<std::uint32_t>(o.raw_dim);
    s.video.frames.resize(o.num_frames * o.raw_dim);
    for (float& f : s.video.frames) {
      f = r.F32();
      Require(std::isfinite(f), ErrorKind::kFormat, "corpus: non-finite frame value");
    }
  }
  return out;
}

}  // namespace

Bytes SerializeCorpus(const Corpus& corpus) {
  const CorpusOptions& o = corpus.options;
  ByteWriter w;
  w.Tag("CDCD");
  w.U16(kCorpusVersion);
  w.U32(static_cast<std::uint32_t>(corpus.devices.size()));
  w.U32(static_cast<std::uint32_t>(o.num_frames));
  w.U32(static_cast<std::uint32_t>(o.raw_dim));
  w.U32(static_cast<std::uint32_t>(o.vocab_size));
  w.U32(static_cast<std::uint32_t>(o.num_answers));
  w.U32(static_cast<std::uint32_t>(o.max_query_length));
  w.U32(static_cast<std::uint32_t>(o.tokens_per_class));
  w.U32(static_cast<std::uint32_t>(o.nuisance_rank));
  w.U32(static_cast<std::uint32_t>(o.history_per_device));
  w.U32(static_cast<std::uint32_t>(o.realtime_per_device));
  w.U64(o.seed);
  for (double v : {o.shift_strength, o.informative_token_prob, o.center_scale,
                   o.clip_noise, o.frame_noise, o.nuisance_scale, o.saturation}) {
    w.F64(v);
  }
  for (const DeviceCorpus& dc : corpus.devices) {
    w.U32(dc.device_id);
    for (double v : dc.domain.offset) w.F64(v);
    for (std::uint32_t a : dc.domain.rotation_axes) w.U32(a);
    for (double v : dc.domain.rotation_angles) w.F64(v);
    for (std::uint32_t l : dc.domain.label_map) w.U32(l);
    for (double v : dc.domain.nuisance_basis) w.F64(v);
    w.F64(dc.domain.nuisance_gain);
    WriteSamples(w, dc.history);
    WriteSamples(w, dc.realtime);
  }
  w.Crc();
  return w.Take();
}

Corpus DeserializeCorpus(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.ExpectTag("CDCD", "corpus");
  const std::uint16_t version = r.U16();
  Require(version == kCorpusVersion, ErrorKind::kFormat,
          "corpus: unsupported version {}", version);
  Corpus corpus;
  CorpusOptions& o = corpus.options;
  o.num_devices = r.U32();
  o.num_frames = r.U32();
  o.raw_dim = r.U32();
  o.vocab_size = r.U32();
  o.num_answers = r.U32();
  o.max_query_length = r.U32();
  o.tokens_per_class = r.U32();
  o.nuisance_rank = r.U32();
  o.history_per_device = r.U32();
  o.realtime_per_device = r.U32();
  o.seed = r.U64();
  for (double* v : {&o.shift_strength, &o.informative_token_prob, &o.center_scale,
                    &o.clip_noise, &o.frame_noise, &o.nuisance_scale, &o.saturation}) {
    *v = r.F64();
  }
  try {
    Validate(o);
  } catch (const Error& e) {
    Fail(ErrorKind::kFormat, "corpus: invalid header ({})", e.what());
  }
  const std::size_t d = o.raw_dim;
  const std::size_t domain_bytes = 8 * d + 4 * d + 8 * (d / 2) + 4 * o.num_answers +
                                   8 * d * o.nuisance_rank + 8;
  Require(o.num_devices <= r.remaining() / (4 + domain_bytes), ErrorKind::kFormat,
          "corpus: device count {} exceeds the remaining bytes", o.num_devices);
  for (std::size_t dev = 0; dev < o.num_devices; ++dev) {
    DeviceCorpus dc;
    dc.device_id = r.U32();
    dc.domain.offset.resize(d);
    for (double& v : dc.domain.offset) v = r.F64();
    dc.domain.rotation_axes.resize(d);
    for (std::uint32_t& a : dc.domain.rotation_axes) a = r.U32();
    dc.domain.rotation_angles.resize(d / 2);
    for (double& v : dc.domain.rotation_angles) v = r.F64();
    dc.domain.label_map.resize(o.num_answers);
    for (std::uint32_t& l : dc.domain.label_map) l = r.U32();
    dc.domain.nuisance_basis.resize(d * o.nuisance_rank);
    for (double& v : dc.domain.nuisance_basis) v = r.F64();
    dc.domain.nuisance_gain = r.F64();
    dc.history = ReadSamples(r, o, dc.device_id);
    dc.realtime = ReadSamples(r, o, dc.device_id);
    corpus.devices.push_back(std::move(dc));
  }
  r.ExpectCrc("corpus");
  r.ExpectEnd("corpus");
  return corpus;
}

void WriteCorpus(const Corpus& corpus, const std::filesystem::path& path) {
  WriteFileBytes(path, SerializeCorpus(corpus));
}

Corpus ReadCorpus(const std::filesystem::path& path) {
  return DeserializeCorpus(ReadFileBytes(path));
}

}  // namespace cloudadapt::synthdata
