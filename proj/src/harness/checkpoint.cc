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

#include "cloudadapt/harness/checkpoint.h"

#include <map>

#include "cloudadapt/common/error.h"
#include "cloudadapt/common/file.h"
#include "cloudadapt/numerics/layers.h"

namespace cloudadapt::harness {
namespace {

constexpr std::size_t kMaxName = 256;
constexpr std::uint32_t kMaxRank = 8;

}  // namespace

Bytes SerializeCheckpoint(const CloudModel& model, const std::string& config_hash) {
  const auto params = numerics::NamedParams(model, "");
  ByteWriter w;
  w.Tag("CDCK");
  w.U16(kCheckpointVersion);
  w.String(config_hash);
  w.U32(static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, tensor] : params) {
    w.String(name);
    w.U32(static_cast<std::uint32_t>(tensor->shape().size()));
    for (std::size_t dim : tensor->shape()) w.U64(dim);
    for (double v : tensor->data()) w.F64(v);
  }
  w.Crc();
  return w.Take();
}

CloudModel DeserializeCheckpoint(std::span<const std::uint8_t> bytes,
                                 const ExperimentConfig& config) {
  ByteReader r(bytes);
  r.ExpectTag("CDCK", "checkpoint");
  const std::uint16_t version = r.U16();
  Require(version == kCheckpointVersion, ErrorKind::kFormat,
          "checkpoint version {} (expected {})", version, kCheckpointVersion);
  const std::string hash = r.String(kMaxName);
  const std::string expected = ConfigHash(config);
  Require(hash == expected, ErrorKind::kFormat,
          "checkpoint was trained with config {} but {} is active", hash, expected);

  CloudModel model = InitModel(config);
  std::map<std::string, numerics::Tensor*> slots;
  CloudModel::VisitParams(model, "", [&](const std::string& name, numerics::Tensor& t) {
    slots.emplace(name, &t);
  });
  const std::uint32_t count = r.U32();
  Require(count == slots.size(), ErrorKind::kFormat,
          "checkpoint has {} sections, model has {} tensors", count, slots.size());
  for (std::uint32_t s = 0; s < count; ++s) {
    const std::string name = r.String(kMaxName);
    auto it = slots.find(name);
    Require(it != slots.end() && it->second != nullptr, ErrorKind::kFormat,
            "unexpected or repeated checkpoint section '{}'", name);
    numerics::Tensor& t = *it->second;
    const std::uint32_t rank = r.U32();
    Require(rank <= kMaxRank, ErrorKind::kFormat, "section '{}' has rank {}", name, rank);
    numerics::Shape shape(rank);
    for (auto& dim : shape) dim = r.U64();
    Require(shape == t.shape(), ErrorKind::kFormat, "section '{}' has shape {}, expected {}",
            name, numerics::ShapeString(shape), numerics::ShapeString(t.shape()));
    for (double& v : t.data()) v = r.F64();
    it->second = nullptr;
  }
  r.ExpectCrc("checkpoint");
  r.ExpectEnd("checkpoint");
  return model;
}

void WriteCheckpoint(const CloudModel& model, const ExperimentConfig& config,
                     const std::filesystem::path& path) {
  WriteFileBytes(path, SerializeCheckpoint(model, ConfigHash(config)));
}

CloudModel ReadCheckpoint(const std::filesystem::path& path,
                          const ExperimentConfig& config) {
  return DeserializeCheckpoint(ReadFileBytes(path), config);
}

}  // namespace cloudadapt::harness
