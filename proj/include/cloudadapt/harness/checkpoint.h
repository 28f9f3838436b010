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

// Trained-model files. Little-endian:
//   "CDCK" | version u16 | config hash string | section count u32
//   | per section: name string | rank u32 | rank x u64 dims | f64 values
//   | CRC-32 of all preceding bytes
// Strings are a u32 length followed by the characters.

#ifndef CLOUDADAPT_HARNESS_CHECKPOINT_H_
#define CLOUDADAPT_HARNESS_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "cloudadapt/common/bytes.h"
#include "cloudadapt/harness/config.h"
#include "cloudadapt/harness/training.h"

namespace cloudadapt::harness {

inline constexpr std::uint16_t kCheckpointVersion = 1;

Bytes SerializeCheckpoint(const CloudModel& model, const std::string& config_hash);

// Rebuilds the model for config and fills every tensor from the file. A hash
// that differs from ConfigHash(config), a missing or extra section, or a
// shape mismatch raises kFormat.
CloudModel DeserializeCheckpoint(std::span<const std::uint8_t> bytes,
                                 const ExperimentConfig& config);

void WriteCheckpoint(const CloudModel& model, const ExperimentConfig& config,
                     const std::filesystem::path& path);
CloudModel ReadCheckpoint(const std::filesystem::path& path,
                          const ExperimentConfig& config);

}  // namespace cloudadapt::harness

#endif  // CLOUDADAPT_HARNESS_CHECKPOINT_H_
