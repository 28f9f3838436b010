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

// Payload accounting and the size / bandwidth delay model. Units are binary:
// 1 KB = 1024 bytes, 1 MB = 1024 KB.

#ifndef CLOUDADAPT_PROTOCOL_DELAY_H_
#define CLOUDADAPT_PROTOCOL_DELAY_H_

#include <cstddef>
#include <string>

#include "cloudadapt/fda/fda.h"

namespace cloudadapt::protocol {

inline constexpr double kBytesPerKilobyte = 1024.0;
inline constexpr double kBytesPerMegabyte = 1024.0 * 1024.0;

struct NetworkScenario {
  std::string name;
  double megabytes_per_second = 0.0;
  bool operator==(const NetworkScenario&) const = default;
};

enum class Direction { kUp, kDown };

// Float payload only; framing is accounted separately.
std::size_t UploadPayloadBytes(std::size_t model_dim);
std::size_t DownloadPayloadBytes(const fda::HeadSlot& slot);
std::size_t PayloadBytes(Direction direction, std::size_t model_dim,
                         const fda::HeadSlot& slot);

// Full frame sizes, header and CRC included.
std::size_t RequestFrameBytes(std::size_t model_dim);
std::size_t ResponseFrameBytes(const fda::HeadSlot& slot);

// bytes / bandwidth in milliseconds, plus an optional fixed round trip.
// Throws kInput on negative bytes or non-positive bandwidth.
double TransferDelayMs(double bytes, const NetworkScenario& scenario,
                       double fixed_rtt_ms = 0.0);

}  // namespace cloudadapt::protocol

#endif  // CLOUDADAPT_PROTOCOL_DELAY_H_
