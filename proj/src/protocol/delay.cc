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

#include "cloudadapt/protocol/delay.h"

#include <cmath>

#include "cloudadapt/common/error.h"
#include "cloudadapt/protocol/messages.h"

namespace cloudadapt::protocol {

std::size_t UploadPayloadBytes(std::size_t model_dim) { return model_dim * 4; }

std::size_t DownloadPayloadBytes(const fda::HeadSlot& slot) {
  return slot.ParameterCount() * 4;
}

std::size_t PayloadBytes(Direction direction, std::size_t model_dim,
                         const fda::HeadSlot& slot) {
  return direction == Direction::kUp ? UploadPayloadBytes(model_dim)
                                     : DownloadPayloadBytes(slot);
}

std::size_t RequestFrameBytes(std::size_t model_dim) {
  // device, task, dim
  return kHeaderBytes + 4 + 1 + 4 + UploadPayloadBytes(model_dim) + kCrcBytes;
}

std::size_t ResponseFrameBytes(const fda::HeadSlot& slot) {
  // device, in, out
  return kHeaderBytes + 12 + DownloadPayloadBytes(slot) + kCrcBytes;
}

double TransferDelayMs(double bytes, const NetworkScenario& scenario,
                       double fixed_rtt_ms) {
  Require(bytes >= 0.0 && std::isfinite(bytes), ErrorKind::kInput,
          "payload of {} bytes", bytes);
  Require(scenario.megabytes_per_second > 0.0, ErrorKind::kInput,
          "scenario '{}' has bandwidth {} MB/s", scenario.name,
          scenario.megabytes_per_second);
  Require(fixed_rtt_ms >= 0.0, ErrorKind::kInput, "round trip of {} ms", fixed_rtt_ms);
  return bytes / (scenario.megabytes_per_second * kBytesPerMegabyte) * 1000.0 +
         fixed_rtt_ms;
}

}  // namespace cloudadapt::protocol
