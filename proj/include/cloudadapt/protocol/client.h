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

// Device side of the exchange: upload one feature, download a head, and
// record what the transfer would cost on each configured network.

#ifndef CLOUDADAPT_PROTOCOL_CLIENT_H_
#define CLOUDADAPT_PROTOCOL_CLIENT_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cloudadapt/fda/fda.h"
#include "cloudadapt/protocol/delay.h"
#include "cloudadapt/protocol/transport.h"

namespace cloudadapt::protocol {

struct ScenarioDelay {
  std::string scenario;
  double up_ms = 0.0;
  double down_ms = 0.0;
  double total_ms = 0.0;  // up + down + fixed round trip
};

struct TimingRecord {
  std::size_t upload_payload_bytes = 0;
  std::size_t download_payload_bytes = 0;
  std::size_t upload_frame_bytes = 0;
  std::size_t download_frame_bytes = 0;
  std::vector<ScenarioDelay> simulated;  // one per configured scenario
  double wall_clock_ms = 0.0;            // measured round trip
};

struct Adaptation {
  fda::GeneratedHead head;
  TimingRecord timing;
};

class DeviceClient {
 public:
  DeviceClient(Transport& transport, std::vector<NetworkScenario> scenarios,
               double fixed_rtt_ms = 0.0);

  // Narrows the feature to float, performs one exchange and validates the
  // reply. An error frame from the service raises kTransport naming its code.
  Adaptation RequestAdaptation(std::uint32_t device_id, std::uint8_t task_id,
                               std::span<const double> feature);

 private:
  Transport& transport_;
  std::vector<NetworkScenario> scenarios_;
  double fixed_rtt_ms_;
};

}  // namespace cloudadapt::protocol

#endif  // CLOUDADAPT_PROTOCOL_CLIENT_H_
