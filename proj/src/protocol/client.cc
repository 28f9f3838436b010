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

#include "cloudadapt/protocol/client.h"

#include <chrono>
#include <utility>
#include <variant>

#include "cloudadapt/common/error.h"
#include "cloudadapt/protocol/messages.h"
#include "cloudadapt/protocol/service.h"

namespace cloudadapt::protocol {

DeviceClient::DeviceClient(Transport& transport, std::vector<NetworkScenario> scenarios,
                           double fixed_rtt_ms)
    : transport_(transport), scenarios_(std::move(scenarios)), fixed_rtt_ms_(fixed_rtt_ms) {}

Adaptation DeviceClient::RequestAdaptation(std::uint32_t device_id, std::uint8_t task_id,
                                           std::span<const double> feature) {
  AdaptRequest request;
  request.device_id = device_id;
  request.task_id = task_id;
  request.feature.assign(feature.begin(), feature.end());
  Bytes frame = EncodeRequest(request);

  const auto start = std::chrono::steady_clock::now();
  Bytes reply = transport_.RoundTrip(frame);
  const auto stop = std::chrono::steady_clock::now();

  Message message = Decode(reply);
  if (const auto* error = std::get_if<ErrorFrame>(&message)) {
    Fail(ErrorKind::kTransport, "service rejected the request from device {}: {}",
         device_id, WireErrorName(error->code));
  }
  const auto* response = std::get_if<AdaptResponse>(&message);
  Require(response != nullptr, ErrorKind::kFormat, "reply is not a response frame");
  Require(response->device_id == device_id, ErrorKind::kTransport,
          "reply addressed to device {}, expected {}", response->device_id, device_id);

  Adaptation out;
  out.head = HeadFromResponse(*response);
  TimingRecord& t = out.timing;
  t.upload_payload_bytes = UploadPayloadBytes(feature.size());
  t.download_payload_bytes = DownloadPayloadBytes(out.head.slot());
  t.upload_frame_bytes = frame.size();
  t.download_frame_bytes = reply.size();
  for (const NetworkScenario& s : scenarios_) {
    ScenarioDelay d;
    d.scenario = s.name;
    d.up_ms = TransferDelayMs(static_cast<double>(t.upload_payload_bytes), s);
    d.down_ms = TransferDelayMs(static_cast<double>(t.download_payload_bytes), s);
    d.total_ms = d.up_ms + d.down_ms + fixed_rtt_ms_;
    t.simulated.push_back(std::move(d));
  }
  t.wall_clock_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  return out;
}

}  // namespace cloudadapt::protocol
