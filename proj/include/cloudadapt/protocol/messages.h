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

// Wire messages between a device and the adaptation service.
//
// Every frame is little-endian:
//   "CDCA" | version u16 | type u8 | body | CRC-32 of all preceding bytes
// Bodies:
//   request  (type 1): device u32 | task u8 | dim u32 | dim x f32
//   response (type 2): device u32 | in u32 | out u32 | in*out f32 weights
//                      | out f32 bias
//   error  (type 255): device u32 | code u8

#ifndef CLOUDADAPT_PROTOCOL_MESSAGES_H_
#define CLOUDADAPT_PROTOCOL_MESSAGES_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "cloudadapt/common/bytes.h"
#include "cloudadapt/common/error.h"

namespace cloudadapt::protocol {

inline constexpr std::uint16_t kWireVersion = 1;
// Largest frame either side accepts.
inline constexpr std::size_t kMaxFrameBytes = 16u << 20;

enum class MessageType : std::uint8_t {
  kRequest = 1,
  kResponse = 2,
  kError = 255,
};

// Decode failures, also used as the code of an error frame.
enum class WireError : std::uint8_t {
  kBadMagic = 1,
  kBadVersion = 2,
  kBadType = 3,
  kTruncated = 4,
  kBadCrc = 5,
  kBadStructure = 6,
  kOversized = 7,
  // Service-side failures carried in error frames.
  kDimensionMismatch = 32,
  kInternal = 33,
};

std::string_view WireErrorName(WireError code);

class DecodeError : public Error {
 public:
  DecodeError(WireError code, const std::string& message)
      : Error(ErrorKind::kFormat, message), code_(code) {}
  WireError code() const { return code_; }

 private:
  WireError code_;
};

struct AdaptRequest {
  std::uint32_t device_id = 0;
  std::uint8_t task_id = 0;
  std::vector<float> feature;
  bool operator==(const AdaptRequest&) const = default;
};

struct AdaptResponse {
  std::uint32_t device_id = 0;
  std::uint32_t in_dim = 0;
  std::uint32_t out_dim = 0;
  std::vector<float> weights;  // out_dim x in_dim, row-major
  std::vector<float> bias;     // out_dim
  bool operator==(const AdaptResponse&) const = default;
};

struct ErrorFrame {
  std::uint32_t device_id = 0;
  WireError code = WireError::kInternal;
  bool operator==(const ErrorFrame&) const = default;
};

using Message = std::variant<AdaptRequest, AdaptResponse, ErrorFrame>;

// Frame sizes excluding nothing: header, body and CRC.
inline constexpr std::size_t kHeaderBytes = 4 + 2 + 1;
inline constexpr std::size_t kCrcBytes = 4;

Bytes EncodeRequest(const AdaptRequest& request);
Bytes EncodeResponse(const AdaptResponse& response);
Bytes EncodeError(const ErrorFrame& error);
Bytes Encode(const Message& message);

// All decoders throw DecodeError and never read outside the input.
Message Decode(std::span<const std::uint8_t> frame);
AdaptRequest DecodeRequest(std::span<const std::uint8_t> frame);
AdaptResponse DecodeResponse(std::span<const std::uint8_t> frame);

}  // namespace cloudadapt::protocol

#endif  // CLOUDADAPT_PROTOCOL_MESSAGES_H_
