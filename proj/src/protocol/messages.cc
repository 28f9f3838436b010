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

#include "cloudadapt/protocol/messages.h"

#include <cmath>
#include <cstring>

#include <fmt/format.h>

namespace cloudadapt::protocol {
namespace {

[[noreturn]] void Reject(WireError code, const std::string& detail) {
  throw DecodeError(code, fmt::format("{}: {}", WireErrorName(code), detail));
}

void WriteHeader(ByteWriter& w, MessageType type) {
  w.Tag("CDCA");
  w.U16(kWireVersion);
  w.U8(static_cast<std::uint8_t>(type));
}

void WriteFloats(ByteWriter& w, std::span<const float> values) {
  for (float v : values) w.F32(v);
}

// Minimal cursor that reports truncation as a wire error.
class Cursor {
 public:
  explicit Cursor(std::span<const std::uint8_t> body) : body_(body) {}

  template <typename T>
  T Read() {
    Need(sizeof(T));
    T v;
    std::memcpy(&v, body_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::vector<float> Floats(std::size_t count, const char* what) {
    if (count > (body_.size() - pos_) / 4) {
      Reject(WireError::kTruncated,
             fmt::format("{} declares {} floats, {} bytes remain", what, count,
                         body_.size() - pos_));
    }
    std::vector<float> out(count);
    std::memcpy(out.data(), body_.data() + pos_, count * 4);
    pos_ += count * 4;
    for (float v : out) {
      if (!std::isfinite(v)) Reject(WireError::kBadStructure, "non-finite float");
    }
    return out;
  }

  void ExpectEnd() const {
    if (pos_ != body_.size()) {
      Reject(WireError::kBadStructure,
             fmt::format("{} unexpected trailing bytes", body_.size() - pos_));
    }
  }

 private:
  void Need(std::size_t n) const {
    if (n > body_.size() - pos_) {
      Reject(WireError::kTruncated,
             fmt::format("need {} bytes at body offset {}", n, pos_));
    }
  }

  std::span<const std::uint8_t> body_;
  std::size_t pos_ = 0;
};

struct Framed {
  MessageType type;
  std::span<const std::uint8_t> body;
};

Framed Unframe(std::span<const std::uint8_t> frame) {
  if (frame.size() > kMaxFrameBytes) {
    Reject(WireError::kOversized,
           fmt::format("{} bytes exceed the {} byte limit", frame.size(), kMaxFrameBytes));
  }
  if (frame.size() < 4) Reject(WireError::kTruncated, "frame shorter than magic");
  if (std::memcmp(frame.data(), "CDCA", 4) != 0) Reject(WireError::kBadMagic, "not a CDCA frame");
  if (frame.size() < kHeaderBytes + kCrcBytes) {
    Reject(WireError::kTruncated, fmt::format("{} byte frame", frame.size()));
  }
  std::uint16_t version;
  std::memcpy(&version, frame.data() + 4, 2);
  if (version != kWireVersion) {
    Reject(WireError::kBadVersion, fmt::format("version {}", version));
  }
  const std::size_t payload_end = frame.size() - kCrcBytes;
  std::uint32_t stored;
  std::memcpy(&stored, frame.data() + payload_end, 4);
  const std::uint32_t computed = Crc32(frame.first(payload_end));
  if (stored != computed) {
    Reject(WireError::kBadCrc,
           fmt::format("stored {:08x}, computed {:08x}", stored, computed));
  }
  const std::uint8_t type = frame[6];
  if (type != 1 && type != 2 && type != 255) {
    Reject(WireError::kBadType, fmt::format("type {}", type));
  }
  return {static_cast<MessageType>(type),
          frame.subspan(kHeaderBytes, payload_end - kHeaderBytes)};
}

AdaptRequest RequestBody(std::span<const std::uint8_t> body) {
  Cursor c(body);
  AdaptRequest r;
  r.device_id = c.Read<std::uint32_t>();
  r.task_id = c.Read<std::uint8_t>();
  const std::uint32_t dim = c.Read<std::uint32_t>();
  r.feature = c.Floats(dim, "request");
  c.ExpectEnd();
  return r;
}

AdaptResponse ResponseBody(std::span<const std::uint8_t> body) {
  Cursor c(body);
  AdaptResponse r;
  r.device_id = c.Read<std::uint32_t>();
  r.in_dim = c.Read<std::uint32_t>();
  r.out_dim = c.Read<std::uint32_t>();
  const std::uint64_t weights =
      static_cast<std::uint64_t>(r.in_dim) * static_cast<std::uint64_t>(r.out_dim);
  if (weights + r.out_dim > kMaxFrameBytes / 4) {
    Reject(WireError::kBadStructure,
           fmt::format("slot ({}, {}) cannot fit in a frame", r.in_dim, r.out_dim));
  }
  r.weights = c.Floats(static_cast<std::size_t>(weights), "response weights");
  r.bias = c.Floats(r.out_dim, "response bias");
  c.ExpectEnd();
  return r;
}

ErrorFrame ErrorBody(std::span<const std::uint8_t> body) {
  Cursor c(body);
  ErrorFrame e;
  e.device_id = c.Read<std::uint32_t>();
  e.code = static_cast<WireError>(c.Read<std::uint8_t>());
  c.ExpectEnd();
  return e;
}

}  // namespace

std::string_view WireErrorName(WireError code) {
  switch (code) {
    case WireError::kBadMagic:
      return "bad_magic";
    case WireError::kBadVersion:
      return "bad_version";
    case WireError::kBadType:
      return "bad_type";
    case WireError::kTruncated:
      return "truncated";
    case WireError::kBadCrc:
      return "bad_crc";
    case WireError::kBadStructure:
      return "bad_structure";
    case WireError::kOversized:
      return "oversized";
    case WireError::kDimensionMismatch:
      return "dimension_mismatch";
    case WireError::kInternal:
      return "internal";
  }
  return "unknown";
}

Bytes EncodeRequest(const AdaptRequest& request) {
  ByteWriter w;
  WriteHeader(w, MessageType::kRequest);
  w.U32(request.device_id);
  w.U8(request.task_id);
  w.U32(static_cast<std::uint32_t>(request.feature.size()));
  WriteFloats(w, request.feature);
  w.Crc();
  return w.Take();
}

Bytes EncodeResponse(const AdaptResponse& response) {
  Require(response.weights.size() ==
                  static_cast<std::size_t>(response.in_dim) * response.out_dim &&
              response.bias.size() == response.out_dim,
          ErrorKind::kContract, "response holds {} weights and {} biases for slot ({}, {})",
          response.weights.size(), response.bias.size(), response.in_dim,
          response.out_dim);
  ByteWriter w;
  WriteHeader(w, MessageType::kResponse);
  w.U32(response.device_id);
  w.U32(response.in_dim);
  w.U32(response.out_dim);
  WriteFloats(w, response.weights);
  WriteFloats(w, response.bias);
  w.Crc();
  return w.Take();
}

Bytes EncodeError(const ErrorFrame& error) {
  ByteWriter w;
  WriteHeader(w, MessageType::kError);
  w.U32(error.device_id);
  w.U8(static_cast<std::uint8_t>(error.code));
  w.Crc();
  return w.Take();
}

Bytes Encode(const Message& message) {
  struct Visitor {
    Bytes operator()(const AdaptRequest& m) const { return EncodeRequest(m); }
    Bytes operator()(const AdaptResponse& m) const { return EncodeResponse(m); }
    Bytes operator()(const ErrorFrame& m) const { return EncodeError(m); }
  };
  return std::visit(Visitor{}, message);
}

Message Decode(std::span<const std::uint8_t> frame) {
  Framed f = Unframe(frame);
  switch (f.type) {
    case MessageType::kRequest:
      return RequestBody(f.body);
    case MessageType::kResponse:
      return ResponseBody(f.body);
    case MessageType::kError:
      return ErrorBody(f.body);
  }
  Reject(WireError::kBadType, "unreachable");
}

AdaptRequest DecodeRequest(std::span<const std::uint8_t> frame) {
  Framed f = Unframe(frame);
  if (f.type != MessageType::kRequest) {
    Reject(WireError::kBadType, fmt::format("expected a request, got type {}",
                                            static_cast<int>(f.type)));
  }
  return RequestBody(f.body);
}

AdaptResponse DecodeResponse(std::span<const std::uint8_t> frame) {
  Framed f = Unframe(frame);
  if (f.type != MessageType::kResponse) {
    Reject(WireError::kBadType, fmt::format("expected a response, got type {}",
                                            static_cast<int>(f.type)));
  }
  return ResponseBody(f.body);
}

}  // namespace cloudadapt::protocol
