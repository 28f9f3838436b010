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

// Little-endian byte serialization shared by every binary format.

#ifndef CLOUDADAPT_COMMON_BYTES_H_
#define CLOUDADAPT_COMMON_BYTES_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cloudadapt {

using Bytes = std::vector<std::uint8_t>;

// CRC-32 (IEEE 802.3, as in zlib/PNG).
std::uint32_t Crc32(std::span<const std::uint8_t> data);

class ByteWriter {
 public:
  void U8(std::uint8_t v) { out_.push_back(v); }
  void U16(std::uint16_t v);
  void U32(std::uint32_t v);
  void U64(std::uint64_t v);
  void F32(float v);
  void F64(double v);
  void Raw(std::span<const std::uint8_t> bytes);
  void Tag(std::string_view four_chars);
  // u32 length prefix, then the characters.
  void String(std::string_view s);
  // Appends the CRC-32 of everything written so far.
  void Crc();

  std::size_t size() const { return out_.size(); }
  const Bytes& bytes() const { return out_; }
  Bytes Take() { return std::move(out_); }

 private:
  Bytes out_;
};

// Bounds-checked reader. Every read past the end throws ErrorKind::kFormat.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t U8();
  std::uint16_t U16();
  std::uint32_t U32();
  std::uint64_t U64();
  float F32();
  double F64();
  std::span<const std::uint8_t> Raw(std::size_t n);
  std::string String(std::size_t max_length);
  // Throws kFormat unless the next four bytes equal the tag.
  void ExpectTag(std::string_view four_chars, std::string_view what);
  // Verifies a trailing CRC-32 over all bytes before the current position.
  void ExpectCrc(std::string_view what);

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  void ExpectEnd(std::string_view what) const;

 private:
  std::span<const std::uint8_t> Take(std::size_t n);

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace cloudadapt

#endif  // CLOUDADAPT_COMMON_BYTES_H_
