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

#include "cloudadapt/common/bytes.h"

#include <algorithm>
#include <bit>
#include <cstring>

#include <zlib.h>

#include "cloudadapt/common/error.h"

namespace cloudadapt {

static_assert(std::endian::native == std::endian::little,
              "byte formats assume a little-endian host");

std::uint32_t Crc32(std::span<const std::uint8_t> data) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes a uInt length; feed large buffers in pieces.
  std::size_t offset = 0;
  while (offset < data.size()) {
    const std::size_t chunk = std::min<std::size_t>(data.size() - offset, 1u << 30);
    crc = crc32(crc, data.data() + offset, static_cast<uInt>(chunk));
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

namespace {

template <typename T>
void Append(Bytes& out, T v) {
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

template <typename T>
T Load(std::span<const std::uint8_t> bytes) {
  T v;
  std::memcpy(&v, bytes.data(), sizeof(T));
  return v;
}

}  // namespace

void ByteWriter::U16(std::uint16_t v) { Append(out_, v); }
void ByteWriter::U32(std::uint32_t v) { Append(out_, v); }
void ByteWriter::U64(std::uint64_t v) { Append(out_, v); }
void ByteWriter::F32(float v) { Append(out_, v); }
void ByteWriter::F64(double v) { Append(out_, v); }

void ByteWriter::Raw(std::span<const std::uint8_t> bytes) {
  out_.insert(out_.end(), bytes.begin(), bytes.end());
}

void ByteWriter::Tag(std::string_view four_chars) {
  for (char c : four_chars.substr(0, 4)) out_.push_back(static_cast<std::uint8_t>(c));
}

void ByteWriter::String(std::string_view s) {
  U32(static_cast<std::uint32_t>(s.size()));
  for (char c : s) out_.push_back(static_cast<std::uint8_t>(c));
}

void ByteWriter::Crc() { U32(Crc32(out_)); }

std::span<const std::uint8_t> ByteReader::Take(std::size_t n) {
  Require(n <= remaining(), ErrorKind::kFormat,
          "truncated: need {} bytes at offset {}, {} left", n, pos_, remaining());
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::uint8_t ByteReader::U8() { return Take(1)[0]; }
std::uint16_t ByteReader::U16() { return Load<std::uint16_t>(Take(2)); }
std::uint32_t ByteReader::U32() { return Load<std::uint32_t>(Take(4)); }
std::uint64_t ByteReader::U64() { return Load<std::uint64_t>(Take(8)); }
float ByteReader::F32() { return Load<float>(Take(4)); }
double ByteReader::F64() { return Load<double>(Take(8)); }
std::span<const std::uint8_t> ByteReader::Raw(std::size_t n) { return Take(n); }

std::string ByteReader::String(std::size_t max_length) {
  const std::uint32_t n = U32();
  Require(n <= max_length, ErrorKind::kFormat, "string of {} bytes exceeds {}", n,
          max_length);
  auto raw = Take(n);
  return std::string(raw.begin(), raw.end());
}

void ByteReader::ExpectTag(std::string_view four_chars, std::string_view what) {
  auto raw = Take(4);
  Require(std::memcmp(raw.data(), four_chars.data(), 4) == 0, ErrorKind::kFormat,
          "{}: bad magic", what);
}

void ByteReader::ExpectCrc(std::string_view what) {
  const std::uint32_t computed = Crc32(data_.first(pos_));
  const std::uint32_t stored = U32();
  Require(stored == computed, ErrorKind::kFormat,
          "{}: checksum mismatch (stored {:08x}, computed {:08x})", what, stored,
          computed);
}

void ByteReader::ExpectEnd(std::string_view what) const {
  Require(remaining() == 0, ErrorKind::kFormat, "{}: {} trailing bytes", what,
          remaining());
}

}  // namespace cloudadapt
