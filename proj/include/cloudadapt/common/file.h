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

#ifndef CLOUDADAPT_COMMON_FILE_H_
#define CLOUDADAPT_COMMON_FILE_H_

#include <filesystem>
#include <span>
#include <string>

#include "cloudadapt/common/bytes.h"

namespace cloudadapt {

// Both throw ErrorKind::kIo with the path in the message.
Bytes ReadFileBytes(const std::filesystem::path& path);
void WriteFileBytes(const std::filesystem::path& path,
                    std::span<const std::uint8_t> bytes);

std::string ReadFileText(const std::filesystem::path& path);
void WriteFileText(const std::filesystem::path& path, const std::string& text);

}  // namespace cloudadapt

#endif  // CLOUDADAPT_COMMON_FILE_H_
