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

#ifndef CLOUDADAPT_COMMON_ERROR_H_
#define CLOUDADAPT_COMMON_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include <fmt/format.h>

namespace cloudadapt {

// Broad failure categories. The CLI maps each one to a distinct exit code.
enum class ErrorKind {
  kDimension,      // shapes do not conform
  kContract,       // precondition violated by the caller
  kDegenerate,     // numerically degenerate input (zero std, d < 2, ...)
  kInput,          // malformed user data (out-of-vocab token, too many frames)
  kConfiguration,  // inconsistent configuration
  kDivergence,     // training produced a non-finite loss
  kBackpropFree,   // gradient recording attempted while globally disabled
  kFormat,         // corrupt or incompatible file / wire bytes
  kIo,             // filesystem failure
  kTransport,      // network failure
  kUsage,          // bad command line
};

std::string_view ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

template <typename... Args>
[[noreturn]] void Fail(ErrorKind kind, fmt::format_string<Args...> format,
                       Args&&... args) {
  throw Error(kind, fmt::format(format, std::forward<Args>(args)...));
}

template <typename... Args>
void Require(bool condition, ErrorKind kind,
             fmt::format_string<Args...> format, Args&&... args) {
  if (!condition) Fail(kind, format, std::forward<Args>(args)...);
}

}  // namespace cloudadapt

#endif  // CLOUDADAPT_COMMON_ERROR_H_
