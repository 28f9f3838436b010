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

#include "cloudadapt/common/error.h"

namespace cloudadapt {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimension:
      return "dimension";
    case ErrorKind::kContract:
      return "contract";
    case ErrorKind::kDegenerate:
      return "degenerate";
    case ErrorKind::kInput:
      return "input";
    case ErrorKind::kConfiguration:
      return "configuration";
    case ErrorKind::kDivergence:
      return "divergence";
    case ErrorKind::kBackpropFree:
      return "backprop_free_violation";
    case ErrorKind::kFormat:
      return "format";
    case ErrorKind::kIo:
      return "io";
    case ErrorKind::kTransport:
      return "transport";
    case ErrorKind::kUsage:
      return "usage";
  }
  return "unknown";
}

}  // namespace cloudadapt
