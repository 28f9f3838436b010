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

// Cloud-side request handler. Holds read-only references to trained
// parameters and keeps no state between requests, so any number of threads
// may call it at once.

#ifndef CLOUDADAPT_PROTOCOL_SERVICE_H_
#define CLOUDADAPT_PROTOCOL_SERVICE_H_

#include <cstdint>
#include <span>

#include "cloudadapt/adr/adr.h"
#include "cloudadapt/common/bytes.h"
#include "cloudadapt/fda/fda.h"
#include "cloudadapt/protocol/messages.h"

namespace cloudadapt::protocol {

class AdaptService {
 public:
  // With a null reasoner the uploaded feature goes straight into the
  // adaptor. Stochastic latent draws are seeded from seed and the request
  // contents, so identical requests get identical responses.
  AdaptService(const fda::FdaParams& fda, const adr::AdrParams* adr,
               std::uint64_t seed = 0);

  // Direct composition with no framing. The feature is widened to double;
  // the generated head is narrowed to float exactly as on the wire.
  AdaptResponse Adapt(const AdaptRequest& request) const;

  // Decodes a frame, adapts, and encodes the reply. Never throws: malformed
  // input and service failures come back as error frames.
  Bytes Handle(std::span<const std::uint8_t> frame) const;

  std::size_t model_dim() const { return fda_.config.model_dim; }
  fda::HeadSlot slot() const { return fda_.config.slot; }

 private:
  const fda::FdaParams& fda_;
  const adr::AdrParams* adr_;
  std::uint64_t seed_;
};

// Widens a downloaded head for device-side inference.
fda::GeneratedHead HeadFromResponse(const AdaptResponse& response);

}  // namespace cloudadapt::protocol

#endif  // CLOUDADAPT_PROTOCOL_SERVICE_H_
