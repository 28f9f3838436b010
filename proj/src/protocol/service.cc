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

#include "cloudadapt/protocol/service.h"

#include <cmath>
#include <cstring>
#include <vector>

#include "cloudadapt/common/error.h"
#include "cloudadapt/numerics/rng.h"

namespace cloudadapt::protocol {
namespace {

using numerics::Tensor;

class ServiceError : public Error {
 public:
  ServiceError(WireError code, const std::string& message)
      : Error(ErrorKind::kInput, message), code_(code) {}
  WireError code() const { return code_; }

 private:
  WireError code_;
};

std::uint64_t RequestStream(const AdaptRequest& request) {
  std::vector<std::uint8_t> raw(request.feature.size() * 4);
  if (!raw.empty()) std::memcpy(raw.data(), request.feature.data(), raw.size());
  return (static_cast<std::uint64_t>(request.device_id) << 40) ^
         (static_cast<std::uint64_t>(request.task_id) << 32) ^ Crc32(raw);
}

}  // namespace

AdaptService::AdaptService(const fda::FdaParams& fda, const adr::AdrParams* adr,
                           std::uint64_t seed)
    : fda_(fda), adr_(adr), seed_(seed) {
  if (adr_ != nullptr) {
    Require(adr_->config.model_dim == fda_.config.model_dim, ErrorKind::kConfiguration,
            "reasoner width {} differs from adaptor width {}", adr_->config.model_dim,
            fda_.config.model_dim);
  }
}

AdaptResponse AdaptService::Adapt(const AdaptRequest& request) const {
  const std::size_t dim = model_dim();
  if (request.feature.size() != dim) {
    throw ServiceError(WireError::kDimensionMismatch,
                       fmt::format("feature has {} values, service expects {}",
                                   request.feature.size(), dim));
  }
  Tensor anchor = Tensor::Zeros({1, dim});
  for (std::size_t i = 0; i < dim; ++i) {
    if (!std::isfinite(request.feature[i])) {
      throw ServiceError(WireError::kBadStructure, "non-finite feature value");
    }
    anchor[i] = request.feature[i];
  }

  Tensor global = anchor;
  if (adr_ != nullptr) {
    numerics::Rng rng = numerics::Rng(seed_).Split(RequestStream(request));
    global = adr::ReasonInference(*adr_, anchor, rng);
  }
  numerics::Binder bind;
  Tensor packed = fda::Generate(fda_, bind, numerics::Var::View(global)).value();

  const fda::HeadSlot slot = this->slot();
  AdaptResponse response;
  response.device_id = request.device_id;
  response.in_dim = static_cast<std::uint32_t>(slot.in_dim);
  response.out_dim = static_cast<std::uint32_t>(slot.out_dim);
  const std::size_t num_weights = slot.in_dim * slot.out_dim;
  response.weights.resize(num_weights);
  response.bias.resize(slot.out_dim);
  for (std::size_t i = 0; i < num_weights; ++i) {
    response.weights[i] = static_cast<float>(packed[i]);
  }
  for (std::size_t j = 0; j < slot.out_dim; ++j) {
    response.bias[j] = static_cast<float>(packed[num_weights + j]);
  }
  return response;
}

Bytes AdaptService::Handle(std::span<const std::uint8_t> frame) const {
  std::uint32_t device_id = 0;
  try {
    AdaptRequest request = DecodeRequest(frame);
    device_id = request.device_id;
    return EncodeResponse(Adapt(request));
  } catch (const DecodeError& e) {
    return EncodeError({device_id, e.code()});
  } catch (const ServiceError& e) {
    return EncodeError({device_id, e.code()});
  } catch (const std::exception&) {
    return EncodeError({device_id, WireError::kInternal});
  }
}

fda::GeneratedHead HeadFromResponse(const AdaptResponse& response) {
  fda::GeneratedHead head;
  head.in_dim = response.in_dim;
  head.out_dim = response.out_dim;
  Require(response.weights.size() ==
                  static_cast<std::size_t>(head.in_dim) * head.out_dim &&
              response.bias.size() == head.out_dim,
          ErrorKind::kFormat, "downloaded head does not match its slot ({}, {})",
          head.in_dim, head.out_dim);
  head.weights.assign(response.weights.begin(), response.weights.end());
  head.bias.assign(response.bias.begin(), response.bias.end());
  return head;
}

}  // namespace cloudadapt::protocol
