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

// Anchor-frame distribution reasoner: a variational autoencoder over fused
// frame features plus a parameter-free statistics transfer.
//
// Training encodes the D-frame average F_g; serving encodes the single
// uploaded anchor frame. In both cases the decoded feature and the anchor are
// combined by AdaptiveGenerate so the result carries one input's row mean and
// std and the other's normalized shape.

#ifndef CLOUDADAPT_ADR_ADR_H_
#define CLOUDADAPT_ADR_ADR_H_

#include <cmath>
#include <cstddef>
#include <string>

#include "cloudadapt/numerics/layers.h"
#include "cloudadapt/numerics/rng.h"
#include "cloudadapt/numerics/tape.h"
#include "cloudadapt/numerics/tensor.h"

namespace cloudadapt::adr {

using numerics::Binder;
using numerics::Tensor;
using numerics::Var;

// Which input supplies the output statistics in AdaptiveGenerate.
enum class StyleSource { kReconstructed, kAnchor };
enum class AnchorPolicy { kFirst, kRandom };
enum class SamplingMode { kMean, kStochastic };

struct AdrConfig {
  std::size_t model_dim = 192;
  std::size_t hidden_dim = 128;
  std::size_t latent_dim = 64;
  double lambda = 0.1;
  // std = exp(logvar / 2) is kept in [min_std, max_std].
  double min_std = 1e-6;
  double max_std = 1e6;
  double stats_eps = 1e-6;
  StyleSource style_source = StyleSource::kReconstructed;
  AnchorPolicy anchor_policy = AnchorPolicy::kFirst;
  SamplingMode sampling = SamplingMode::kMean;
};

struct AdrParams {
  AdrConfig config;
  numerics::Dense enc_in;   // model_dim -> hidden
  numerics::Dense enc_out;  // hidden -> 2 * latent (mu, logvar)
  numerics::Dense dec_in;   // latent -> hidden
  numerics::Dense dec_out;  // hidden -> model_dim

  static AdrParams Init(const AdrConfig& config, numerics::Rng& rng);

  template <typename Self, typename Fn>
  static void VisitParams(Self& self, const std::string& prefix, Fn&& fn) {
    numerics::Dense::VisitParams(self.enc_in, prefix + "enc_in", fn);
    numerics::Dense::VisitParams(self.enc_out, prefix + "enc_out", fn);
    numerics::Dense::VisitParams(self.dec_in, prefix + "dec_in", fn);
    numerics::Dense::VisitParams(self.dec_out, prefix + "dec_out", fn);
  }
};

// Diagonal Gaussian; logvar is already clamped.
struct GaussianPosterior {
  Var mu;      // [n, latent]
  Var logvar;  // [n, latent]

  Tensor Sigma() const;
};

struct AdrLossReport {
  double kl = 0.0;
  double rec = 0.0;
  double ag = 0.0;
  double total = 0.0;
  double lambda = 0.0;
};

// Index of the uploaded frame. num_frames == 0 raises kContract.
std::size_t SelectAnchor(std::size_t num_frames, AnchorPolicy policy,
                         numerics::Rng& rng);

GaussianPosterior EncodePosterior(const AdrParams& params, const Binder& bind,
                                  const Var& features);
// kMean returns mu itself; kStochastic draws mu + sigma * eps.
Var SampleLatent(const GaussianPosterior& posterior, SamplingMode mode,
                 numerics::Rng& rng);
Var Decode(const AdrParams& params, const Binder& bind, const Var& latent);

// std(style) * (content - mean(content)) / std(content) + mean(style), row-wise.
Var AdaptiveGenerate(const Var& style, const Var& content, double eps);
// Orders (decoded, anchor) according to the configured style source.
Var Combine(const AdrConfig& config, const Var& decoded, const Var& anchor);

Var LossKl(const GaussianPosterior& posterior);
Var LossRec(const Var& global, const Var& reconstructed);
Var LossAg(const Var& adapted, const Var& global, const Var& anchor, double lambda);

struct AdrLosses {
  Var kl;
  Var rec;
  Var ag;
  Var total;
  AdrLossReport Report(double lambda) const;
};

Var LossTotal(const Var& ag, const Var& rec, const Var& kl);

// One training forward pass: encode F_g, sample stochastically, decode,
// combine with the anchor, and assemble every loss term.
AdrLosses TrainingLosses(const AdrParams& params, const Binder& bind,
                         const Var& global, const Var& anchor, numerics::Rng& rng);

// Serving path: anchor [n, model_dim] -> adapted global representation.
Var ReasonInference(const AdrParams& params, const Binder& bind, const Var& anchor,
                    numerics::Rng& rng);
Tensor ReasonInference(const AdrParams& params, const Tensor& anchor,
                       numerics::Rng& rng);

}  // namespace cloudadapt::adr

#endif  // CLOUDADAPT_ADR_ADR_H_
