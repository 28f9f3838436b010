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

#include "cloudadapt/adr/adr.h"

#include "cloudadapt/common/error.h"
#include "cloudadapt/numerics/ops.h"

namespace cloudadapt::adr {

using namespace numerics;  // NOLINT: op vocabulary

AdrParams AdrParams::Init(const AdrConfig& config, Rng& rng) {
  Require(config.latent_dim >= 1 && config.hidden_dim >= 1 && config.model_dim >= 2,
          ErrorKind::kConfiguration, "reasoner dimensions must be positive");
  Require(config.lambda >= 0.0, ErrorKind::kConfiguration, "lambda must be >= 0");
  Require(config.min_std > 0.0 && config.max_std > config.min_std,
          ErrorKind::kConfiguration, "std bounds must satisfy 0 < min < max");
  AdrParams p;
  p.config = config;
  p.enc_in = Dense::Init(config.model_dim, config.hidden_dim, rng);
  p.enc_out = Dense::Init(config.hidden_dim, 2 * config.latent_dim, rng);
  p.dec_in = Dense::Init(config.latent_dim, config.hidden_dim, rng);
  p.dec_out = Dense::Init(config.hidden_dim, config.model_dim, rng);
  return p;
}

Tensor GaussianPosterior::Sigma() const {
  Tensor s = logvar.value();
  for (double& v : s.data()) v = std::exp(0.5 * v);
  return s;
}

std::size_t SelectAnchor(std::size_t num_frames, AnchorPolicy policy, Rng& rng) {
  Require(num_frames >= 1, ErrorKind::kContract, "no frames to choose an anchor from");
  if (policy == AnchorPolicy::kFirst) return 0;
  return rng.UniformInt(num_frames);
}

GaussianPosterior EncodePosterior(const AdrParams& params, const Binder& bind,
                                  const Var& features) {
  const AdrConfig& c = params.config;
  Require(features.value().rank() == 2 && features.value().cols() == c.model_dim,
          ErrorKind::kDimension, "posterior input {} for model dimension {}",
          ShapeString(features.shape()), c.model_dim);
  Var h = Relu(params.enc_in.Apply(bind, features));
  Var out = params.enc_out.Apply(bind, h);
  GaussianPosterior post;
  post.mu = SliceCols(out, 0, c.latent_dim);
  post.logvar = Clamp(SliceCols(out, c.latent_dim, c.latent_dim),
                      2.0 * std::log(c.min_std), 2.0 * std::log(c.max_std));
  return post;
}

Var SampleLatent(const GaussianPosterior& posterior, SamplingMode mode, Rng& rng) {
  if (mode == SamplingMode::kMean) return posterior.mu;
  Tensor noise = Tensor::Zeros(posterior.mu.shape());
  for (double& v : noise.data()) v = rng.Normal();
  return Reparameterize(posterior.mu, posterior.logvar, noise);
}

Var Decode(const AdrParams& params, const Binder& bind, const Var& latent) {
  Require(latent.value().rank() == 2 &&
              latent.value().cols() == params.config.latent_dim,
          ErrorKind::kDimension, "latent {} for latent dimension {}",
          ShapeString(latent.shape()), params.config.latent_dim);
  return params.dec_out.Apply(bind, Relu(params.dec_in.Apply(bind, latent)));
}

Var AdaptiveGenerate(const Var& style, const Var& content, double eps) {
  return AdaptiveNormalize(style, content, eps);
}

Var Combine(const AdrConfig& config, const Var& decoded, const Var& anchor) {
  if (config.style_source == StyleSource::kReconstructed) {
    return AdaptiveGenerate(decoded, anchor, config.stats_eps);
  }
  return AdaptiveGenerate(anchor, decoded, config.stats_eps);
}

Var LossKl(const GaussianPosterior& posterior) {
  return KlToStandardNormal(posterior.mu, posterior.logvar);
}

Var LossRec(const Var& global, const Var& reconstructed) {
  return Mse(global, reconstructed);
}

Var LossAg(const Var& adapted, const Var& global, const Var& anchor, double lambda) {
  Require(lambda >= 0.0, ErrorKind::kContract, "lambda must be >= 0");
  return Add(Scale(Mse(adapted, global), lambda), Mse(adapted, anchor));
}

Var LossTotal(const Var& ag, const Var& rec, const Var& kl) {
  return Add(Add(ag, rec), kl);
}

AdrLossReport AdrLosses::Report(double lambda) const {
  return {kl.value().item(), rec.value().item(), ag.value().item(),
          total.value().item(), lambda};
}

AdrLosses TrainingLosses(const AdrParams& params, const Binder& bind,
                         const Var& global, const Var& anchor, Rng& rng) {
  const AdrConfig& c = params.config;
  GaussianPosterior post = EncodePosterior(params, bind, global);
  Var z = SampleLatent(post, SamplingMode::kStochastic, rng);
  Var reconstructed = Decode(params, bind, z);
  Var adapted = Combine(c, reconstructed, anchor);
  AdrLosses l;
  l.kl = LossKl(post);
  l.rec = LossRec(global, reconstructed);
  l.ag = LossAg(adapted, global, anchor, c.lambda);
  l.total = LossTotal(l.ag, l.rec, l.kl);
  return l;
}

Var ReasonInference(const AdrParams& params, const Binder& bind, const Var& anchor,
                    Rng& rng) {
  GaussianPosterior post = EncodePosterior(params, bind, anchor);
  Var z = SampleLatent(post, params.config.sampling, rng);
  return Combine(params.config, Decode(params, bind, z), anchor);
}

Tensor ReasonInference(const AdrParams& params, const Tensor& anchor, Rng& rng) {
  Binder bind;
  return ReasonInference(params, bind, Var::View(anchor), rng).value();
}

}  // namespace cloudadapt::adr
