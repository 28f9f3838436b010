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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "cloudadapt/adr/adr.h"
#include "cloudadapt/common/error.h"
#include "cloudadapt/numerics/gradcheck.h"
#include "cloudadapt/numerics/layers.h"
#include "cloudadapt/numerics/ops.h"
#include "cloudadapt/numerics/optim.h"
#include "cloudadapt/numerics/rng.h"
#include "cloudadapt/numerics/tape.h"

namespace cloudadapt::adr {
namespace {

using numerics::AdamW;
using numerics::AdamWOptions;
using numerics::Rng;
using numerics::Tape;

Var C(Tensor t) { return Var::Constant(std::move(t)); }

Tensor Random(Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  Tensor t = Tensor::Zeros({r, c});
  for (double& v : t.data()) v = scale * rng.Normal();
  return t;
}

AdrConfig SmallConfig() {
  AdrConfig c;
  c.model_dim = 8;
  c.hidden_dim = 12;
  c.latent_dim = 4;
  return c;
}

double RowMean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double RowStd(std::span<const double> x) {
  const double m = RowMean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size()));
}

GaussianPosterior Posterior(Tensor mu, Tensor logvar) {
  return {C(std::move(mu)), C(std::move(logvar))};
}

TEST(KlTest, StandardNormalIsZero) {
  EXPECT_NEAR(LossKl(Posterior(Tensor::Zeros({1, 3}), Tensor::Zeros({1, 3})))
                  .value()
                  .item(),
              0.0, 1e-10);
}

TEST(KlTest, UnitMeanShift) {
  EXPECT_NEAR(LossKl(Posterior(Tensor::Matrix(1, 1, {1.0}), Tensor::Zeros({1, 1})))
                  .value()
                  .item(),
              0.5, 1e-10);
}

TEST(KlTest, DoubledStd) {
  const double expected = 0.5 * (4.0 - 1.0 - std::log(4.0));
  EXPECT_NEAR(LossKl(Posterior(Tensor::Zeros({1, 1}),
                               Tensor::Matrix(1, 1, {std::log(4.0)})))
                  .value()
                  .item(),
              expected, 1e-10);
}

TEST(KlTest, NonNegativeOnRandomPosteriors) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    double kl = LossKl(Posterior(Random(rng, 3, 5), Random(rng, 3, 5))).value().item();
    EXPECT_GE(kl, 0.0);
  }
}

TEST(AdaptiveGenerateTest, IdentityWhenStyleEqualsContent) {
  Rng rng(2);
  Tensor x = Random(rng, 4, 16);
  Var y = AdaptiveGenerate(C(x), C(x), 1e-6);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y.value()[i], x[i], 1e-12);
}

TEST(AdaptiveGenerateTest, AffineImagesMapExactly) {
  Var y = AdaptiveGenerate(C(Tensor::Matrix(1, 3, {10, 20, 30})),
                           C(Tensor::Matrix(1, 3, {0, 1, 2})), 1e-6);
  const std::vector<double> expected{10, 20, 30};
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(y.value()[i], expected[i], 1e-12);
}

TEST(AdaptiveGenerateTest, OutputCarriesStyleStatistics) {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor style = Random(rng, 3, 12, 4.0);
    Tensor content = Random(rng, 3, 12);
    Var y = AdaptiveGenerate(C(style), C(content), 1e-6);
    for (std::size_t r = 0; r < 3; ++r) {
      EXPECT_NEAR(RowMean(y.value().row(r)), RowMean(style.row(r)), 1e-10);
      EXPECT_NEAR(RowStd(y.value().row(r)), RowStd(style.row(r)), 1e-10);
    }
  }
}

TEST(AdaptiveGenerateTest, FlatContentIsDegenerate) {
  try {
    AdaptiveGenerate(C(Tensor::Matrix(1, 3, {1, 2, 3})),
                     C(Tensor::Matrix(1, 3, {5, 5, 5})), 1e-6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerate);
  }
}

TEST(AdaptiveGenerateTest, StyleSourceSwapsRoles) {
  AdrConfig config = SmallConfig();
  Var decoded = C(Tensor::Matrix(1, 3, {10, 20, 30}));
  Var anchor = C(Tensor::Matrix(1, 3, {3, 1, 2}));
  config.style_source = StyleSource::kReconstructed;
  Var a = Combine(config, decoded, anchor);
  config.style_source = StyleSource::kAnchor;
  Var b = Combine(config, decoded, anchor);
  // Reconstructed style keeps the anchor's pattern at the decoded scale.
  EXPECT_NEAR(a.value()[0], 30.0, 1e-12);
  EXPECT_NEAR(a.value()[1], 10.0, 1e-12);
  // Anchor style keeps the decoded pattern at the anchor scale.
  EXPECT_NEAR(b.value()[0], 1.0, 1e-12);
  EXPECT_NEAR(b.value()[2], 3.0, 1e-12);
}

TEST(LossTest, ReconstructionHandExample) {
  EXPECT_DOUBLE_EQ(LossRec(C(Tensor::Matrix(1, 2, {0, 0})), C(Tensor::Matrix(1, 2, {2, 0})))
                       .value()
                       .item(),
                   2.0);
}

TEST(LossTest, ReconstructionIsSymmetric) {
  Rng rng(4);
  Tensor a = Random(rng, 2, 6), b = Random(rng, 2, 6);
  EXPECT_EQ(LossRec(C(a), C(b)).value().item(), LossRec(C(b), C(a)).value().item());
}

TEST(LossTest, AdaptedLossHandExample) {
  // MSE(adapted, global) = 1 and MSE(adapted, anchor) = 2 over two coordinates.
  Var adapted = C(Tensor::Matrix(1, 2, {0, 0}));
  Var global = C(Tensor::Matrix(1, 2, {1, -1}));
  Var anchor = C(Tensor::Matrix(1, 2, {2, 0}));
  EXPECT_NEAR(LossAg(adapted, global, anchor, 0.1).value().item(), 2.1, 1e-15);
  EXPECT_DOUBLE_EQ(LossAg(adapted, global, anchor, 0.0).value().item(),
                   Mse(adapted, anchor).value().item());
}

TEST(LossTest, AdaptedLossRejectsNegativeLambda) {
  Var x = C(Tensor::Matrix(1, 2, {0, 1}));
  EXPECT_THROW(LossAg(x, x, x, -0.5), Error);
}

TEST(LossTest, TotalIsUnweightedSum) {
  EXPECT_EQ(LossTotal(C(Tensor::Scalar(2.1)), C(Tensor::Scalar(0.5)),
                      C(Tensor::Scalar(0.4)))
                .value()
                .item(),
            3.0);
}

TEST(LossTest, ReportTotalMatchesComponentsExactly) {
  Rng rng(11);
  AdrParams params = AdrParams::Init(SmallConfig(), rng);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor global = Random(rng, 5, 8);
    Tensor anchor = Random(rng, 5, 8);
    Rng noise(100 + trial);
    numerics::Binder bind;
    AdrLossReport r =
        TrainingLosses(params, bind, C(global), C(anchor), noise).Report(0.1);
    EXPECT_EQ(r.total, (r.ag + r.rec) + r.kl);
    EXPECT_GE(r.kl, 0.0);
    EXPECT_GE(r.rec, 0.0);
    EXPECT_GE(r.ag, 0.0);
    EXPECT_GE(r.total, std::max({r.kl, r.rec, r.ag}));
  }
}

TEST(PosteriorTest, ZeroEncoderGivesStandardNormal) {
  Rng rng(1);
  AdrParams params = AdrParams::Init(SmallConfig(), rng);
  params.enc_out = numerics::Dense::Zeros(12, 8);
  numerics::Binder bind;
  GaussianPosterior post = EncodePosterior(params, bind, C(Random(rng, 2, 8)));
  ASSERT_EQ(post.mu.shape(), (numerics::Shape{2, 4}));
  ASSERT_EQ(post.logvar.shape(), (numerics::Shape{2, 4}));
  for (double v : post.mu.value().data()) EXPECT_EQ(v, 0.0);
  const Tensor sigma = post.Sigma();
  for (double v : sigma.data()) EXPECT_EQ(v, 1.0);
}

TEST(PosteriorTest, SigmaPositiveForRandomWeights) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed);
    AdrParams params = AdrParams::Init(SmallConfig(), rng);
    numerics::Binder bind;
    GaussianPosterior post = EncodePosterior(params, bind, C(Random(rng, 1, 8, 3.0)));
    const Tensor sigma = post.Sigma();
    for (double s : sigma.data()) ASSERT_GT(s, 0.0);
  }
}

TEST(PosteriorTest, RejectsWrongWidth) {
  Rng rng(1);
  AdrParams params = AdrParams::Init(SmallConfig(), rng);
  numerics::Binder bind;
  try {
    EncodePosterior(params, bind, C(Random(rng, 1, 7)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension);
  }
}

TEST(AnchorTest, Policies) {
  Rng rng(3);
  EXPECT_EQ(SelectAnchor(1, AnchorPolicy::kRandom, rng), 0u);
  EXPECT_EQ(SelectAnchor(8, AnchorPolicy::kFirst, rng), 0u);
  Rng a(42), b(42);
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(SelectAnchor(8, AnchorPolicy::kRandom, a),
              SelectAnchor(8, AnchorPolicy::kRandom, b));
  }
  EXPECT_THROW(SelectAnchor(0, AnchorPolicy::kFirst, rng), Error);
}

TEST(SamplingTest, MeanModeReturnsMu) {
  Rng rng(6);
  GaussianPosterior post = Posterior(Random(rng, 2, 3), Random(rng, 2, 3));
  EXPECT_EQ(SampleLatent(post, SamplingMode::kMean, rng).value(), post.mu.value());
}

TEST(SamplingTest, ClampedSigmaCollapsesToMu) {
  Rng rng(6);
  AdrParams params = AdrParams::Init(SmallConfig(), rng);
  params.enc_out.bias = Tensor::Zeros({8});
  for (std::size_t j = 4; j < 8; ++j) params.enc_out.bias[j] = -1e3;
  params.enc_out.weight = Tensor::Zeros({8, 12});
  numerics::Binder bind;
  GaussianPosterior post = EncodePosterior(params, bind, C(Random(rng, 3, 8)));
  const Tensor sigma = post.Sigma();
  for (double s : sigma.data()) EXPECT_NEAR(s, 1e-6, 1e-12);
  Var z = SampleLatent(post, SamplingMode::kStochastic, rng);
  for (std::size_t i = 0; i < z.value().size(); ++i) {
    EXPECT_NEAR(z.value()[i], post.mu.value()[i], 1e-4);
  }
}

TEST(SamplingTest, MonteCarloMeanMatchesMu) {
  constexpr std::size_t kDraws = 100000;
  const std::vector<double> mu{0.5, -1.0, 2.0};
  const std::vector<double> sigma{1.0, 0.5, 2.0};
  Tensor mus = Tensor::Zeros({kDraws, 3});
  Tensor logvars = Tensor::Zeros({kDraws, 3});
  for (std::size_t i = 0; i < kDraws; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      mus.at(i, j) = mu[j];
      logvars.at(i, j) = 2.0 * std::log(sigma[j]);
    }
  }
  Rng rng(12);
  Var z = SampleLatent(Posterior(mus, logvars), SamplingMode::kStochastic, rng);
  for (std::size_t j = 0; j < 3; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < kDraws; ++i) mean += z.value().at(i, j);
    mean /= kDraws;
    EXPECT_NEAR(mean, mu[j], 3.0 * sigma[j] / std::sqrt(double(kDraws)));
  }
}

TEST(SamplingTest, ReparameterizedGradientOfSquaredNorm) {
  // d E[|mu + sigma eps|^2] / d mu = 2 mu.
  constexpr std::size_t kDraws = 10000;
  const std::vector<double> mu{0.7, -0.3, 1.2, 0.4};
  Tensor mu_row = Tensor::Matrix(1, 4, mu);
  Tensor logvar_row = Tensor::Matrix(1, 4, {0.0, -0.5, 0.3, 0.1});
  Rng rng(21);
  Tensor noise = Tensor::Zeros({kDraws, 4});
  for (double& v : noise.data()) v = rng.Normal();

  auto estimate = [&](const Var& m, const Var& lv) {
    Var z = numerics::Reparameterize(numerics::RepeatRows(m, kDraws),
                                     numerics::RepeatRows(lv, kDraws), noise);
    return numerics::Scale(numerics::Sum(numerics::Mul(z, z)), 1.0 / kDraws);
  };
  Tape tape;
  Var m = tape.Parameter(mu_row);
  Var loss = estimate(m, C(logvar_row));
  tape.Backward(loss);
  Tensor grad = tape.Grad(m);
  for (std::size_t j = 0; j < 4; ++j) {
    const double h = 1e-5;
    Tensor up = mu_row, down = mu_row;
    up[j] += h;
    down[j] -= h;
    const double fd = (estimate(C(up), C(logvar_row)).value().item() -
                       estimate(C(down), C(logvar_row)).value().item()) /
                      (2 * h);
    EXPECT_NEAR(grad[j], fd, 1e-6 * std::max(1.0, std::abs(fd)));
    EXPECT_NEAR(grad[j], 2.0 * mu[j], 5e-2 * std::abs(2.0 * mu[j]));
  }
}

TEST(GradientTest, ComposedLossesMatchFiniteDifferences) {
  std::size_t trials = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng(1000 + seed);
    const std::size_t d = 4 + rng.UniformInt(13);
    const std::size_t n = 1 + rng.UniformInt(3);
    const double lambda = rng.Uniform(0.0, 1.0);
    std::vector<Tensor> in{Random(rng, n, d), Random(rng, n, d, 2.0),
                           Random(rng, n, d), Random(rng, n, d, 0.5)};
    // adapted, global, anchor, logvar-ish second input for the KL term.
    auto kl = [](std::span<const Var> v) {
      return LossKl({v[0], v[3]});
    };
    auto rec = [](std::span<const Var> v) { return LossRec(v[1], v[0]); };
    auto ag = [lambda](std::span<const Var> v) {
      return LossAg(v[0], v[1], v[2], lambda);
    };
    auto total = [lambda](std::span<const Var> v) {
      Var adapted = AdaptiveGenerate(v[0], v[2], 1e-6);
      return LossTotal(LossAg(adapted, v[1], v[2], lambda), LossRec(v[1], v[0]),
                       LossKl({v[3], v[0]}));
    };
    for (const numerics::ScalarFn& fn :
         {numerics::ScalarFn(kl), numerics::ScalarFn(rec), numerics::ScalarFn(ag),
          numerics::ScalarFn(total)}) {
      numerics::GradCheckResult r = numerics::CheckGradients(fn, in);
      EXPECT_LT(r.max_relative_error, 1e-4) << "seed " << seed << " d " << d;
      ++trials;
    }
  }
  EXPECT_GE(trials, 100u);
}

TEST(GradientTest, TrainingLossesThroughNetworks) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    AdrParams params = AdrParams::Init(SmallConfig(), rng);
    Tensor global = Random(rng, 3, 8);
    Tensor anchor = Random(rng, 3, 8);
    std::vector<Tensor> in{params.enc_in.weight, params.dec_out.weight, global};
    auto fn = [&](std::span<const Var> v) {
      const AdrParams& p = params;
      numerics::Binder bind;
      // Swap the bound tensors for the checked inputs.
      Rng noise(77);
      GaussianPosterior post;
      Var h = numerics::Relu(numerics::Linear(v[2], v[0], C(p.enc_in.bias)));
      Var out = p.enc_out.Apply(bind, h);
      post.mu = numerics::SliceCols(out, 0, 4);
      post.logvar = numerics::SliceCols(out, 4, 4);
      Var z = SampleLatent(post, SamplingMode::kStochastic, noise);
      Var rec = numerics::Linear(numerics::Relu(p.dec_in.Apply(bind, z)), v[1],
                                 C(p.dec_out.bias));
      Var adapted = Combine(p.config, rec, C(anchor));
      return LossTotal(LossAg(adapted, v[2], C(anchor), 0.1), LossRec(v[2], rec),
                       LossKl(post));
    };
    EXPECT_LT(numerics::CheckGradients(fn, in).max_relative_error, 1e-4);
  }
}

TEST(ReasonTest, MeanModeIsDeterministic) {
  Rng rng(8);
  AdrParams params = AdrParams::Init(SmallConfig(), rng);
  Tensor anchor = Random(rng, 1, 8);
  Rng a(1), b(2);
  Tensor x = ReasonInference(params, anchor, a);
  Tensor y = ReasonInference(params, anchor, b);
  EXPECT_EQ(x, y);
  EXPECT_EQ(x.shape(), (numerics::Shape{1, 8}));
}

TEST(ReasonTest, IdentityTrainedFixtureReturnsAnchor) {
  Rng rng(15);
  AdrParams params = AdrParams::Init(SmallConfig(), rng);
  const Tensor target = Random(rng, 1, 8);
  std::vector<Tensor*> trainable = numerics::ParamList(params);
  AdamWOptions options;
  options.learning_rate = 1e-2;
  options.weight_decay = 0.0;
  options.total_steps = 3000;
  AdamW opt(trainable, options);
  for (int step = 0; step < 3000; ++step) {
    Tape tape;
    numerics::Binder bind(&tape);
    bind.MarkTrainable(trainable);
    GaussianPosterior post = EncodePosterior(params, bind, C(target));
    Var loss = LossRec(C(target), Decode(params, bind, post.mu));
    tape.Backward(loss);
    std::vector<Tensor> grads;
    for (Tensor* t : trainable) grads.push_back(bind.TakeGrad(*t));
    opt.Step(grads);
  }
  numerics::Binder bind;
  Var rec = Decode(params, bind, EncodePosterior(params, bind, C(target)).mu);
  ASSERT_LT(LossRec(C(target), rec).value().item(), 1e-8);
  Rng unused(0);
  Tensor out = ReasonInference(params, target, unused);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(out[i], target[i], 1e-4);
}

TEST(DecoderTest, ZeroDecoderGivesZero) {
  Rng rng(3);
  AdrParams params = AdrParams::Init(SmallConfig(), rng);
  params.dec_out = numerics::Dense::Zeros(12, 8);
  numerics::Binder bind;
  Var y = Decode(params, bind, C(Random(rng, 2, 4)));
  EXPECT_EQ(y.value(), Tensor::Zeros({2, 8}));
}

TEST(DecoderTest, TrainingOnTwoClustersReducesError) {
  Rng rng(30);
  AdrParams params = AdrParams::Init(SmallConfig(), rng);
  Tensor centers = Random(rng, 2, 8, 3.0);
  Tensor data = Tensor::Zeros({64, 8});
  for (std::size_t i = 0; i < 64; ++i) {
    for (std::size_t j = 0; j < 8; ++j) {
      data.at(i, j) = centers.at(i % 2, j) + 0.1 * rng.Normal();
    }
  }
  auto mse = [&] {
    numerics::Binder bind;
    Rng noise(1);
    return TrainingLosses(params, bind, C(data), C(data), noise).rec.value().item();
  };
  const double before = mse();
  std::vector<Tensor*> trainable = numerics::ParamList(params);
  AdamWOptions options;
  options.learning_rate = 5e-3;
  options.total_steps = 500;
  AdamW opt(trainable, options);
  Rng noise(2);
  for (int step = 0; step < 500; ++step) {
    Tape tape;
    numerics::Binder bind(&tape);
    bind.MarkTrainable(trainable);
    AdrLosses l = TrainingLosses(params, bind, C(data), C(data), noise);
    tape.Backward(l.total);
    std::vector<Tensor> grads;
    for (Tensor* t : trainable) grads.push_back(bind.TakeGrad(*t));
    opt.Step(grads);
  }
  EXPECT_LT(mse(), 0.5 * before);
}

}  // namespace
}  // namespace cloudadapt::adr
