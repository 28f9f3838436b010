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

#include "cloudadapt/common/error.h"
#include "cloudadapt/numerics/gradcheck.h"
#include "cloudadapt/numerics/layers.h"
#include "cloudadapt/numerics/ops.h"
#include "cloudadapt/numerics/optim.h"
#include "cloudadapt/numerics/rng.h"
#include "cloudadapt/numerics/tape.h"
#include "cloudadapt/numerics/tensor.h"

namespace cloudadapt::numerics {
namespace {

Var C(Tensor t) { return Var::Constant(std::move(t)); }

Tensor RandomMatrix(Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  Tensor t = Tensor::Zeros({r, c});
  for (double& v : t.data()) v = scale * rng.Normal();
  return t;
}

// Reduces any output to a scalar with a fixed random projection so every
// output coordinate contributes to the checked gradient.
Var Project(const Var& y, std::uint64_t seed) {
  Rng rng(seed);
  Tensor w = Tensor::Zeros(y.shape());
  for (double& v : w.data()) v = rng.Normal();
  return Sum(Mul(y, Var::Constant(std::move(w))));
}

TEST(TensorTest, RejectsShapeMismatch) {
  EXPECT_THROW(Tensor({2, 2}, {1, 2, 3}), Error);
}

TEST(TensorTest, RejectsNonFinite) {
  try {
    Tensor({1}, {std::nan("")});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kContract);
  }
}

TEST(LinearTest, IdentityWeights) {
  Var y = Linear(C(Tensor::Matrix(1, 2, {1, 2})), C(Tensor::Matrix(2, 2, {1, 0, 0, 1})),
                 C(Tensor::Vector({0, 0})));
  EXPECT_EQ(y.value().vector(), (std::vector<double>{1, 2}));
}

TEST(LinearTest, HandArithmetic) {
  Var y = Linear(C(Tensor::Matrix(1, 2, {1, 1})), C(Tensor::Matrix(1, 2, {2, 3})),
                 C(Tensor::Vector({1})));
  EXPECT_EQ(y.value().item(), 6.0);
}

TEST(LinearTest, ZeroInputReturnsBias) {
  Rng rng(3);
  Var y = Linear(C(Tensor::Zeros({1, 2})), C(RandomMatrix(rng, 2, 2)),
                 C(Tensor::Vector({5, 7})));
  EXPECT_EQ(y.value().vector(), (std::vector<double>{5, 7}));
}

TEST(LinearTest, ShapeMismatchIsDimensionError) {
  try {
    Linear(C(Tensor::Zeros({1, 3})), C(Tensor::Zeros({2, 2})), C(Tensor::Zeros({2})));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension);
  }
}

TEST(LinearTest, AffineInInput) {
  Rng rng(5);
  Tensor x1 = RandomMatrix(rng, 3, 4), x2 = RandomMatrix(rng, 3, 4);
  Tensor w = RandomMatrix(rng, 2, 4);
  Tensor b = Tensor::Vector({0.5, -1.5});
  Tensor sum = x1;
  sum += x2;
  Var lhs = Linear(C(sum), C(w), C(b));
  Var rhs = Sub(Add(Linear(C(x1), C(w), C(b)), Linear(C(x2), C(w), C(b))),
                AddRow(C(Tensor::Zeros({3, 2})), C(b)));
  for (std::size_t i = 0; i < lhs.value().size(); ++i) {
    EXPECT_NEAR(lhs.value()[i], rhs.value()[i], 1e-12);
  }
}

TEST(LayerNormTest, ConstantRowIsZero) {
  Var y = LayerNorm(C(Tensor::Matrix(1, 4, {1, 1, 1, 1})), C(Tensor::Full({4}, 1)),
                    C(Tensor::Zeros({4})), 1e-5);
  for (double v : y.value().data()) EXPECT_EQ(v, 0.0);
}

TEST(LayerNormTest, StandardizesTwoValues) {
  Var y = LayerNorm(C(Tensor::Matrix(1, 2, {0, 2})), C(Tensor::Full({2}, 1)),
                    C(Tensor::Zeros({2})), 1e-12);
  EXPECT_NEAR(y.value()[0], -1.0, 1e-10);
  EXPECT_NEAR(y.value()[1], 1.0, 1e-10);
}

TEST(LayerNormTest, AffineDominatesWithZeroGain) {
  Var y = LayerNorm(C(Tensor::Matrix(1, 2, {4, -9})), C(Tensor::Zeros({2})),
                    C(Tensor::Vector({3, 3})), 1e-5);
  EXPECT_EQ(y.value().vector(), (std::vector<double>{3, 3}));
}

TEST(LayerNormTest, SingleColumnIsDegenerate) {
  try {
    LayerNorm(C(Tensor::Matrix(1, 1, {1})), C(Tensor::Full({1}, 1)),
              C(Tensor::Zeros({1})), 1e-5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerate);
  }
}

TEST(BackwardTest, SumGivesOnes) {
  Tape tape;
  Tensor x = Tensor::Vector({1, 2, 3});
  Var leaf = tape.Parameter(x);
  Var loss = Sum(leaf);
  tape.Backward(loss);
  EXPECT_EQ(tape.Grad(leaf).vector(), (std::vector<double>{1, 1, 1}));
}

TEST(BackwardTest, SquaredErrorClosedForm) {
  Tape tape;
  Tensor x = Tensor::Vector({2});
  Var leaf = tape.Parameter(x);
  Var loss = Mse(leaf, C(Tensor::Vector({0})));
  tape.Backward(loss);
  EXPECT_DOUBLE_EQ(tape.Grad(leaf).item(), 4.0);
}

TEST(BackwardTest, NonScalarLossIsContractError) {
  Tape tape;
  Tensor x = Tensor::Vector({1, 2});
  Var leaf = tape.Parameter(x);
  Var y = Scale(leaf, 2.0);
  try {
    tape.Backward(y);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kContract);
  }
}

TEST(BackwardTest, RepeatedBackwardIsIdentical) {
  Rng rng(11);
  Tensor x = RandomMatrix(rng, 3, 5), w = RandomMatrix(rng, 4, 5);
  Tensor b = Tensor::Zeros({4});
  Tape tape;
  Var xv = tape.Parameter(x), wv = tape.Parameter(w), bv = tape.Parameter(b);
  Var loss = Mean(Relu(Linear(xv, wv, bv)));
  tape.Backward(loss);
  Tensor g1 = tape.Grad(wv);
  tape.Backward(loss);
  EXPECT_EQ(g1, tape.Grad(wv));
}

TEST(BackwardTest, ConstantsAllocateNoNodes) {
  const auto before = Tape::TotalNodesAllocated();
  Rng rng(2);
  Var y = Relu(Linear(C(RandomMatrix(rng, 2, 3)), C(RandomMatrix(rng, 4, 3)),
                      C(Tensor::Zeros({4}))));
  EXPECT_FALSE(y.on_tape());
  EXPECT_EQ(Tape::TotalNodesAllocated(), before);
}

TEST(NoGradGuardTest, TapeAllocationThrows) {
  Tape tape;
  Tensor x = Tensor::Vector({1});
  NoGradGuard guard;
  try {
    tape.Parameter(x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kBackpropFree);
  }
}

TEST(BinderTest, TrainableTensorsBecomeSingleLeaf) {
  Tape tape;
  Binder bind(&tape);
  Tensor w = Tensor::Vector({1, 2});
  Tensor frozen = Tensor::Vector({3, 4});
  bind.MarkTrainable(w);
  EXPECT_TRUE(bind(w).on_tape());
  EXPECT_EQ(bind(w).node(), bind(w).node());
  EXPECT_FALSE(bind(frozen).on_tape());
  Var loss = Sum(Mul(bind(w), bind(w)));
  tape.Backward(loss);
  EXPECT_EQ(bind.Grad(w).vector(), (std::vector<double>{2, 4}));
  EXPECT_EQ(bind.Grad(frozen).vector(), (std::vector<double>{0, 0}));
}

struct OpCase {
  const char* name;
  std::vector<Shape> shapes;
  ScalarFn fn;
};

std::vector<OpCase> OpCases() {
  const std::vector<std::size_t> labels = {2, 0, 3};
  const std::vector<std::size_t> rows = {2, 0, 2, 1};
  return {
      {"linear", {{3, 4}, {5, 4}, {5}},
       [](std::span<const Var> v) { return Project(Linear(v[0], v[1], v[2]), 1); }},
      {"linear_nobias", {{3, 4}, {5, 4}},
       [](std::span<const Var> v) { return Project(Linear(v[0], v[1]), 2); }},
      {"layernorm", {{3, 6}, {6}, {6}},
       [](std::span<const Var> v) { return Project(LayerNorm(v[0], v[1], v[2], 1e-5), 3); }},
      {"relu", {{4, 5}}, [](std::span<const Var> v) { return Project(Relu(v[0]), 4); }},
      {"mul", {{3, 4}, {3, 4}},
       [](std::span<const Var> v) { return Project(Mul(v[0], v[1]), 5); }},
      {"sub_scale", {{3, 4}, {3, 4}},
       [](std::span<const Var> v) { return Project(Scale(Sub(v[0], v[1]), -1.7), 6); }},
      {"add_row", {{3, 4}, {4}},
       [](std::span<const Var> v) { return Project(AddRow(v[0], v[1]), 7); }},
      {"add_tiled", {{6, 4}, {3, 4}},
       [](std::span<const Var> v) { return Project(AddTiled(v[0], v[1]), 8); }},
      {"repeat_group", {{2, 4}},
       [](std::span<const Var> v) {
         return Project(GroupMean(Scale(RepeatRows(v[0], 3), 1.0), 2), 9);
       }},
      {"gather", {{3, 4}},
       [rows](std::span<const Var> v) { return Project(GatherRows(v[0], rows), 10); }},
      {"slice", {{3, 6}},
       [](std::span<const Var> v) { return Project(SliceCols(v[0], 2, 3), 11); }},
      {"embedding_bag", {{6, 4}},
       [](std::span<const Var> v) {
         return Project(EmbeddingBagMean(v[0], {{1, 4, 4}, {0}, {5, 2}}), 12);
       }},
      {"mean", {{3, 4}}, [](std::span<const Var> v) { return Mean(v[0]); }},
      {"mse", {{3, 4}, {3, 4}}, [](std::span<const Var> v) { return Mse(v[0], v[1]); }},
      {"cross_entropy", {{3, 5}},
       [labels](std::span<const Var> v) { return SoftmaxCrossEntropy(v[0], labels); }},
      {"kl", {{3, 4}, {3, 4}},
       [](std::span<const Var> v) { return KlToStandardNormal(v[0], v[1]); }},
      {"clamp", {{3, 4}},
       [](std::span<const Var> v) { return Project(Clamp(v[0], -0.8, 0.9), 13); }},
      {"reparameterize", {{3, 4}, {3, 4}},
       [](std::span<const Var> v) {
         Rng rng(14);
         Tensor noise = RandomMatrix(rng, 3, 4);
         return Project(Reparameterize(v[0], v[1], noise), 15);
       }},
      {"adaptive_normalize", {{3, 6}, {3, 6}},
       [](std::span<const Var> v) {
         return Project(AdaptiveNormalize(v[0], v[1], 1e-6), 16);
       }},
      {"generated_linear", {{2, 3 * 4 + 3}, {2, 4}},
       [](std::span<const Var> v) { return Project(GeneratedLinear(v[0], v[1], 4, 3), 17); }},
  };
}

TEST(GradientTest, EveryPrimitiveMatchesFiniteDifferences) {
  Rng rng(2026);
  for (const OpCase& c : OpCases()) {
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<Tensor> inputs;
      for (const Shape& s : c.shapes) {
        Tensor t = Tensor::Zeros(s);
        for (double& v : t.data()) v = rng.Normal();
        inputs.push_back(std::move(t));
      }
      GradCheckResult r = CheckGradients(c.fn, inputs);
      EXPECT_LT(r.max_relative_error, 1e-4) << c.name << " trial " << trial;
    }
  }
}

TEST(AdamWTest, ZeroGradientNoDecayLeavesParams) {
  Tensor p = Tensor::Vector({1.5, -2});
  AdamW opt({&p}, {.learning_rate = 0.1, .weight_decay = 0.0, .total_steps = 10});
  std::vector<Tensor> g = {Tensor::Zeros({2})};
  opt.Step(g);
  EXPECT_EQ(p.vector(), (std::vector<double>{1.5, -2}));
}

TEST(AdamWTest, DegenerateMomentsStepByLearningRate) {
  Tensor p = Tensor::Vector({1.0});
  AdamW opt({&p}, {.learning_rate = 0.1, .beta1 = 0, .beta2 = 0,
                   .weight_decay = 0, .total_steps = 100});
  std::vector<Tensor> g = {Tensor::Vector({1.0})};
  opt.Step(g);
  EXPECT_NEAR(p.item(), 0.9, 1e-8);
}

TEST(AdamWTest, ScheduleReachesZero) {
  Tensor p = Tensor::Vector({1.0});
  AdamW opt({&p}, {.learning_rate = 0.1, .total_steps = 2});
  std::vector<Tensor> g = {Tensor::Vector({1.0})};
  EXPECT_DOUBLE_EQ(opt.CurrentLearningRate(), 0.1);
  opt.Step(g);
  EXPECT_DOUBLE_EQ(opt.CurrentLearningRate(), 0.05);
  opt.Step(g);
  EXPECT_DOUBLE_EQ(opt.CurrentLearningRate(), 0.0);
  const double before = p.item();
  opt.Step(g);
  EXPECT_EQ(p.item(), before);
}

TEST(AdamWTest, DecoupledDecayShrinksParams) {
  Tensor p = Tensor::Vector({2.0});
  AdamW opt({&p}, {.learning_rate = 0.5, .weight_decay = 0.1, .total_steps = 1000});
  std::vector<Tensor> g = {Tensor::Vector({0.0})};
  opt.Step(g);
  EXPECT_DOUBLE_EQ(p.item(), 2.0 * (1.0 - 0.5 * 0.1));
}

TEST(RngTest, SplitStreamsAreReproducibleAndDistinct) {
  Rng a(9), b(9);
  EXPECT_EQ(a.Split(1).NextU64(), b.Split(1).NextU64());
  EXPECT_NE(a.Split(1).NextU64(), a.Split(2).NextU64());
}

TEST(RngTest, SampleWithoutReplacementIsDistinct) {
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    auto s = rng.SampleWithoutReplacement(8, 3);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_NE(s[0], s[1]);
    EXPECT_NE(s[0], s[2]);
    EXPECT_NE(s[1], s[2]);
  }
}

TEST(RngTest, NormalMoments) {
  Rng rng(8);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double v = rng.Normal();
    sum += v;
    sq += v * v;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(LayersTest, ParamCountAndNames) {
  Rng rng(1);
  Dense d = Dense::Init(4, 3, rng);
  EXPECT_EQ(ParamCount(d), 15u);
  auto named = NamedParams(d, "fc");
  ASSERT_EQ(named.size(), 2u);
  EXPECT_EQ(named[0].first, "fc.weight");
  EXPECT_EQ(named[1].first, "fc.bias");
}

}  // namespace
}  // namespace cloudadapt::numerics
