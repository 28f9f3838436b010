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

// Differentiable primitives. Matrices are [rows, cols]; a "batch" is the
// leading dimension. Every op works eagerly on constants and records a tape
// node when an input requires a gradient.

#ifndef CLOUDADAPT_NUMERICS_OPS_H_
#define CLOUDADAPT_NUMERICS_OPS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cloudadapt/numerics/tape.h"
#include "cloudadapt/numerics/tensor.h"

namespace cloudadapt::numerics {

// y[i,j] = sum_k x[i,k] * w[j,k] + b[j]; x [n,in], w [out,in], b [out].
Var Linear(const Var& x, const Var& w, const Var& b);
Var Linear(const Var& x, const Var& w);

// Per-row standardization (population variance + eps) then affine.
// Requires at least two columns.
Var LayerNorm(const Var& x, const Var& gamma, const Var& beta, double eps);

Var Relu(const Var& x);
Var Add(const Var& a, const Var& b);
Var Sub(const Var& a, const Var& b);
Var Mul(const Var& a, const Var& b);
Var Scale(const Var& x, double factor);

// x [n,d] + row [d] broadcast over rows.
Var AddRow(const Var& x, const Var& row);
// x [n*k,d] + pattern [k,d] tiled n times.
Var AddTiled(const Var& x, const Var& pattern);
// [n,d] -> [n*k,d], each row repeated k times consecutively.
Var RepeatRows(const Var& x, std::size_t times);
// [n*k,d] -> [n,d], mean over consecutive groups of k rows.
Var GroupMean(const Var& x, std::size_t group);
Var GatherRows(const Var& x, std::span<const std::size_t> rows);
Var SliceCols(const Var& x, std::size_t begin, std::size_t count);
// Same data, new shape of equal size.
Var Reshape(const Var& x, Shape shape);

// out[i] = mean of table rows listed in bags[i].
Var EmbeddingBagMean(const Var& table,
                     const std::vector<std::vector<std::uint32_t>>& bags);

Var Sum(const Var& x);
Var Mean(const Var& x);
// Mean squared error over all elements.
Var Mse(const Var& a, const Var& b);
// Mean over rows of -log softmax(logits)[label].
Var SoftmaxCrossEntropy(const Var& logits, std::span<const std::size_t> labels);

// Mean over rows of KL(N(mu, exp(logvar)) || N(0, I)), summed over columns.
Var KlToStandardNormal(const Var& mu, const Var& logvar);
Var Clamp(const Var& x, double lo, double hi);
// mu + exp(logvar / 2) * noise, differentiable in mu and logvar.
Var Reparameterize(const Var& mu, const Var& logvar, const Tensor& noise);

// Row-wise statistics transfer: std(style) * (content - mean(content)) /
// std(content) + mean(style), population statistics over columns. Throws
// kDegenerate when a content row has std <= eps.
Var AdaptiveNormalize(const Var& style, const Var& content, double eps);

// Applies a per-row linear layer whose parameters are packed in theta:
// theta [n, out*in + out] holds the row-major [out,in] weights followed by
// the bias. x [n,in] -> [n,out].
Var GeneratedLinear(const Var& theta, const Var& x, std::size_t in_dim,
                    std::size_t out_dim);

}  // namespace cloudadapt::numerics

#endif  // CLOUDADAPT_NUMERICS_OPS_H_
