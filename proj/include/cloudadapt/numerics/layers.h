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

// Parameter containers for the two layer shapes every model block is built
// from, plus a generic visitor protocol used for counting, optimization and
// checkpointing.
//
// A parameter block exposes
//   template <typename Self, typename Fn>
//   static void VisitParams(Self& self, const std::string& prefix, Fn&& fn);
// calling fn(name, tensor) once per tensor, in a fixed order. Self may be
// const or non-const.

#ifndef CLOUDADAPT_NUMERICS_LAYERS_H_
#define CLOUDADAPT_NUMERICS_LAYERS_H_

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "cloudadapt/numerics/rng.h"
#include "cloudadapt/numerics/tape.h"
#include "cloudadapt/numerics/tensor.h"

namespace cloudadapt::numerics {

// Fully connected layer, weight [out, in], bias [out].
struct Dense {
  Tensor weight;
  Tensor bias;

  // Uniform(-1/sqrt(in), 1/sqrt(in)) for weight and bias.
  static Dense Init(std::size_t in, std::size_t out, Rng& rng);
  static Dense Zeros(std::size_t in, std::size_t out);

  std::size_t in_dim() const { return weight.cols(); }
  std::size_t out_dim() const { return weight.rows(); }

  Var Apply(const Binder& bind, const Var& x) const;

  template <typename Self, typename Fn>
  static void VisitParams(Self& self, const std::string& prefix, Fn&& fn) {
    fn(prefix + ".weight", self.weight);
    fn(prefix + ".bias", self.bias);
  }
};

// Layer normalization affine parameters.
struct Norm {
  Tensor gamma;
  Tensor beta;
  double eps = 1e-5;

  static Norm Init(std::size_t dim);

  Var Apply(const Binder& bind, const Var& x) const;

  template <typename Self, typename Fn>
  static void VisitParams(Self& self, const std::string& prefix, Fn&& fn) {
    fn(prefix + ".gamma", self.gamma);
    fn(prefix + ".beta", self.beta);
  }
};

template <typename Block>
std::vector<Tensor*> ParamList(Block& block) {
  std::vector<Tensor*> out;
  Block::VisitParams(block, "",
                     [&](const std::string&, Tensor& t) { out.push_back(&t); });
  return out;
}

template <typename Block>
std::size_t ParamCount(const Block& block) {
  std::size_t n = 0;
  Block::VisitParams(block, "",
                     [&](const std::string&, const Tensor& t) { n += t.size(); });
  return n;
}

template <typename Block>
std::vector<std::pair<std::string, const Tensor*>> NamedParams(
    const Block& block, const std::string& prefix) {
  std::vector<std::pair<std::string, const Tensor*>> out;
  Block::VisitParams(block, prefix, [&](const std::string& name, const Tensor& t) {
    out.emplace_back(name, &t);
  });
  return out;
}

}  // namespace cloudadapt::numerics

#endif  // CLOUDADAPT_NUMERICS_LAYERS_H_
