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

#ifndef CLOUDADAPT_NUMERICS_RNG_H_
#define CLOUDADAPT_NUMERICS_RNG_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cloudadapt::numerics {

// Splittable SplitMix64 stream. Every stochastic operation takes one of these
// explicitly; results depend only on the seed and the call sequence, never on
// the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t NextU64();
  // Uniform in [0, 1) with 53 bits of precision.
  double Uniform();
  double Uniform(double lo, double hi);
  // Standard normal via Box-Muller.
  double Normal();
  // Uniform integer in [0, n). n must be positive.
  std::size_t UniformInt(std::size_t n);

  // Independent child stream; does not advance this stream.
  Rng Split(std::uint64_t stream) const;

  template <typename T>
  void Shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = UniformInt(i);
      std::swap(values[i - 1], values[j]);
    }
  }

  // k distinct indices from [0, n), in draw order.
  std::vector<std::size_t> SampleWithoutReplacement(std::size_t n,
                                                    std::size_t k);

 private:
  std::uint64_t state_;
};

}  // namespace cloudadapt::numerics

#endif  // CLOUDADAPT_NUMERICS_RNG_H_
