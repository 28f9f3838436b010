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

// Reverse-mode differentiation.
//
// A Var is either an eager constant (no tape) or a node on a Tape. Operations
// in ops.h compute their value immediately and only record a node when at
// least one input is a tape node that requires a gradient. Code that never
// creates a Tape therefore runs the exact same forward path without
// allocating a single node, which is how the device side stays
// backpropagation-free.

#ifndef CLOUDADAPT_NUMERICS_TAPE_H_
#define CLOUDADAPT_NUMERICS_TAPE_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "cloudadapt/numerics/tensor.h"

namespace cloudadapt::numerics {

class Tape;

class Var {
 public:
  Var() = default;

  // Eager constant owning its value.
  static Var Constant(Tensor value);
  // Eager constant viewing a tensor owned elsewhere. The tensor must outlive
  // every Var (and every tape closure) derived from it.
  static Var View(const Tensor& value);

  const Tensor& value() const { return *value_; }
  const std::shared_ptr<const Tensor>& shared_value() const { return value_; }
  const Shape& shape() const { return value_->shape(); }

  Tape* tape() const { return tape_; }
  std::size_t node() const { return node_; }
  bool on_tape() const { return tape_ != nullptr; }
  bool defined() const { return value_ != nullptr; }

 private:
  friend class Tape;

  std::shared_ptr<const Tensor> value_;
  Tape* tape_ = nullptr;
  std::size_t node_ = 0;
};

// Receives the gradient of the node's output and accumulates into the
// gradient buffers of its inputs. Entries of `input_grads` are null for
// inputs that do not need a gradient.
using BackwardFn = std::function<void(const Tensor& output_grad,
                                      std::span<Tensor* const> input_grads)>;

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf that requires a gradient. The value is viewed, not copied.
  Var Parameter(const Tensor& value);

  // Records an op. Inputs that are not nodes of this tape receive no
  // gradient. Returns an eager constant when no input requires one.
  static Var Record(Tensor value, std::initializer_list<const Var*> inputs,
                    BackwardFn backward);

  // Recomputes all gradients from scratch, so calling it twice gives
  // identical buffers. The loss must hold exactly one element.
  void Backward(const Var& loss);

  // Gradient of a node after Backward(); zeros if the node was unreachable.
  Tensor Grad(const Var& var) const;
  // Like Grad() but moves the buffer out of the tape.
  Tensor TakeGrad(const Var& var);

  std::size_t size() const { return nodes_.size(); }

  // Process-wide count of nodes ever allocated. Used by tests to prove that
  // an inference path touched no tape.
  static std::uint64_t TotalNodesAllocated();

 private:
  struct Node {
    std::shared_ptr<const Tensor> value;
    std::vector<std::size_t> inputs;  // node ids; kNoInput for non-nodes
    BackwardFn backward;
  };
  static constexpr std::size_t kNoInput = static_cast<std::size_t>(-1);

  Var Push(std::shared_ptr<const Tensor> value, std::vector<std::size_t> inputs,
           BackwardFn backward);

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
};

// Global switch. While any guard is alive, recording a node or creating a
// parameter leaf throws ErrorKind::kBackpropFree.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

  static bool GradientsEnabled();
};

// Maps parameter tensors to Vars for one forward pass. Tensors registered as
// trainable become tape leaves (one per tensor, however often it is bound);
// everything else becomes an eager view. A default-constructed binder has no
// tape and produces views only.
class Binder {
 public:
  Binder() = default;
  explicit Binder(Tape* tape) : tape_(tape) {}

  void MarkTrainable(const Tensor& tensor);
  void MarkTrainable(std::span<Tensor* const> tensors);

  Var operator()(const Tensor& tensor) const;

  // Gradient for a trainable tensor after tape->Backward(); zeros when the
  // tensor was never bound.
  Tensor Grad(const Tensor& tensor) const;
  Tensor TakeGrad(const Tensor& tensor);

  Tape* tape() const { return tape_; }

 private:
  Tape* tape_ = nullptr;
  std::unordered_map<const Tensor*, bool> trainable_;
  mutable std::unordered_map<const Tensor*, Var> bound_;
};

}  // namespace cloudadapt::numerics

#endif  // CLOUDADAPT_NUMERICS_TAPE_H_
