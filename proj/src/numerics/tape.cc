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

#include "cloudadapt/numerics/tape.h"

#include <atomic>
#include <utility>

#include "cloudadapt/common/error.h"

namespace cloudadapt::numerics {
namespace {

std::atomic<std::uint64_t> g_nodes_allocated{0};
std::atomic<int> g_no_grad_depth{0};

void RequireGradientsEnabled() {
  Require(NoGradGuard::GradientsEnabled(), ErrorKind::kBackpropFree,
          "tape allocation while gradients are globally disabled");
}

}  // namespace

Var Var::Constant(Tensor value) {
  Var v;
  v.value_ = std::make_shared<const Tensor>(std::move(value));
  return v;
}

Var Var::View(const Tensor& value) {
  Var v;
  // Aliasing constructor with an empty owner: a non-owning shared_ptr.
  v.value_ = std::shared_ptr<const Tensor>(std::shared_ptr<const Tensor>(),
                                           &value);
  return v;
}

Var Tape::Push(std::shared_ptr<const Tensor> value,
               std::vector<std::size_t> inputs, BackwardFn backward) {
  RequireGradientsEnabled();
  g_nodes_allocated.fetch_add(1, std::memory_order_relaxed);
  Var v;
  v.value_ = value;
  v.tape_ = this;
  v.node_ = nodes_.size();
  nodes_.push_back({std::move(value), std::move(inputs), std::move(backward)});
  return v;
}

Var Tape::Parameter(const Tensor& value) {
  return Push(Var::View(value).shared_value(), {}, nullptr);
}

Var Tape::Record(Tensor value, std::initializer_list<const Var*> inputs,
                 BackwardFn backward) {
  Tape* tape = nullptr;
  for (const Var* in : inputs) {
    if (in->tape_ == nullptr) continue;
    Require(tape == nullptr || tape == in->tape_, ErrorKind::kContract,
            "op mixes values from two different tapes");
    tape = in->tape_;
  }
  if (tape == nullptr) return Var::Constant(std::move(value));

  std::vector<std::size_t> ids;
  ids.reserve(inputs.size());
  for (const Var* in : inputs) {
    ids.push_back(in->tape_ != nullptr ? in->node_ : kNoInput);
  }
  return tape->Push(std::make_shared<const Tensor>(std::move(value)),
                    std::move(ids), std::move(backward));
}

void Tape::Backward(const Var& loss) {
  Require(loss.tape_ == this, ErrorKind::kContract,
          "loss is not a node of this tape");
  Require(loss.value().size() == 1, ErrorKind::kContract,
          "backward needs a scalar loss, got shape {}",
          ShapeString(loss.shape()));

  grads_.assign(nodes_.size(), Tensor());
  grads_[loss.node_] = Tensor::Full(loss.shape(), 1.0);

  std::vector<Tensor*> input_grads;
  for (std::size_t i = loss.node_ + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (grads_[i].empty() || !node.backward) continue;
    input_grads.clear();
    for (std::size_t id : node.inputs) {
      if (id == kNoInput) {
        input_grads.push_back(nullptr);
        continue;
      }
      if (grads_[id].empty()) grads_[id] = Tensor::Zeros(nodes_[id].value->shape());
      input_grads.push_back(&grads_[id]);
    }
    node.backward(grads_[i], input_grads);
  }
}

Tensor Tape::Grad(const Var& var) const {
  Require(var.tape_ == this, ErrorKind::kContract,
          "gradient requested for a value that is not on this tape");
  if (var.node_ < grads_.size() && !grads_[var.node_].empty()) {
    return grads_[var.node_];
  }
  return Tensor::Zeros(var.shape());
}

Tensor Tape::TakeGrad(const Var& var) {
  Require(var.tape_ == this, ErrorKind::kContract,
          "gradient requested for a value that is not on this tape");
  if (var.node_ < grads_.size() && !grads_[var.node_].empty()) {
    return std::move(grads_[var.node_]);
  }
  return Tensor::Zeros(var.shape());
}

std::uint64_t Tape::TotalNodesAllocated() {
  return g_nodes_allocated.load(std::memory_order_relaxed);
}

NoGradGuard::NoGradGuard() { g_no_grad_depth.fetch_add(1); }
NoGradGuard::~NoGradGuard() { g_no_grad_depth.fetch_sub(1); }

bool NoGradGuard::GradientsEnabled() { return g_no_grad_depth.load() == 0; }

void Binder::MarkTrainable(const Tensor& tensor) { trainable_[&tensor] = true; }

void Binder::MarkTrainable(std::span<Tensor* const> tensors) {
  for (Tensor* t : tensors) MarkTrainable(*t);
}

Var Binder::operator()(const Tensor& tensor) const {
  if (tape_ == nullptr || !trainable_.contains(&tensor)) {
    return Var::View(tensor);
  }
  auto it = bound_.find(&tensor);
  if (it != bound_.end()) return it->second;
  Var leaf = tape_->Parameter(tensor);
  bound_.emplace(&tensor, leaf);
  return leaf;
}

Tensor Binder::Grad(const Tensor& tensor) const {
  auto it = bound_.find(&tensor);
  if (it == bound_.end()) return Tensor::Zeros(tensor.shape());
  return tape_->Grad(it->second);
}

Tensor Binder::TakeGrad(const Tensor& tensor) {
  auto it = bound_.find(&tensor);
  if (it == bound_.end()) return Tensor::Zeros(tensor.shape());
  return tape_->TakeGrad(it->second);
}

}  // namespace cloudadapt::numerics
