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

#include "cloudadapt/numerics/tensor.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "cloudadapt/common/error.h"

namespace cloudadapt::numerics {

std::size_t ShapeSize(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string ShapeString(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  Require(ShapeSize(shape_) == data_.size(), ErrorKind::kDimension,
          "tensor shape {} holds {} values, got {}", ShapeString(shape_),
          ShapeSize(shape_), data_.size());
  Require(AllFinite(), ErrorKind::kContract,
          "tensor of shape {} contains a non-finite value",
          ShapeString(shape_));
}

Tensor Tensor::Unchecked(Shape shape, std::vector<double> data) {
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = std::move(data);
  return t;
}

Tensor Tensor::Zeros(Shape shape) { return Full(std::move(shape), 0.0); }

Tensor Tensor::Full(Shape shape, double value) {
  std::size_t n = ShapeSize(shape);
  return Unchecked(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::Scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::Vector(std::vector<double> values) {
  std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::Matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

std::span<const double> Tensor::row(std::size_t r) const {
  return std::span<const double>(data_).subspan(r * cols(), cols());
}

std::span<double> Tensor::row(std::size_t r) {
  return std::span<double>(data_).subspan(r * cols(), cols());
}

double Tensor::item() const {
  Require(data_.size() == 1, ErrorKind::kContract,
          "item() on tensor of shape {}", ShapeString(shape_));
  return data_[0];
}

bool Tensor::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Tensor Tensor::Reshaped(Shape shape) const {
  Require(ShapeSize(shape) == data_.size(), ErrorKind::kDimension,
          "cannot reshape {} to {}", ShapeString(shape_), ShapeString(shape));
  return Unchecked(std::move(shape), data_);
}

Tensor& Tensor::operator+=(const Tensor& other) {
  Require(other.data_.size() == data_.size(), ErrorKind::kDimension,
          "accumulate {} into {}", ShapeString(other.shape_),
          ShapeString(shape_));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double scale) {
  for (double& v : data_) v *= scale;
  return *this;
}

}  // namespace cloudadapt::numerics
