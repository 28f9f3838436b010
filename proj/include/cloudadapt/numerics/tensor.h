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

#ifndef CLOUDADAPT_NUMERICS_TENSOR_H_
#define CLOUDADAPT_NUMERICS_TENSOR_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cloudadapt::numerics {

using Shape = std::vector<std::size_t>;

std::size_t ShapeSize(const Shape& shape);
std::string ShapeString(const Shape& shape);

// Dense row-major array of doubles. A value type: copies are deep.
//
// The public constructor is the checked path: it rejects a data length that
// disagrees with the shape and any non-finite entry. Kernels that have
// already validated their inputs build results through Unchecked().
class Tensor {
 public:
  Tensor() : shape_{0} {}
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Unchecked(Shape shape, std::vector<double> data);
  static Tensor Zeros(Shape shape);
  static Tensor Full(Shape shape, double value);
  static Tensor Scalar(double value);
  static Tensor Vector(std::vector<double> values);
  static Tensor Matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Rank-2 helpers. A rank-1 tensor is treated as a single row.
  std::size_t rows() const { return shape_.size() == 2 ? shape_[0] : 1; }
  std::size_t cols() const {
    return shape_.size() == 2 ? shape_[1] : data_.size();
  }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  const std::vector<double>& vector() const { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }

  std::span<const double> row(std::size_t r) const;
  std::span<double> row(std::size_t r);

  // Scalar value of a size-1 tensor.
  double item() const;

  bool AllFinite() const;
  Tensor Reshaped(Shape shape) const;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator*=(double scale);

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

}  // namespace cloudadapt::numerics

#endif  // CLOUDADAPT_NUMERICS_TENSOR_H_
