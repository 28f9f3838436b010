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

#include "cloudadapt/numerics/ops.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>

#include <Eigen/Core>

#include "cloudadapt/common/error.h"

namespace cloudadapt::numerics {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;
using ConstVecMap = Eigen::Map<const Eigen::RowVectorXd>;
using VecMap = Eigen::Map<Eigen::RowVectorXd>;
using TensorPtr = std::shared_ptr<const Tensor>;

ConstMap AsMatrix(const Tensor& t) {
  return ConstMap(t.data().data(), t.rows(), t.cols());
}
MutMap AsMatrix(Tensor& t) { return MutMap(t.data().data(), t.rows(), t.cols()); }

void RequireMatrix(const Var& v, const char* what) {
  Require(v.value().rank() == 2, ErrorKind::kDimension,
          "{} must be a matrix, got shape {}", what, ShapeString(v.shape()));
}

void RequireSameShape(const Var& a, const Var& b, const char* op) {
  Require(a.shape() == b.shape(), ErrorKind::kDimension, "{}: shapes {} vs {}",
          op, ShapeString(a.shape()), ShapeString(b.shape()));
}


}  // namespace

Var Linear(const Var& x, const Var& w, const Var& b) {
  RequireMatrix(x, "linear input");
  RequireMatrix(w, "linear weight");
  const std::size_t out = w.value().rows();
  Require(x.value().cols() == w.value().cols(), ErrorKind::kDimension,
          "linear: input {} vs weight {}", ShapeString(x.shape()),
          ShapeString(w.shape()));
  Require(b.value().rank() == 1 && b.value().size() == out,
          ErrorKind::kDimension, "linear: bias {} for {} outputs",
          ShapeString(b.shape()), out);

  Tensor y = Tensor::Zeros({x.value().rows(), out});
  AsMatrix(y).noalias() = AsMatrix(x.value()) * AsMatrix(w.value()).transpose();
  AsMatrix(y).rowwise() += ConstVecMap(b.value().data().data(), out);

  TensorPtr xv = x.shared_value();
  TensorPtr wv = w.shared_value();
  return Tape::Record(std::move(y), {&x, &w, &b},
                      [xv, wv](const Tensor& g, std::span<Tensor* const> in) {
                        auto gm = AsMatrix(g);
                        if (in[0]) AsMatrix(*in[0]).noalias() += gm * AsMatrix(*wv);
                        if (in[1]) {
                          AsMatrix(*in[1]).noalias() +=
                              gm.transpose() * AsMatrix(*xv);
                        }
                        if (in[2]) {
                          // Row by row: Eigen's column reduction changes its
                          // summation order with buffer alignment.
                          const std::size_t cols = g.cols();
                          std::vector<double> sum(cols, 0.0);
                          for (std::size_t r = 0; r < g.rows(); ++r) {
                            const double* gr = g.row(r).data();
                            for (std::size_t j = 0; j < cols; ++j) sum[j] += gr[j];
                          }
                          double* db = in[2]->data().data();
                          for (std::size_t j = 0; j < cols; ++j) db[j] += sum[j];
                        }
                      });
}

Var Linear(const Var& x, const Var& w) {
  RequireMatrix(x, "linear input");
  RequireMatrix(w, "linear weight");
  Require(x.value().cols() == w.value().cols(), ErrorKind::kDimension,
          "linear: input {} vs weight {}", ShapeString(x.shape()),
          ShapeString(w.shape()));
  Tensor y = Tensor::Zeros({x.value().rows(), w.value().rows()});
  AsMatrix(y).noalias() = AsMatrix(x.value()) * AsMatrix(w.value()).transpose();
  TensorPtr xv = x.shared_value();
  TensorPtr wv = w.shared_value();
  return Tape::Record(std::move(y), {&x, &w},
                      [xv, wv](const Tensor& g, std::span<Tensor* const> in) {
                        auto gm = AsMatrix(g);
                        if (in[0]) AsMatrix(*in[0]).noalias() += gm * AsMatrix(*wv);
                        if (in[1]) {
                          AsMatrix(*in[1]).noalias() +=
                              gm.transpose() * AsMatrix(*xv);
                        }
                      });
}

Var LayerNorm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  RequireMatrix(x, "layernorm input");
  const std::size_t n = x.value().rows();
  const std::size_t d = x.value().cols();
  Require(d >= 2, ErrorKind::kDegenerate,
          "layernorm over {} feature(s) is degenerate", d);
  Require(eps > 0.0, ErrorKind::kContract, "layernorm eps must be positive");
  Require(gamma.value().size() == d && beta.value().size() == d,
          ErrorKind::kDimension, "layernorm affine {} / {} for width {}",
          ShapeString(gamma.shape()), ShapeString(beta.shape()), d);

  auto normalized = std::make_shared<Tensor>(Tensor::Zeros({n, d}));
  std::vector<double> inv_std(n);
  Tensor y = Tensor::Zeros({n, d});
  const auto& xs = x.value();
  const auto& gs = gamma.value();
  const auto& bs = beta.value();
  for (std::size_t i = 0; i < n; ++i) {
    auto row = xs.row(i);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      double z = (row[j] - mean) * inv_std[i];
      normalized->at(i, j) = z;
      y.at(i, j) = gs[j] * z + bs[j];
    }
  }

  TensorPtr gv = gamma.shared_value();
  return Tape::Record(
      std::move(y), {&x, &gamma, &beta},
      [normalized, inv_std = std::move(inv_std), gv, n, d](
          const Tensor& g, std::span<Tensor* const> in) {
        const Tensor& z = *normalized;
        if (in[1]) {
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) (*in[1])[j] += g.at(i, j) * z.at(i, j);
          }
        }
        if (in[2]) {
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) (*in[2])[j] += g.at(i, j);
          }
        }
        if (in[0]) {
          std::vector<double> dz(d);
          for (std::size_t i = 0; i < n; ++i) {
            double mean_dz = 0.0;
            double mean_dz_z = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
              dz[j] = g.at(i, j) * (*gv)[j];
              mean_dz += dz[j];
              mean_dz_z += dz[j] * z.at(i, j);
            }
            mean_dz /= static_cast<double>(d);
            mean_dz_z /= static_cast<double>(d);
            for (std::size_t j = 0; j < d; ++j) {
              in[0]->at(i, j) +=
                  inv_std[i] * (dz[j] - mean_dz - z.at(i, j) * mean_dz_z);
            }
          }
        }
      });
}

Var Relu(const Var& x) {
  Tensor y = x.value();
  for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
  TensorPtr xv = x.shared_value();
  return Tape::Record(std::move(y), {&x},
                      [xv](const Tensor& g, std::span<Tensor* const> in) {
                        if (!in[0]) return;
                        for (std::size_t i = 0; i < g.size(); ++i) {
                          if ((*xv)[i] > 0.0) (*in[0])[i] += g[i];
                        }
                      });
}

Var Add(const Var& a, const Var& b) {
  RequireSameShape(a, b, "add");
  Tensor y = a.value();
  y += b.value();
  return Tape::Record(std::move(y), {&a, &b},
                      [](const Tensor& g, std::span<Tensor* const> in) {
                        if (in[0]) *in[0] += g;
                        if (in[1]) *in[1] += g;
                      });
}

Var Sub(const Var& a, const Var& b) {
  RequireSameShape(a, b, "sub");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= b.value()[i];
  return Tape::Record(std::move(y), {&a, &b},
                      [](const Tensor& g, std::span<Tensor* const> in) {
                        if (in[0]) *in[0] += g;
                        if (in[1]) {
                          for (std::size_t i = 0; i < g.size(); ++i) (*in[1])[i] -= g[i];
                        }
                      });
}

Var Mul(const Var& a, const Var& b) {
  RequireSameShape(a, b, "mul");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= b.value()[i];
  TensorPtr av = a.shared_value();
  TensorPtr bv = b.shared_value();
  return Tape::Record(std::move(y), {&a, &b},
                      [av, bv](const Tensor& g, std::span<Tensor* const> in) {
                        for (std::size_t i = 0; i < g.size(); ++i) {
                          if (in[0]) (*in[0])[i] += g[i] * (*bv)[i];
                          if (in[1]) (*in[1])[i] += g[i] * (*av)[i];
                        }
                      });
}

Var Scale(const Var& x, double factor) {
  Tensor y = x.value();
  y *= factor;
  return Tape::Record(std::move(y), {&x},
                      [factor](const Tensor& g, std::span<Tensor* const> in) {
                        if (!in[0]) return;
                        for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += factor * g[i];
                      });
}

Var AddRow(const Var& x, const Var& row) {
  RequireMatrix(x, "add-row input");
  const std::size_t n = x.value().rows();
  const std::size_t d = x.value().cols();
  Require(row.value().size() == d, ErrorKind::kDimension,
          "add-row: row {} for width {}", ShapeString(row.shape()), d);
  Tensor y = x.value();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) y.at(i, j) += row.value()[j];
  }
  return Tape::Record(std::move(y), {&x, &row},
                      [n, d](const Tensor& g, std::span<Tensor* const> in) {
                        if (in[0]) *in[0] += g;
                        if (in[1]) {
                          for (std::size_t i = 0; i < n; ++i) {
                            for (std::size_t j = 0; j < d; ++j) (*in[1])[j] += g.at(i, j);
                          }
                        }
                      });
}

Var AddTiled(const Var& x, const Var& pattern) {
  RequireMatrix(x, "add-tiled input");
  RequireMatrix(pattern, "add-tiled pattern");
  const std::size_t k = pattern.value().rows();
  const std::size_t d = pattern.value().cols();
  Require(k > 0 && x.value().cols() == d && x.value().rows() % k == 0,
          ErrorKind::kDimension, "add-tiled: input {} vs pattern {}",
          ShapeString(x.shape()), ShapeString(pattern.shape()));
  const std::size_t rows = x.value().rows();
  Tensor y = x.value();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < d; ++j) y.at(r, j) += pattern.value().at(r % k, j);
  }
  return Tape::Record(std::move(y), {&x, &pattern},
                      [rows, k, d](const Tensor& g, std::span<Tensor* const> in) {
                        if (in[0]) *in[0] += g;
                        if (in[1]) {
                          for (std::size_t r = 0; r < rows; ++r) {
                            for (std::size_t j = 0; j < d; ++j) {
                              in[1]->at(r % k, j) += g.at(r, j);
                            }
                          }
                        }
                      });
}

Var RepeatRows(const Var& x, std::size_t times) {
  RequireMatrix(x, "repeat-rows input");
  Require(times > 0, ErrorKind::kContract, "repeat-rows needs times > 0");
  const std::size_t n = x.value().rows();
  const std::size_t d = x.value().cols();
  Tensor y = Tensor::Zeros({n * times, d});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < times; ++t) {
      std::copy_n(x.value().row(i).begin(), d, y.row(i * times + t).begin());
    }
  }
  return Tape::Record(std::move(y), {&x},
                      [n, d, times](const Tensor& g, std::span<Tensor* const> in) {
                        if (!in[0]) return;
                        for (std::size_t i = 0; i < n; ++i) {
                          for (std::size_t t = 0; t < times; ++t) {
                            for (std::size_t j = 0; j < d; ++j) {
                              in[0]->at(i, j) += g.at(i * times + t, j);
                            }
                          }
                        }
                      });
}

Var GroupMean(const Var& x, std::size_t group) {
  RequireMatrix(x, "group-mean input");
  Require(group > 0 && x.value().rows() % group == 0, ErrorKind::kDimension,
          "group-mean: {} rows not divisible into groups of {}",
          x.value().rows(), group);
  const std::size_t n = x.value().rows() / group;
  const std::size_t d = x.value().cols();
  const double inv = 1.0 / static_cast<double>(group);
  Tensor y = Tensor::Zeros({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < group; ++t) {
      for (std::size_t j = 0; j < d; ++j) y.at(i, j) += x.value().at(i * group + t, j);
    }
    for (std::size_t j = 0; j < d; ++j) y.at(i, j) *= inv;
  }
  return Tape::Record(std::move(y), {&x},
                      [n, d, group, inv](const Tensor& g,
                                         std::span<Tensor* const> in) {
                        if (!in[0]) return;
                        for (std::size_t i = 0; i < n; ++i) {
                          for (std::size_t t = 0; t < group; ++t) {
                            for (std::size_t j = 0; j < d; ++j) {
                              in[0]->at(i * group + t, j) += inv * g.at(i, j);
                            }
                          }
                        }
                      });
}

Var GatherRows(const Var& x, std::span<const std::size_t> rows) {
  RequireMatrix(x, "gather-rows input");
  const std::size_t d = x.value().cols();
  for (std::size_t r : rows) {
    Require(r < x.value().rows(), ErrorKind::kDimension,
            "gather-rows: row {} of {}", r, x.value().rows());
  }
  Tensor y = Tensor::Zeros({rows.size(), d});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(x.value().row(rows[i]).begin(), d, y.row(i).begin());
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return Tape::Record(std::move(y), {&x},
                      [idx = std::move(idx), d](const Tensor& g,
                                                std::span<Tensor* const> in) {
                        if (!in[0]) return;
                        for (std::size_t i = 0; i < idx.size(); ++i) {
                          for (std::size_t j = 0; j < d; ++j) {
                            in[0]->at(idx[i], j) += g.at(i, j);
                          }
                        }
                      });
}

Var SliceCols(const Var& x, std::size_t begin, std::size_t count) {
  RequireMatrix(x, "slice-cols input");
  const std::size_t n = x.value().rows();
  Require(begin + count <= x.value().cols(), ErrorKind::kDimension,
          "slice-cols [{}, {}) of width {}", begin, begin + count,
          x.value().cols());
  Tensor y = Tensor::Zeros({n, count});
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(x.value().row(i).begin() + begin, count, y.row(i).begin());
  }
  return Tape::Record(std::move(y), {&x},
                      [n, begin, count](const Tensor& g,
                                        std::span<Tensor* const> in) {
                        if (!in[0]) return;
                        for (std::size_t i = 0; i < n; ++i) {
                          for (std::size_t j = 0; j < count; ++j) {
                            in[0]->at(i, begin + j) += g.at(i, j);
                          }
                        }
                      });
}

Var Reshape(const Var& x, Shape shape) {
  Tensor y = x.value().Reshaped(std::move(shape));
  return Tape::Record(std::move(y), {&x},
                      [](const Tensor& g, std::span<Tensor* const> in) {
                        if (!in[0]) return;
                        for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i];
                      });
}

Var EmbeddingBagMean(const Var& table,
                     const std::vector<std::vector<std::uint32_t>>& bags) {
  RequireMatrix(table, "embedding table");
  const std::size_t vocab = table.value().rows();
  const std::size_t d = table.value().cols();
  for (const auto& bag : bags) {
    Require(!bag.empty(), ErrorKind::kInput, "empty token sequence");
    for (std::uint32_t t : bag) {
      Require(t < vocab, ErrorKind::kInput, "token id {} outside vocabulary of {}",
              t, vocab);
    }
  }
  Tensor y = Tensor::Zeros({bags.size(), d});
  for (std::size_t i = 0; i < bags.size(); ++i) {
    const double inv = 1.0 / static_cast<double>(bags[i].size());
    for (std::uint32_t t : bags[i]) {
      for (std::size_t j = 0; j < d; ++j) y.at(i, j) += inv * table.value().at(t, j);
    }
  }
  return Tape::Record(std::move(y), {&table},
                      [bags, d](const Tensor& g, std::span<Tensor* const> in) {
                        if (!in[0]) return;
                        for (std::size_t i = 0; i < bags.size(); ++i) {
                          const double inv = 1.0 / static_cast<double>(bags[i].size());
                          for (std::uint32_t t : bags[i]) {
                            for (std::size_t j = 0; j < d; ++j) {
                              in[0]->at(t, j) += inv * g.at(i, j);
                            }
                          }
                        }
                      });
}

Var Sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return Tape::Record(Tensor::Full({}, s), {&x},
                      [](const Tensor& g, std::span<Tensor* const> in) {
                        if (!in[0]) return;
                        for (double& v : in[0]->data()) v += g[0];
                      });
}

Var Mean(const Var& x) {
  Require(x.value().size() > 0, ErrorKind::kContract, "mean of an empty tensor");
  const double inv = 1.0 / static_cast<double>(x.value().size());
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return Tape::Record(Tensor::Full({}, s * inv), {&x},
                      [inv](const Tensor& g, std::span<Tensor* const> in) {
                        if (!in[0]) return;
                        for (double& v : in[0]->data()) v += g[0] * inv;
                      });
}

Var Mse(const Var& a, const Var& b) {
  RequireSameShape(a, b, "mse");
  Require(a.value().size() > 0, ErrorKind::kContract, "mse of empty tensors");
  const std::size_t n = a.value().size();
  auto diff = std::make_shared<Tensor>(a.value());
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    (*diff)[i] -= b.value()[i];
    s += (*diff)[i] * (*diff)[i];
  }
  const double inv = 1.0 / static_cast<double>(n);
  return Tape::Record(Tensor::Full({}, s * inv), {&a, &b},
                      [diff, inv](const Tensor& g, std::span<Tensor* const> in) {
                        const double k = 2.0 * inv * g[0];
                        for (std::size_t i = 0; i < diff->size(); ++i) {
                          if (in[0]) (*in[0])[i] += k * (*diff)[i];
                          if (in[1]) (*in[1])[i] -= k * (*diff)[i];
                        }
                      });
}

Var SoftmaxCrossEntropy(const Var& logits, std::span<const std::size_t> labels) {
  RequireMatrix(logits, "logits");
  const std::size_t n = logits.value().rows();
  const std::size_t k = logits.value().cols();
  Require(labels.size() == n && n > 0, ErrorKind::kDimension,
          "cross-entropy: {} labels for {} rows", labels.size(), n);
  auto probs = std::make_shared<Tensor>(Tensor::Zeros({n, k}));
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Require(labels[i] < k, ErrorKind::kContract, "label {} for {} classes",
            labels[i], k);
    auto row = logits.value().row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      probs->at(i, j) = std::exp(row[j] - mx);
      z += probs->at(i, j);
    }
    for (std::size_t j = 0; j < k; ++j) probs->at(i, j) /= z;
    loss += -(row[labels[i]] - mx - std::log(z));
  }
  const double inv = 1.0 / static_cast<double>(n);
  std::vector<std::size_t> lab(labels.begin(), labels.end());
  return Tape::Record(Tensor::Full({}, loss * inv), {&logits},
                      [probs, lab = std::move(lab), inv, n, k](
                          const Tensor& g, std::span<Tensor* const> in) {
                        if (!in[0]) return;
                        const double s = g[0] * inv;
                        for (std::size_t i = 0; i < n; ++i) {
                          for (std::size_t j = 0; j < k; ++j) {
                            double p = probs->at(i, j) - (j == lab[i] ? 1.0 : 0.0);
                            in[0]->at(i, j) += s * p;
                          }
                        }
                      });
}

Var KlToStandardNormal(const Var& mu, const Var& logvar) {
  RequireMatrix(mu, "kl mu");
  RequireSameShape(mu, logvar, "kl");
  const std::size_t n = mu.value().rows();
  Require(n > 0, ErrorKind::kContract, "kl of an empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < mu.value().size(); ++i) {
    const double m = mu.value()[i];
    const double lv = logvar.value()[i];
    total += 0.5 * (m * m + std::exp(lv) - 1.0 - lv);
  }
  const double inv = 1.0 / static_cast<double>(n);
  TensorPtr mv = mu.shared_value();
  TensorPtr lvv = logvar.shared_value();
  return Tape::Record(Tensor::Full({}, total * inv), {&mu, &logvar},
                      [mv, lvv, inv](const Tensor& g, std::span<Tensor* const> in) {
                        const double s = g[0] * inv;
                        for (std::size_t i = 0; i < mv->size(); ++i) {
                          if (in[0]) (*in[0])[i] += s * (*mv)[i];
                          if (in[1]) (*in[1])[i] += s * 0.5 * (std::exp((*lvv)[i]) - 1.0);
                        }
                      });
}

Var Clamp(const Var& x, double lo, double hi) {
  Tensor y = x.value();
  for (double& v : y.data()) v = std::clamp(v, lo, hi);
  TensorPtr xv = x.shared_value();
  return Tape::Record(std::move(y), {&x},
                      [xv, lo, hi](const Tensor& g, std::span<Tensor* const> in) {
                        if (!in[0]) return;
                        for (std::size_t i = 0; i < g.size(); ++i) {
                          const double v = (*xv)[i];
                          if (v >= lo && v <= hi) (*in[0])[i] += g[i];
                        }
                      });
}

Var Reparameterize(const Var& mu, const Var& logvar, const Tensor& noise) {
  RequireSameShape(mu, logvar, "reparameterize");
  Require(noise.shape() == mu.shape(), ErrorKind::kDimension,
          "reparameterize: noise {} for {}", ShapeString(noise.shape()),
          ShapeString(mu.shape()));
  auto sigma = std::make_shared<Tensor>(logvar.value());
  Tensor y = mu.value();
  for (std::size_t i = 0; i < y.size(); ++i) {
    (*sigma)[i] = std::exp(0.5 * logvar.value()[i]);
    y[i] += (*sigma)[i] * noise[i];
  }
  auto eps = std::make_shared<const Tensor>(noise);
  return Tape::Record(std::move(y), {&mu, &logvar},
                      [sigma, eps](const Tensor& g, std::span<Tensor* const> in) {
                        for (std::size_t i = 0; i < g.size(); ++i) {
                          if (in[0]) (*in[0])[i] += g[i];
                          if (in[1]) (*in[1])[i] += g[i] * (*eps)[i] * 0.5 * (*sigma)[i];
                        }
                      });
}

Var AdaptiveNormalize(const Var& style, const Var& content, double eps) {
  RequireMatrix(content, "adaptive-normalize content");
  RequireSameShape(style, content, "adaptive-normalize");
  const std::size_t n = content.value().rows();
  const std::size_t d = content.value().cols();
  Require(d >= 2, ErrorKind::kDegenerate,
          "channel statistics over {} value(s) are degenerate", d);

  struct RowStats {
    double style_mean, style_std, content_std;
  };
  auto z = std::make_shared<Tensor>(Tensor::Zeros({n, d}));
  auto stats = std::make_shared<std::vector<RowStats>>(n);
  Tensor y = Tensor::Zeros({n, d});
  const double inv_d = 1.0 / static_cast<double>(d);
  for (std::size_t i = 0; i < n; ++i) {
    auto c = content.value().row(i);
    auto s = style.value().row(i);
    double cm = 0.0, sm = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      cm += c[j];
      sm += s[j];
    }
    cm *= inv_d;
    sm *= inv_d;
    double cv = 0.0, sv = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      cv += (c[j] - cm) * (c[j] - cm);
      sv += (s[j] - sm) * (s[j] - sm);
    }
    const double cs = std::sqrt(cv * inv_d);
    const double ss = std::sqrt(sv * inv_d);
    Require(cs > eps, ErrorKind::kDegenerate,
            "content row {} has std {} <= {}", i, cs, eps);
    (*stats)[i] = {sm, ss, cs};
    for (std::size_t j = 0; j < d; ++j) {
      z->at(i, j) = (c[j] - cm) / cs;
      y.at(i, j) = ss * z->at(i, j) + sm;
    }
  }

  TensorPtr sv = style.shared_value();
  return Tape::Record(
      std::move(y), {&style, &content},
      [z, stats, sv, n, d, inv_d](const Tensor& g, std::span<Tensor* const> in) {
        for (std::size_t i = 0; i < n; ++i) {
          const RowStats& st = (*stats)[i];
          double sum_g = 0.0, sum_gz = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            sum_g += g.at(i, j);
            sum_gz += g.at(i, j) * z->at(i, j);
          }
          if (in[0]) {
            for (std::size_t j = 0; j < d; ++j) {
              double grad = sum_g * inv_d;
              // std is not differentiable at zero spread; use the zero
              // subgradient there.
              if (st.style_std > 0.0) {
                grad += sum_gz * (sv->at(i, j) - st.style_mean) * inv_d / st.style_std;
              }
              in[0]->at(i, j) += grad;
            }
          }
          if (in[1]) {
            // d out / d z = style_std; then back through standardization.
            const double mean_dz = st.style_std * sum_g * inv_d;
            const double mean_dz_z = st.style_std * sum_gz * inv_d;
            for (std::size_t j = 0; j < d; ++j) {
              const double dz = st.style_std * g.at(i, j);
              in[1]->at(i, j) +=
                  (dz - mean_dz - z->at(i, j) * mean_dz_z) / st.content_std;
            }
          }
        }
      });
}

Var GeneratedLinear(const Var& theta, const Var& x, std::size_t in_dim,
                    std::size_t out_dim) {
  RequireMatrix(theta, "generated parameters");
  RequireMatrix(x, "generated-linear input");
  const std::size_t n = x.value().rows();
  const std::size_t packed = in_dim * out_dim + out_dim;
  Require(theta.value().rows() == n && theta.value().cols() == packed,
          ErrorKind::kDimension,
          "generated-linear: parameters {} for batch {} and slot ({}, {})",
          ShapeString(theta.shape()), n, in_dim, out_dim);
  Require(x.value().cols() == in_dim, ErrorKind::kDimension,
          "generated-linear: input width {} for slot input {}",
          x.value().cols(), in_dim);

  // Plain loops: the per-row products are small, and a fixed summation order
  // keeps results independent of how the rows happen to be aligned.
  Tensor y = Tensor::Zeros({n, out_dim});
  for (std::size_t i = 0; i < n; ++i) {
    const double* w = theta.value().row(i).data();
    const double* b = w + in_dim * out_dim;
    const double* xi = x.value().row(i).data();
    double* yi = y.row(i).data();
    for (std::size_t o = 0; o < out_dim; ++o) {
      double acc = 0.0;
      for (std::size_t k = 0; k < in_dim; ++k) acc += w[o * in_dim + k] * xi[k];
      yi[o] = acc + b[o];
    }
  }
  TensorPtr tv = theta.shared_value();
  TensorPtr xv = x.shared_value();
  return Tape::Record(
      std::move(y), {&theta, &x},
      [tv, xv, n, in_dim, out_dim](const Tensor& g, std::span<Tensor* const> in) {
        for (std::size_t i = 0; i < n; ++i) {
          const double* gi = g.row(i).data();
          if (in[0]) {
            double* dw = in[0]->row(i).data();
            const double* xi = xv->row(i).data();
            for (std::size_t o = 0; o < out_dim; ++o) {
              for (std::size_t k = 0; k < in_dim; ++k) dw[o * in_dim + k] += gi[o] * xi[k];
            }
            double* db = dw + in_dim * out_dim;
            for (std::size_t o = 0; o < out_dim; ++o) db[o] += gi[o];
          }
          if (in[1]) {
            const double* w = tv->row(i).data();
            double* dx = in[1]->row(i).data();
            for (std::size_t o = 0; o < out_dim; ++o) {
              for (std::size_t k = 0; k < in_dim; ++k) dx[k] += gi[o] * w[o * in_dim + k];
            }
          }
        }
      });
}

}  // namespace cloudadapt::numerics
