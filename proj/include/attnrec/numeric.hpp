// Copyright 2026 The attnrec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Small dense-math kernel shared by every model: row-major matrices,
// activations, one dense layer, SGD, initializers and a finite-difference
// gradient checker. Everything is double precision and single-threaded.

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "attnrec/rng.hpp"

namespace attnrec {

using Vector = std::vector<double>;

class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  /// Takes ownership of row-major `values`; throws if the size is wrong.
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static DenseMatrix identity(std::size_t n);
  /// Builds from nested rows, all of equal length.
  static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  void fill(double v);
  bool same_shape(const DenseMatrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const;
  double squared_norm() const;
  DenseMatrix transposed() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

enum class Activation { kIdentity, kRelu, kTanh, kSigmoid };

double sigmoid(double x);
/// log(sigmoid(x)) without overflow or underflow to -inf.
double log_sigmoid(double x);
double apply(Activation act, double x);
/// Derivative of `act` expressed through its output value y = act(x).
double derivative_from_output(Activation act, double y);

/// Max-subtracted softmax. Throws InvalidArgument on empty or non-finite input.
Vector softmax(std::span<const double> scores);

double dot(std::span<const double> a, std::span<const double> b);
/// out = W * x
Vector matvec(const DenseMatrix& w, std::span<const double> x);
/// out = W^T * y
Vector matvec_transposed(const DenseMatrix& w, std::span<const double> y);
/// W += scale * a b^T
void add_outer(DenseMatrix& w, std::span<const double> a, std::span<const double> b,
               double scale = 1.0);
/// y += scale * x
void axpy(double scale, std::span<const double> x, std::span<double> y);

/// act(W x + b).
Vector dense_forward(const DenseMatrix& weights, std::span<const double> bias,
                     std::span<const double> input, Activation activation);

/// p - lr * (g + 2 * l2 * p)
DenseMatrix sgd_step(const DenseMatrix& params, const DenseMatrix& grads, double lr,
                     double l2 = 0.0);
void sgd_step_inplace(DenseMatrix& params, const DenseMatrix& grads, double lr,
                      double l2 = 0.0);

/// Loss evaluated at `params`; when `grad` is non-null it receives the
/// analytic gradient (same shape as params).
using LossFunction = std::function<double(const DenseMatrix& params, DenseMatrix* grad)>;

/// Compares the analytic gradient with central differences and returns
/// max_i |a_i - n_i| / max(1e-8, |a_i| + |n_i|).
/// Throws NumericalFailure when any loss evaluation is non-finite.
double grad_check(const LossFunction& loss, const DenseMatrix& params, double epsilon = 1e-6);

DenseMatrix init_normal(std::size_t rows, std::size_t cols, double mean, double stddev,
                        Rng& rng);
/// Uniform on [-sqrt(3/k), sqrt(3/k)].
DenseMatrix init_uniform_attention(std::size_t rows, std::size_t cols, std::size_t k, Rng& rng);

/// Dot-product attention: alpha = softmax(v_i . query), output = sum alpha_i v_i.
/// No values gives a zero output of length `dim` and no weights.
struct Attention {
  Vector weights;
  Vector output;
};
Attention attend(const std::vector<Vector>& values, std::span<const double> query, std::size_t dim);

/// Backward pass of `attend`: accumulates into d_values[i] and d_query.
void attend_backward(const std::vector<Vector>& values, std::span<const double> query,
                     const Attention& forward, std::span<const double> d_output,
                     std::vector<Vector>& d_values, std::span<double> d_query);

/// Concatenates every tensor into one 1 x N row; `unpack` is its inverse.
DenseMatrix pack(std::span<const DenseMatrix* const> tensors);
void unpack(const DenseMatrix& packed, std::span<DenseMatrix* const> tensors);

}  // namespace attnrec
