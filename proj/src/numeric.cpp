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

#include "attnrec/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "attnrec/errors.hpp"

namespace attnrec {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw InvalidArgument("DenseMatrix: " + std::to_string(values_.size()) +
                          " values for shape " + std::to_string(rows_) + "x" +
                          std::to_string(cols_));
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  DenseMatrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) throw InvalidArgument("from_rows: ragged rows");
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

void DenseMatrix::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool DenseMatrix::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double DenseMatrix::squared_norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return s;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) {
  return std::min(x, 0.0) - std::log1p(std::exp(-std::abs(x)));
}

double apply(Activation act, double x) {
  switch (act) {
    case Activation::kIdentity: return x;
    case Activation::kRelu: return x > 0.0 ? x : 0.0;
    case Activation::kTanh: return std::tanh(x);
    case Activation::kSigmoid: return sigmoid(x);
  }
  return x;
}

double derivative_from_output(Activation act, double y) {
  switch (act) {
    case Activation::kIdentity: return 1.0;
    case Activation::kRelu: return y > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh: return 1.0 - y * y;
    case Activation::kSigmoid: return y * (1.0 - y);
  }
  return 1.0;
}

Vector softmax(std::span<const double> scores) {
  if (scores.empty()) throw InvalidArgument("softmax: empty input");
  double max_score = scores[0];
  for (double s : scores) {
    if (!std::isfinite(s)) throw InvalidArgument("softmax: non-finite score");
    max_score = std::max(max_score, s);
  }
  Vector out(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - max_score);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Vector matvec(const DenseMatrix& w, std::span<const double> x) {
  if (w.cols() != x.size()) {
    throw InvalidArgument("matvec: matrix has " + std::to_string(w.cols()) +
                          " columns, input has " + std::to_string(x.size()));
  }
  Vector out(w.rows());
  for (std::size_t r = 0; r < w.rows(); ++r) out[r] = dot(w.row(r), x);
  return out;
}

Vector matvec_transposed(const DenseMatrix& w, std::span<const double> y) {
  if (w.rows() != y.size()) throw InvalidArgument("matvec_transposed: dimension mismatch");
  Vector out(w.cols(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r) axpy(y[r], w.row(r), out);
  return out;
}

void add_outer(DenseMatrix& w, std::span<const double> a, std::span<const double> b,
               double scale) {
  if (w.rows() != a.size() || w.cols() != b.size()) {
    throw InvalidArgument("add_outer: dimension mismatch");
  }
  for (std::size_t r = 0; r < a.size(); ++r) {
    const double s = scale * a[r];
    if (s == 0.0) continue;
    axpy(s, b, w.row(r));
  }
}

void axpy(double scale, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw InvalidArgument("axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += scale * x[i];
}

Vector dense_forward(const DenseMatrix& weights, std::span<const double> bias,
                     std::span<const double> input, Activation activation) {
  if (bias.size() != weights.rows()) {
    throw InvalidArgument("dense_forward: bias length " + std::to_string(bias.size()) +
                          " != output size " + std::to_string(weights.rows()));
  }
  Vector out = matvec(weights, input);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = apply(activation, out[i] + bias[i]);
  return out;
}

DenseMatrix sgd_step(const DenseMatrix& params, const DenseMatrix& grads, double lr, double l2) {
  DenseMatrix out = params;
  sgd_step_inplace(out, grads, lr, l2);
  return out;
}

void sgd_step_inplace(DenseMatrix& params, const DenseMatrix& grads, double lr, double l2) {
  if (!params.same_shape(grads)) throw InvalidArgument("sgd_step: shape mismatch");
  if (!(lr >= 0.0) || !(l2 >= 0.0)) throw InvalidArgument("sgd_step: lr and l2 must be >= 0");
  auto p = params.values();
  auto g = grads.values();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * (g[i] + 2.0 * l2 * p[i]);
}

double grad_check(const LossFunction& loss, const DenseMatrix& params, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("grad_check: epsilon must be positive");
  DenseMatrix analytic(params.rows(), params.cols());
  const double base = loss(params, &analytic);
  if (!std::isfinite(base)) throw NumericalFailure("grad_check: non-finite loss at base point");
  if (!analytic.same_shape(params)) throw InvalidArgument("grad_check: gradient shape mismatch");

  DenseMatrix probe = params;
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe.values()[i];
    probe.values()[i] = saved + epsilon;
    const double plus = loss(probe, nullptr);
    probe.values()[i] = saved - epsilon;
    const double minus = loss(probe, nullptr);
    probe.values()[i] = saved;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw NumericalFailure("grad_check: non-finite loss at entry " + std::to_string(i));
    }
    const double numeric = (plus - minus) / (2.0 * epsilon);
    const double a = analytic.values()[i];
    const double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
    worst = std::max(worst, err);
  }
  return worst;
}

DenseMatrix init_normal(std::size_t rows, std::size_t cols, double mean, double stddev,
                        Rng& rng) {
  if (stddev < 0.0) throw InvalidArgument("init_normal: negative stddev");
  DenseMatrix m(rows, cols);
  for (double& v : m.values()) v = stddev == 0.0 ? mean : rng.normal(mean, stddev);
  return m;
}

DenseMatrix init_uniform_attention(std::size_t rows, std::size_t cols, std::size_t k, Rng& rng) {
  if (k == 0) throw InvalidArgument("init_uniform_attention: k must be >= 1");
  const double bound = std::sqrt(3.0 / static_cast<double>(k));
  DenseMatrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-bound, bound);
  return m;
}

DenseMatrix pack(std::span<const DenseMatrix* const> tensors) {
  std::size_t total = 0;
  for (const auto* t : tensors) total += t->size();
  DenseMatrix out(1, total);
  std::size_t offset = 0;
  for (const auto* t : tensors) {
    std::copy(t->values().begin(), t->values().end(), out.values().begin() + offset);
    offset += t->size();
  }
  return out;
}

void unpack(const DenseMatrix& packed, std::span<DenseMatrix* const> tensors) {
  std::size_t total = 0;
  for (const auto* t : tensors) total += t->size();
  if (packed.size() != total) throw InvalidArgument("unpack: size mismatch");
  std::size_t offset = 0;
  for (auto* t : tensors) {
    std::copy_n(packed.values().begin() + offset, t->size(), t->values().begin());
    offset += t->size();
  }
}

Attention attend(const std::vector<Vector>& values, std::span<const double> query, std::size_t dim) {
  Attention a;
  a.output.assign(dim, 0.0);
  if (values.empty()) return a;
  Vector scores(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].size() != dim || query.size() != dim) throw InvalidArgument("attend: dimension mismatch");
    scores[i] = dot(values[i], query);
  }
  a.weights = softmax(scores);
  for (std::size_t i = 0; i < values.size(); ++i) axpy(a.weights[i], values[i], a.output);
  return a;
}

void attend_backward(const std::vector<Vector>& values, std::span<const double> query,
                     const Attention& forward, std::span<const double> d_output,
                     std::vector<Vector>& d_values, std::span<double> d_query) {
  if (values.empty()) return;
  // d alpha_i = d_out . v_i, then through the softmax.
  Vector d_alpha(values.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    d_alpha[i] = dot(d_output, values[i]);
    mean += forward.weights[i] * d_alpha[i];
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d_score = forward.weights[i] * (d_alpha[i] - mean);
    axpy(forward.weights[i], d_output, d_values[i]);
    axpy(d_score, query, d_values[i]);
    axpy(d_score, values[i], d_query);
  }
}

}  // namespace attnrec
