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

#include "attnrec/das.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "attnrec/errors.hpp"

namespace attnrec {
namespace {


void check_item(const DasState& s, int item) {
  if (item < 0 || item >= s.n_items()) throw InvalidArgument("das: unknown item " + std::to_string(item));
}

void check_user(const DasState& s, int user) {
  if (user < 0 || user >= s.n_users()) throw InvalidArgument("das: unknown user " + std::to_string(user));
}

std::vector<Vector> embed_all(const DasState& s, std::span<const int> items) {
  std::vector<Vector> out;
  out.reserve(items.size());
  for (int i : items) out.push_back(embed_item(s, i));
  return out;
}

struct Forward {
  std::vector<Vector> h_long, h_short;
  Attention a_long, a_short;
  Vector x;   // [u_long; u_short]
  Vector m;   // relu output
  Vector hu;  // user embedding
  Vector y;   // [m; hu]
};

Forward forward(const DasState& s, int user, std::span<const int> long_term,
                std::span<const int> short_term) {
  check_user(s, user);
  const auto k = static_cast<std::size_t>(s.params.k);
  Forward f;
  f.h_long = embed_all(s, long_term);
  f.h_short = embed_all(s, short_term);
  f.a_long = attend(f.h_long, s.wa.row(0), k);
  f.a_short = attend(f.h_short, s.wb.row(0), k);
  f.x = f.a_long.output;
  f.x.insert(f.x.end(), f.a_short.output.begin(), f.a_short.output.end());
  f.m = dense_forward(s.W, s.b.row(0), f.x, Activation::kRelu);
  f.hu.resize(k);
  const auto raw = s.W2.row(static_cast<std::size_t>(user));
  for (std::size_t c = 0; c < k; ++c) f.hu[c] = sigmoid(raw[c]);
  f.y = f.m;
  f.y.insert(f.y.end(), f.hu.begin(), f.hu.end());
  return f;
}

double item_score(const DasState& s, const Forward& f, int item) {
  return dot(s.Wo.row(static_cast<std::size_t>(item)), f.y) + s.bo(0, static_cast<std::size_t>(item));
}

// -log p and its derivative with respect to the raw score.
// `positive` selects p = sigmoid(r) versus p = 1 - sigmoid(r).
std::pair<double, double> bce(double r, bool positive) {
  const double sig = sigmoid(r);
  if (positive) return {-log_sigmoid(r), -(1.0 - sig)};
  return {-log_sigmoid(-r), sig};
}

enum TensorIndex { kW1, kW2, kWa, kWb, kW, kB, kWo, kBo, kTensorCount };

void backward(const DasState& s, const DasInstance& inst, const Forward& f,
              std::span<const std::pair<int, double>> d_scores, std::vector<DenseMatrix>& g) {
  const auto k = static_cast<std::size_t>(s.params.k);
  Vector dy(2 * k, 0.0);
  for (const auto& [item, dr] : d_scores) {
    const auto row = static_cast<std::size_t>(item);
    axpy(dr, f.y, g[kWo].row(row));
    g[kBo](0, row) += dr;
    axpy(dr, s.Wo.row(row), dy);
  }
  auto du_row = g[kW2].row(static_cast<std::size_t>(inst.user));
  for (std::size_t c = 0; c < k; ++c) du_row[c] += dy[k + c] * f.hu[c] * (1.0 - f.hu[c]);

  Vector dz(k);
  for (std::size_t r = 0; r < k; ++r) dz[r] = f.m[r] > 0.0 ? dy[r] : 0.0;
  add_outer(g[kW], dz, f.x);
  axpy(1.0, dz, g[kB].row(0));
  const Vector dx = matvec_transposed(s.W, dz);

  auto attention_back = [&](const std::vector<Vector>& h, const Attention& a, std::span<const int> items,
                            std::span<const double> d_out, const DenseMatrix& w, DenseMatrix& dw) {
    if (items.empty()) return;
    std::vector<Vector> dh(h.size(), Vector(k, 0.0));
    attend_backward(h, w.row(0), a, d_out, dh, dw.row(0));
    for (std::size_t i = 0; i < items.size(); ++i) {
      auto row = g[kW1].row(static_cast<std::size_t>(items[i]));
      for (std::size_t c = 0; c < k; ++c) row[c] += dh[i][c] * h[i][c] * (1.0 - h[i][c]);
    }
  };
  attention_back(f.h_long, f.a_long, inst.long_term, std::span<const double>(dx).first(k), s.wa, g[kWa]);
  attention_back(f.h_short, f.a_short, inst.short_term, std::span<const double>(dx).subspan(k), s.wb, g[kWb]);
}

}  // namespace

DasParams das_desk_params() {
  DasParams p;
  p.k = 32;
  p.lr = 0.01;
  p.batch = 5;
  p.epochs = 40;
  p.init_sd = 1.0;
  return p;
}

std::vector<DenseMatrix*> DasState::tensors() { return {&W1, &W2, &wa, &wb, &W, &b, &Wo, &bo}; }
std::vector<const DenseMatrix*> DasState::tensors() const { return {&W1, &W2, &wa, &wb, &W, &b, &Wo, &bo}; }

DasState init_das(int n_users, int n_items, const DasParams& params, Rng& rng) {
  if (params.k < 1) throw InvalidArgument("das: k must be >= 1");
  if (n_users < 1 || n_items < 1) throw InvalidArgument("das: empty user or item set");
  if (params.batch < 1 || params.epochs < 0 || params.negatives < 1 || !(params.lr > 0.0)) {
    throw InvalidArgument("das: batch, negatives and lr must be positive");
  }
  const auto k = static_cast<std::size_t>(params.k);
  const auto nu = static_cast<std::size_t>(n_users);
  const auto nv = static_cast<std::size_t>(n_items);
  DasState s;
  s.params = params;
  s.seed = rng.seed();
  s.W1 = init_normal(nv, k, 0.0, params.init_sd, rng);
  s.W2 = init_normal(nu, k, 0.0, params.init_sd, rng);
  s.wa = init_uniform_attention(1, k, k, rng);
  s.wb = init_uniform_attention(1, k, k, rng);
  s.W = init_uniform_attention(k, 2 * k, 2 * k, rng);
  s.b = DenseMatrix(1, k);
  s.Wo = init_uniform_attention(nv, 2 * k, 2 * k, rng);
  s.bo = DenseMatrix(1, nv);
  return s;
}

Vector embed_item(const DasState& state, int item) {
  check_item(state, item);
  const auto raw = state.W1.row(static_cast<std::size_t>(item));
  Vector h(raw.size());
  for (std::size_t c = 0; c < raw.size(); ++c) h[c] = sigmoid(raw[c]);
  return h;
}

Attention attend_long(const DasState& state, std::span<const int> long_term) {
  return attend(embed_all(state, long_term), state.wa.row(0), static_cast<std::size_t>(state.params.k));
}

Attention attend_short(const DasState& state, std::span<const int> short_term) {
  return attend(embed_all(state, short_term), state.wb.row(0), static_cast<std::size_t>(state.params.k));
}

Vector mixture(const DasState& state, std::span<const double> u_long, std::span<const double> u_short) {
  const auto k = static_cast<std::size_t>(state.params.k);
  if (u_long.size() != k || u_short.size() != k) throw InvalidArgument("das mixture: inputs must have length k");
  Vector x(u_long.begin(), u_long.end());
  x.insert(x.end(), u_short.begin(), u_short.end());
  return dense_forward(state.W, state.b.row(0), x, Activation::kRelu);
}

Vector score_all(const DasState& state, std::span<const double> u_mixture, int user) {
  check_user(state, user);
  const auto k = static_cast<std::size_t>(state.params.k);
  if (u_mixture.size() != k) throw InvalidArgument("das score_all: mixture must have length k");
  Vector y(u_mixture.begin(), u_mixture.end());
  for (double v : state.W2.row(static_cast<std::size_t>(user))) y.push_back(sigmoid(v));
  Vector r = matvec(state.Wo, y);
  axpy(1.0, state.bo.row(0), r);
  return r;
}

double das_loss(const DasState& state, std::span<const DasInstance> batch, std::vector<DenseMatrix>* grad) {
  if (grad) {
    grad->clear();
    for (const DenseMatrix* t : state.tensors()) grad->emplace_back(t->rows(), t->cols());
  }
  double loss = 0.0;
  std::vector<std::pair<int, double>> d_scores;
  for (const auto& inst : batch) {
    if (inst.negatives.empty()) throw InvalidArgument("das_loss: instance without negatives");
    check_item(state, inst.positive);
    const Forward f = forward(state, inst.user, inst.long_term, inst.short_term);
    d_scores.clear();
    const auto [lp, dp] = bce(item_score(state, f, inst.positive), true);
    loss += lp;
    d_scores.emplace_back(inst.positive, dp);
    for (int j : inst.negatives) {
      check_item(state, j);
      const auto [ln, dn] = bce(item_score(state, f, j), false);
      loss += ln;
      d_scores.emplace_back(j, dn);
    }
    if (grad) backward(state, inst, f, d_scores, *grad);
  }

  const auto& p = state.params;
  loss += p.lambda_uv * (state.W1.squared_norm() + state.W2.squared_norm());
  loss += p.lambda_at * (state.wa.squared_norm() + state.wb.squared_norm());
  loss += p.lambda_dense * (state.W.squared_norm() + state.Wo.squared_norm());
  if (grad) {
    auto& g = *grad;
    axpy(2.0 * p.lambda_uv, state.W1.values(), g[kW1].values());
    axpy(2.0 * p.lambda_uv, state.W2.values(), g[kW2].values());
    axpy(2.0 * p.lambda_at, state.wa.values(), g[kWa].values());
    axpy(2.0 * p.lambda_at, state.wb.values(), g[kWb].values());
    axpy(2.0 * p.lambda_dense, state.W.values(), g[kW].values());
    axpy(2.0 * p.lambda_dense, state.Wo.values(), g[kWo].values());
  }
  return loss;
}

DasState train_das(const Split& split, const DasParams& params, Rng& rng) {
  DasState s = init_das(split.n_users, split.n_items, params, rng);
  std::vector<TrainInstance> instances = split.train_instances();
  if (instances.empty()) throw DataError("das: no training instances (need sessions with >= 2 items)");
  const auto masks = history_masks(split);

  std::vector<DenseMatrix> grad;
  std::vector<DasInstance> batch;
  for (int epoch = 1; epoch <= params.epochs; ++epoch) {
    rng.shuffle(instances);
    double total = 0.0;
    for (std::size_t start = 0; start < instances.size(); start += static_cast<std::size_t>(params.batch)) {
      const std::size_t end = std::min(instances.size(), start + static_cast<std::size_t>(params.batch));
      batch.clear();
      for (std::size_t i = start; i < end; ++i) {
        const auto& t = instances[i];
        DasInstance inst{t.user, t.long_term, t.context, t.target, {}};
        for (int n = 0; n < params.negatives; ++n) inst.negatives.push_back(draw_negative(t, masks, params.negative_scope, rng, s.n_items()));
        batch.push_back(std::move(inst));
      }
      const double loss = das_loss(s, batch, &grad);
      if (!std::isfinite(loss)) {
        throw NumericalFailure("das: non-finite loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                               std::to_string(start) + "; try a smaller learning rate");
      }
      total += loss;
      auto tensors = s.tensors();
      for (std::size_t t = 0; t < tensors.size(); ++t) sgd_step_inplace(*tensors[t], grad[t], params.lr);
    }
    s.trace.push_back({epoch, total / static_cast<double>(instances.size())});
  }
  return s;
}

RankedList recommend_das(const DasState& state, int user, std::span<const int> long_term,
                         std::span<const int> short_term, std::size_t n, bool exclude_short) {
  const Forward f = forward(state, user, long_term, short_term);
  Vector r = matvec(state.Wo, f.y);
  axpy(1.0, state.bo.row(0), r);
  std::vector<char> eligible(r.size(), 1);
  if (exclude_short)
    for (int i : short_term) eligible[static_cast<std::size_t>(i)] = 0;
  RankedList ranked = rank_items(r, eligible);
  if (ranked.items.size() > n) {
    ranked.items.resize(n);
    ranked.scores.resize(n);
  }
  return ranked;
}

void DasScorer::score(const Query& query, std::span<double> out) const {
  if (out.size() != static_cast<std::size_t>(n_items())) throw InvalidArgument("das: output span has wrong size");
  const Forward f = forward(state_, query.user, query.long_term, query.context);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = dot(state_.Wo.row(i), f.y) + state_.bo(0, i);
}

namespace {
const char* const kDasTensorNames[] = {"W1", "W2", "wa", "wb", "W", "b", "Wo", "bo"};
}

Checkpoint to_checkpoint(const DasState& state) {
  Checkpoint ck;
  ck.model = "das";
  const auto& p = state.params;
  ck.set("k", p.k);
  ck.set("lr", p.lr);
  ck.set("lambda_uv", p.lambda_uv);
  ck.set("lambda_at", p.lambda_at);
  ck.set("lambda_dense", p.lambda_dense);
  ck.set("batch", p.batch);
  ck.set("epochs", p.epochs);
  ck.set("negatives", p.negatives);
  ck.set("init_sd", p.init_sd);
  ck.set("negative_scope", std::string(to_string(p.negative_scope)));
  ck.set("seed", state.seed);
  const auto tensors = state.tensors();
  for (std::size_t t = 0; t < tensors.size(); ++t) ck.tensors[kDasTensorNames[t]] = *tensors[t];
  DenseMatrix trace(state.trace.size(), 2);
  for (std::size_t i = 0; i < state.trace.size(); ++i) {
    trace(i, 0) = state.trace[i].epoch;
    trace(i, 1) = state.trace[i].loss;
  }
  ck.tensors["trace"] = trace;
  return ck;
}

DasState das_from_checkpoint(const Checkpoint& ck) {
  if (ck.model != "das") throw DataError("checkpoint holds model '" + ck.model + "', expected das");
  DasState s;
  auto& p = s.params;
  p.k = static_cast<int>(ck.get_int("k"));
  p.lr = ck.get_double("lr");
  p.lambda_uv = ck.get_double("lambda_uv");
  p.lambda_at = ck.get_double("lambda_at");
  p.lambda_dense = ck.get_double("lambda_dense");
  p.batch = static_cast<int>(ck.get_int("batch"));
  p.epochs = static_cast<int>(ck.get_int("epochs"));
  p.negatives = static_cast<int>(ck.get_int("negatives"));
  p.init_sd = ck.get_double("init_sd");
  const auto scope = parse_negative_scope(ck.get_string("negative_scope"));
  if (!scope) throw DataError("das checkpoint: unknown negative_scope");
  p.negative_scope = *scope;
  s.seed = ck.get_u64("seed");
  const auto tensors = s.tensors();
  for (std::size_t t = 0; t < tensors.size(); ++t) *tensors[t] = ck.tensor(kDasTensorNames[t]);
  const auto k = static_cast<std::size_t>(p.k);
  if (s.W1.cols() != k || s.W2.cols() != k || s.wa.cols() != k || s.wb.cols() != k || s.W.rows() != k ||
      s.W.cols() != 2 * k || s.b.cols() != k || s.Wo.cols() != 2 * k || s.Wo.rows() != s.W1.rows() ||
      s.bo.cols() != s.W1.rows()) {
    throw DataError("das checkpoint: tensor shapes do not match k=" + std::to_string(k));
  }
  const DenseMatrix& trace = ck.tensor("trace");
  for (std::size_t i = 0; i < trace.rows(); ++i) s.trace.push_back({static_cast<int>(trace(i, 0)), trace(i, 1)});
  return s;
}

}  // namespace attnrec
