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

#include "attnrec/can.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "attnrec/errors.hpp"

namespace attnrec {
namespace {


enum TensorIndex { kE, kU, kKw, kBw, kW1, kB1, kW2, kB2, kW3, kB3, kW4, kB4, kVout, kTensorCount };

const char* const kCanTensorNames[] = {"E", "U", "Kw", "bw", "W1", "b1", "W2", "b2",
                                       "W3", "b3", "W4", "b4", "Vout"};

void check_item(const CanState& s, int item) {
  if (item < 0 || item >= s.n_items()) throw InvalidArgument("can: unknown item " + std::to_string(item));
}

void check_user(const CanState& s, int user) {
  if (user < 0 || user >= s.n_users()) throw InvalidArgument("can: unknown user " + std::to_string(user));
}

std::size_t half_window(const CanState& s) { return static_cast<std::size_t>(s.params.window / 2); }

Vector window_input(const CanState& s, std::span<const int> items, std::size_t pos) {
  const auto d = static_cast<std::size_t>(s.params.d);
  const std::size_t k = half_window(s);
  Vector win(static_cast<std::size_t>(s.params.window) * d, 0.0);
  for (std::size_t w = 0; w < static_cast<std::size_t>(s.params.window); ++w) {
    const auto src = static_cast<std::ptrdiff_t>(pos + w) - static_cast<std::ptrdiff_t>(k);
    if (src < 0 || src >= static_cast<std::ptrdiff_t>(items.size())) continue;
    const auto row = s.E.row(static_cast<std::size_t>(items[static_cast<std::size_t>(src)]));
    std::copy(row.begin(), row.end(), win.begin() + static_cast<std::ptrdiff_t>(w * d));
  }
  return win;
}

struct ConvCache {
  std::vector<Vector> windows;
  std::vector<Vector> pre;    // Kw win + bw
  std::vector<Vector> scale;  // dropout multiplier per unit (1 when off)
  std::vector<Vector> c;
};

ConvCache conv_forward(const CanState& s, std::span<const int> items, Rng* dropout_rng) {
  ConvCache cc;
  const double rate = s.params.dropout;
  for (std::size_t i = 0; i < items.size(); ++i) {
    check_item(s, items[i]);
    cc.windows.push_back(window_input(s, items, i));
    Vector pre = matvec(s.Kw, cc.windows.back());
    axpy(1.0, s.bw.row(0), pre);
    Vector scale(pre.size(), 1.0);
    if (dropout_rng && rate > 0.0) {
      for (double& v : scale) v = dropout_rng->bernoulli(rate) ? 0.0 : 1.0 / (1.0 - rate);
    }
    Vector c(pre.size());
    for (std::size_t f = 0; f < pre.size(); ++f) c[f] = std::max(0.0, pre[f]) * scale[f];
    cc.pre.push_back(std::move(pre));
    cc.scale.push_back(std::move(scale));
    cc.c.push_back(std::move(c));
  }
  return cc;
}

struct PrefCache {
  std::vector<Vector> pd;
  std::vector<Vector> q;
};

PrefCache pref_items(const CanState& s, std::span<const int> items) {
  PrefCache pc;
  for (int i : items) {
    check_item(s, i);
    pc.pd.push_back(dense_forward(s.W3, s.b3.row(0), s.E.row(static_cast<std::size_t>(i)), Activation::kRelu));
    pc.q.push_back(dense_forward(s.W4, s.b4.row(0), pc.pd.back(), Activation::kTanh));
  }
  return pc;
}

struct Forward {
  ConvCache conv;
  Vector p;      // purpose vector
  Vector g;      // purpose query
  Attention purpose;
  PrefCache pref;
  Attention preference;
  Vector u;
};

Forward forward(const CanState& s, int user, std::span<const int> long_term, std::span<const int> short_term,
                Rng* dropout_rng) {
  check_user(s, user);
  const auto nf = static_cast<std::size_t>(s.params.n_filters);
  Forward f;
  if (s.params.use_purpose) {
    f.conv = conv_forward(s, long_term, dropout_rng);
    f.p = purpose_vector(s, user);
    f.g = dense_forward(s.W2, s.b2.row(0), f.p, Activation::kTanh);
    f.purpose = attend(f.conv.c, f.g, nf);
  } else {
    f.purpose.output.assign(nf, 0.0);
  }
  if (s.params.use_preference && !short_term.empty()) {
    f.pref = pref_items(s, short_term);
    f.preference = attend(f.pref.q, f.purpose.output, nf);
    f.u = f.preference.output;
  } else {
    f.u = f.purpose.output;
  }
  return f;
}

void backward(const CanState& s, const CanTriple& t, const Forward& f, std::span<const double> du,
              std::vector<DenseMatrix>& g) {
  const auto nf = static_cast<std::size_t>(s.params.n_filters);
  Vector dm(nf, 0.0);
  if (s.params.use_preference && !t.short_term.empty()) {
    std::vector<Vector> dq(f.pref.q.size(), Vector(nf, 0.0));
    attend_backward(f.pref.q, f.purpose.output, f.preference, du, dq, dm);
    for (std::size_t i = 0; i < dq.size(); ++i) {
      Vector dpre4(nf);
      for (std::size_t r = 0; r < nf; ++r) dpre4[r] = dq[i][r] * (1.0 - f.pref.q[i][r] * f.pref.q[i][r]);
      add_outer(g[kW4], dpre4, f.pref.pd[i]);
      axpy(1.0, dpre4, g[kB4].row(0));
      Vector dpd = matvec_transposed(s.W4, dpre4);
      for (std::size_t r = 0; r < dpd.size(); ++r)
        if (f.pref.pd[i][r] <= 0.0) dpd[r] = 0.0;
      const auto item = static_cast<std::size_t>(t.short_term[i]);
      add_outer(g[kW3], dpd, s.E.row(item));
      axpy(1.0, dpd, g[kB3].row(0));
      axpy(1.0, matvec_transposed(s.W3, dpd), g[kE].row(item));
    }
  } else {
    axpy(1.0, du, dm);
  }
  if (!s.params.use_purpose || f.conv.c.empty()) return;

  std::vector<Vector> dc(f.conv.c.size(), Vector(nf, 0.0));
  Vector dg(nf, 0.0);
  attend_backward(f.conv.c, f.g, f.purpose, dm, dc, dg);

  Vector dpre2(nf);
  for (std::size_t r = 0; r < nf; ++r) dpre2[r] = dg[r] * (1.0 - f.g[r] * f.g[r]);
  add_outer(g[kW2], dpre2, f.p);
  axpy(1.0, dpre2, g[kB2].row(0));
  Vector dp = matvec_transposed(s.W2, dpre2);
  for (std::size_t r = 0; r < dp.size(); ++r)
    if (f.p[r] <= 0.0) dp[r] = 0.0;
  const auto user = static_cast<std::size_t>(t.user);
  add_outer(g[kW1], dp, s.U.row(user));
  axpy(1.0, dp, g[kB1].row(0));
  axpy(1.0, matvec_transposed(s.W1, dp), g[kU].row(user));

  const auto d = static_cast<std::size_t>(s.params.d);
  const std::size_t k = half_window(s);
  for (std::size_t i = 0; i < dc.size(); ++i) {
    Vector dpre(nf);
    for (std::size_t r = 0; r < nf; ++r) dpre[r] = f.conv.pre[i][r] > 0.0 ? dc[i][r] * f.conv.scale[i][r] : 0.0;
    add_outer(g[kKw], dpre, f.conv.windows[i]);
    axpy(1.0, dpre, g[kBw].row(0));
    const Vector dwin = matvec_transposed(s.Kw, dpre);
    for (std::size_t w = 0; w < static_cast<std::size_t>(s.params.window); ++w) {
      const auto src = static_cast<std::ptrdiff_t>(i + w) - static_cast<std::ptrdiff_t>(k);
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(t.long_term.size())) continue;
      const auto item = static_cast<std::size_t>(t.long_term[static_cast<std::size_t>(src)]);
      axpy(1.0, std::span<const double>(dwin).subspan(w * d, d), g[kE].row(item));
    }
  }
}

}  // namespace

CanParams can_paper_params() {
  CanParams p;
  p.d = 100;
  p.d_user = 100;
  p.n_filters = 400;
  p.d_purpose = 200;
  p.d_query = 200;
  p.lr = 0.01;
  p.batch = 50;
  p.epochs = 10;
  p.init_sd = 0.01;
  return p;
}

std::vector<DenseMatrix*> CanState::tensors() {
  return {&E, &U, &Kw, &bw, &W1, &b1, &W2, &b2, &W3, &b3, &W4, &b4, &Vout};
}
std::vector<const DenseMatrix*> CanState::tensors() const {
  return {&E, &U, &Kw, &bw, &W1, &b1, &W2, &b2, &W3, &b3, &W4, &b4, &Vout};
}

CanState init_can(int n_users, int n_items, const CanParams& params, Rng& rng) {
  const auto& p = params;
  if (p.d < 1 || p.d_user < 1 || p.n_filters < 1 || p.d_purpose < 1 || p.d_query < 1) {
    throw InvalidArgument("can: layer sizes must be >= 1");
  }
  if (p.window < 1 || p.window % 2 == 0) throw InvalidArgument("can: window must be odd and >= 1");
  if (p.dropout < 0.0 || p.dropout >= 1.0) throw InvalidArgument("can: dropout must be in [0, 1)");
  if (p.tie_embeddings && p.n_filters != p.d) throw InvalidArgument("can: tie-embeddings needs n_filters == d");
  if (p.batch < 1 || p.epochs < 0 || !(p.lr > 0.0)) throw InvalidArgument("can: batch and lr must be positive");
  if (n_users < 1 || n_items < 1) throw InvalidArgument("can: empty user or item set");
  const auto d = static_cast<std::size_t>(p.d), du = static_cast<std::size_t>(p.d_user);
  const auto nf = static_cast<std::size_t>(p.n_filters), dp = static_cast<std::size_t>(p.d_purpose);
  const auto dq = static_cast<std::size_t>(p.d_query), w = static_cast<std::size_t>(p.window);
  const auto nv = static_cast<std::size_t>(n_items);
  CanState s;
  s.params = p;
  s.seed = rng.seed();
  s.E = init_normal(nv, d, 0.0, p.init_sd, rng);
  s.U = init_normal(static_cast<std::size_t>(n_users), du, 0.0, p.init_sd, rng);
  s.Kw = init_uniform_attention(nf, w * d, w * d, rng);
  s.bw = DenseMatrix(1, nf);
  s.W1 = init_uniform_attention(dp, du, du, rng);
  s.b1 = DenseMatrix(1, dp);
  s.W2 = init_uniform_attention(nf, dp, dp, rng);
  s.b2 = DenseMatrix(1, nf);
  s.W3 = init_uniform_attention(dq, d, d, rng);
  s.b3 = DenseMatrix(1, dq);
  s.W4 = init_uniform_attention(nf, dq, dq, rng);
  s.b4 = DenseMatrix(1, nf);
  if (!p.tie_embeddings) s.Vout = init_normal(nv, nf, 0.0, p.init_sd, rng);
  return s;
}

std::vector<Vector> conv_context(const CanState& state, std::span<const int> long_term, Rng* dropout_rng) {
  return conv_forward(state, long_term, dropout_rng).c;
}

Vector purpose_vector(const CanState& state, int user) {
  check_user(state, user);
  return dense_forward(state.W1, state.b1.row(0), state.U.row(static_cast<std::size_t>(user)), Activation::kRelu);
}

Attention purpose_encode(const CanState& state, const std::vector<Vector>& contexts,
                         std::span<const double> purpose) {
  const Vector g = dense_forward(state.W2, state.b2.row(0), purpose, Activation::kTanh);
  return attend(contexts, g, static_cast<std::size_t>(state.params.n_filters));
}

Attention preference_encode(const CanState& state, std::span<const int> short_term, std::span<const double> m) {
  if (m.size() != static_cast<std::size_t>(state.params.n_filters)) {
    throw InvalidArgument("can: purpose representation must have length n_filters");
  }
  return attend(pref_items(state, short_term).q, m, static_cast<std::size_t>(state.params.n_filters));
}

Vector can_user_vector(const CanState& state, int user, std::span<const int> long_term,
                       std::span<const int> short_term) {
  return forward(state, user, long_term, short_term, nullptr).u;
}

double can_score(const CanState& state, std::span<const double> u, int item) {
  check_item(state, item);
  const auto row = state.output_table().row(static_cast<std::size_t>(item));
  if (row.size() != u.size()) throw InvalidArgument("can_score: dimension mismatch");
  return dot(u, row);
}

double bpr_loss(const CanState& state, std::span<const CanTriple> batch, std::vector<DenseMatrix>* grad,
                Rng* dropout_rng) {
  if (grad) {
    grad->clear();
    for (const DenseMatrix* t : state.tensors()) grad->emplace_back(t->rows(), t->cols());
  }
  const DenseMatrix& out_table = state.output_table();
  const auto out_index = state.params.tie_embeddings ? kE : kVout;
  double loss = 0.0;
  for (const auto& t : batch) {
    check_item(state, t.positive);
    check_item(state, t.negative);
    const Forward f = forward(state, t.user, t.long_term, t.short_term, dropout_rng);
    const auto pos = out_table.row(static_cast<std::size_t>(t.positive));
    const auto neg = out_table.row(static_cast<std::size_t>(t.negative));
    const double x = dot(f.u, pos) - dot(f.u, neg);
    const double sig = sigmoid(x);
    loss -= log_sigmoid(x);
    const double dx = -(1.0 - sig);
    if (!grad || dx == 0.0) continue;
    Vector du(pos.begin(), pos.end());
    axpy(-1.0, neg, du);
    for (double& v : du) v *= dx;
    auto& g = *grad;
    axpy(dx, f.u, g[out_index].row(static_cast<std::size_t>(t.positive)));
    axpy(-dx, f.u, g[out_index].row(static_cast<std::size_t>(t.negative)));
    backward(state, t, f, du, g);
  }

  const auto& p = state.params;
  loss += p.lambda_uv * (state.E.squared_norm() + state.U.squared_norm() + state.Vout.squared_norm());
  loss += p.lambda_a * (state.W1.squared_norm() + state.W2.squared_norm() + state.W3.squared_norm() +
                        state.W4.squared_norm());
  if (grad) {
    auto& g = *grad;
    for (auto idx : {kE, kU, kVout}) axpy(2.0 * p.lambda_uv, state.tensors()[idx]->values(), g[idx].values());
    for (auto idx : {kW1, kW2, kW3, kW4}) axpy(2.0 * p.lambda_a, state.tensors()[idx]->values(), g[idx].values());
  }
  return loss;
}

CanState train_can(const Split& split, const CanParams& params, Rng& rng) {
  CanState s = init_can(split.n_users, split.n_items, params, rng);
  std::vector<TrainInstance> instances = split.train_instances();
  if (instances.empty()) throw DataError("can: no training instances (need sessions with >= 2 items)");
  const auto masks = history_masks(split);
  Rng dropout_rng = rng.fork();

  std::vector<DenseMatrix> grad;
  std::vector<CanTriple> batch;
  for (int epoch = 1; epoch <= params.epochs; ++epoch) {
    rng.shuffle(instances);
    double total = 0.0;
    for (std::size_t start = 0; start < instances.size(); start += static_cast<std::size_t>(params.batch)) {
      const std::size_t end = std::min(instances.size(), start + static_cast<std::size_t>(params.batch));
      batch.clear();
      for (std::size_t i = start; i < end; ++i) {
        const auto& t = instances[i];
        batch.push_back({t.user, t.long_term, t.context, t.target,
                         draw_negative(t, masks, params.negative_scope, rng, s.n_items())});
      }
      const double loss = bpr_loss(s, batch, &grad, &dropout_rng);
      if (!std::isfinite(loss)) {
        throw NumericalFailure("can: non-finite loss at epoch " + std::to_string(epoch) + ", batch starting at " +
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

void CanScorer::score(const Query& query, std::span<double> out) const {
  if (out.size() != static_cast<std::size_t>(n_items())) throw InvalidArgument("can: output span has wrong size");
  const Vector u = can_user_vector(state_, query.user, query.long_term, query.context);
  const DenseMatrix& table = state_.output_table();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = dot(u, table.row(i));
}

Checkpoint to_checkpoint(const CanState& state) {
  Checkpoint ck;
  ck.model = "can";
  const auto& p = state.params;
  ck.set("d", p.d);
  ck.set("d_user", p.d_user);
  ck.set("n_filters", p.n_filters);
  ck.set("window", p.window);
  ck.set("d_purpose", p.d_purpose);
  ck.set("d_query", p.d_query);
  ck.set("dropout", p.dropout);
  ck.set("lr", p.lr);
  ck.set("lambda_uv", p.lambda_uv);
  ck.set("lambda_a", p.lambda_a);
  ck.set("batch", p.batch);
  ck.set("epochs", p.epochs);
  ck.set("init_sd", p.init_sd);
  ck.set("negative_scope", std::string(to_string(p.negative_scope)));
  ck.set("tie_embeddings", p.tie_embeddings ? 1 : 0);
  ck.set("use_purpose", p.use_purpose ? 1 : 0);
  ck.set("use_preference", p.use_preference ? 1 : 0);
  ck.set("seed", state.seed);
  const auto tensors = state.tensors();
  for (std::size_t t = 0; t < tensors.size(); ++t) ck.tensors[kCanTensorNames[t]] = *tensors[t];
  DenseMatrix trace(state.trace.size(), 2);
  for (std::size_t i = 0; i < state.trace.size(); ++i) {
    trace(i, 0) = state.trace[i].epoch;
    trace(i, 1) = state.trace[i].loss;
  }
  ck.tensors["trace"] = trace;
  return ck;
}

CanState can_from_checkpoint(const Checkpoint& ck) {
  if (ck.model != "can") throw DataError("checkpoint holds model '" + ck.model + "', expected can");
  CanState s;
  auto& p = s.params;
  p.d = static_cast<int>(ck.get_int("d"));
  p.d_user = static_cast<int>(ck.get_int("d_user"));
  p.n_filters = static_cast<int>(ck.get_int("n_filters"));
  p.window = static_cast<int>(ck.get_int("window"));
  p.d_purpose = static_cast<int>(ck.get_int("d_purpose"));
  p.d_query = static_cast<int>(ck.get_int("d_query"));
  p.dropout = ck.get_double("dropout");
  p.lr = ck.get_double("lr");
  p.lambda_uv = ck.get_double("lambda_uv");
  p.lambda_a = ck.get_double("lambda_a");
  p.batch = static_cast<int>(ck.get_int("batch"));
  p.epochs = static_cast<int>(ck.get_int("epochs"));
  p.init_sd = ck.get_double("init_sd");
  const auto scope = parse_negative_scope(ck.get_string("negative_scope"));
  if (!scope) throw DataError("can checkpoint: unknown negative_scope");
  p.negative_scope = *scope;
  p.tie_embeddings = ck.get_int("tie_embeddings") != 0;
  p.use_purpose = ck.get_int("use_purpose") != 0;
  p.use_preference = ck.get_int("use_preference") != 0;
  s.seed = ck.get_u64("seed");
  const auto tensors = s.tensors();
  for (std::size_t t = 0; t < tensors.size(); ++t) *tensors[t] = ck.tensor(kCanTensorNames[t]);
  const auto d = static_cast<std::size_t>(p.d), nf = static_cast<std::size_t>(p.n_filters);
  const bool ok = s.E.cols() == d && s.U.cols() == static_cast<std::size_t>(p.d_user) && s.Kw.rows() == nf &&
                  s.Kw.cols() == static_cast<std::size_t>(p.window) * d && s.W1.cols() == s.U.cols() &&
                  s.W2.rows() == nf && s.W2.cols() == s.W1.rows() && s.W3.cols() == d && s.W4.rows() == nf &&
                  s.W4.cols() == s.W3.rows() &&
                  (p.tie_embeddings ? s.Vout.empty() : s.Vout.rows() == s.E.rows() && s.Vout.cols() == nf);
  if (!ok) throw DataError("can checkpoint: tensor shapes are inconsistent with the stored hyperparameters");
  const DenseMatrix& trace = ck.tensor("trace");
  for (std::size_t i = 0; i < trace.rows(); ++i) s.trace.push_back({static_cast<int>(trace(i, 0)), trace(i, 1)});
  return s;
}

}  // namespace attnrec
