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

#include "attnrec/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "attnrec/errors.hpp"

namespace attnrec {
namespace {


void check_out(std::span<double> out, int n_items, const char* model) {
  if (out.size() != static_cast<std::size_t>(n_items)) {
    throw InvalidArgument(std::string(model) + ": output span has wrong size");
  }
}

}  // namespace

std::vector<double> popularity(const Split& split) {
  std::vector<double> counts(static_cast<std::size_t>(split.n_items), 0.0);
  for (const auto& s : split.train)
    for (int i : s.items) counts.at(static_cast<std::size_t>(i)) += 1.0;
  return counts;
}

void TopScorer::score(const Query&, std::span<double> out) const {
  check_out(out, n_items(), "top");
  std::copy(counts_.begin(), counts_.end(), out.begin());
}

void RandomScorer::score(const Query& query, std::span<double> out) const {
  check_out(out, n_items_, "random");
  const std::uint64_t base = Rng::mix(seed_ ^ Rng::mix(static_cast<std::uint64_t>(query.user) + 1));
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<double>(Rng::mix(base + i) >> 11) * 0x1.0p-53;
  }
}

MeanPredictor::MeanPredictor(Key key, std::span<const RatingTriplet> train) : key_(key) {
  if (train.empty()) throw InvalidArgument(std::string(name()) + ": no explicit ratings to average");
  int n = 0;
  for (const auto& r : train) n = std::max(n, (key == Key::kUser ? r.user : r.item) + 1);
  means_.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<double> counts(means_.size(), 0.0);
  double total = 0.0;
  for (const auto& r : train) {
    const auto k = static_cast<std::size_t>(key == Key::kUser ? r.user : r.item);
    means_[k] += r.rating;
    counts[k] += 1.0;
    total += r.rating;
  }
  seen_.assign(means_.size(), 0);
  for (std::size_t k = 0; k < means_.size(); ++k) {
    if (counts[k] > 0.0) {
      means_[k] /= counts[k];
      seen_[k] = 1;
    }
  }
  global_ = total / static_cast<double>(train.size());
}

MeanPredictor::MeanPredictor(Key key, std::vector<double> means, std::vector<char> seen, double global_mean)
    : key_(key), means_(std::move(means)), seen_(std::move(seen)), global_(global_mean) {
  if (means_.size() != seen_.size()) throw InvalidArgument("mean predictor: means/seen size mismatch");
}

double MeanPredictor::predict(int user, int item) const {
  const int k = key_ == Key::kUser ? user : item;
  if (k < 0 || static_cast<std::size_t>(k) >= means_.size() || !seen_[static_cast<std::size_t>(k)]) return global_;
  return means_[static_cast<std::size_t>(k)];
}

double bpr_mf_loss(const BprState& state, std::span<const BprTriple> triples, DenseMatrix* grad_p,
                   DenseMatrix* grad_q) {
  if (grad_p) *grad_p = DenseMatrix(state.P.rows(), state.P.cols());
  if (grad_q) *grad_q = DenseMatrix(state.Q.rows(), state.Q.cols());
  const double lambda = state.params.lambda;
  double loss = 0.0;
  for (const auto& t : triples) {
    if (t.user < 0 || static_cast<std::size_t>(t.user) >= state.P.rows()) throw InvalidArgument("bpr: unknown user");
    if (t.positive < 0 || static_cast<std::size_t>(t.positive) >= state.Q.rows() || t.negative < 0 ||
        static_cast<std::size_t>(t.negative) >= state.Q.rows()) {
      throw InvalidArgument("bpr: unknown item");
    }
    const auto pu = state.P.row(static_cast<std::size_t>(t.user));
    const auto qi = state.Q.row(static_cast<std::size_t>(t.positive));
    const auto qj = state.Q.row(static_cast<std::size_t>(t.negative));
    const double x = dot(pu, qi) - dot(pu, qj);
    const double sig = sigmoid(x);
    loss -= log_sigmoid(x);
    const double dx = -(1.0 - sig);
    loss += lambda * (dot(pu, pu) + dot(qi, qi) + dot(qj, qj));
    if (grad_p) {
      auto gp = grad_p->row(static_cast<std::size_t>(t.user));
      axpy(dx, qi, gp);
      axpy(-dx, qj, gp);
      axpy(2.0 * lambda, pu, gp);
    }
    if (grad_q) {
      auto gi = grad_q->row(static_cast<std::size_t>(t.positive));
      auto gj = grad_q->row(static_cast<std::size_t>(t.negative));
      axpy(dx, pu, gi);
      axpy(-dx, pu, gj);
      axpy(2.0 * lambda, qi, gi);
      axpy(2.0 * lambda, qj, gj);
    }
  }
  return loss;
}

BprState init_bpr(int n_users, int n_items, const BprParams& params, Rng& rng) {
  if (params.d < 1) throw InvalidArgument("bpr: d must be >= 1");
  if (params.lr < 0.0 || params.epochs < 0) throw InvalidArgument("bpr: lr and epochs must be nonnegative");
  if (n_users < 1 || n_items < 1) throw InvalidArgument("bpr: empty user or item set");
  BprState s;
  s.params = params;
  s.seed = rng.seed();
  const auto d = static_cast<std::size_t>(params.d);
  s.P = init_normal(static_cast<std::size_t>(n_users), d, 0.0, params.init_sd, rng);
  s.Q = init_normal(static_cast<std::size_t>(n_items), d, 0.0, params.init_sd, rng);
  return s;
}

BprState train_bpr(std::span<const std::vector<int>> user_items, int n_items, const BprParams& params, Rng& rng) {
  BprState s = init_bpr(static_cast<int>(user_items.size()), n_items, params, rng);
  std::vector<std::vector<char>> masks(user_items.size(), std::vector<char>(static_cast<std::size_t>(n_items), 0));
  std::vector<TrainInstance> pairs;
  for (std::size_t u = 0; u < user_items.size(); ++u) {
    for (int i : user_items[u]) {
      masks[u].at(static_cast<std::size_t>(i)) = 1;
      pairs.push_back({static_cast<int>(u), {}, {}, i});
    }
  }
  if (pairs.empty()) throw DataError("bpr: no training interactions");
  const double lr = params.lr;
  const double lambda = params.lambda;
  const auto d = static_cast<std::size_t>(params.d);
  Vector pu(d);
  for (int epoch = 1; epoch <= params.epochs; ++epoch) {
    rng.shuffle(pairs);
    double total = 0.0;
    for (const auto& pair : pairs) {
      const BprTriple t{pair.user, pair.target, draw_negative(pair, masks, params.negative_scope, rng, n_items)};
      // Sparse per-triple step on the three touched rows.
      auto p = s.P.row(static_cast<std::size_t>(t.user));
      auto qi = s.Q.row(static_cast<std::size_t>(t.positive));
      auto qj = s.Q.row(static_cast<std::size_t>(t.negative));
      const double x = dot(p, qi) - dot(p, qj);
      const double sig = sigmoid(x);
      total += -log_sigmoid(x) + lambda * (dot(p, p) + dot(qi, qi) + dot(qj, qj));
      const double dx = -(1.0 - sig);
      std::copy(p.begin(), p.end(), pu.begin());
      for (std::size_t c = 0; c < d; ++c) {
        p[c] -= lr * (dx * (qi[c] - qj[c]) + 2.0 * lambda * p[c]);
        qi[c] -= lr * (dx * pu[c] + 2.0 * lambda * qi[c]);
        if (t.negative != t.positive) qj[c] -= lr * (-dx * pu[c] + 2.0 * lambda * qj[c]);
      }
    }
    if (!std::isfinite(total)) {
      throw NumericalFailure("bpr: non-finite loss at epoch " + std::to_string(epoch) + "; try a smaller learning rate");
    }
    s.trace.push_back({epoch, total / static_cast<double>(pairs.size())});
  }
  return s;
}

BprState train_bpr(const Split& split, const BprParams& params, Rng& rng) {
  const auto history = split.train_history();
  return train_bpr(history, split.n_items, params, rng);
}

void BprScorer::score(const Query& query, std::span<double> out) const {
  check_out(out, n_items(), "bpr");
  if (query.user < 0 || static_cast<std::size_t>(query.user) >= state_.P.rows()) {
    throw InvalidArgument("bpr: unknown user " + std::to_string(query.user));
  }
  const auto pu = state_.P.row(static_cast<std::size_t>(query.user));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = dot(pu, state_.Q.row(i));
}

Checkpoint to_checkpoint(const TopScorer& scorer) {
  Checkpoint ck;
  ck.model = "top";
  ck.tensors["counts"] = DenseMatrix(1, scorer.counts().size(), scorer.counts());
  return ck;
}

Checkpoint to_checkpoint(const RandomScorer& scorer) {
  Checkpoint ck;
  ck.model = "random";
  ck.set("n_items", scorer.n_items());
  ck.set("seed", scorer.seed());
  return ck;
}

Checkpoint to_checkpoint(const MeanPredictor& predictor) {
  Checkpoint ck;
  ck.model = predictor.name();
  ck.set("global_mean", predictor.global_mean());
  ck.tensors["means"] = DenseMatrix(1, predictor.means().size(), predictor.means());
  std::vector<double> seen(predictor.seen().begin(), predictor.seen().end());
  ck.tensors["seen"] = DenseMatrix(1, seen.size(), seen);
  return ck;
}

Checkpoint to_checkpoint(const BprState& state) {
  Checkpoint ck;
  ck.model = "bpr";
  ck.set("d", state.params.d);
  ck.set("lr", state.params.lr);
  ck.set("lambda", state.params.lambda);
  ck.set("epochs", state.params.epochs);
  ck.set("init_sd", state.params.init_sd);
  ck.set("negative_scope", std::string(to_string(state.params.negative_scope)));
  ck.set("seed", state.seed);
  ck.tensors["P"] = state.P;
  ck.tensors["Q"] = state.Q;
  DenseMatrix trace(state.trace.size(), 2);
  for (std::size_t i = 0; i < state.trace.size(); ++i) {
    trace(i, 0) = state.trace[i].epoch;
    trace(i, 1) = state.trace[i].loss;
  }
  ck.tensors["trace"] = trace;
  return ck;
}

TopScorer top_from_checkpoint(const Checkpoint& ck) {
  if (ck.model != "top") throw DataError("checkpoint holds model '" + ck.model + "', expected top");
  const auto v = ck.tensor("counts").values();
  return TopScorer(std::vector<double>(v.begin(), v.end()));
}

RandomScorer random_from_checkpoint(const Checkpoint& ck) {
  if (ck.model != "random") throw DataError("checkpoint holds model '" + ck.model + "', expected random");
  return RandomScorer(static_cast<int>(ck.get_int("n_items")), ck.get_u64("seed"));
}

MeanPredictor mean_from_checkpoint(const Checkpoint& ck) {
  MeanPredictor::Key key;
  if (ck.model == "usermean") {
    key = MeanPredictor::Key::kUser;
  } else if (ck.model == "itemmean") {
    key = MeanPredictor::Key::kItem;
  } else {
    throw DataError("checkpoint holds model '" + ck.model + "', expected usermean or itemmean");
  }
  const auto m = ck.tensor("means").values();
  const auto s = ck.tensor("seen").values();
  std::vector<char> seen;
  for (double v : s) seen.push_back(v != 0.0 ? 1 : 0);
  return MeanPredictor(key, std::vector<double>(m.begin(), m.end()), std::move(seen), ck.get_double("global_mean"));
}

BprState bpr_from_checkpoint(const Checkpoint& ck) {
  if (ck.model != "bpr") throw DataError("checkpoint holds model '" + ck.model + "', expected bpr");
  BprState s;
  s.params.d = static_cast<int>(ck.get_int("d"));
  s.params.lr = ck.get_double("lr");
  s.params.lambda = ck.get_double("lambda");
  s.params.epochs = static_cast<int>(ck.get_int("epochs"));
  s.params.init_sd = ck.get_double("init_sd");
  const auto scope = parse_negative_scope(ck.get_string("negative_scope"));
  if (!scope) throw DataError("bpr checkpoint: unknown negative_scope");
  s.params.negative_scope = *scope;
  s.seed = ck.get_u64("seed");
  s.P = ck.tensor("P");
  s.Q = ck.tensor("Q");
  if (s.P.cols() != static_cast<std::size_t>(s.params.d) || s.Q.cols() != s.P.cols()) {
    throw DataError("bpr checkpoint: factor width does not match d");
  }
  const DenseMatrix& trace = ck.tensor("trace");
  for (std::size_t i = 0; i < trace.rows(); ++i) s.trace.push_back({static_cast<int>(trace(i, 0)), trace(i, 1)});
  return s;
}

}  // namespace attnrec
