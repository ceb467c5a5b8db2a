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

// Dual-attention sequential model.
//
//   h_i      = sigmoid(W1[i])                 item embedding
//   u_long   = sum_i softmax(w_a . h_i) h_i    over the long-term set G
//   u_short  = sum_i softmax(w_b . h_i) h_i    over the current session S
//   m        = relu(W [u_long; u_short] + b)
//   R        = Wo [m; sigmoid(W2[u])] + bo     one raw score per item
//
// Embedding tables are stored item-major: row i of W1 is item i.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "attnrec/checkpoint.hpp"
#include "attnrec/data.hpp"
#include "attnrec/metrics.hpp"
#include "attnrec/numeric.hpp"
#include "attnrec/rng.hpp"
#include "attnrec/scorer.hpp"

namespace attnrec {

struct DasParams {
  int k = 100;
  double lr = 0.001;
  double lambda_uv = 1e-5;
  double lambda_at = 1e-5;
  /// Also penalize W and Wo (off by default).
  double lambda_dense = 0.0;
  int batch = 50;
  int epochs = 10;
  int negatives = 1;
  NegativeScope negative_scope = NegativeScope::kUserHistory;
  double init_sd = 0.01;
};

/// Settings that train on the planted sequential corpus within desk budget.
DasParams das_desk_params();

struct DasTraceRow {
  int epoch = 0;
  double loss = 0.0;  // mean per-instance loss over the epoch
};

struct DasState {
  DenseMatrix W1;  // |V| x k
  DenseMatrix W2;  // |U| x k
  DenseMatrix wa;  // 1 x k
  DenseMatrix wb;  // 1 x k
  DenseMatrix W;   // k x 2k
  DenseMatrix b;   // 1 x k
  DenseMatrix Wo;  // |V| x 2k
  DenseMatrix bo;  // 1 x |V|
  DasParams params;
  std::uint64_t seed = 0;
  std::vector<DasTraceRow> trace;

  int n_items() const { return static_cast<int>(W1.rows()); }
  int n_users() const { return static_cast<int>(W2.rows()); }

  /// Fixed order used by pack/unpack and the gradient checker.
  std::vector<DenseMatrix*> tensors();
  std::vector<const DenseMatrix*> tensors() const;
};

DasState init_das(int n_users, int n_items, const DasParams& params, Rng& rng);

Vector embed_item(const DasState& state, int item);

/// Empty G gives a zero vector and no weights.
Attention attend_long(const DasState& state, std::span<const int> long_term);
Attention attend_short(const DasState& state, std::span<const int> short_term);

Vector mixture(const DasState& state, std::span<const double> u_long, std::span<const double> u_short);

/// Raw scores for every item.
Vector score_all(const DasState& state, std::span<const double> u_mixture, int user);

/// One training example: a context and scored targets.
struct DasInstance {
  int user = 0;
  std::vector<int> long_term;
  std::vector<int> short_term;
  int positive = 0;
  std::vector<int> negatives;
};

/// Summed binary cross-entropy over the batch plus the penalties, applied
/// once. When `grad` is non-null it is resized to match state.tensors().
double das_loss(const DasState& state, std::span<const DasInstance> batch,
                std::vector<DenseMatrix>* grad = nullptr);

/// Throws NumericalFailure when the loss turns non-finite.
DasState train_das(const Split& split, const DasParams& params, Rng& rng);

RankedList recommend_das(const DasState& state, int user, std::span<const int> long_term,
                         std::span<const int> short_term, std::size_t n, bool exclude_short = false);

class DasScorer : public ItemScorer {
 public:
  explicit DasScorer(DasState state) : state_(std::move(state)) {}
  std::string name() const override { return "das"; }
  int n_items() const override { return state_.n_items(); }
  void score(const Query& query, std::span<double> out) const override;
  const DasState& state() const { return state_; }

 private:
  DasState state_;
};

Checkpoint to_checkpoint(const DasState& state);
DasState das_from_checkpoint(const Checkpoint& ck);

}  // namespace attnrec
