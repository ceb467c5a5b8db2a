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

// Convolutional attention model.
//
//   c_i  = relu(Kw [e_{i-K}; ...; e_{i+K}] + bw)   over the ordered long-term list, zero-padded
//   p    = relu(W1 u_user + b1)
//   m    = sum_i softmax(c_i . tanh(W2 p + b2)) c_i          purpose stage
//   q_s  = tanh(W4 relu(W3 e_s + b3) + b4)                    per session item
//   u    = sum_s softmax(m . q_s) q_s                         preference stage
//   R_i  = u . Vout[i]
//
// An empty long-term list gives m = 0; an empty session gives u = m.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "attnrec/checkpoint.hpp"
#include "attnrec/data.hpp"
#include "attnrec/numeric.hpp"
#include "attnrec/rng.hpp"
#include "attnrec/scorer.hpp"

namespace attnrec {

struct CanParams {
  int d = 32;        // item embedding size D
  int d_user = 32;   // user embedding size
  int n_filters = 32;
  int window = 3;    // 2K+1
  int d_purpose = 32;
  int d_query = 32;
  double dropout = 0.2;
  double lr = 0.02;
  double lambda_uv = 1e-5;
  double lambda_a = 1e-5;
  int batch = 10;
  int epochs = 20;
  double init_sd = 0.5;
  NegativeScope negative_scope = NegativeScope::kUserHistory;
  /// Score with E instead of a separate output table; needs n_filters == d.
  bool tie_embeddings = false;
  bool use_purpose = true;
  bool use_preference = true;
};

/// Full-size settings: D=100, N_f=400, D_p=D_q=200, lr 0.01, batch 50.
CanParams can_paper_params();

struct CanTraceRow {
  int epoch = 0;
  double loss = 0.0;
};

struct CanState {
  DenseMatrix E;     // |V| x D
  DenseMatrix U;     // |U| x D_u
  DenseMatrix Kw;    // N_f x (window * D)
  DenseMatrix bw;    // 1 x N_f
  DenseMatrix W1;    // D_p x D_u
  DenseMatrix b1;    // 1 x D_p
  DenseMatrix W2;    // N_f x D_p
  DenseMatrix b2;    // 1 x N_f
  DenseMatrix W3;    // D_q x D
  DenseMatrix b3;    // 1 x D_q
  DenseMatrix W4;    // N_f x D_q
  DenseMatrix b4;    // 1 x N_f
  DenseMatrix Vout;  // |V| x N_f; empty when tied
  CanParams params;
  std::uint64_t seed = 0;
  std::vector<CanTraceRow> trace;

  int n_items() const { return static_cast<int>(E.rows()); }
  int n_users() const { return static_cast<int>(U.rows()); }
  const DenseMatrix& output_table() const { return params.tie_embeddings ? E : Vout; }

  std::vector<DenseMatrix*> tensors();
  std::vector<const DenseMatrix*> tensors() const;
};

CanState init_can(int n_users, int n_items, const CanParams& params, Rng& rng);

/// One contextual vector per position of `long_term`. With a non-null
/// `dropout_rng`, inverted dropout at params.dropout is applied.
std::vector<Vector> conv_context(const CanState& state, std::span<const int> long_term,
                                 Rng* dropout_rng = nullptr);

Vector purpose_vector(const CanState& state, int user);

/// Attention over `contexts` with query tanh(W2 p + b2). No contexts gives m = 0.
Attention purpose_encode(const CanState& state, const std::vector<Vector>& contexts,
                         std::span<const double> purpose);

Attention preference_encode(const CanState& state, std::span<const int> short_term,
                            std::span<const double> m);

/// Final user representation u for a query (inference path, no dropout).
Vector can_user_vector(const CanState& state, int user, std::span<const int> long_term,
                       std::span<const int> short_term);

double can_score(const CanState& state, std::span<const double> u, int item);

struct CanTriple {
  int user = 0;
  std::vector<int> long_term;
  std::vector<int> short_term;
  int positive = 0;
  int negative = 0;
};

/// Summed BPR loss plus penalties. With a non-null `dropout_rng`, masks are
/// drawn from it (copy an Rng to replay the same masks).
double bpr_loss(const CanState& state, std::span<const CanTriple> batch,
                std::vector<DenseMatrix>* grad = nullptr, Rng* dropout_rng = nullptr);

CanState train_can(const Split& split, const CanParams& params, Rng& rng);

class CanScorer : public ItemScorer {
 public:
  explicit CanScorer(CanState state) : state_(std::move(state)) {}
  std::string name() const override { return "can"; }
  int n_items() const override { return state_.n_items(); }
  void score(const Query& query, std::span<double> out) const override;
  const CanState& state() const { return state_; }

 private:
  CanState state_;
};

Checkpoint to_checkpoint(const CanState& state);
CanState can_from_checkpoint(const Checkpoint& ck);

}  // namespace attnrec
