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

// Comparison methods: popularity, random, per-user and per-item rating
// means, and BPR matrix factorization.

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

/// Training interaction count per item.
std::vector<double> popularity(const Split& split);

class TopScorer : public ItemScorer {
 public:
  explicit TopScorer(std::vector<double> counts) : counts_(std::move(counts)) {}
  std::string name() const override { return "top"; }
  int n_items() const override { return static_cast<int>(counts_.size()); }
  void score(const Query& query, std::span<double> out) const override;
  const std::vector<double>& counts() const { return counts_; }

 private:
  std::vector<double> counts_;
};

/// Scores are a hash of (seed, user, item) mapped to [0, 1), so a query
/// always gets the same scores regardless of call order.
class RandomScorer : public ItemScorer {
 public:
  RandomScorer(int n_items, std::uint64_t seed) : n_items_(n_items), seed_(seed) {}
  std::string name() const override { return "random"; }
  int n_items() const override { return n_items_; }
  void score(const Query& query, std::span<double> out) const override;
  std::uint64_t seed() const { return seed_; }

 private:
  int n_items_;
  std::uint64_t seed_;
};

/// Per-key mean rating with the global mean for unseen keys.
class MeanPredictor : public RatingPredictor {
 public:
  enum class Key { kUser, kItem };

  /// Throws InvalidArgument when `train` is empty.
  MeanPredictor(Key key, std::span<const RatingTriplet> train);
  MeanPredictor(Key key, std::vector<double> means, std::vector<char> seen, double global_mean);

  std::string name() const override { return key_ == Key::kUser ? "usermean" : "itemmean"; }
  double predict(int user, int item) const override;
  Key key() const { return key_; }
  double global_mean() const { return global_; }
  const std::vector<double>& means() const { return means_; }
  const std::vector<char>& seen() const { return seen_; }

 private:
  Key key_;
  std::vector<double> means_;
  std::vector<char> seen_;
  double global_ = 0.0;
};

struct BprParams {
  int d = 32;
  double lr = 0.05;
  double lambda = 0.01;
  int epochs = 20;
  double init_sd = 0.1;
  NegativeScope negative_scope = NegativeScope::kUserHistory;
};

struct BprTraceRow {
  int epoch = 0;
  double loss = 0.0;
};

struct BprState {
  DenseMatrix P;  // |U| x d
  DenseMatrix Q;  // |V| x d
  BprParams params;
  std::uint64_t seed = 0;
  std::vector<BprTraceRow> trace;
};

struct BprTriple {
  int user = 0;
  int positive = 0;
  int negative = 0;
};

/// Sum over triples of -ln sigmoid(p_u.(q_i - q_j)) + lambda (|p_u|^2 + |q_i|^2 + |q_j|^2).
/// The penalty covers only the rows each triple touches.
double bpr_mf_loss(const BprState& state, std::span<const BprTriple> triples, DenseMatrix* grad_p = nullptr,
                   DenseMatrix* grad_q = nullptr);

BprState init_bpr(int n_users, int n_items, const BprParams& params, Rng& rng);

/// Per-triple SGD over every (user, training item) pair once per epoch.
BprState train_bpr(const Split& split, const BprParams& params, Rng& rng);
BprState train_bpr(std::span<const std::vector<int>> user_items, int n_items, const BprParams& params, Rng& rng);

class BprScorer : public ItemScorer {
 public:
  explicit BprScorer(BprState state) : state_(std::move(state)) {}
  std::string name() const override { return "bpr"; }
  int n_items() const override { return static_cast<int>(state_.Q.rows()); }
  void score(const Query& query, std::span<double> out) const override;
  const BprState& state() const { return state_; }

 private:
  BprState state_;
};

Checkpoint to_checkpoint(const TopScorer& scorer);
Checkpoint to_checkpoint(const RandomScorer& scorer);
Checkpoint to_checkpoint(const MeanPredictor& predictor);
Checkpoint to_checkpoint(const BprState& state);
TopScorer top_from_checkpoint(const Checkpoint& ck);
RandomScorer random_from_checkpoint(const Checkpoint& ck);
MeanPredictor mean_from_checkpoint(const Checkpoint& ck);
BprState bpr_from_checkpoint(const Checkpoint& ck);

}  // namespace attnrec
