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

#pragma once

#include <span>
#include <string>

namespace attnrec {

/// What a ranking model sees when asked for next-item scores.
struct Query {
  int user = 0;
  std::span<const int> long_term;  // earlier items, deduplicated
  std::span<const int> context;    // current session items
};

/// Scores every item of the catalog for one query. Implementations are
/// immutable after training and safe to call concurrently.
class ItemScorer {
 public:
  virtual ~ItemScorer() = default;
  virtual std::string name() const = 0;
  virtual int n_items() const = 0;
  /// Writes n_items() scores into `out`; higher is better.
  virtual void score(const Query& query, std::span<double> out) const = 0;
};

/// Explicit-rating predictor (APAR, UserMean, ItemMean).
class RatingPredictor {
 public:
  virtual ~RatingPredictor() = default;
  virtual std::string name() const = 0;
  virtual double predict(int user, int item) const = 0;
};

}  // namespace attnrec
