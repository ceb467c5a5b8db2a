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

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "attnrec/data.hpp"
#include "attnrec/scorer.hpp"

namespace attnrec {

/// Items in descending score order; equal scores keep ascending item index.
struct RankedList {
  std::vector<int> items;
  std::vector<double> scores;
};

/// Ranks items whose `eligible` flag is set (all items when empty).
RankedList rank_items(std::span<const double> scores, std::span<const char> eligible = {});

double mae(std::span<const double> truth, std::span<const double> pred);
double rmse(std::span<const double> truth, std::span<const double> pred);

/// |top-k ∩ relevant| / k. When the list is shorter than k the available
/// length is used instead and `truncated` (if given) is set.
double precision_at_k(const RankedList& ranked, const std::set<int>& relevant, std::size_t k,
                      bool* truncated = nullptr);
/// |top-k ∩ relevant| / |relevant|. Throws on an empty relevant set.
double recall_at_k(const RankedList& ranked, const std::set<int>& relevant, std::size_t k);

/// Mean over all (pos, neg) pairs of 1 / 0.5 / 0 for >, ==, <.
double auc(std::span<const double> pos_scores, std::span<const double> neg_scores);

/// 1 - |R ∩ C| / |R|.
double can_novelty(const std::set<int>& recommended, const std::set<int>& context);

struct NoveltyCase {
  std::set<int> recommended;
  std::set<int> context;
};
double mcan(std::span<const NoveltyCase> cases);

struct MetricRow {
  std::string metric;
  int cutoff = 0;  // 0 for metrics without a cutoff
  double value = 0.0;

  friend bool operator==(const MetricRow&, const MetricRow&) = default;
};

struct EvalReport {
  std::string model;
  std::string split;
  std::vector<MetricRow> rows;
  double runtime_seconds = 0.0;
  std::uint64_t seed = 0;
  std::size_t n_cases = 0;
  std::vector<std::string> failures;  // per-case errors; evaluation continued

  std::optional<double> value(const std::string& metric, int cutoff = 0) const;
};

enum class AucNegatives { kAll, kSampled100 };

struct EvalOptions {
  std::vector<int> cutoffs = {5, 10, 20};
  std::set<std::string> metrics = {"precision", "recall", "auc", "mcan"};
  /// Drop the session's visible context items from the ranking.
  bool exclude_context = true;
  AucNegatives auc_negatives = AucNegatives::kAll;
  std::uint64_t seed = 0;  // only used by sampled AUC negatives
};

/// Leave-one-out evaluation over every TestCase of the split. AUC compares the
/// target against items outside the user's history (long-term ∪ context);
/// the reported AUC is the mean over users of each user's mean case AUC.
EvalReport evaluate(const ItemScorer& scorer, const Split& split, const EvalOptions& options = {});

/// MAE and RMSE over held-out ratings.
EvalReport evaluate_ratings(const RatingPredictor& predictor,
                            std::span<const RatingTriplet> test);

/// Columns: model,split,metric,cutoff,value (cutoff empty when unused).
void write_report_csv(std::ostream& out, const EvalReport& report, bool header = true);
void write_report_table(std::ostream& out, const EvalReport& report);

}  // namespace attnrec
