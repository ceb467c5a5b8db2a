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

#include "attnrec/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "attnrec/errors.hpp"
#include "attnrec/rng.hpp"

namespace attnrec {
namespace {

void check_pair(std::span<const double> truth, std::span<const double> pred, const char* what) {
  if (truth.size() != pred.size()) throw InvalidArgument(std::string(what) + ": length mismatch");
  if (truth.empty()) throw InvalidArgument(std::string(what) + ": empty input");
}

std::size_t hits_in_top(const RankedList& ranked, const std::set<int>& relevant, std::size_t k) {
  const std::size_t n = std::min(k, ranked.items.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) hits += relevant.contains(ranked.items[i]);
  return hits;
}

// Score-descending, index-ascending order over `candidates`, top `k` only.
void top_k_order(std::vector<int>& candidates, std::span<const double> scores, std::size_t k) {
  auto better = [&](int a, int b) {
    if (scores[static_cast<std::size_t>(a)] != scores[static_cast<std::size_t>(b)]) {
      return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
    }
    return a < b;
  };
  k = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                    candidates.end(), better);
  candidates.resize(k);
}

}  // namespace

RankedList rank_items(std::span<const double> scores, std::span<const char> eligible) {
  if (!eligible.empty() && eligible.size() != scores.size()) {
    throw InvalidArgument("rank_items: eligibility mask does not match score vector");
  }
  std::vector<int> items;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (eligible.empty() || eligible[i]) items.push_back(static_cast<int>(i));
  top_k_order(items, scores, items.size());
  RankedList out;
  out.items = std::move(items);
  out.scores.reserve(out.items.size());
  for (int i : out.items) out.scores.push_back(scores[static_cast<std::size_t>(i)]);
  return out;
}

double mae(std::span<const double> truth, std::span<const double> pred) {
  check_pair(truth, pred, "mae");
  double total = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) total += std::abs(truth[i] - pred[i]);
  return total / static_cast<double>(truth.size());
}

double rmse(std::span<const double> truth, std::span<const double> pred) {
  check_pair(truth, pred, "rmse");
  double total = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) total += (truth[i] - pred[i]) * (truth[i] - pred[i]);
  return std::sqrt(total / static_cast<double>(truth.size()));
}

double precision_at_k(const RankedList& ranked, const std::set<int>& relevant, std::size_t k,
                      bool* truncated) {
  if (k == 0) throw InvalidArgument("precision_at_k: k must be >= 1");
  const bool short_list = ranked.items.size() < k;
  if (truncated) *truncated = short_list;
  const std::size_t denom = short_list ? ranked.items.size() : k;
  if (denom == 0) return 0.0;
  return static_cast<double>(hits_in_top(ranked, relevant, k)) / static_cast<double>(denom);
}

double recall_at_k(const RankedList& ranked, const std::set<int>& relevant, std::size_t k) {
  if (relevant.empty()) throw InvalidArgument("recall_at_k: empty relevant set");
  return static_cast<double>(hits_in_top(ranked, relevant, k)) /
         static_cast<double>(relevant.size());
}

double auc(std::span<const double> pos_scores, std::span<const double> neg_scores) {
  if (pos_scores.empty() || neg_scores.empty()) throw InvalidArgument("auc: empty score list");
  // Sort negatives once; each positive then needs two binary searches.
  std::vector<double> neg(neg_scores.begin(), neg_scores.end());
  std::sort(neg.begin(), neg.end());
  double total = 0.0;
  for (double p : pos_scores) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), p);
    const auto hi = std::upper_bound(neg.begin(), neg.end(), p);
    total += static_cast<double>(lo - neg.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  return total / (static_cast<double>(pos_scores.size()) * static_cast<double>(neg.size()));
}

double can_novelty(const std::set<int>& recommended, const std::set<int>& context) {
  if (recommended.empty()) throw InvalidArgument("can_novelty: empty recommendation set");
  std::size_t overlap = 0;
  for (int item : recommended) overlap += context.contains(item);
  return 1.0 - static_cast<double>(overlap) / static_cast<double>(recommended.size());
}

double mcan(std::span<const NoveltyCase> cases) {
  if (cases.empty()) throw InvalidArgument("mcan: no cases");
  double total = 0.0;
  for (const auto& c : cases) total += can_novelty(c.recommended, c.context);
  return total / static_cast<double>(cases.size());
}

std::optional<double> EvalReport::value(const std::string& metric, int cutoff) const {
  for (const auto& row : rows)
    if (row.metric == metric && row.cutoff == cutoff) return row.value;
  return std::nullopt;
}

EvalReport evaluate(const ItemScorer& scorer, const Split& split, const EvalOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const int n_items = scorer.n_items();
  if (n_items < split.n_items) {
    throw InvalidArgument("evaluate: scorer covers " + std::to_string(n_items) +
                          " items, split has " + std::to_string(split.n_items));
  }
  for (int k : options.cutoffs)
    if (k < 1) throw InvalidArgument("evaluate: cutoffs must be >= 1");
  const std::size_t max_k = options.cutoffs.empty()
                                ? 0
                                : static_cast<std::size_t>(
                                      *std::max_element(options.cutoffs.begin(), options.cutoffs.end()));
  auto wants = [&](const char* m) { return options.metrics.contains(m); };

  EvalReport report;
  report.model = scorer.name();
  report.split = std::string(to_string(split.policy));
  report.seed = options.seed;

  std::map<int, double> precision_sum, recall_sum, mcan_sum;
  std::map<int, std::pair<double, std::size_t>> auc_by_user;
  std::size_t n_ok = 0;
  std::vector<double> scores(static_cast<std::size_t>(n_items));
  std::vector<char> in_history(static_cast<std::size_t>(n_items));
  Rng sampler(options.seed);

  for (std::size_t c = 0; c < split.cases.size(); ++c) {
    const TestCase& tc = split.cases[c];
    try {
      scorer.score({tc.user, tc.long_term, tc.context}, scores);
      for (double s : scores)
        if (!std::isfinite(s)) throw NumericalFailure("non-finite score");

      const std::set<int> context(tc.context.begin(), tc.context.end());
      std::vector<int> candidates;
      candidates.reserve(scores.size());
      for (int i = 0; i < n_items; ++i)
        if (!(options.exclude_context && context.contains(i))) candidates.push_back(i);
      top_k_order(candidates, scores, max_k);
      RankedList top;
      top.items = std::move(candidates);
      const std::set<int> relevant = {tc.target};
      for (int k : options.cutoffs) {
        const auto kk = static_cast<std::size_t>(k);
        precision_sum[k] += precision_at_k(top, relevant, kk);
        recall_sum[k] += recall_at_k(top, relevant, kk);
        const std::size_t n = std::min(kk, top.items.size());
        if (n > 0) {
          mcan_sum[k] += can_novelty(std::set<int>(top.items.begin(), top.items.begin() + static_cast<std::ptrdiff_t>(n)),
                                     context);
        }
      }

      if (wants("auc")) {
        std::fill(in_history.begin(), in_history.end(), 0);
        for (int i : tc.long_term) in_history[static_cast<std::size_t>(i)] = 1;
        for (int i : tc.context) in_history[static_cast<std::size_t>(i)] = 1;
        in_history[static_cast<std::size_t>(tc.target)] = 1;
        std::vector<double> neg;
        if (options.auc_negatives == AucNegatives::kAll) {
          for (int i = 0; i < n_items; ++i)
            if (!in_history[static_cast<std::size_t>(i)]) neg.push_back(scores[static_cast<std::size_t>(i)]);
        } else {
          std::vector<int> pool;
          for (int i = 0; i < n_items; ++i)
            if (!in_history[static_cast<std::size_t>(i)]) pool.push_back(i);
          const auto picked = sample_negatives({}, pool, std::min<std::size_t>(100, pool.size()), sampler);
          for (int i : picked) neg.push_back(scores[static_cast<std::size_t>(i)]);
        }
        if (!neg.empty()) {
          const double pos = scores[static_cast<std::size_t>(tc.target)];
          auto& [sum, count] = auc_by_user[tc.user];
          sum += auc(std::span<const double>(&pos, 1), neg);
          ++count;
        }
      }
      ++n_ok;
    } catch (const std::exception& e) {
      report.failures.push_back("case " + std::to_string(c) + " (user " + std::to_string(tc.user) +
                                "): " + e.what());
    }
  }

  report.n_cases = n_ok;
  const double denom = n_ok > 0 ? static_cast<double>(n_ok) : 1.0;
  for (int k : options.cutoffs) {
    if (wants("precision")) report.rows.push_back({"precision", k, precision_sum[k] / denom});
    if (wants("recall")) report.rows.push_back({"recall", k, recall_sum[k] / denom});
    if (wants("mcan")) report.rows.push_back({"mcan", k, mcan_sum[k] / denom});
  }
  if (wants("auc")) {
    double total = 0.0;
    for (const auto& [user, acc] : auc_by_user) total += acc.first / static_cast<double>(acc.second);
    report.rows.push_back(
        {"auc", 0, auc_by_user.empty() ? 0.0 : total / static_cast<double>(auc_by_user.size())});
  }
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

EvalReport evaluate_ratings(const RatingPredictor& predictor, std::span<const RatingTriplet> test) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<double> truth, pred;
  for (const auto& r : test) {
    truth.push_back(r.rating);
    pred.push_back(predictor.predict(r.user, r.item));
  }
  EvalReport report;
  report.model = predictor.name();
  report.split = "ratings";
  report.n_cases = test.size();
  report.rows.push_back({"mae", 0, mae(truth, pred)});
  report.rows.push_back({"rmse", 0, rmse(truth, pred)});
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void write_report_csv(std::ostream& out, const EvalReport& report, bool header) {
  if (header) out << "model,split,metric,cutoff,value\n";
  std::ostringstream value;
  for (const auto& row : report.rows) {
    value.str("");
    value << std::setprecision(17) << row.value;
    out << report.model << ',' << report.split << ',' << row.metric << ',';
    if (row.cutoff > 0) out << row.cutoff;
    out << ',' << value.str() << '\n';
  }
}

void write_report_table(std::ostream& out, const EvalReport& report) {
  out << "model: " << report.model << "  split: " << report.split << "  cases: " << report.n_cases
      << "  seed: " << report.seed << '\n';
  out << std::left << std::setw(12) << "metric" << std::setw(8) << "cutoff" << "value\n";
  for (const auto& row : report.rows) {
    std::string name = row.metric;
    out << std::left << std::setw(12) << name << std::setw(8)
        << (row.cutoff > 0 ? std::to_string(row.cutoff) : std::string("-")) << std::fixed
        << std::setprecision(6) << row.value << '\n';
    out.unsetf(std::ios::fixed);
  }
  if (!report.failures.empty()) out << report.failures.size() << " case(s) failed\n";
}

}  // namespace attnrec
