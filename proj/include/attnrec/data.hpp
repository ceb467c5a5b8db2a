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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "attnrec/rng.hpp"

namespace attnrec {

enum class Action { kView, kClick, kCart, kWishlist, kPurchase, kCheckin, kRate };

std::string_view to_string(Action action);
std::optional<Action> parse_action(std::string_view text);

/// One raw event as read from a log, with string tokens for user and item.
struct Interaction {
  std::string user;
  std::string item;
  std::int64_t timestamp = 0;
  Action action = Action::kPurchase;
  std::optional<double> rating;  // present iff action == kRate
  std::optional<std::string> review;
  std::optional<int> helpful;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

/// Maps CSV header names onto Interaction fields. Empty optional names mean
/// "column not used".
struct CsvSchema {
  std::string user = "user";
  std::string item = "item";
  std::string timestamp = "timestamp";
  std::string action = "action";
  std::string rating = "rating";
  std::string review = "review";
  std::string helpful = "helpful";
};

struct RowError {
  std::size_t line = 0;  // 1-based physical line of the record start
  std::string message;
};

struct IngestResult {
  std::vector<Interaction> interactions;
  std::vector<RowError> errors;
};

/// Parses ISO-8601 dates ("2019-03-01", "2019-03-01T10:00:00Z") or integer
/// epoch seconds.
std::optional<std::int64_t> parse_timestamp(std::string_view text);

/// Throws DataError when the file is missing or a required column is absent.
/// Row-level problems are collected in IngestResult::errors.
IngestResult ingest_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
IngestResult parse_csv(std::istream& in, const CsvSchema& schema = {});

/// Writes the canonical schema: user,item,timestamp,action,rating,review,helpful.
void write_csv(std::ostream& out, std::span<const Interaction> interactions);

/// Token <-> dense index table. Indices are assigned in first-seen order.
class IndexMap {
 public:
  IndexMap() = default;
  explicit IndexMap(std::vector<std::string> tokens);

  int intern(const std::string& token);
  std::optional<int> find(const std::string& token) const;
  const std::string& token(int index) const { return tokens_.at(static_cast<std::size_t>(index)); }
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  /// FNV-1a over the token list; identifies a vocabulary in checkpoints.
  std::uint64_t hash() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

/// An interaction with interned ids.
struct Event {
  int user = 0;
  int item = 0;
  std::int64_t timestamp = 0;
  Action action = Action::kPurchase;
  std::optional<double> rating;
  std::optional<int> helpful;
  std::string review;
};

struct Dataset {
  IndexMap users;
  IndexMap items;
  std::vector<Event> events;
};

Dataset intern(std::span<const Interaction> interactions);

struct Session {
  int user = 0;
  int index = 0;          // 1-based position among the user's sessions
  std::int64_t day = 0;   // days since epoch
  std::vector<int> items;

  friend bool operator==(const Session&, const Session&) = default;
};

/// One session per (user, calendar day), items in timestamp order. Output is
/// sorted by (user, day).
std::vector<Session> sessionize(std::span<const Event> events);

struct FilterOptions {
  std::size_t min_session_length = 0;
  std::size_t min_item_support = 0;
  /// Minimum number of interactions per user (the per-user variant of the
  /// Tafeng rule); 0 disables it.
  std::size_t min_user_items = 0;
};

/// Applies the thresholds repeatedly until nothing changes, then renumbers
/// each user's session indices.
std::vector<Session> filter_dataset(std::vector<Session> sessions, const FilterOptions& options);

struct LongShort {
  std::vector<int> long_term;   // deduplicated, in order of first interaction
  std::vector<int> short_term;  // session items in order, duplicates kept
};

/// `user_sessions` are one user's sessions in time order; t is 1-based.
LongShort build_long_short(std::span<const Session> user_sessions, int t);

enum class SplitPolicy { kLastWeek, kRandom8020 };

std::string_view to_string(SplitPolicy policy);
std::optional<SplitPolicy> parse_split_policy(std::string_view text);

/// A held-out prediction problem from one test session.
struct TestCase {
  int user = 0;
  std::vector<int> long_term;  // visible items from the user's earlier sessions
  std::vector<int> context;    // test session minus the target
  int target = 0;
};

/// Training example for sequence models: one item of a training session as
/// the target, the rest of that session as short-term context.
struct TrainInstance {
  int user = 0;
  std::vector<int> long_term;
  std::vector<int> context;
  int target = 0;
};

struct Split {
  SplitPolicy policy = SplitPolicy::kRandom8020;
  std::vector<Session> train;
  std::vector<Session> test;
  std::vector<TestCase> cases;  // parallel to `test`
  /// Per-session long-term sets for `train`, built from visible history only.
  std::vector<std::vector<int>> train_long_term;
  std::vector<std::string> warnings;
  int n_users = 0;
  int n_items = 0;

  /// Leave-one-out instances from every training session with >= 2 items,
  /// each position taking a turn as the target.
  std::vector<TrainInstance> train_instances() const;
  /// Items each user touched in training sessions.
  std::vector<std::vector<int>> train_history() const;
};

/// Sessions must be sorted by (user, day) as produced by sessionize.
/// Test sessions of length 1 are dropped with a warning. Throws DataError when
/// either side ends up empty.
Split split(const std::vector<Session>& sessions, SplitPolicy policy, Rng& rng,
            int n_users = -1, int n_items = -1);

/// Uniform sample without replacement from universe \ history.
std::vector<int> sample_negatives(std::span<const int> history, std::span<const int> universe,
                                  std::size_t n, Rng& rng);

/// Single negative from [0, n_items) \ history via rejection; `in_history`
/// is an item-indexed mask. Throws when every item is in the history.
int sample_negative(std::span<const char> in_history, Rng& rng);

/// Which items a training negative must avoid besides the target: the
/// user's whole training history, or only the instance's own session.
enum class NegativeScope { kUserHistory, kSession };

std::string_view to_string(NegativeScope scope);
std::optional<NegativeScope> parse_negative_scope(std::string_view text);

/// Per-user membership masks over items touched in training sessions.
std::vector<std::vector<char>> history_masks(const Split& split);

/// Uniform negative for one instance; falls back to any non-target item
/// when the scope excludes the whole catalog.
int draw_negative(const TrainInstance& instance, const std::vector<std::vector<char>>& user_history,
                  NegativeScope scope, Rng& rng, int n_items);

struct SequentialSynthParams {
  int n_items = 50;
  int n_users = 200;
  int sessions_per_user = 10;
  int session_length = 4;
  double noise_rate = 0.1;
  /// successor[i] is the item that follows i; empty means "draw a random
  /// single cycle over all items".
  std::vector<int> successor;
};

/// Random single-cycle permutation: following successors visits every item.
std::vector<int> random_cycle(int n_items, Rng& rng);

/// Each session starts at a uniform item and walks the successor map; each
/// step is replaced by a uniform item with probability noise_rate.
/// Session index t of a user lands on day t-1.
std::vector<Session> synth_sequential(const SequentialSynthParams& params, Rng& rng);

/// Renders sessions as purchase interactions with tokens "u<idx>"/"i<idx>",
/// one day per session and one second between items.
std::vector<Interaction> to_interactions(std::span<const Session> sessions);

/// Ratings split for explicit-feedback models.
struct RatingTriplet {
  int user = 0;
  int item = 0;
  double rating = 0.0;
};

struct RatingSplit {
  std::vector<RatingTriplet> train;
  std::vector<RatingTriplet> test;
};

std::vector<RatingTriplet> rating_triplets(const Dataset& dataset);
/// Holds out round(test_fraction * n) triplets uniformly at random.
RatingSplit split_ratings(std::vector<RatingTriplet> triplets, double test_fraction, Rng& rng);

/// Fraction of users that share no rated item with any other user.
double dsw_n_fci_degree(std::span<const RatingTriplet> ratings, int n_users);

/// Fraction of users that share no rated item with any user of a different
/// group; groups[u] labels user u. Planted clusters with disjoint item sets
/// score 1.0 here.
double cross_group_dsw_n_fci_degree(std::span<const RatingTriplet> ratings,
                                    std::span<const int> groups);

}  // namespace attnrec
