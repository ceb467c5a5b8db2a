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

#include <vector>

#include "attnrec/data.hpp"
#include "attnrec/personality.hpp"
#include "attnrec/rng.hpp"

namespace attnrec {

struct PersonalitySynthParams {
  int n_clusters = 2;
  int users_per_cluster = 30;
  int items_per_cluster = 40;
  /// Probability that a user rates a given item of its own cluster.
  double rate_probability = 0.5;
  int words_per_review = 30;
  /// Share of review tokens drawn from the cluster trait's categories; the
  /// rest are neutral filler words.
  double trait_word_fraction = 0.5;
  double item_effect = 1.5;  // item offsets ~ U(-item_effect, item_effect)
  double user_effect = 0.5;  // user offsets ~ U(-user_effect, user_effect)
  double rating_noise = 0.3;
};

struct PersonalityCorpus {
  std::vector<Interaction> interactions;  // rate events with review + helpful votes
  std::vector<int> cluster_of_user;       // indexed by user number ("u<n>")
  std::vector<Trait> cluster_trait;       // planted dominant trait per cluster
};

/// Traits ordered by how clearly uniform sampling over their positively
/// weighted categories makes them the argmax; only traits with a positive
/// expected margin are returned.
std::vector<Trait> separable_traits(const Lexicon& lexicon, const TraitWeights& weights);

/// Clusters of users that rate disjoint item sets. Cluster c is planted with
/// the c-th separable trait, and its reviews draw words from that trait's
/// categories. Ratings are 3 + item offset + user offset + noise, rounded and
/// clamped to [1,5]. Throws InvalidArgument for fewer than two clusters or
/// more clusters than separable traits.
PersonalityCorpus synth_personality_clusters(const PersonalitySynthParams& params,
                                             const Lexicon& lexicon, const TraitWeights& weights,
                                             Rng& rng);

}  // namespace attnrec
