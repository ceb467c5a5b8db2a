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

#include "attnrec/synth_personality.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "attnrec/errors.hpp"

namespace attnrec {
namespace {

constexpr std::array<std::string_view, 12> kFiller = {
    "the", "product", "video", "it", "this", "very", "quite", "really", "overall", "episode",
    "show", "season"};

// Categories with positive weight for each trait, as lexicon indices.
std::array<std::vector<std::size_t>, kNumTraits> trait_categories(const Lexicon& lexicon,
                                                                 const TraitWeights& weights) {
  std::array<std::vector<std::size_t>, kNumTraits> out;
  for (std::size_t t = 0; t < kNumTraits; ++t) {
    for (const auto& term : weights.terms[t]) {
      if (term.weight <= 0.0) continue;
      auto c = lexicon.find(term.category);
      if (!c) throw InvalidArgument("weights reference unknown category '" + term.category + "'");
      if (std::find(out[t].begin(), out[t].end(), *c) == out[t].end()) out[t].push_back(*c);
    }
  }
  return out;
}

// Expected score of every trait when each token picks one of `cats` uniformly.
TraitScores expected_scores(const std::vector<std::size_t>& cats, const Lexicon& lexicon,
                            const TraitWeights& weights) {
  std::vector<double> x(lexicon.size(), 0.0);
  for (std::size_t c : cats) x[c] += 1.0 / static_cast<double>(cats.size());
  return trait_score(x, lexicon, weights);
}

}  // namespace

std::vector<Trait> separable_traits(const Lexicon& lexicon, const TraitWeights& weights) {
  const auto cats = trait_categories(lexicon, weights);
  std::vector<std::pair<double, std::size_t>> margins;
  for (std::size_t t = 0; t < kNumTraits; ++t) {
    if (cats[t].empty()) continue;
    const TraitScores s = expected_scores(cats[t], lexicon, weights);
    double rival = -1e300;
    for (std::size_t o = 0; o < kNumTraits; ++o)
      if (o != t) rival = std::max(rival, s[o]);
    if (s[t] - rival > 1e-12) margins.emplace_back(s[t] - rival, t);
  }
  std::stable_sort(margins.begin(), margins.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<Trait> out;
  for (const auto& m : margins) out.push_back(static_cast<Trait>(m.second));
  return out;
}

PersonalityCorpus synth_personality_clusters(const PersonalitySynthParams& params,
                                             const Lexicon& lexicon, const TraitWeights& weights,
                                             Rng& rng) {
  if (params.n_clusters < 2) throw InvalidArgument("synth_personality_clusters: need >= 2 clusters");
  if (params.users_per_cluster < 1 || params.items_per_cluster < 1 || params.words_per_review < 1) {
    throw InvalidArgument("synth_personality_clusters: sizes must be positive");
  }
  const auto traits = separable_traits(lexicon, weights);
  if (traits.size() < static_cast<std::size_t>(params.n_clusters)) {
    throw InvalidArgument("synth_personality_clusters: only " + std::to_string(traits.size()) +
                          " traits are separable under these weights");
  }
  const auto cats = trait_categories(lexicon, weights);

  PersonalityCorpus corpus;
  corpus.cluster_trait.assign(traits.begin(), traits.begin() + params.n_clusters);
  std::int64_t clock = 0;
  for (int c = 0; c < params.n_clusters; ++c) {
    const auto& trait_cats = cats[static_cast<std::size_t>(corpus.cluster_trait[static_cast<std::size_t>(c)])];
    std::vector<double> item_offset(static_cast<std::size_t>(params.items_per_cluster));
    for (double& o : item_offset) o = rng.uniform(-params.item_effect, params.item_effect);

    for (int local = 0; local < params.users_per_cluster; ++local) {
      const int user = static_cast<int>(corpus.cluster_of_user.size());
      corpus.cluster_of_user.push_back(c);
      const double user_offset = rng.uniform(-params.user_effect, params.user_effect);

      std::vector<int> rated;
      for (int j = 0; j < params.items_per_cluster; ++j)
        if (rng.bernoulli(params.rate_probability)) rated.push_back(j);
      // Every user gets at least three ratings so both split sides see them.
      std::vector<int> all(static_cast<std::size_t>(params.items_per_cluster));
      std::iota(all.begin(), all.end(), 0);
      while (rated.size() < std::min<std::size_t>(3, all.size())) {
        const int j = static_cast<int>(rng.uniform_int(all.size()));
        if (std::find(rated.begin(), rated.end(), j) == rated.end()) rated.push_back(j);
      }
      std::sort(rated.begin(), rated.end());

      for (int j : rated) {
        Interaction row;
        row.user = "u" + std::to_string(user);
        row.item = "c" + std::to_string(c) + "_i" + std::to_string(j);
        row.timestamp = clock++;
        row.action = Action::kRate;
        const double raw = 3.0 + item_offset[static_cast<std::size_t>(j)] + user_offset +
                           rng.normal(0.0, params.rating_noise);
        row.rating = std::clamp(std::round(raw), 1.0, 5.0);
        std::string text;
        for (int w = 0; w < params.words_per_review; ++w) {
          if (!text.empty()) text.push_back(' ');
          if (rng.bernoulli(params.trait_word_fraction)) {
            const auto& cat = lexicon.categories()[trait_cats[rng.uniform_int(trait_cats.size())]];
            text += cat.words.empty() ? cat.prefixes.front()
                                      : cat.words[rng.uniform_int(cat.words.size())];
          } else {
            text += kFiller[rng.uniform_int(kFiller.size())];
          }
        }
        row.review = std::move(text);
        row.helpful = static_cast<int>(rng.uniform_int(11));
        corpus.interactions.push_back(std::move(row));
      }
    }
  }
  return corpus;
}

}  // namespace attnrec
