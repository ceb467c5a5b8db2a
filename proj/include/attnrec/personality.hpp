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

// Big-Five trait scoring from review text through a word-category lexicon,
// reviewer knowledge levels from helpfulness votes, and the binary
// same-personality matrix used by APAR.

#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attnrec/data.hpp"

namespace attnrec {

enum class Trait { kOpenness, kConscientiousness, kExtraversion, kAgreeableness, kNeuroticism };

inline constexpr std::size_t kNumTraits = 5;
inline constexpr std::array<Trait, kNumTraits> kAllTraits = {
    Trait::kOpenness, Trait::kConscientiousness, Trait::kExtraversion, Trait::kAgreeableness,
    Trait::kNeuroticism};

/// Single-letter code: O, C, E, A, N.
char trait_letter(Trait t);
std::optional<Trait> parse_trait(std::string_view text);

/// Lowercase, split on anything that is not [a-z0-9].
std::vector<std::string> tokenize(std::string_view text);

class Lexicon {
 public:
  struct Category {
    std::string name;
    std::vector<std::string> words;     // exact matches
    std::vector<std::string> prefixes;  // from "word*" entries
  };

  Lexicon() = default;
  /// Throws InvalidArgument on duplicate names or empty word lists.
  explicit Lexicon(std::vector<Category> categories);

  /// Format: one `name: word word prefix*` per line; '#' starts a comment.
  static Lexicon parse(std::istream& in);
  static Lexicon load(const std::filesystem::path& path);

  std::size_t size() const { return categories_.size(); }
  const std::vector<Category>& categories() const { return categories_; }
  std::optional<std::size_t> find(std::string_view name) const;
  bool matches(std::size_t category, std::string_view token) const;

 private:
  std::vector<Category> categories_;
};

/// Per-trait linear weights over lexicon categories.
struct TraitWeights {
  struct Term {
    std::string category;
    double weight = 0.0;
  };
  std::array<std::vector<Term>, kNumTraits> terms;

  /// Format: whitespace-separated `trait category weight` per line.
  static TraitWeights parse(std::istream& in);
  static TraitWeights load(const std::filesystem::path& path);
};

/// Category names that published analyses link to each trait; the default
/// weights put +1 on these and 0 elsewhere.
const std::array<std::vector<std::string_view>, kNumTraits>& trait_category_links();

/// +1 for every lexicon category linked to a trait, nothing otherwise.
TraitWeights default_trait_weights(const Lexicon& lexicon);

/// Twenty-category demo lexicon (anger, friends, positive_emotion, ...).
Lexicon demo_lexicon();
/// The demo lexicon in its on-disk text format.
std::string_view demo_lexicon_text();

/// X[c] = tokens matching category c / total tokens; all zeros for empty text.
std::vector<double> categorize(std::string_view text, const Lexicon& lexicon);

using TraitScores = std::array<double, kNumTraits>;

/// E[trait] = sum of weight * X[category] over the trait's terms.
/// Throws InvalidArgument if a term names a category missing from the lexicon.
TraitScores trait_score(std::span<const double> proportions, const Lexicon& lexicon,
                        const TraitWeights& weights);

/// Argmax with ties going to the earlier trait in O, C, E, A, N order.
Trait dominant_trait(const TraitScores& scores);

struct PersonalityProfile {
  std::string user;
  TraitScores scores{};
  Trait dominant = Trait::kOpenness;
};

/// Concatenates the reviews and scores them. Returns nullopt for a user with
/// no reviews (no profile, no neighbours in L).
std::optional<PersonalityProfile> profile_user(std::string user,
                                               std::span<const std::string> reviews,
                                               const Lexicon& lexicon,
                                               const TraitWeights& weights);

/// Symmetric 0/1 matrix; L(j,k) = 1 iff both users have profiles with equal
/// dominant traits and j != k.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  explicit SimilarityMatrix(std::size_t n_users) : n_(n_users), bits_(n_users * n_users, 0) {}

  std::size_t size() const { return n_; }
  bool linked(std::size_t j, std::size_t k) const { return bits_[j * n_ + k] != 0; }
  void link(std::size_t j, std::size_t k);
  /// Users k with L(j,k) = 1, ascending.
  std::vector<int> neighbors(std::size_t j) const;

 private:
  std::size_t n_ = 0;
  std::vector<char> bits_;
};

SimilarityMatrix build_similarity(std::span<const std::optional<PersonalityProfile>> profiles);

struct KnowledgeLevel {
  double kl = 0.0;          // mean helpfulness votes
  double normalized = 0.0;  // per-domain min-max; 0.5 when every user ties
  bool defined = false;     // false when the user has no reviews in the domain
};

/// kl for each user's helpfulness votes in one domain, normalized across the
/// users that have at least one review.
std::vector<KnowledgeLevel> knowledge_levels(std::span<const std::vector<int>> votes_per_user);

/// Everything the rating model needs from review text, indexed by user.
struct PersonalityInputs {
  std::vector<std::optional<PersonalityProfile>> profiles;
  SimilarityMatrix similarity;
  std::vector<KnowledgeLevel> knowledge;
};

/// Groups each user's reviews and helpfulness votes from `dataset` events.
PersonalityInputs personality_inputs(const Dataset& dataset, const Lexicon& lexicon,
                                     const TraitWeights& weights);

/// Profiles as `user,O,C,E,A,N,dominant`.
void write_profiles_csv(std::ostream& out, std::span<const PersonalityProfile> profiles);

}  // namespace attnrec
