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

#include "attnrec/personality.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "attnrec/errors.hpp"

namespace attnrec {
namespace {

constexpr std::string_view kDemoLexicon = R"(# Demo word-category lexicon: twenty categories seeded with common example
# words. Not a substitute for a licensed psycholinguistic dictionary.
anger: hate kill pissed angry annoyed furious rage mad
metaphysical: god heaven coffin soul spirit faith
friends: buddy friend neighbour neighbor mate companion
family_members: mom brother cousin sister dad aunt
past_tense: walked were had went was did
references_to_friends: pal buddy coworker colleague
positive_emotion: love nice sweet happy great wonderful enjoy
negative_emotion: hurt ugly nasty awful terrible horrible bad
sadness: crying grief sad lonely sorrow tears
prepositions: to with above under over into onto
family: daughter husband wife son parent family
humans: adult baby boy girl man woman
physical_state: ache breast sleep tired hungry pain
cognitive_process: cause know ought because reason
tentative: maybe perhaps guess might possibly
insight: think consider realize understand
social_processes: talk us friend share meet
achievement: hero win earn success achieve goal
inclusive: with and include together both
motion: arrive car go walk drive move
)";

std::string normalize_name(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!out.empty() && out.back() != '_') {
      out.push_back('_');
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

}  // namespace

char trait_letter(Trait t) {
  static constexpr char kLetters[] = {'O', 'C', 'E', 'A', 'N'};
  return kLetters[static_cast<std::size_t>(t)];
}

std::optional<Trait> parse_trait(std::string_view text) {
  const std::string name = normalize_name(text);
  static const std::array<std::pair<std::string_view, std::string_view>, kNumTraits> kNames = {{
      {"o", "openness"},
      {"c", "conscientiousness"},
      {"e", "extraversion"},
      {"a", "agreeableness"},
      {"n", "neuroticism"},
  }};
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (name == kNames[i].first || name == kNames[i].second) return static_cast<Trait>(i);
  }
  return std::nullopt;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Lexicon::Lexicon(std::vector<Category> categories) : categories_(std::move(categories)) {
  std::set<std::string> names;
  for (auto& c : categories_) {
    if (c.name.empty()) throw InvalidArgument("lexicon: empty category name");
    if (!names.insert(c.name).second) {
      throw InvalidArgument("lexicon: duplicate category '" + c.name + "'");
    }
    if (c.words.empty() && c.prefixes.empty()) {
      throw InvalidArgument("lexicon: category '" + c.name + "' has no words");
    }
    std::sort(c.words.begin(), c.words.end());
    c.words.erase(std::unique(c.words.begin(), c.words.end()), c.words.end());
  }
}

Lexicon Lexicon::parse(std::istream& in) {
  std::vector<Category> categories;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) {
      throw InvalidArgument("lexicon line " + std::to_string(line_no) + ": missing ':'");
    }
    Category cat;
    cat.name = normalize_name(line.substr(0, colon));
    std::istringstream words(line.substr(colon + 1));
    std::string w;
    while (words >> w) {
      std::transform(w.begin(), w.end(), w.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      if (w.size() > 1 && w.back() == '*') {
        w.pop_back();
        cat.prefixes.push_back(w);
      } else {
        cat.words.push_back(w);
      }
    }
    categories.push_back(std::move(cat));
  }
  return Lexicon(std::move(categories));
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open lexicon " + path.string());
  return parse(in);
}

std::optional<std::size_t> Lexicon::find(std::string_view name) const {
  const std::string key = normalize_name(name);
  for (std::size_t i = 0; i < categories_.size(); ++i)
    if (categories_[i].name == key) return i;
  return std::nullopt;
}

bool Lexicon::matches(std::size_t category, std::string_view token) const {
  const Category& c = categories_.at(category);
  if (std::binary_search(c.words.begin(), c.words.end(), token)) return true;
  return std::any_of(c.prefixes.begin(), c.prefixes.end(),
                     [&](const std::string& p) { return token.starts_with(p); });
}

TraitWeights TraitWeights::parse(std::istream& in) {
  TraitWeights out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string trait_text, category;
    double weight = 0.0;
    if (!(fields >> trait_text)) continue;
    if (!(fields >> category >> weight)) {
      throw InvalidArgument("weights line " + std::to_string(line_no) +
                            ": expected `trait category weight`");
    }
    auto trait = parse_trait(trait_text);
    if (!trait) {
      throw InvalidArgument("weights line " + std::to_string(line_no) + ": unknown trait '" +
                            trait_text + "'");
    }
    out.terms[static_cast<std::size_t>(*trait)].push_back({normalize_name(category), weight});
  }
  return out;
}

TraitWeights TraitWeights::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open weights " + path.string());
  return parse(in);
}

const std::array<std::vector<std::string_view>, kNumTraits>& trait_category_links() {
  static const std::array<std::vector<std::string_view>, kNumTraits> kLinks = {{
      {"punctuation", "affect", "apostrophes", "achievement", "anger", "home", "article",
       "positive_feeling", "assent", "causation", "death", "family", "feel", "friends",
       "singular_pronoun", "job", "motion", "music"},
      {"affect", "death", "future", "home", "prepositions", "anger", "body", "hear",
       "apostrophes", "certainty", "job", "music", "negations", "negative_emotion",
       "question_marks", "nonfluencies"},
      {"total_pronouns", "exclamation_marks", "article", "friends", "periods", "pronoun",
       "question_marks", "positive_emotion", "punctuation", "apostrophes", "parentheses", "body",
       "certainty", "family", "fillers", "other_punctuation", "singular_pronoun", "music"},
      {"exclamation_marks", "dictionary_words", "feel", "home", "singular_pronoun", "anger",
       "negative_emotion", "positive_emotion", "body", "family", "motion", "negations",
       "parentheses", "pronoun", "future", "periods", "achievement", "anxiety"},
      {"affect", "anger", "anxiety", "article", "feel", "leisure", "music", "number",
       "apostrophes", "exclamation_marks", "family", "friends", "singular_pronoun", "negations",
       "negative_emotion", "total_pronouns", "prepositions", "present_focus"},
  }};
  return kLinks;
}

TraitWeights default_trait_weights(const Lexicon& lexicon) {
  TraitWeights out;
  const auto& links = trait_category_links();
  for (std::size_t t = 0; t < kNumTraits; ++t) {
    for (const auto& cat : lexicon.categories()) {
      if (std::find(links[t].begin(), links[t].end(), cat.name) != links[t].end()) {
        out.terms[t].push_back({cat.name, 1.0});
      }
    }
  }
  return out;
}

std::string_view demo_lexicon_text() { return kDemoLexicon; }

Lexicon demo_lexicon() {
  std::istringstream in{std::string(kDemoLexicon)};
  return Lexicon::parse(in);
}

std::vector<double> categorize(std::string_view text, const Lexicon& lexicon) {
  std::vector<double> x(lexicon.size(), 0.0);
  const auto tokens = tokenize(text);
  if (tokens.empty()) return x;
  for (const auto& token : tokens)
    for (std::size_t c = 0; c < lexicon.size(); ++c)
      if (lexicon.matches(c, token)) x[c] += 1.0;
  for (double& v : x) v /= static_cast<double>(tokens.size());
  return x;
}

TraitScores trait_score(std::span<const double> proportions, const Lexicon& lexicon,
                        const TraitWeights& weights) {
  if (proportions.size() != lexicon.size()) {
    throw InvalidArgument("trait_score: proportion vector does not match lexicon size");
  }
  TraitScores scores{};
  for (std::size_t t = 0; t < kNumTraits; ++t) {
    for (const auto& term : weights.terms[t]) {
      auto c = lexicon.find(term.category);
      if (!c) throw InvalidArgument("trait_score: unknown category '" + term.category + "'");
      scores[t] += term.weight * proportions[*c];
    }
  }
  return scores;
}

Trait dominant_trait(const TraitScores& scores) {
  std::size_t best = 0;
  for (std::size_t t = 1; t < kNumTraits; ++t)
    if (scores[t] > scores[best]) best = t;
  return static_cast<Trait>(best);
}

std::optional<PersonalityProfile> profile_user(std::string user,
                                               std::span<const std::string> reviews,
                                               const Lexicon& lexicon,
                                               const TraitWeights& weights) {
  if (reviews.empty()) return std::nullopt;
  std::string text;
  for (const auto& r : reviews) {
    text += r;
    text.push_back('\n');
  }
  PersonalityProfile p;
  p.user = std::move(user);
  p.scores = trait_score(categorize(text, lexicon), lexicon, weights);
  p.dominant = dominant_trait(p.scores);
  return p;
}

void SimilarityMatrix::link(std::size_t j, std::size_t k) {
  if (j == k) return;
  bits_[j * n_ + k] = 1;
  bits_[k * n_ + j] = 1;
}

std::vector<int> SimilarityMatrix::neighbors(std::size_t j) const {
  std::vector<int> out;
  for (std::size_t k = 0; k < n_; ++k)
    if (bits_[j * n_ + k]) out.push_back(static_cast<int>(k));
  return out;
}

SimilarityMatrix build_similarity(std::span<const std::optional<PersonalityProfile>> profiles) {
  SimilarityMatrix l(profiles.size());
  for (std::size_t j = 0; j < profiles.size(); ++j) {
    if (!profiles[j]) continue;
    for (std::size_t k = j + 1; k < profiles.size(); ++k) {
      if (profiles[k] && profiles[k]->dominant == profiles[j]->dominant) l.link(j, k);
    }
  }
  return l;
}

std::vector<KnowledgeLevel> knowledge_levels(std::span<const std::vector<int>> votes_per_user) {
  std::vector<KnowledgeLevel> out(votes_per_user.size());
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (std::size_t u = 0; u < votes_per_user.size(); ++u) {
    const auto& votes = votes_per_user[u];
    if (votes.empty()) continue;
    double total = 0.0;
    for (int v : votes) total += v;
    out[u].kl = total / static_cast<double>(votes.size());
    out[u].defined = true;
    lo = any ? std::min(lo, out[u].kl) : out[u].kl;
    hi = any ? std::max(hi, out[u].kl) : out[u].kl;
    any = true;
  }
  for (auto& k : out) {
    if (!k.defined) continue;
    k.normalized = hi > lo ? (k.kl - lo) / (hi - lo) : 0.5;
  }
  return out;
}

void write_profiles_csv(std::ostream& out, std::span<const PersonalityProfile> profiles) {
  out << "user,O,C,E,A,N,dominant\n";
  auto old_precision = out.precision(17);
  for (const auto& p : profiles) {
    out << p.user;
    for (double s : p.scores) out << ',' << s;
    out << ',' << trait_letter(p.dominant) << '\n';
  }
  out.precision(old_precision);
}

PersonalityInputs personality_inputs(const Dataset& dataset, const Lexicon& lexicon,
                                     const TraitWeights& weights) {
  const auto n = static_cast<std::size_t>(dataset.users.size());
  std::vector<std::vector<std::string>> reviews(n);
  std::vector<std::vector<int>> votes(n);
  for (const auto& e : dataset.events) {
    if (e.review.empty()) continue;
    const auto u = static_cast<std::size_t>(e.user);
    reviews[u].push_back(e.review);
    votes[u].push_back(e.helpful.value_or(0));
  }
  PersonalityInputs out;
  out.profiles.reserve(n);
  for (std::size_t u = 0; u < n; ++u) {
    out.profiles.push_back(profile_user(dataset.users.token(static_cast<int>(u)), reviews[u], lexicon, weights));
  }
  out.similarity = build_similarity(out.profiles);
  out.knowledge = knowledge_levels(votes);
  return out;
}

}  // namespace attnrec
