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

#include "attnrec/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "attnrec/errors.hpp"

namespace attnrec {
namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

constexpr std::array<std::string_view, 7> kActionNames = {
    "view", "click", "cart", "wishlist", "purchase", "checkin", "rate"};

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

// Reads one CSV record (RFC 4180 quoting, embedded newlines allowed).
// Returns false at end of input. `lines` receives the physical lines consumed.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& lines) {
  fields.clear();
  lines = 0;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++lines;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      ++lines;
      if (!field.empty() && field.back() == '\r') field.pop_back();
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(c);
    }
  }
  if (!any) return false;
  if (!field.empty() && field.back() == '\r') field.pop_back();
  fields.push_back(std::move(field));
  ++lines;
  return true;
}

std::string quote_csv(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_rating(double r) {
  std::ostringstream os;
  os.precision(17);
  os << r;
  return os.str();
}

std::uint64_t fnv1a(std::uint64_t h, std::string_view s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string_view to_string(Action action) { return kActionNames[static_cast<std::size_t>(action)]; }

std::optional<Action> parse_action(std::string_view text) {
  const std::string lower = lowercase(trim(text));
  for (std::size_t i = 0; i < kActionNames.size(); ++i) {
    if (lower == kActionNames[i]) return static_cast<Action>(i);
  }
  return std::nullopt;
}

std::optional<std::int64_t> parse_timestamp(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (auto epoch = parse_number<std::int64_t>(text)) {
    if (*epoch < 0) return std::nullopt;
    return epoch;
  }
  // YYYY-MM-DD[(T| )HH:MM[:SS]][Z]
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto y = parse_number<int>(text.substr(0, 4));
  auto m = parse_number<unsigned>(text.substr(5, 2));
  auto d = parse_number<unsigned>(text.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{*m},
                                        std::chrono::day{*d}};
  if (!ymd.ok()) return std::nullopt;
  std::int64_t seconds = static_cast<std::int64_t>(
                             std::chrono::sys_days{ymd}.time_since_epoch().count()) *
                         kSecondsPerDay;
  std::string_view rest = text.substr(10);
  if (!rest.empty()) {
    if (rest.front() != 'T' && rest.front() != ' ') return std::nullopt;
    rest.remove_prefix(1);
    if (!rest.empty() && rest.back() == 'Z') rest.remove_suffix(1);
    if (rest.size() != 5 && rest.size() != 8) return std::nullopt;
    auto hh = parse_number<int>(rest.substr(0, 2));
    auto mm = parse_number<int>(rest.substr(3, 2));
    auto ss = rest.size() == 8 ? parse_number<int>(rest.substr(6, 2)) : std::optional<int>(0);
    if (!hh || !mm || !ss || rest[2] != ':' || *hh > 23 || *mm > 59 || *ss > 60) {
      return std::nullopt;
    }
    seconds += *hh * 3600 + *mm * 60 + *ss;
  }
  if (seconds < 0) return std::nullopt;
  return seconds;
}

IngestResult ingest_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_csv(in, schema);
}

IngestResult parse_csv(std::istream& in, const CsvSchema& schema) {
  std::vector<std::string> header;
  std::size_t lines = 0;
  if (!read_record(in, header, lines)) throw DataError("empty input: no header row");
  std::size_t line = lines + 1;

  auto column = [&](const std::string& name, bool required) -> std::optional<std::size_t> {
    if (name.empty()) {
      if (required) throw DataError("required column has no mapping");
      return std::nullopt;
    }
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (lowercase(trim(header[i])) == lowercase(name)) return i;
    }
    if (required) throw DataError("missing required column '" + name + "'");
    return std::nullopt;
  };
  const std::size_t user_col = *column(schema.user, true);
  const std::size_t item_col = *column(schema.item, true);
  const std::size_t time_col = *column(schema.timestamp, true);
  const auto action_col = column(schema.action, false);
  const auto rating_col = column(schema.rating, false);
  const auto review_col = column(schema.review, false);
  const auto helpful_col = column(schema.helpful, false);

  IngestResult result;
  std::vector<std::string> fields;
  while (read_record(in, fields, lines)) {
    const std::size_t record_line = line;
    line += lines;
    if (fields.size() == 1 && trim(fields[0]).empty()) continue;  // blank line
    auto fail = [&](std::string message) {
      result.errors.push_back({record_line, std::move(message)});
    };
    if (fields.size() != header.size()) {
      fail("expected " + std::to_string(header.size()) + " fields, got " +
           std::to_string(fields.size()));
      continue;
    }
    auto get = [&](std::optional<std::size_t> col) -> std::string_view {
      return col ? trim(fields[*col]) : std::string_view{};
    };
    Interaction row;
    row.user = std::string(get(user_col));
    row.item = std::string(get(item_col));
    if (row.user.empty()) {
      fail("empty user id");
      continue;
    }
    if (row.item.empty()) {
      fail("empty item id");
      continue;
    }
    auto ts = parse_timestamp(get(time_col));
    if (!ts) {
      fail("unparseable timestamp '" + std::string(get(time_col)) + "'");
      continue;
    }
    row.timestamp = *ts;

    const std::string_view rating_text = get(rating_col);
    if (!rating_text.empty()) {
      auto r = parse_number<double>(rating_text);
      if (!r || *r < 1.0 || *r > 5.0) {
        fail("rating '" + std::string(rating_text) + "' outside [1,5]");
        continue;
      }
      row.rating = *r;
    }
    const std::string_view action_text = get(action_col);
    if (!action_text.empty()) {
      auto a = parse_action(action_text);
      if (!a) {
        fail("unknown action '" + std::string(action_text) + "'");
        continue;
      }
      row.action = *a;
    } else {
      row.action = row.rating ? Action::kRate : Action::kPurchase;
    }
    if ((row.action == Action::kRate) != row.rating.has_value()) {
      fail("rating must be present exactly when action is 'rate'");
      continue;
    }
    if (review_col && !fields[*review_col].empty()) row.review = fields[*review_col];
    const std::string_view helpful_text = get(helpful_col);
    if (!helpful_text.empty()) {
      auto h = parse_number<int>(helpful_text);
      if (!h || *h < 0) {
        fail("helpfulness votes '" + std::string(helpful_text) + "' not a nonnegative integer");
        continue;
      }
      row.helpful = *h;
    }
    result.interactions.push_back(std::move(row));
  }
  return result;
}

void write_csv(std::ostream& out, std::span<const Interaction> interactions) {
  out << "user,item,timestamp,action,rating,review,helpful\n";
  for (const auto& row : interactions) {
    out << quote_csv(row.user) << ',' << quote_csv(row.item) << ',' << row.timestamp << ','
        << to_string(row.action) << ',';
    if (row.rating) out << format_rating(*row.rating);
    out << ',';
    if (row.review) out << quote_csv(*row.review);
    out << ',';
    if (row.helpful) out << *row.helpful;
    out << '\n';
  }
}

IndexMap::IndexMap(std::vector<std::string> tokens) {
  for (auto& t : tokens) {
    if (index_.contains(t)) throw InvalidArgument("IndexMap: duplicate token '" + t + "'");
    intern(t);
  }
}

int IndexMap::intern(const std::string& token) {
  auto [it, inserted] = index_.try_emplace(token, static_cast<int>(tokens_.size()));
  if (inserted) tokens_.push_back(token);
  return it->second;
}

std::optional<int> IndexMap::find(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t IndexMap::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : tokens_) {
    h = fnv1a(h, t);
    h = fnv1a(h, std::string_view("\0", 1));
  }
  return h;
}

Dataset intern(std::span<const Interaction> interactions) {
  Dataset ds;
  ds.events.reserve(interactions.size());
  for (const auto& row : interactions) {
    Event e;
    e.user = ds.users.intern(row.user);
    e.item = ds.items.intern(row.item);
    e.timestamp = row.timestamp;
    e.action = row.action;
    e.rating = row.rating;
    e.helpful = row.helpful;
    if (row.review) e.review = *row.review;
    ds.events.push_back(std::move(e));
  }
  return ds;
}

std::vector<Session> sessionize(std::span<const Event> events) {
  std::vector<std::size_t> order(events.size());
  std::iota(order.begin(), order.end(), 0);
  // Stable so equal timestamps keep file order.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (events[a].user != events[b].user) return events[a].user < events[b].user;
    return events[a].timestamp < events[b].timestamp;
  });
  std::vector<Session> sessions;
  for (std::size_t idx : order) {
    const Event& e = events[idx];
    const std::int64_t day = e.timestamp / kSecondsPerDay;
    if (sessions.empty() || sessions.back().user != e.user || sessions.back().day != day) {
      const bool same_user = !sessions.empty() && sessions.back().user == e.user;
      sessions.push_back({e.user, same_user ? sessions.back().index + 1 : 1, day, {}});
    }
    sessions.back().items.push_back(e.item);
  }
  return sessions;
}

std::vector<Session> filter_dataset(std::vector<Session> sessions, const FilterOptions& options) {
  bool changed = true;
  while (changed) {
    changed = false;
    if (options.min_item_support > 0) {
      std::map<int, std::size_t> support;
      for (const auto& s : sessions)
        for (int item : s.items) ++support[item];
      for (auto& s : sessions) {
        const auto before = s.items.size();
        std::erase_if(s.items, [&](int item) { return support[item] < options.min_item_support; });
        changed |= s.items.size() != before;
      }
    }
    const std::size_t min_len = std::max<std::size_t>(options.min_session_length, 1);
    const auto before = sessions.size();
    std::erase_if(sessions, [&](const Session& s) { return s.items.size() < min_len; });
    changed |= sessions.size() != before;

    if (options.min_user_items > 0) {
      std::map<int, std::size_t> per_user;
      for (const auto& s : sessions) per_user[s.user] += s.items.size();
      const auto n = sessions.size();
      std::erase_if(sessions,
                    [&](const Session& s) { return per_user[s.user] < options.min_user_items; });
      changed |= sessions.size() != n;
    }
  }
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    const bool same_user = i > 0 && sessions[i - 1].user == sessions[i].user;
    sessions[i].index = same_user ? sessions[i - 1].index + 1 : 1;
  }
  return sessions;
}

LongShort build_long_short(std::span<const Session> user_sessions, int t) {
  if (t < 1 || static_cast<std::size_t>(t) > user_sessions.size()) {
    throw InvalidArgument("build_long_short: t=" + std::to_string(t) + " outside [1, " +
                          std::to_string(user_sessions.size()) + "]");
  }
  LongShort out;
  std::unordered_set<int> seen;
  for (int s = 0; s < t - 1; ++s) {
    for (int item : user_sessions[static_cast<std::size_t>(s)].items) {
      if (seen.insert(item).second) out.long_term.push_back(item);
    }
  }
  out.short_term = user_sessions[static_cast<std::size_t>(t - 1)].items;
  return out;
}

std::string_view to_string(SplitPolicy policy) {
  return policy == SplitPolicy::kLastWeek ? "last-week" : "random-80-20";
}

std::optional<SplitPolicy> parse_split_policy(std::string_view text) {
  if (text == "last-week") return SplitPolicy::kLastWeek;
  if (text == "random-80-20") return SplitPolicy::kRandom8020;
  return std::nullopt;
}

Split split(const std::vector<Session>& sessions, SplitPolicy policy, Rng& rng, int n_users,
            int n_items) {
  Split out;
  out.policy = policy;
  for (const auto& s : sessions) {
    n_users = std::max(n_users, s.user + 1);
    for (int item : s.items) n_items = std::max(n_items, item + 1);
  }
  out.n_users = std::max(n_users, 0);
  out.n_items = std::max(n_items, 0);

  std::vector<char> is_test(sessions.size(), 0);
  if (policy == SplitPolicy::kRandom8020) {
    std::vector<std::size_t> order(sessions.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    const auto n_test = static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(sessions.size())));
    for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = 1;
  } else {
    std::int64_t last_day = std::numeric_limits<std::int64_t>::min();
    for (const auto& s : sessions) last_day = std::max(last_day, s.day);
    for (std::size_t i = 0; i < sessions.size(); ++i) is_test[i] = sessions[i].day > last_day - 7;
  }

  // Walk each user's timeline; test sessions expose only their context to
  // later sessions so no held-out target leaks into any long-term set.
  std::size_t i = 0;
  while (i < sessions.size()) {
    const int user = sessions[i].user;
    std::vector<int> visible;
    std::unordered_set<int> seen;
    for (; i < sessions.size() && sessions[i].user == user; ++i) {
      const Session& s = sessions[i];
      if (!is_test[i]) {
        out.train.push_back(s);
        out.train_long_term.push_back(visible);
        for (int item : s.items)
          if (seen.insert(item).second) visible.push_back(item);
        continue;
      }
      if (s.items.size() < 2) {
        out.warnings.push_back("user " + std::to_string(user) + " session " +
                               std::to_string(s.index) +
                               ": single-item test session excluded");
        continue;
      }
      TestCase tc;
      tc.user = user;
      tc.long_term = visible;
      const std::size_t pos = rng.uniform_int(s.items.size());
      tc.target = s.items[pos];
      for (std::size_t p = 0; p < s.items.size(); ++p)
        if (p != pos) tc.context.push_back(s.items[p]);
      for (int item : tc.context)
        if (seen.insert(item).second) visible.push_back(item);
      out.test.push_back(s);
      out.cases.push_back(std::move(tc));
    }
  }
  if (out.train.empty()) throw DataError("split produced an empty training set");
  if (out.test.empty()) throw DataError("split produced an empty test set");
  return out;
}

std::vector<TrainInstance> Split::train_instances() const {
  std::vector<TrainInstance> out;
  for (std::size_t s = 0; s < train.size(); ++s) {
    const auto& items = train[s].items;
    if (items.size() < 2) continue;
    for (std::size_t pos = 0; pos < items.size(); ++pos) {
      TrainInstance inst;
      inst.user = train[s].user;
      inst.long_term = train_long_term[s];
      inst.target = items[pos];
      inst.context.reserve(items.size() - 1);
      for (std::size_t p = 0; p < items.size(); ++p)
        if (p != pos) inst.context.push_back(items[p]);
      out.push_back(std::move(inst));
    }
  }
  return out;
}

std::vector<std::vector<int>> Split::train_history() const {
  std::vector<std::set<int>> sets(static_cast<std::size_t>(n_users));
  for (const auto& s : train) sets[static_cast<std::size_t>(s.user)].insert(s.items.begin(), s.items.end());
  std::vector<std::vector<int>> out(sets.size());
  for (std::size_t u = 0; u < sets.size(); ++u) out[u].assign(sets[u].begin(), sets[u].end());
  return out;
}

std::vector<int> sample_negatives(std::span<const int> history, std::span<const int> universe,
                                  std::size_t n, Rng& rng) {
  const std::unordered_set<int> hist(history.begin(), history.end());
  std::vector<int> candidates;
  std::unordered_set<int> added;
  for (int item : universe)
    if (!hist.contains(item) && added.insert(item).second) candidates.push_back(item);
  if (candidates.size() < n) {
    throw InvalidArgument("sample_negatives: need " + std::to_string(n) + " candidates, have " +
                          std::to_string(candidates.size()));
  }
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + rng.uniform_int(candidates.size() - i);
    std::swap(candidates[i], candidates[j]);
  }
  candidates.resize(n);
  return candidates;
}

int sample_negative(std::span<const char> in_history, Rng& rng) {
  const auto n = in_history.size();
  if (n == 0 || std::all_of(in_history.begin(), in_history.end(), [](char c) { return c != 0; })) {
    throw InvalidArgument("sample_negative: no candidate outside the history");
  }
  for (;;) {
    const auto item = rng.uniform_int(n);
    if (!in_history[item]) return static_cast<int>(item);
  }
}

std::string_view to_string(NegativeScope scope) {
  return scope == NegativeScope::kUserHistory ? "user-history" : "session";
}

std::optional<NegativeScope> parse_negative_scope(std::string_view text) {
  if (text == "user-history") return NegativeScope::kUserHistory;
  if (text == "session") return NegativeScope::kSession;
  return std::nullopt;
}

std::vector<std::vector<char>> history_masks(const Split& split) {
  std::vector<std::vector<char>> masks(static_cast<std::size_t>(split.n_users),
                                       std::vector<char>(static_cast<std::size_t>(split.n_items), 0));
  const auto history = split.train_history();
  for (std::size_t u = 0; u < history.size(); ++u)
    for (int i : history[u]) masks[u][static_cast<std::size_t>(i)] = 1;
  return masks;
}

int draw_negative(const TrainInstance& instance, const std::vector<std::vector<char>>& user_history,
                  NegativeScope scope, Rng& rng, int n_items) {
  const auto n = static_cast<std::size_t>(n_items);
  std::vector<char> mask;
  if (scope == NegativeScope::kUserHistory) {
    mask = user_history.at(static_cast<std::size_t>(instance.user));
  } else {
    mask.assign(n, 0);
    for (int i : instance.context) mask[static_cast<std::size_t>(i)] = 1;
  }
  mask.at(static_cast<std::size_t>(instance.target)) = 1;
  if (std::all_of(mask.begin(), mask.end(), [](char c) { return c != 0; })) {
    // Every item is excluded; fall back to anything but the target.
    if (n_items < 2) return instance.target;
    int j = 0;
    do j = static_cast<int>(rng.uniform_int(n));
    while (j == instance.target);
    return j;
  }
  return sample_negative(mask, rng);
}

std::vector<int> random_cycle(int n_items, Rng& rng) {
  if (n_items < 1) throw InvalidArgument("random_cycle: n_items must be >= 1");
  std::vector<int> order(static_cast<std::size_t>(n_items));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<int> successor(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) successor[order[i]] = order[(i + 1) % order.size()];
  return successor;
}

std::vector<Session> synth_sequential(const SequentialSynthParams& params, Rng& rng) {
  if (params.n_items < 1 || params.n_users < 0 || params.sessions_per_user < 0 ||
      params.session_length < 1) {
    throw InvalidArgument("synth_sequential: sizes must be positive");
  }
  if (params.noise_rate < 0.0 || params.noise_rate > 1.0) {
    throw InvalidArgument("synth_sequential: noise_rate outside [0,1]");
  }
  std::vector<int> successor = params.successor;
  if (successor.empty()) successor = random_cycle(params.n_items, rng);
  if (successor.size() != static_cast<std::size_t>(params.n_items)) {
    throw InvalidArgument("synth_sequential: successor map must cover every item");
  }
  for (int s : successor)
    if (s < 0 || s >= params.n_items) throw InvalidArgument("synth_sequential: successor out of range");

  const auto n = static_cast<std::uint64_t>(params.n_items);
  std::vector<Session> sessions;
  sessions.reserve(static_cast<std::size_t>(params.n_users * params.sessions_per_user));
  for (int u = 0; u < params.n_users; ++u) {
    for (int t = 1; t <= params.sessions_per_user; ++t) {
      Session s{u, t, t - 1, {}};
      int item = static_cast<int>(rng.uniform_int(n));
      s.items.push_back(item);
      for (int step = 1; step < params.session_length; ++step) {
        item = rng.bernoulli(params.noise_rate) ? static_cast<int>(rng.uniform_int(n))
                                                : successor[static_cast<std::size_t>(item)];
        s.items.push_back(item);
      }
      sessions.push_back(std::move(s));
    }
  }
  return sessions;
}

std::vector<Interaction> to_interactions(std::span<const Session> sessions) {
  std::vector<Interaction> out;
  for (const auto& s : sessions) {
    for (std::size_t p = 0; p < s.items.size(); ++p) {
      Interaction row;
      row.user = "u" + std::to_string(s.user);
      row.item = "i" + std::to_string(s.items[p]);
      row.timestamp = s.day * kSecondsPerDay + static_cast<std::int64_t>(p);
      row.action = Action::kPurchase;
      out.push_back(std::move(row));
    }
  }
  return out;
}

std::vector<RatingTriplet> rating_triplets(const Dataset& dataset) {
  std::vector<RatingTriplet> out;
  for (const auto& e : dataset.events)
    if (e.rating) out.push_back({e.user, e.item, *e.rating});
  return out;
}

RatingSplit split_ratings(std::vector<RatingTriplet> triplets, double test_fraction, Rng& rng) {
  if (test_fraction < 0.0 || test_fraction > 1.0) {
    throw InvalidArgument("split_ratings: test_fraction outside [0,1]");
  }
  std::vector<std::size_t> order(triplets.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(triplets.size())));
  std::vector<char> is_test(triplets.size(), 0);
  for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = 1;
  RatingSplit out;
  for (std::size_t i = 0; i < triplets.size(); ++i)
    (is_test[i] ? out.test : out.train).push_back(triplets[i]);
  return out;
}

namespace {

double isolated_fraction(std::span<const RatingTriplet> ratings, int n_users,
                         std::span<const int> groups) {
  if (n_users <= 0) return 0.0;
  std::map<int, std::set<int>> raters;
  for (const auto& r : ratings) raters[r.item].insert(r.user);
  auto group_of = [&](int u) { return groups.empty() ? u : groups[static_cast<std::size_t>(u)]; };
  std::vector<char> connected(static_cast<std::size_t>(n_users), 0);
  for (const auto& [item, users] : raters) {
    // A rater is connected when some co-rater sits outside its group (outside
    // itself, when no groups are given).
    std::map<int, std::size_t> per_group;
    for (int u : users) ++per_group[group_of(u)];
    for (int u : users)
      if (users.size() > per_group[group_of(u)]) connected[static_cast<std::size_t>(u)] = 1;
  }
  const auto isolated = std::count(connected.begin(), connected.end(), 0);
  return static_cast<double>(isolated) / static_cast<double>(n_users);
}

}  // namespace

double dsw_n_fci_degree(std::span<const RatingTriplet> ratings, int n_users) {
  return isolated_fraction(ratings, n_users, {});
}

double cross_group_dsw_n_fci_degree(std::span<const RatingTriplet> ratings,
                                    std::span<const int> groups) {
  return isolated_fraction(ratings, static_cast<int>(groups.size()), groups);
}

}  // namespace attnrec
