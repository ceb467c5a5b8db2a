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

#include "attnrec/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "attnrec/apar.hpp"
#include "attnrec/baselines.hpp"
#include "attnrec/can.hpp"
#include "attnrec/das.hpp"
#include "attnrec/errors.hpp"
#include "attnrec/metrics.hpp"
#include "attnrec/personality.hpp"
#include "attnrec/synth_personality.hpp"
#include "attnrec/version.hpp"

namespace attnrec {
namespace {

namespace fs = std::filesystem;

// Independent streams for the split and for model training.
constexpr std::uint64_t kSplitStream = 0x5350'4c49'5400'0001ULL;
constexpr std::uint64_t kModelStream = 0x4d4f'4445'4c00'0002ULL;

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t hash_file(const fs::path& path) { return fnv1a(read_file(path)); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

struct Overrides {
  std::optional<int> k, d, batch, epochs, negatives, d_user, n_filters, window, d_purpose, d_query, max_iters;
  std::optional<double> lr, lambda_uv, lambda_at, lambda_dense, lambda_a, lambda, init_sd, dropout;
  std::optional<double> alpha1, alpha2, beta, gamma, exponent, tolerance, init_max;
  std::optional<std::string> negative_scope;
  bool tie_embeddings = false, no_purpose = false, no_preference = false;
};

struct Options {
  std::uint64_t seed = 0;
  std::string out = "out";

  std::string input;
  CsvSchema schema;
  FilterOptions filter;

  std::string kind;
  SequentialSynthParams seq;
  std::optional<int> total_sessions;
  PersonalitySynthParams pers;

  std::string data;
  std::string split = "random-80-20";
  double test_fraction = 0.1;
  std::string lexicon, weights, profiles;

  std::string model;
  std::string preset = "default";
  Overrides ov;

  std::string checkpoint;
  std::vector<int> cutoffs = {5, 10, 20};
  std::optional<int> k_cutoff;
  std::vector<std::string> metrics;
  std::string auc_negatives = "all";
  bool include_context = false;

  std::string user;
  int n = 10;
  bool exclude_context = false;
};

/// Collects what a run read and wrote, then writes manifest.json.
class Manifest {
 public:
  Manifest(std::string command, const Options& opt, std::string config_text)
      : command_(std::move(command)), opt_(opt), config_(std::move(config_text)),
        start_(std::chrono::steady_clock::now()) {}

  void input(const fs::path& path) { inputs_[path.string()] = hex(hash_file(path)); }
  void output(const fs::path& path) { outputs_.push_back(path.string()); }
  void extra(const std::string& key, nlohmann::json value) { extra_[key] = std::move(value); }

  void write(const fs::path& dir) {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    nlohmann::json j;
    j["command"] = command_;
    j["version"] = std::string(kVersion);
    j["seed"] = opt_.seed;
    j["rng"] = std::string(Rng::kAlgorithm);
    j["config_hash"] = hex(fnv1a(config_));
    j["config"] = config_;
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    j["wall_seconds"] = wall;
    for (const auto& [k, v] : extra_.items()) j[k] = v;
    write_text(dir / "manifest.json", j.dump(2) + "\n");
  }

 private:
  std::string command_;
  const Options& opt_;
  std::string config_;
  std::chrono::steady_clock::time_point start_;
  std::map<std::string, std::string> inputs_;
  std::vector<std::string> outputs_;
  nlohmann::json extra_ = nlohmann::json::object();
};

Dataset load_dataset(const fs::path& path, std::ostream& err) {
  IngestResult r = ingest_csv(path);
  for (const auto& e : r.errors) err << "warning: " << path.string() << ":" << e.line << ": " << e.message << "\n";
  if (r.interactions.empty()) throw DataError(path.string() + ": no valid rows");
  return intern(r.interactions);
}

Lexicon load_lexicon(const Options& opt) {
  return opt.lexicon.empty() ? demo_lexicon() : Lexicon::load(opt.lexicon);
}

TraitWeights load_weights(const Options& opt, const Lexicon& lex) {
  return opt.weights.empty() ? default_trait_weights(lex) : TraitWeights::load(opt.weights);
}

SplitPolicy policy_from(const std::string& text) {
  auto p = parse_split_policy(text);
  if (!p) throw InvalidArgument("unknown split policy '" + text + "'");
  return *p;
}

NegativeScope scope_from(const std::string& text) {
  auto s = parse_negative_scope(text);
  if (!s) throw InvalidArgument("unknown negative scope '" + text + "'");
  return *s;
}

bool is_rating_model(const std::string& model) {
  return model == "apar" || model == "usermean" || model == "itemmean";
}

template <typename T, typename U>
void apply(const std::optional<U>& v, T& field) {
  if (v) field = static_cast<T>(*v);
}

DasParams das_params(const Options& opt) {
  DasParams p = opt.preset == "desk" ? das_desk_params() : DasParams{};
  const auto& o = opt.ov;
  apply(o.k, p.k);
  apply(o.lr, p.lr);
  apply(o.lambda_uv, p.lambda_uv);
  apply(o.lambda_at, p.lambda_at);
  apply(o.lambda_dense, p.lambda_dense);
  apply(o.batch, p.batch);
  apply(o.epochs, p.epochs);
  apply(o.negatives, p.negatives);
  apply(o.init_sd, p.init_sd);
  if (o.negative_scope) p.negative_scope = scope_from(*o.negative_scope);
  return p;
}

CanParams can_params(const Options& opt) {
  CanParams p = opt.preset == "paper" ? can_paper_params() : CanParams{};
  const auto& o = opt.ov;
  apply(o.d, p.d);
  apply(o.d_user, p.d_user);
  apply(o.n_filters, p.n_filters);
  apply(o.window, p.window);
  apply(o.d_purpose, p.d_purpose);
  apply(o.d_query, p.d_query);
  apply(o.dropout, p.dropout);
  apply(o.lr, p.lr);
  apply(o.lambda_uv, p.lambda_uv);
  apply(o.lambda_a, p.lambda_a);
  apply(o.batch, p.batch);
  apply(o.epochs, p.epochs);
  apply(o.init_sd, p.init_sd);
  if (o.negative_scope) p.negative_scope = scope_from(*o.negative_scope);
  if (o.tie_embeddings) {
    p.tie_embeddings = true;
    if (!o.n_filters) p.n_filters = p.d;
  }
  if (o.no_purpose) p.use_purpose = false;
  if (o.no_preference) p.use_preference = false;
  return p;
}

AparParams apar_params(const Options& opt) {
  AparParams p;
  const auto& o = opt.ov;
  apply(o.d, p.d);
  apply(o.alpha1, p.alpha1);
  apply(o.alpha2, p.alpha2);
  apply(o.lambda, p.lambda);
  apply(o.beta, p.beta);
  if (o.gamma) p.global_gamma = *o.gamma;
  apply(o.exponent, p.exponent);
  apply(o.max_iters, p.max_iters);
  apply(o.tolerance, p.tolerance);
  apply(o.init_max, p.init_max);
  return p;
}

BprParams bpr_params(const Options& opt) {
  BprParams p;
  const auto& o = opt.ov;
  apply(o.d, p.d);
  apply(o.lr, p.lr);
  apply(o.lambda, p.lambda);
  apply(o.epochs, p.epochs);
  apply(o.init_sd, p.init_sd);
  if (o.negative_scope) p.negative_scope = scope_from(*o.negative_scope);
  return p;
}

// Reads `user,O,C,E,A,N,dominant` rows written by the profile command.
std::vector<std::optional<PersonalityProfile>> read_profiles(const fs::path& path, const IndexMap& users) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open profiles " + path.string());
  std::vector<std::optional<PersonalityProfile>> out(static_cast<std::size_t>(users.size()));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 7) throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 7 fields");
    const auto idx = users.find(f[0]);
    if (!idx) continue;
    PersonalityProfile p;
    p.user = f[0];
    for (std::size_t t = 0; t < kNumTraits; ++t) p.scores[t] = std::stod(f[t + 1]);
    const auto dom = parse_trait(f[6]);
    if (!dom) throw DataError(path.string() + ":" + std::to_string(line_no) + ": unknown trait '" + f[6] + "'");
    p.dominant = *dom;
    out[static_cast<std::size_t>(*idx)] = p;
  }
  return out;
}

void check_index_maps(const Checkpoint& ck, const Dataset& ds) {
  const IndexMap ck_users(ck.user_tokens), ck_items(ck.item_tokens);
  if (ck_users.hash() != ds.users.hash() || ck_items.hash() != ds.items.hash()) {
    throw DataError("index map mismatch: checkpoint users/items hash " + hex(ck_users.hash()) + "/" +
                    hex(ck_items.hash()) + ", dataset users/items hash " + hex(ds.users.hash()) + "/" +
                    hex(ds.items.hash()));
  }
}

// Split settings are stored with the model so eval rebuilds the same split.
void store_split(Checkpoint& ck, const Options& opt) {
  ck.set("run.seed", opt.seed);
  ck.set("run.split", opt.split);
  ck.set("run.test_fraction", opt.test_fraction);
  ck.set("run.min_session_length", static_cast<std::int64_t>(opt.filter.min_session_length));
  ck.set("run.min_item_support", static_cast<std::int64_t>(opt.filter.min_item_support));
  ck.set("run.min_user_items", static_cast<std::int64_t>(opt.filter.min_user_items));
}

Split sequential_split(const Dataset& ds, SplitPolicy policy, const FilterOptions& filter, std::uint64_t seed,
                       std::ostream& err) {
  std::vector<Session> sessions = filter_dataset(sessionize(ds.events), filter);
  Rng rng(Rng::mix(seed ^ kSplitStream));
  Split sp = split(sessions, policy, rng, ds.users.size(), ds.items.size());
  for (const auto& w : sp.warnings) err << "warning: " << w << "\n";
  return sp;
}

RatingSplit rating_split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  auto triplets = rating_triplets(ds);
  if (triplets.empty()) throw DataError("rating models need explicit ratings (action 'rate')");
  Rng rng(Rng::mix(seed ^ kSplitStream));
  return split_ratings(std::move(triplets), test_fraction, rng);
}

template <typename Trace>
void write_epoch_trace(const fs::path& path, const std::vector<Trace>& trace) {
  std::ostringstream out;
  out << "epoch,loss\n" << std::setprecision(17);
  for (const auto& r : trace) out << r.epoch << ',' << r.loss << '\n';
  write_text(path, out.str());
}

// ---------------------------------------------------------------------------

int cmd_ingest(const Options& opt, Manifest& man, std::ostream& out, std::ostream& err) {
  IngestResult r = ingest_csv(opt.input, opt.schema);
  man.input(opt.input);
  for (const auto& e : r.errors) err << "error: " << opt.input << ":" << e.line << ": " << e.message << "\n";
  if (r.interactions.empty()) throw DataError(opt.input + ": no valid rows");
  const fs::path dir(opt.out);
  std::ostringstream csv;
  write_csv(csv, r.interactions);
  write_text(dir / "interactions.csv", csv.str());
  man.output(dir / "interactions.csv");

  const Dataset ds = intern(r.interactions);
  auto write_tokens = [&](const char* name, const IndexMap& map) {
    std::string text;
    for (const auto& t : map.tokens()) text += t + "\n";
    write_text(dir / name, text);
    man.output(dir / name);
  };
  write_tokens("users.txt", ds.users);
  write_tokens("items.txt", ds.items);

  const auto sessions = filter_dataset(sessionize(ds.events), opt.filter);
  std::size_t total = 0;
  for (const auto& s : sessions) total += s.items.size();
  const double avg = sessions.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(sessions.size());
  const std::string artifact = hex(fnv1a(csv.str()));
  out << "users=" << ds.users.size() << " items=" << ds.items.size() << " sessions=" << sessions.size()
      << " avg_session_length=" << std::fixed << std::setprecision(3) << avg << "\n";
  out << "rows_accepted=" << r.interactions.size() << " rows_rejected=" << r.errors.size() << "\n";
  out << "artifact_hash=" << artifact << "\n";
  man.extra("artifact_hash", artifact);
  return kExitOk;
}

int cmd_synth(const Options& opt, Manifest& man, std::ostream& out, std::ostream&) {
  Rng rng(opt.seed);
  const fs::path path = fs::path(opt.out) / "interactions.csv";
  std::ostringstream csv;
  if (opt.kind == "sequential") {
    SequentialSynthParams p = opt.seq;
    if (opt.total_sessions) {
      if (*opt.total_sessions % p.sessions_per_user != 0) {
        throw InvalidArgument("--sessions must be a multiple of --sessions-per-user");
      }
      p.n_users = *opt.total_sessions / p.sessions_per_user;
    }
    const auto sessions = synth_sequential(p, rng);
    const auto rows = to_interactions(sessions);
    write_csv(csv, rows);
    out << "sessions=" << sessions.size() << " rows=" << rows.size() << "\n";
  } else {
    const Lexicon lex = load_lexicon(opt);
    const TraitWeights w = load_weights(opt, lex);
    const auto corpus = synth_personality_clusters(opt.pers, lex, w, rng);
    write_csv(csv, corpus.interactions);
    const Dataset ds = intern(corpus.interactions);
    const auto triplets = rating_triplets(ds);
    std::vector<int> groups(static_cast<std::size_t>(ds.users.size()));
    for (int u = 0; u < ds.users.size(); ++u) {
      const int number = std::stoi(ds.users.token(u).substr(1));
      groups[static_cast<std::size_t>(u)] = corpus.cluster_of_user.at(static_cast<std::size_t>(number));
    }
    const double cross = cross_group_dsw_n_fci_degree(triplets, groups);
    const double per_user = dsw_n_fci_degree(triplets, ds.users.size());
    out << "rows=" << corpus.interactions.size() << " clusters=" << opt.pers.n_clusters << "\n";
    out << std::fixed << std::setprecision(1);
    out << "dsw-n-fci degree (across clusters): " << 100.0 * cross << "%\n";
    out << "dsw-n-fci degree (per user): " << 100.0 * per_user << "%\n";
    out << "planted traits:";
    for (Trait t : corpus.cluster_trait) out << ' ' << trait_letter(t);
    out << "\n";
    man.extra("dsw_n_fci_cross_cluster", cross);
  }
  write_text(path, csv.str());
  man.output(path);
  const std::string artifact = hex(fnv1a(csv.str()));
  out << "artifact_hash=" << artifact << "\n";
  man.extra("artifact_hash", artifact);
  return kExitOk;
}

int cmd_profile(const Options& opt, Manifest& man, std::ostream& out, std::ostream& err) {
  const Dataset ds = load_dataset(opt.data, err);
  man.input(opt.data);
  const Lexicon lex = load_lexicon(opt);
  const TraitWeights w = load_weights(opt, lex);
  if (!opt.lexicon.empty()) man.input(opt.lexicon);
  if (!opt.weights.empty()) man.input(opt.weights);
  const PersonalityInputs inputs = personality_inputs(ds, lex, w);
  std::vector<PersonalityProfile> profiles;
  std::array<int, kNumTraits> counts{};
  for (const auto& p : inputs.profiles) {
    if (!p) continue;
    profiles.push_back(*p);
    ++counts[static_cast<std::size_t>(p->dominant)];
  }
  const fs::path path = fs::path(opt.out) / "profiles.csv";
  std::ostringstream csv;
  write_profiles_csv(csv, profiles);
  write_text(path, csv.str());
  man.output(path);
  out << "profiled " << profiles.size() << " of " << ds.users.size() << " users\n";
  for (Trait t : kAllTraits) out << trait_letter(t) << "=" << counts[static_cast<std::size_t>(t)] << " ";
  out << "\n";
  return kExitOk;
}

int cmd_train(const Options& opt, Manifest& man, std::ostream& out, std::ostream& err) {
  const Dataset ds = load_dataset(opt.data, err);
  man.input(opt.data);
  const fs::path dir(opt.out);
  Rng rng(Rng::mix(opt.seed ^ kModelStream));
  Checkpoint ck;
  std::string trace_csv;

  if (is_rating_model(opt.model)) {
    const RatingSplit rs = rating_split(ds, opt.test_fraction, opt.seed);
    if (opt.model == "apar") {
      std::vector<std::optional<PersonalityProfile>> profiles;
      std::vector<KnowledgeLevel> knowledge;
      const Lexicon lex = load_lexicon(opt);
      const TraitWeights w = load_weights(opt, lex);
      const PersonalityInputs inputs = personality_inputs(ds, lex, w);
      if (!opt.profiles.empty()) {
        profiles = read_profiles(opt.profiles, ds.users);
        man.input(opt.profiles);
      } else {
        profiles = inputs.profiles;
        if (std::none_of(profiles.begin(), profiles.end(), [](const auto& p) { return p.has_value(); })) {
          throw DataError("apar needs review text in the data or a --profiles file");
        }
      }
      const SimilarityMatrix sim = build_similarity(profiles);
      const AparState s = train_apar(rs.train, ds.users.size(), ds.items.size(), sim, inputs.knowledge,
                                     apar_params(opt), rng);
      ck = to_checkpoint(s);
      std::ostringstream t;
      t << "iteration,objective,fallback\n" << std::setprecision(17);
      for (const auto& r : s.trace) t << r.iteration << ',' << r.objective << ',' << (r.fallback ? 1 : 0) << '\n';
      trace_csv = t.str();
      out << "apar: " << s.trace.size() - 1 << " iterations, objective " << s.trace.back().objective
          << (s.converged ? " (converged)" : " (iteration cap reached)") << "\n";
    } else {
      const auto key = opt.model == "usermean" ? MeanPredictor::Key::kUser : MeanPredictor::Key::kItem;
      ck = to_checkpoint(MeanPredictor(key, rs.train));
    }
  } else {
    const Split sp = sequential_split(ds, policy_from(opt.split), opt.filter, opt.seed, err);
    out << "split: " << sp.train.size() << " train sessions, " << sp.cases.size() << " test cases\n";
    if (opt.model == "das") {
      const DasState s = train_das(sp, das_params(opt), rng);
      ck = to_checkpoint(s);
      write_epoch_trace(dir / "trace.csv", s.trace);
    } else if (opt.model == "can") {
      const CanState s = train_can(sp, can_params(opt), rng);
      ck = to_checkpoint(s);
      write_epoch_trace(dir / "trace.csv", s.trace);
    } else if (opt.model == "bpr") {
      const BprState s = train_bpr(sp, bpr_params(opt), rng);
      ck = to_checkpoint(s);
      write_epoch_trace(dir / "trace.csv", s.trace);
    } else if (opt.model == "top") {
      ck = to_checkpoint(TopScorer(popularity(sp)));
      trace_csv = "epoch,loss\n";
    } else if (opt.model == "random") {
      ck = to_checkpoint(RandomScorer(sp.n_items, Rng::mix(opt.seed ^ kModelStream)));
      trace_csv = "epoch,loss\n";
    } else {
      throw InvalidArgument("unknown model '" + opt.model + "'");
    }
  }
  if (!trace_csv.empty()) write_text(dir / "trace.csv", trace_csv);
  man.output(dir / "trace.csv");

  ck.user_tokens = ds.users.tokens();
  ck.item_tokens = ds.items.tokens();
  ck.set("run.data_hash", hex(hash_file(opt.data)));
  store_split(ck, opt);
  ck.save(dir / "checkpoint.txt");
  man.output(dir / "checkpoint.txt");
  out << "wrote " << (dir / "checkpoint.txt").string() << "\n";
  return kExitOk;
}

int cmd_eval(const Options& opt, Manifest& man, std::ostream& out, std::ostream& err) {
  const Checkpoint ck = Checkpoint::load(opt.checkpoint);
  man.input(opt.checkpoint);
  const Dataset ds = load_dataset(opt.data, err);
  man.input(opt.data);
  check_index_maps(ck, ds);

  const std::uint64_t seed = ck.get_u64("run.seed");
  EvalReport report;
  if (auto predictor = predictor_from_checkpoint(ck)) {
    const RatingSplit rs = rating_split(ds, ck.get_double("run.test_fraction"), seed);
    report = evaluate_ratings(*predictor, rs.test);
  } else {
    FilterOptions filter;
    filter.min_session_length = static_cast<std::size_t>(ck.get_int("run.min_session_length"));
    filter.min_item_support = static_cast<std::size_t>(ck.get_int("run.min_item_support"));
    filter.min_user_items = static_cast<std::size_t>(ck.get_int("run.min_user_items"));
    const Split sp = sequential_split(ds, policy_from(ck.get_string("run.split")), filter, seed, err);
    EvalOptions eo;
    eo.cutoffs = opt.k_cutoff ? std::vector<int>{*opt.k_cutoff} : opt.cutoffs;
    if (!opt.metrics.empty()) eo.metrics = std::set<std::string>(opt.metrics.begin(), opt.metrics.end());
    eo.exclude_context = !opt.include_context;
    eo.auc_negatives = opt.auc_negatives == "sampled-100" ? AucNegatives::kSampled100 : AucNegatives::kAll;
    eo.seed = opt.seed;
    report = evaluate(*scorer_from_checkpoint(ck), sp, eo);
    report.split = ck.get_string("run.split");
  }
  report.seed = seed;
  for (const auto& f : report.failures) err << "warning: " << f << "\n";

  const fs::path dir(opt.out);
  std::ostringstream csv, table;
  write_report_csv(csv, report);
  write_report_table(table, report);
  write_text(dir / "report.csv", csv.str());
  write_text(dir / "report.txt", table.str());
  man.output(dir / "report.csv");
  man.output(dir / "report.txt");
  out << table.str();
  return kExitOk;
}

int cmd_recommend(const Options& opt, Manifest& man, std::ostream& out, std::ostream& err) {
  const Checkpoint ck = Checkpoint::load(opt.checkpoint);
  man.input(opt.checkpoint);
  const IndexMap users(ck.user_tokens), items(ck.item_tokens);
  const auto user = users.find(opt.user);
  if (!user) throw DataError("unknown user '" + opt.user + "'");
  if (opt.n < 1) throw InvalidArgument("--n must be >= 1");

  std::vector<int> long_term, context;
  if (!opt.data.empty()) {
    const Dataset ds = load_dataset(opt.data, err);
    man.input(opt.data);
    check_index_maps(ck, ds);
    std::vector<Session> mine;
    for (auto& s : sessionize(ds.events))
      if (s.user == *user) mine.push_back(std::move(s));
    if (!mine.empty()) {
      const LongShort ls = build_long_short(mine, static_cast<int>(mine.size()));
      long_term = ls.long_term;
      context = ls.short_term;
    }
  }

  std::vector<double> scores(static_cast<std::size_t>(items.size()));
  if (auto scorer = scorer_from_checkpoint(ck)) {
    scorer->score(Query{*user, long_term, context}, scores);
  } else {
    const auto predictor = predictor_from_checkpoint(ck);
    for (int i = 0; i < items.size(); ++i) scores[static_cast<std::size_t>(i)] = predictor->predict(*user, i);
  }
  std::vector<char> eligible(scores.size(), 1);
  if (opt.exclude_context)
    for (int i : context) eligible[static_cast<std::size_t>(i)] = 0;
  const RankedList ranked = rank_items(scores, eligible);
  std::size_t n = static_cast<std::size_t>(opt.n);
  if (n > ranked.items.size()) {
    err << "warning: --n " << opt.n << " exceeds the " << ranked.items.size() << " rankable items; listing all\n";
    n = ranked.items.size();
  }
  out << std::setprecision(10);
  for (std::size_t r = 0; r < n; ++r) out << r + 1 << ',' << items.token(ranked.items[r]) << ',' << ranked.scores[r] << '\n';
  return kExitOk;
}

void add_filter_flags(CLI::App* cmd, Options& opt) {
  cmd->add_option("--min-session-length", opt.filter.min_session_length, "Drop shorter sessions");
  cmd->add_option("--min-item-support", opt.filter.min_item_support, "Drop items with fewer interactions");
  cmd->add_option("--min-user-items", opt.filter.min_user_items, "Drop users with fewer interactions");
}

void add_personality_flags(CLI::App* cmd, Options& opt) {
  cmd->add_option("--lexicon", opt.lexicon, "Lexicon file (default: built-in demo lexicon)")->check(CLI::ExistingFile);
  cmd->add_option("--weights", opt.weights, "Trait weight file (default: +1 per linked category)")
      ->check(CLI::ExistingFile);
}

void add_model_flags(CLI::App* cmd, Options& opt) {
  auto& o = opt.ov;
  cmd->add_option("--preset", opt.preset, "Hyperparameter preset")
      ->check(CLI::IsMember({"default", "desk", "paper"}));
  cmd->add_option("--k", o.k, "das: embedding size");
  cmd->add_option("--d", o.d, "can/apar/bpr: latent size");
  cmd->add_option("--lr", o.lr, "Learning rate");
  cmd->add_option("--lambda-uv", o.lambda_uv, "das/can: embedding penalty");
  cmd->add_option("--lambda-at", o.lambda_at, "das: attention penalty");
  cmd->add_option("--lambda-dense", o.lambda_dense, "das: penalty on the mixture and output layers");
  cmd->add_option("--lambda-a", o.lambda_a, "can: attention-layer penalty");
  cmd->add_option("--lambda", o.lambda, "apar: personality penalty; bpr: L2 penalty");
  cmd->add_option("--batch", o.batch, "Minibatch size");
  cmd->add_option("--epochs", o.epochs, "Training epochs");
  cmd->add_option("--negatives", o.negatives, "das: negatives per positive");
  cmd->add_option("--init-sd", o.init_sd, "Embedding init standard deviation");
  cmd->add_option("--negative-scope", o.negative_scope, "Items negatives must avoid")
      ->check(CLI::IsMember({"user-history", "session"}));
  cmd->add_option("--d-user", o.d_user, "can: user embedding size");
  cmd->add_option("--n-filters", o.n_filters, "can: convolution filters");
  cmd->add_option("--window", o.window, "can: odd convolution window");
  cmd->add_option("--d-purpose", o.d_purpose, "can: purpose vector size");
  cmd->add_option("--d-query", o.d_query, "can: preference query size");
  cmd->add_option("--dropout", o.dropout, "can: dropout rate on conv outputs");
  cmd->add_flag("--tie-embeddings", o.tie_embeddings, "can: score with the input item table");
  cmd->add_flag("--no-purpose", o.no_purpose, "can: disable the purpose encoder");
  cmd->add_flag("--no-preference", o.no_preference, "can: disable the preference encoder");
  cmd->add_option("--alpha1", o.alpha1, "apar: P penalty");
  cmd->add_option("--alpha2", o.alpha2, "apar: Q penalty");
  cmd->add_option("--beta", o.beta, "apar: gamma offset");
  cmd->add_option("--gamma", o.gamma, "apar: one gamma for every user");
  cmd->add_option("--exponent", o.exponent, "apar: multiplicative-update exponent");
  cmd->add_option("--max-iters", o.max_iters, "apar: iteration cap");
  cmd->add_option("--tolerance", o.tolerance, "apar: relative-change stopping threshold");
  cmd->add_option("--init-max", o.init_max, "apar: upper bound of the uniform init");
}

}  // namespace

std::unique_ptr<ItemScorer> scorer_from_checkpoint(const Checkpoint& ck) {
  if (ck.model == "das") return std::make_unique<DasScorer>(das_from_checkpoint(ck));
  if (ck.model == "can") return std::make_unique<CanScorer>(can_from_checkpoint(ck));
  if (ck.model == "bpr") return std::make_unique<BprScorer>(bpr_from_checkpoint(ck));
  if (ck.model == "top") return std::make_unique<TopScorer>(top_from_checkpoint(ck));
  if (ck.model == "random") return std::make_unique<RandomScorer>(random_from_checkpoint(ck));
  if (is_rating_model(ck.model)) return nullptr;
  throw DataError("checkpoint holds unknown model '" + ck.model + "'");
}

std::unique_ptr<RatingPredictor> predictor_from_checkpoint(const Checkpoint& ck) {
  if (ck.model == "apar") return std::make_unique<AparPredictor>(apar_from_checkpoint(ck));
  if (ck.model == "usermean" || ck.model == "itemmean") {
    return std::make_unique<MeanPredictor>(mean_from_checkpoint(ck));
  }
  return nullptr;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options opt;
  CLI::App app{"attnrec: attention-based and personality-aware recommenders", "attnrec"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.set_config("--config", "", "INI/TOML config file; flags override it");
  app.add_option("--seed", opt.seed, "Seed for every random draw")->capture_default_str();
  app.add_option("--out", opt.out, "Output directory")->capture_default_str();

  auto* ingest = app.add_subcommand("ingest", "Validate an interaction CSV and write the canonical form");
  ingest->add_option("--input", opt.input, "Input CSV")->required()->check(CLI::ExistingFile);
  ingest->add_option("--user-col", opt.schema.user, "User column");
  ingest->add_option("--item-col", opt.schema.item, "Item column");
  ingest->add_option("--time-col", opt.schema.timestamp, "Timestamp column");
  ingest->add_option("--action-col", opt.schema.action, "Action column");
  ingest->add_option("--rating-col", opt.schema.rating, "Rating column");
  ingest->add_option("--review-col", opt.schema.review, "Review text column");
  ingest->add_option("--helpful-col", opt.schema.helpful, "Helpfulness votes column");
  add_filter_flags(ingest, opt);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth->add_option("kind", opt.kind, "sequential or personality")
      ->required()
      ->check(CLI::IsMember({"sequential", "personality"}));
  synth->add_option("--n-items", opt.seq.n_items, "sequential: catalog size");
  synth->add_option("--n-users", opt.seq.n_users, "sequential: users");
  synth->add_option("--sessions-per-user", opt.seq.sessions_per_user, "sequential: sessions per user");
  synth->add_option("--sessions", opt.total_sessions, "sequential: total sessions (sets --n-users)");
  synth->add_option("--session-length", opt.seq.session_length, "sequential: items per session");
  synth->add_option("--noise", opt.seq.noise_rate, "sequential: chance a step jumps to a random item");
  synth->add_option("--clusters", opt.pers.n_clusters, "personality: clusters");
  synth->add_option("--users-per-cluster", opt.pers.users_per_cluster, "personality: users per cluster");
  synth->add_option("--items-per-cluster", opt.pers.items_per_cluster, "personality: items per cluster");
  synth->add_option("--rate-probability", opt.pers.rate_probability, "personality: chance a user rates an item");
  synth->add_option("--words-per-review", opt.pers.words_per_review, "personality: review length");
  add_personality_flags(synth, opt);

  auto* profile = app.add_subcommand("profile", "Score each user's reviews into trait profiles");
  profile->add_option("--data", opt.data, "Interaction CSV")->required()->check(CLI::ExistingFile);
  add_personality_flags(profile, opt);

  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint");
  train->add_option("--data", opt.data, "Interaction CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--model", opt.model, "Model")
      ->required()
      ->check(CLI::IsMember({"apar", "das", "can", "top", "random", "usermean", "itemmean", "bpr"}));
  train->add_option("--split", opt.split, "Split policy")->check(CLI::IsMember({"last-week", "random-80-20"}));
  train->add_option("--test-fraction", opt.test_fraction, "Held-out share of ratings (rating models)")
      ->check(CLI::Range(0.0, 1.0));
  train->add_option("--profiles", opt.profiles, "apar: profiles CSV instead of review text")
      ->check(CLI::ExistingFile);
  add_personality_flags(train, opt);
  add_filter_flags(train, opt);
  add_model_flags(train, opt);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on its held-out split");
  eval->add_option("--data", opt.data, "Interaction CSV used for training")->required()->check(CLI::ExistingFile);
  eval->add_option("--checkpoint", opt.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--cutoffs", opt.cutoffs, "Ranking cutoffs")->delimiter(',');
  eval->add_option("--k", opt.k_cutoff, "Single cutoff (overrides --cutoffs)")->check(CLI::PositiveNumber);
  eval->add_option("--metrics", opt.metrics, "Subset of precision,recall,auc,mcan")
      ->delimiter(',')
      ->check(CLI::IsMember({"precision", "recall", "auc", "mcan"}));
  eval->add_option("--auc-negatives", opt.auc_negatives, "AUC negative pool")
      ->check(CLI::IsMember({"all", "sampled-100"}));
  eval->add_flag("--include-context", opt.include_context, "Keep session context items in the ranking");

  auto* recommend = app.add_subcommand("recommend", "Print a top-N list for one user");
  recommend->add_option("--checkpoint", opt.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  recommend->add_option("--user", opt.user, "User token")->required();
  recommend->add_option("--n", opt.n, "List length");
  recommend->add_option("--data", opt.data, "Interaction CSV for the user's history")->check(CLI::ExistingFile);
  recommend->add_flag("--exclude-context", opt.exclude_context, "Skip items of the user's latest session");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  CLI::App* cmd = app.get_subcommands().front();
  try {
    fs::create_directories(opt.out);
    Manifest man(cmd->get_name(), opt, app.config_to_str(false, false));
    int code = kExitOk;
    if (cmd == ingest) code = cmd_ingest(opt, man, out, err);
    else if (cmd == synth) code = cmd_synth(opt, man, out, err);
    else if (cmd == profile) code = cmd_profile(opt, man, out, err);
    else if (cmd == train) code = cmd_train(opt, man, out, err);
    else if (cmd == eval) code = cmd_eval(opt, man, out, err);
    else code = cmd_recommend(opt, man, out, err);
    if (code == kExitOk) man.write(opt.out);
    return code;
  } catch (const InvalidArgument& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace attnrec
