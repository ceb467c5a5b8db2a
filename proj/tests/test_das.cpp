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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "attnrec/das.hpp"
#include "attnrec/errors.hpp"
#include "test_util.hpp"

namespace attnrec {
namespace {

DasState tiny(int users = 3, int items = 12, int k = 4, std::uint64_t seed = 1) {
  DasParams p;
  p.k = k;
  p.init_sd = 0.5;
  Rng rng(seed);
  return init_das(users, items, p, rng);
}

TEST(DasParams, PaperDefaults) {
  DasParams p;
  EXPECT_EQ(p.k, 100);
  EXPECT_DOUBLE_EQ(p.lr, 0.001);
  EXPECT_EQ(p.batch, 50);
  EXPECT_EQ(p.epochs, 10);
}

TEST(InitDas, Shapes) {
  DasState s = tiny(3, 12, 4);
  EXPECT_EQ(s.W1.rows(), 12u);
  EXPECT_EQ(s.W2.rows(), 3u);
  EXPECT_EQ(s.W.cols(), 8u);
  EXPECT_EQ(s.Wo.cols(), 8u);
  EXPECT_EQ(s.bo.cols(), 12u);
  Rng rng(0);
  DasParams bad;
  bad.k = 0;
  EXPECT_THROW(init_das(1, 1, bad, rng), InvalidArgument);
}

TEST(EmbedItem, SigmoidOfRow) {
  DasState s = tiny();
  s.W1.row(2)[0] = 0.0;
  for (double& v : s.W1.row(3)) v = 0.0;
  for (double v : embed_item(s, 3)) EXPECT_DOUBLE_EQ(v, 0.5);
  EXPECT_EQ(embed_item(s, 2), embed_item(s, 2));
  EXPECT_DOUBLE_EQ(embed_item(s, 2)[0], 0.5);
  EXPECT_THROW(embed_item(s, 12), InvalidArgument);
}

TEST(AttendLong, Examples) {
  DasState s = tiny(1, 4, 2);
  std::vector<int> one = {1};
  Attention a = attend_long(s, one);
  ASSERT_EQ(a.weights.size(), 1u);
  EXPECT_DOUBLE_EQ(a.weights[0], 1.0);
  EXPECT_EQ(a.output, embed_item(s, 1));

  s.wa.fill(0.0);
  std::vector<int> three = {0, 1, 2};
  for (double w : attend_long(s, three).weights) EXPECT_NEAR(w, 1.0 / 3.0, 1e-15);

  // Saturated rows give h1 = (1,0) and h2 = (0,1) to double precision.
  s.W1.row(0)[0] = 60;
  s.W1.row(0)[1] = -60;
  s.W1.row(1)[0] = -60;
  s.W1.row(1)[1] = 60;
  s.wa(0, 0) = 1.0;
  s.wa(0, 1) = 0.0;
  std::vector<int> two = {0, 1};
  Attention b = attend_long(s, two);
  const double a1 = std::exp(1.0) / (std::exp(1.0) + 1.0);
  EXPECT_NEAR(b.weights[0], a1, 1e-12);
  EXPECT_NEAR(b.weights[0], 0.7311, 1e-4);
  EXPECT_NEAR(b.weights[1], 0.2689, 1e-4);
  EXPECT_NEAR(b.output[0], 0.7311, 1e-4);
  EXPECT_NEAR(b.output[1], 0.2689, 1e-4);
}

TEST(AttendLong, EmptyIsZeroVector) {
  DasState s = tiny();
  Attention a = attend_long(s, std::vector<int>{});
  EXPECT_TRUE(a.weights.empty());
  for (double v : a.output) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(a.output.size(), 4u);
}

TEST(AttendShort, Examples) {
  DasState s = tiny();
  std::vector<int> dup = {5, 5};
  Attention a = attend_short(s, dup);
  EXPECT_DOUBLE_EQ(a.weights[0], 0.5);
  EXPECT_DOUBLE_EQ(a.weights[1], 0.5);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(a.output[j], embed_item(s, 5)[j], 1e-15);
  std::vector<int> one = {7};
  EXPECT_EQ(attend_short(s, one).output, embed_item(s, 7));
}

TEST(Mixture, Examples) {
  DasState s = tiny(1, 4, 2);
  Vector ul = {0.3, 0.9}, us = {0.2, 0.4};
  s.W.fill(0.0);
  s.b.fill(0.0);
  EXPECT_EQ(mixture(s, ul, us), (Vector{0, 0}));
  s.W(0, 0) = 1.0;
  s.W(1, 1) = 1.0;
  EXPECT_EQ(mixture(s, ul, us), ul);
  EXPECT_THROW(mixture(s, Vector{1}, us), InvalidArgument);
}

TEST(ScoreAll, Examples) {
  DasState s = tiny(2, 50, 3);
  Vector u = {0.1, 0.2, 0.3};
  EXPECT_EQ(score_all(s, u, 1).size(), 50u);
  s.Wo.fill(0.0);
  s.bo.fill(1.25);
  for (double r : score_all(s, u, 0)) EXPECT_EQ(r, 1.25);

  DasState t = tiny(2, 50, 3, 9);
  Vector before = score_all(t, u, 1);
  for (double& v : t.bo.values()) v += 3.0;
  Vector after = score_all(t, u, 1);
  EXPECT_EQ(rank_items(before).items, rank_items(after).items);
}

TEST(DasLoss, TiedScoresGiveLn4) {
  DasState s = tiny();
  s.Wo.fill(0.0);
  s.bo.fill(0.0);
  s.params.lambda_uv = s.params.lambda_at = s.params.lambda_dense = 0.0;
  std::vector<DasInstance> batch = {{0, {1}, {2}, 3, {4}}};
  EXPECT_NEAR(das_loss(s, batch), -2.0 * std::log(0.5), 1e-12);
  EXPECT_NEAR(das_loss(s, batch), 1.386294, 1e-6);
}

TEST(DasLoss, PerfectSeparationGoesToZero) {
  DasState s = tiny();
  s.params.lambda_uv = s.params.lambda_at = s.params.lambda_dense = 0.0;
  s.Wo.fill(0.0);
  s.bo.fill(0.0);
  s.bo(0, 3) = 40.0;
  s.bo(0, 4) = -40.0;
  std::vector<DasInstance> batch = {{0, {1}, {2}, 3, {4}}};
  EXPECT_LT(das_loss(s, batch), 1e-15);
  EXPECT_TRUE(std::isfinite(das_loss(s, batch)));
}

TEST(DasLoss, Errors) {
  DasState s = tiny();
  std::vector<DasInstance> none = {{0, {}, {1}, 2, {}}};
  EXPECT_THROW(das_loss(s, none), InvalidArgument);
  std::vector<DasInstance> bad = {{0, {}, {1}, 99, {3}}};
  EXPECT_THROW(das_loss(s, bad), InvalidArgument);
}

TEST(DasLoss, GradientMatchesFiniteDifferences) {
  DasState s = tiny(3, 12, 8, 3);
  s.params.lambda_uv = s.params.lambda_at = s.params.lambda_dense = 0.01;
  Rng rng(4);
  for (auto* t : s.tensors())
    for (double& v : t->values())
      if (v == 0.0) v = rng.normal(0, 0.3);
  std::vector<DasInstance> batch = {{0, {1, 2, 3}, {4, 5}, 6, {7}}, {2, {}, {1, 1}, 0, {3, 4}},
                                    {1, {9, 10}, {11}, 8, {0, 2, 5}}};
  auto f = testing::packed_loss(s, [&](const DasState& st, std::vector<DenseMatrix>* g) {
    return das_loss(st, batch, g);
  });
  EXPECT_LT(grad_check(f, testing::pack_state(s)), 1e-4);
}

Split planted_split(std::uint64_t seed, int users = 60) {
  Rng rng(seed);
  SequentialSynthParams p;
  p.n_items = 20;
  p.n_users = users;
  auto sessions = synth_sequential(p, rng);
  return split(sessions, SplitPolicy::kRandom8020, rng);
}

TEST(TrainDas, DeterministicAndTraced) {
  Split sp = planted_split(5);
  DasParams p = das_desk_params();
  p.k = 8;
  p.epochs = 3;
  Rng a(7), b(7);
  DasState x = train_das(sp, p, a);
  DasState y = train_das(sp, p, b);
  ASSERT_EQ(x.trace.size(), 3u);
  for (std::size_t i = 0; i < x.tensors().size(); ++i) EXPECT_EQ(*x.tensors()[i], *y.tensors()[i]);
  for (const auto& row : x.trace) EXPECT_TRUE(std::isfinite(row.loss));
}

TEST(TrainDas, LossDecreases) {
  Split sp = planted_split(6);
  DasParams p = das_desk_params();
  p.k = 16;
  p.epochs = 8;
  Rng rng(8);
  DasState s = train_das(sp, p, rng);
  EXPECT_LT(s.trace.back().loss, s.trace.front().loss);
}

TEST(TrainDas, RejectsBadParams) {
  Split sp = planted_split(7, 10);
  DasParams p = das_desk_params();
  p.lr = -1.0;
  Rng rng(1);
  EXPECT_THROW(train_das(sp, p, rng), InvalidArgument);
}

TEST(RecommendDas, FullPermutationAndArgmax) {
  DasState s = tiny(2, 12, 4, 11);
  std::vector<int> g = {1, 2}, sh = {3};
  RankedList all = recommend_das(s, 1, g, sh, 12);
  std::vector<int> sorted = all.items;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> expect(12);
  std::iota(expect.begin(), expect.end(), 0);
  EXPECT_EQ(sorted, expect);
  for (std::size_t i = 1; i < all.scores.size(); ++i) EXPECT_GE(all.scores[i - 1], all.scores[i]);

  RankedList top = recommend_das(s, 1, g, sh, 1);
  ASSERT_EQ(top.items.size(), 1u);
  EXPECT_EQ(top.items[0], all.items[0]);

  RankedList excl = recommend_das(s, 1, g, sh, 12, true);
  EXPECT_EQ(excl.items.size(), 11u);
  EXPECT_EQ(std::count(excl.items.begin(), excl.items.end(), 3), 0);
}

TEST(RecommendDasProperty, PrefixConsistent) {
  DasState s = tiny(2, 12, 4, 12);
  std::vector<int> g = {4}, sh = {5, 6};
  RankedList full = recommend_das(s, 0, g, sh, 12);
  for (std::size_t n = 1; n <= 12; ++n) {
    RankedList part = recommend_das(s, 0, g, sh, n);
    EXPECT_TRUE(std::equal(part.items.begin(), part.items.end(), full.items.begin()));
  }
}

TEST(DasScorer, MatchesRecommend) {
  DasState s = tiny(2, 12, 4, 13);
  std::vector<int> g = {0, 1}, sh = {2};
  DasScorer scorer(s);
  Vector out(12);
  scorer.score(Query{1, g, sh}, out);
  RankedList r = recommend_das(s, 1, g, sh, 12);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_DOUBLE_EQ(out[r.items[i]], r.scores[i]);
}

TEST(DasCheckpoint, RoundTrip) {
  DasState s = tiny(2, 6, 3, 14);
  s.params.negative_scope = NegativeScope::kSession;
  s.trace = {{1, 0.5}, {2, 0.25}};
  std::stringstream buf;
  to_checkpoint(s).write(buf);
  DasState back = das_from_checkpoint(Checkpoint::read(buf));
  for (std::size_t i = 0; i < s.tensors().size(); ++i) EXPECT_EQ(*back.tensors()[i], *s.tensors()[i]);
  EXPECT_EQ(back.params.k, 3);
  EXPECT_EQ(back.params.negative_scope, NegativeScope::kSession);
  EXPECT_EQ(back.trace.size(), 2u);
}

}  // namespace
}  // namespace attnrec
