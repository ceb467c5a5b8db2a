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
#include <sstream>

#include "attnrec/can.hpp"
#include "attnrec/errors.hpp"
#include "attnrec/metrics.hpp"
#include "test_util.hpp"

namespace attnrec {
namespace {

CanParams small_params(int d = 4, int nf = 4) {
  CanParams p;
  p.d = d;
  p.d_user = 3;
  p.n_filters = nf;
  p.d_purpose = 3;
  p.d_query = 5;
  p.dropout = 0.0;
  p.lambda_uv = p.lambda_a = 0.0;
  return p;
}

CanState tiny(CanParams p = small_params(), int users = 3, int items = 10, std::uint64_t seed = 1) {
  Rng rng(seed);
  return init_can(users, items, p, rng);
}

TEST(CanParams, DeskAndPaperPresets) {
  CanParams desk;
  EXPECT_EQ(desk.d, 32);
  EXPECT_EQ(desk.n_filters, 32);
  EXPECT_EQ(desk.window, 3);
  EXPECT_DOUBLE_EQ(desk.dropout, 0.2);
  CanParams paper = can_paper_params();
  EXPECT_EQ(paper.d, 100);
  EXPECT_EQ(paper.n_filters, 400);
  EXPECT_EQ(paper.d_purpose, 200);
  EXPECT_EQ(paper.d_query, 200);
  EXPECT_EQ(paper.batch, 50);
  EXPECT_DOUBLE_EQ(paper.lr, 0.01);
}

TEST(InitCan, Validation) {
  Rng rng(1);
  CanParams even = small_params();
  even.window = 2;
  EXPECT_THROW(init_can(2, 2, even, rng), InvalidArgument);
  CanParams tied = small_params(4, 5);
  tied.tie_embeddings = true;
  EXPECT_THROW(init_can(2, 2, tied, rng), InvalidArgument);
  CanParams drop = small_params();
  drop.dropout = 1.0;
  EXPECT_THROW(init_can(2, 2, drop, rng), InvalidArgument);
  CanParams ok = small_params();
  ok.tie_embeddings = true;
  CanState s = init_can(2, 3, ok, rng);
  EXPECT_TRUE(s.Vout.empty());
  EXPECT_EQ(&s.output_table(), &s.E);
}

TEST(ConvContext, ZeroKernel) {
  CanState s = tiny();
  s.Kw.fill(0.0);
  s.bw = DenseMatrix::from_rows({{0.5, -1.0, 2.0, 0.0}});
  std::vector<int> g = {1, 2, 3};
  for (const auto& c : conv_context(s, g)) EXPECT_EQ(c, (Vector{0.5, 0.0, 2.0, 0.0}));
}

TEST(ConvContext, SingleItemIsPadded) {
  CanState s = tiny();
  s.bw.fill(0.0);
  std::vector<int> g = {2};
  auto c = conv_context(s, g);
  ASSERT_EQ(c.size(), 1u);
  // Only the middle slice of the kernel sees a real embedding.
  for (std::size_t f = 0; f < 4; ++f) {
    double pre = 0.0;
    for (std::size_t j = 0; j < 4; ++j) pre += s.Kw(f, 4 + j) * s.E(2, j);
    EXPECT_NEAR(c[0][f], std::max(0.0, pre), 1e-15);
  }
}

TEST(ConvContext, DropoutIsInvertedAndSeeded) {
  CanParams p = small_params(4, 16);
  p.dropout = 0.5;
  CanState s = tiny(p);
  s.bw.fill(1.0);
  s.Kw.fill(0.0);
  std::vector<int> g = {1, 2};
  Rng a(3), b(3);
  auto x = conv_context(s, g, &a), y = conv_context(s, g, &b);
  EXPECT_EQ(x, y);
  for (const auto& c : x)
    for (double v : c) EXPECT_TRUE(v == 0.0 || v == 2.0);
  for (const auto& c : conv_context(s, g))
    for (double v : c) EXPECT_EQ(v, 1.0);
}

TEST(PurposeVector, ZeroWeights) {
  CanState s = tiny();
  s.W1.fill(0.0);
  s.b1.fill(0.0);
  for (double v : purpose_vector(s, 1)) EXPECT_EQ(v, 0.0);
}

TEST(PurposeEncode, Examples) {
  CanState s = tiny();
  Vector p = purpose_vector(s, 0);
  std::vector<Vector> one = {{0.1, 0.2, 0.3, 0.4}};
  Attention a = purpose_encode(s, one, p);
  EXPECT_EQ(a.output, one[0]);
  std::vector<Vector> same(3, Vector{0.5, 0.0, 1.5, 2.0});
  Attention b = purpose_encode(s, same, p);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(b.output[j], same[0][j], 1e-15);
}

TEST(PreferenceEncode, Examples) {
  CanState s = tiny();
  Vector m = {0.3, -0.2, 0.1, 0.4};
  std::vector<int> one = {5};
  Attention a = preference_encode(s, one, m);
  Vector pd = dense_forward(s.W3, s.b3.row(0), s.E.row(5), Activation::kRelu);
  Vector q = dense_forward(s.W4, s.b4.row(0), pd, Activation::kTanh);
  EXPECT_EQ(a.output, q);
  std::vector<int> three = {1, 2, 3};
  for (double w : preference_encode(s, three, Vector(4, 0.0)).weights) EXPECT_NEAR(w, 1.0 / 3.0, 1e-15);
  EXPECT_THROW(preference_encode(s, three, Vector{1.0}), InvalidArgument);
}

TEST(CanUserVector, ColdContextRules) {
  CanState s = tiny();
  std::vector<int> none, sh = {1, 2};
  Vector u = can_user_vector(s, 0, none, sh);
  Attention pref = preference_encode(s, sh, Vector(4, 0.0));
  EXPECT_EQ(u, pref.output);
  std::vector<int> g = {3, 4};
  Attention m = purpose_encode(s, conv_context(s, g), purpose_vector(s, 2));
  EXPECT_EQ(can_user_vector(s, 2, g, none), m.output);
}

TEST(CanScore, Examples) {
  CanState s = tiny();
  Vector zero(4, 0.0);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(can_score(s, zero, i), 0.0);
  Vector u = {0.6, 0.0, 0.8, 0.0};
  for (std::size_t j = 0; j < 4; ++j) s.Vout(3, j) = u[j];
  EXPECT_NEAR(can_score(s, u, 3), dot(u, u), 1e-15);
  Vector scores(10), scaled(10);
  Vector v = {0.2, -0.5, 0.9, 0.1}, w = v;
  for (double& x : w) x *= 3.0;
  for (int i = 0; i < 10; ++i) {
    scores[i] = can_score(s, v, i);
    scaled[i] = can_score(s, w, i);
    EXPECT_NEAR(scaled[i], 3.0 * scores[i], 1e-12);
  }
  EXPECT_EQ(rank_items(scores).items, rank_items(scaled).items);
  EXPECT_THROW(can_score(s, Vector{1.0}, 0), InvalidArgument);
}

TEST(BprLoss, Ln2WhenTied) {
  CanState s = tiny();
  s.Vout.fill(0.25);
  std::vector<CanTriple> batch = {{0, {1}, {2}, 3, 4}, {1, {}, {5}, 6, 7}};
  EXPECT_NEAR(bpr_loss(s, batch), 2.0 * std::log(2.0), 1e-12);
  EXPECT_NEAR(bpr_loss(s, batch) / 2.0, 0.693147, 1e-6);
}

TEST(BprLoss, LargeMarginGoesToZero) {
  CanState s = tiny();
  std::vector<CanTriple> batch = {{0, {1}, {2}, 3, 4}};
  Vector u = can_user_vector(s, 0, batch[0].long_term, batch[0].short_term);
  for (std::size_t j = 0; j < 4; ++j) {
    s.Vout(3, j) = 1e4 * u[j];
    s.Vout(4, j) = -1e4 * u[j];
  }
  EXPECT_LT(bpr_loss(s, batch), 1e-12);
}

void expect_gradient_ok(const CanState& s, const std::vector<CanTriple>& batch, double tol = 1e-4) {
  auto f = testing::packed_loss(s, [&](const CanState& st, std::vector<DenseMatrix>* g) {
    return bpr_loss(st, batch, g);
  });
  EXPECT_LT(grad_check(f, testing::pack_state(s)), tol);
}

std::vector<CanTriple> grad_batch() {
  return {{0, {1, 2, 3, 4}, {5, 6}, 7, 8}, {2, {}, {1, 1, 9}, 0, 3}, {1, {9}, {}, 2, 4}};
}

CanState randomized(CanParams p, std::uint64_t seed) {
  CanState s = tiny(p, 3, 10, seed);
  Rng rng(seed + 100);
  for (auto* t : s.tensors())
    for (double& v : t->values())
      if (v == 0.0) v = rng.normal(0, 0.3);
  return s;
}

TEST(BprLoss, GradientFull) {
  CanParams p = small_params(6, 6);
  p.lambda_uv = p.lambda_a = 0.01;
  expect_gradient_ok(randomized(p, 5), grad_batch());
}

TEST(BprLoss, GradientConvOnly) {
  CanParams p = small_params(4, 4);
  p.use_preference = false;
  expect_gradient_ok(randomized(p, 6), grad_batch());
}

TEST(BprLoss, GradientPreferenceOnly) {
  CanParams p = small_params(4, 4);
  p.use_purpose = false;
  expect_gradient_ok(randomized(p, 7), grad_batch());
}

TEST(BprLoss, GradientTiedEmbeddings) {
  CanParams p = small_params(5, 5);
  p.tie_embeddings = true;
  p.window = 1;
  expect_gradient_ok(randomized(p, 8), grad_batch());
}

TEST(BprLoss, GradientWithFixedDropoutMask) {
  CanParams p = small_params(4, 6);
  p.dropout = 0.3;
  CanState s = randomized(p, 9);
  auto batch = grad_batch();
  auto f = testing::packed_loss(s, [&](const CanState& st, std::vector<DenseMatrix>* g) {
    Rng mask(42);  // same mask on every evaluation
    return bpr_loss(st, batch, g, &mask);
  });
  EXPECT_LT(grad_check(f, testing::pack_state(s)), 1e-4);
}

TEST(Psau, SameItemsDifferentUsersGetDifferentAttention) {
  // Spread depends on the random init, so look across seeds.
  std::vector<double> diffs;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    CanParams p = small_params(8, 8);
    p.d_user = p.d_purpose = p.d_query = 4;
    CanState s = tiny(p, 2, 10, seed);
    for (std::size_t j = 0; j < s.U.cols(); ++j) {
      s.U(0, j) = 1.5;
      s.U(1, j) = -1.5;
    }
    std::vector<int> g = {2, 5, 7, 9};
    auto c = conv_context(s, g);
    Attention a = purpose_encode(s, c, purpose_vector(s, 0));
    Attention b = purpose_encode(s, c, purpose_vector(s, 1));
    double diff = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) diff = std::max(diff, std::abs(a.weights[i] - b.weights[i]));
    EXPECT_GT(diff, 0.0) << "seed " << seed;
    diffs.push_back(diff);
  }
  std::sort(diffs.begin(), diffs.end());
  EXPECT_GT(diffs[diffs.size() / 2], 0.05);
}

Split planted_split(std::uint64_t seed) {
  Rng rng(seed);
  SequentialSynthParams p;
  p.n_items = 20;
  p.n_users = 60;
  auto sessions = synth_sequential(p, rng);
  return split(sessions, SplitPolicy::kRandom8020, rng);
}

TEST(TrainCan, DeterministicAndLossFalls) {
  Split sp = planted_split(3);
  CanParams p;
  p.d = p.d_user = p.n_filters = p.d_purpose = p.d_query = 8;
  p.epochs = 6;
  Rng a(4), b(4);
  CanState x = train_can(sp, p, a);
  CanState y = train_can(sp, p, b);
  ASSERT_EQ(x.trace.size(), 6u);
  for (std::size_t i = 0; i < x.tensors().size(); ++i) EXPECT_EQ(*x.tensors()[i], *y.tensors()[i]);
  EXPECT_LT(x.trace.back().loss, x.trace.front().loss);
}

TEST(CanScorer, MatchesUserVector) {
  CanState s = tiny();
  std::vector<int> g = {1, 2}, sh = {3};
  CanScorer scorer(s);
  Vector out(10);
  scorer.score(Query{1, g, sh}, out);
  Vector u = can_user_vector(s, 1, g, sh);
  for (int i = 0; i < 10; ++i) EXPECT_DOUBLE_EQ(out[i], can_score(s, u, i));
}

TEST(CanCheckpoint, RoundTrip) {
  CanParams p = small_params();
  p.tie_embeddings = true;
  p.use_purpose = false;
  CanState s = tiny(p, 2, 6, 13);
  std::stringstream buf;
  to_checkpoint(s).write(buf);
  CanState back = can_from_checkpoint(Checkpoint::read(buf));
  for (std::size_t i = 0; i < s.tensors().size(); ++i) EXPECT_EQ(*back.tensors()[i], *s.tensors()[i]);
  EXPECT_TRUE(back.params.tie_embeddings);
  EXPECT_FALSE(back.params.use_purpose);
}

}  // namespace
}  // namespace attnrec
