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

#include <cmath>
#include <limits>
#include <sstream>

#include "attnrec/checkpoint.hpp"
#include "attnrec/errors.hpp"
#include "test_util.hpp"

namespace attnrec {
namespace {

Checkpoint sample() {
  Checkpoint ck;
  ck.model = "toy";
  ck.set("lr", 0.1);
  ck.set("epochs", 7);
  ck.set("seed", std::uint64_t{18446744073709551615ULL});
  ck.set("note", std::string("two words"));
  ck.tensors["W"] = DenseMatrix::from_rows({{0.1, -1.0 / 3.0}, {1e-300, 12345.678}});
  ck.tensors["empty"] = DenseMatrix();
  ck.user_tokens = {"u1", "u2"};
  ck.item_tokens = {"i1"};
  return ck;
}

TEST(Checkpoint, RoundTripIsExact) {
  Checkpoint ck = sample();
  std::stringstream buf;
  ck.write(buf);
  Checkpoint back = Checkpoint::read(buf);
  EXPECT_EQ(back.model, "toy");
  EXPECT_EQ(back.get_double("lr"), 0.1);
  EXPECT_EQ(back.get_int("epochs"), 7);
  EXPECT_EQ(back.get_u64("seed"), 18446744073709551615ULL);
  EXPECT_EQ(back.get_string("note"), "two words");
  EXPECT_EQ(back.tensor("W"), ck.tensors["W"]);
  EXPECT_TRUE(back.tensor("empty").empty());
  EXPECT_EQ(back.user_tokens, ck.user_tokens);
  EXPECT_EQ(back.item_tokens, ck.item_tokens);
  std::stringstream again;
  back.write(again);
  std::stringstream first;
  ck.write(first);
  EXPECT_EQ(again.str(), first.str());
}

TEST(CheckpointProperty, RandomValuesSurvive) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Checkpoint ck;
    ck.model = "m";
    DenseMatrix m(1 + rng.uniform_int(4), 1 + rng.uniform_int(4));
    for (double& v : m.values()) v = rng.normal() * std::pow(10.0, rng.uniform(-30, 30));
    ck.tensors["x"] = m;
    std::stringstream buf;
    ck.write(buf);
    EXPECT_EQ(Checkpoint::read(buf).tensor("x"), m);
  }
}

TEST(Checkpoint, RejectsOtherVersions) {
  std::stringstream buf;
  sample().write(buf);
  std::string text = buf.str();
  const auto space = text.find(' ');
  const auto eol = text.find('\n');
  text.replace(space + 1, eol - space - 1, "99");
  std::istringstream in(text);
  EXPECT_THROW(Checkpoint::read(in), DataError);
}

TEST(Checkpoint, RejectsGarbage) {
  std::istringstream junk("not a checkpoint\n");
  EXPECT_THROW(Checkpoint::read(junk), DataError);
  std::stringstream buf;
  sample().write(buf);
  std::string cut = buf.str().substr(0, buf.str().size() / 2);
  std::istringstream truncated(cut);
  EXPECT_THROW(Checkpoint::read(truncated), DataError);
  EXPECT_THROW(Checkpoint::load("/nonexistent/ck.txt"), DataError);
}

TEST(Checkpoint, MissingKeysThrow) {
  Checkpoint ck = sample();
  EXPECT_THROW(ck.get_string("absent"), DataError);
  EXPECT_THROW(ck.get_int("note"), DataError);
  EXPECT_THROW(ck.tensor("absent"), DataError);
}

TEST(Checkpoint, MetaMustBeSingleLine) {
  Checkpoint ck;
  ck.model = "m";
  ck.set("bad", std::string("a\nb"));
  std::ostringstream out;
  EXPECT_THROW(ck.write(out), InvalidArgument);
}

TEST(Checkpoint, SaveAndLoad) {
  testing::TempDir dir("ckpt");
  sample().save(dir.path() / "c.txt");
  EXPECT_EQ(Checkpoint::load(dir.path() / "c.txt").tensor("W"), sample().tensors["W"]);
}

TEST(Hexfloat, NonFiniteValues) {
  Checkpoint ck;
  ck.model = "m";
  ck.tensors["x"] = DenseMatrix::from_rows({{std::numeric_limits<double>::infinity(), -0.0}});
  std::stringstream buf;
  ck.write(buf);
  DenseMatrix back = Checkpoint::read(buf).tensor("x");
  EXPECT_TRUE(std::isinf(back(0, 0)));
  EXPECT_TRUE(std::signbit(back(0, 1)));
}

}  // namespace
}  // namespace attnrec
