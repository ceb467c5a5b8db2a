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

// Command-line front end: ingest, synth, profile, train, eval, recommend.
//
// Option precedence: command-line flag, then --config file, then built-in
// default. Exit codes: 0 success, 1 runtime failure, 2 usage error.

#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "attnrec/checkpoint.hpp"
#include "attnrec/scorer.hpp"

namespace attnrec {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Null when the checkpoint holds a rating model (or vice versa).
std::unique_ptr<ItemScorer> scorer_from_checkpoint(const Checkpoint& ck);
std::unique_ptr<RatingPredictor> predictor_from_checkpoint(const Checkpoint& ck);

}  // namespace attnrec
