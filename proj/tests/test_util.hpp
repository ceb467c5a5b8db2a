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

#include <filesystem>
#include <string>
#include <vector>

#include "attnrec/numeric.hpp"
#include "attnrec/rng.hpp"

namespace attnrec::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    Rng rng(std::hash<std::string>{}(tag) ^ reinterpret_cast<std::uintptr_t>(this));
    path_ = std::filesystem::temp_directory_path() /
            ("attnrec_" + tag + "_" + std::to_string(rng.next_u64() % 1000000007ULL));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

// Wraps a model loss over a tensor list into a LossFunction over the packed
// parameter vector. `eval(state, grads_or_null)` returns the loss.
template <typename State, typename Eval>
LossFunction packed_loss(const State& base, Eval eval) {
  return [base, eval](const DenseMatrix& x, DenseMatrix* g) {
    State s = base;
    unpack(x, s.tensors());
    std::vector<DenseMatrix> grads;
    const double loss = eval(s, g ? &grads : nullptr);
    if (g) {
      std::vector<const DenseMatrix*> ptrs;
      for (const auto& m : grads) ptrs.push_back(&m);
      *g = pack(ptrs);
    }
    return loss;
  };
}

template <typename State>
DenseMatrix pack_state(const State& s) {
  auto ptrs = s.tensors();
  return pack(ptrs);
}

}  // namespace attnrec::testing
