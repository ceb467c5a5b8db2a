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

// Text checkpoint shared by every model:
//
//   attnrec-checkpoint <version>
//   model <name>
//   meta <key> <value>            (value runs to end of line)
//   tokens <users|items> <count>  followed by one token per line
//   tensor <name> <rows> <cols>   followed by rows of hex-float values
//   end
//
// Doubles are written as hex floats so a save/load cycle is bit-exact.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "attnrec/numeric.hpp"

namespace attnrec {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  std::string model;
  std::map<std::string, std::string> meta;
  std::map<std::string, DenseMatrix> tensors;
  std::vector<std::string> user_tokens;
  std::vector<std::string> item_tokens;

  void set(const std::string& key, const std::string& value) { meta[key] = value; }
  void set(const std::string& key, double value);
  void set(const std::string& key, std::int64_t value);
  void set(const std::string& key, int value) { set(key, static_cast<std::int64_t>(value)); }
  void set(const std::string& key, std::uint64_t value);
  void set(const std::string& key, bool value) = delete;

  /// Throws DataError when the key is absent or unparseable.
  const std::string& get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  const DenseMatrix& tensor(const std::string& name) const;

  void write(std::ostream& out) const;
  /// Rejects any format version other than kCheckpointVersion.
  static Checkpoint read(std::istream& in);
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

std::string format_hexfloat(double v);

}  // namespace attnrec
