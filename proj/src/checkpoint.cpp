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

#include "attnrec/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "attnrec/errors.hpp"

namespace attnrec {
namespace {

constexpr std::string_view kMagic = "attnrec-checkpoint";

double parse_double(const std::string& text, const std::string& what) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') throw DataError("checkpoint: bad number for " + what + ": '" + text + "'");
  return v;
}

void check_token(const std::string& token) {
  if (token.find_first_of("\r\n") != std::string::npos) {
    throw InvalidArgument("checkpoint: token contains a newline");
  }
}

}  // namespace

std::string format_hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

void Checkpoint::set(const std::string& key, double value) { meta[key] = format_hexfloat(value); }
void Checkpoint::set(const std::string& key, std::int64_t value) { meta[key] = std::to_string(value); }
void Checkpoint::set(const std::string& key, std::uint64_t value) { meta[key] = std::to_string(value); }

const std::string& Checkpoint::get_string(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) throw DataError("checkpoint: missing field '" + key + "'");
  return it->second;
}

double Checkpoint::get_double(const std::string& key) const {
  return parse_double(get_string(key), key);
}

std::int64_t Checkpoint::get_int(const std::string& key) const {
  const std::string& text = get_string(key);
  try {
    std::size_t used = 0;
    const auto v = std::stoll(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw DataError("checkpoint: bad integer for " + key + ": '" + text + "'");
}

std::uint64_t Checkpoint::get_u64(const std::string& key) const {
  const std::string& text = get_string(key);
  try {
    std::size_t used = 0;
    const auto v = std::stoull(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw DataError("checkpoint: bad integer for " + key + ": '" + text + "'");
}

const DenseMatrix& Checkpoint::tensor(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw DataError("checkpoint: missing tensor '" + name + "'");
  return it->second;
}

void Checkpoint::write(std::ostream& out) const {
  out << kMagic << ' ' << kCheckpointVersion << '\n';
  out << "model " << model << '\n';
  for (const auto& [key, value] : meta) {
    if (key.find_first_of(" \t\r\n") != std::string::npos || value.find_first_of("\r\n") != std::string::npos) {
      throw InvalidArgument("checkpoint: meta key/value must be single-line, key without spaces");
    }
    out << "meta " << key << ' ' << value << '\n';
  }
  auto write_tokens = [&](const char* kind, const std::vector<std::string>& tokens) {
    out << "tokens " << kind << ' ' << tokens.size() << '\n';
    for (const auto& t : tokens) {
      check_token(t);
      out << t << '\n';
    }
  };
  write_tokens("users", user_tokens);
  write_tokens("items", item_tokens);
  for (const auto& [name, m] : tensors) {
    out << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < m.cols(); ++c) {
        if (c) out << ' ';
        out << format_hexfloat(m(r, c));
      }
      out << '\n';
    }
  }
  out << "end\n";
}

Checkpoint Checkpoint::read(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("checkpoint: empty file");
  {
    std::istringstream head(line);
    std::string magic;
    int version = 0;
    if (!(head >> magic >> version) || magic != kMagic) throw DataError("checkpoint: not an attnrec checkpoint");
    if (version != kCheckpointVersion) {
      throw DataError("checkpoint: unsupported format version " + std::to_string(version) +
                      " (this build reads version " + std::to_string(kCheckpointVersion) + ")");
    }
  }
  Checkpoint ck;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string kind;
    fields >> kind;
    if (kind == "model") {
      fields >> ck.model;
    } else if (kind == "meta") {
      std::string key;
      fields >> key;
      std::string value;
      std::getline(fields, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      ck.meta[key] = value;
    } else if (kind == "tokens") {
      std::string which;
      std::size_t count = 0;
      if (!(fields >> which >> count)) throw DataError("checkpoint: malformed tokens header");
      auto& dest = which == "users" ? ck.user_tokens : ck.item_tokens;
      if (which != "users" && which != "items") throw DataError("checkpoint: unknown token table '" + which + "'");
      dest.reserve(count);
      for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(in, line)) throw DataError("checkpoint: truncated token table");
        dest.push_back(line);
      }
    } else if (kind == "tensor") {
      std::string name;
      std::size_t rows = 0, cols = 0;
      if (!(fields >> name >> rows >> cols)) throw DataError("checkpoint: malformed tensor header");
      DenseMatrix m(rows, cols);
      for (std::size_t r = 0; r < rows; ++r) {
        if (!std::getline(in, line)) throw DataError("checkpoint: truncated tensor '" + name + "'");
        std::istringstream values(line);
        for (std::size_t c = 0; c < cols; ++c) {
          std::string token;
          if (!(values >> token)) throw DataError("checkpoint: short row in tensor '" + name + "'");
          m(r, c) = parse_double(token, name);
        }
      }
      ck.tensors[name] = std::move(m);
    } else if (kind == "end") {
      ended = true;
      break;
    } else {
      throw DataError("checkpoint: unknown record '" + kind + "'");
    }
  }
  if (!ended) throw DataError("checkpoint: missing end marker");
  return ck;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write(out);
  if (!out) throw DataError("write failed for " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  return read(in);
}

}  // namespace attnrec
