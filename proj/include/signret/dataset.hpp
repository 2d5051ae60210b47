// Copyright 2026 The signret Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "signret/encoders.hpp"
#include "signret/numerics.hpp"

namespace signret {

// Lower-cases and splits on whitespace.
std::vector<std::string> tokenize(const std::string& text);

// Word <-> id table. Id 0 is always the unknown-word token.
class Vocab {
 public:
  static constexpr std::uint32_t kUnk = 0;
  static constexpr const char* kUnkToken = "<unk>";

  Vocab();

  std::uint32_t add(const std::string& word);
  // kUnk for words not in the table.
  std::uint32_t id(const std::string& word) const;
  const std::string& word(std::uint32_t id) const { return words_.at(id); }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

  std::vector<std::uint32_t> encode(const std::vector<std::string>& tokens) const;

  // One word per line; line index is the id.
  static Vocab read(std::istream& in);
  void write(std::ostream& out) const;

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.words_ == b.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// Binary feature file: "SRFT", u32 version, u32 rows, u32 cols, then
// row-major little-endian fp32. Loading widens to fp64 exactly.
void write_feature_file(const std::filesystem::path& path, const Matrix& m);
Matrix read_feature_file(const std::filesystem::path& path);

// One manifest line: id <TAB> feature path (relative to the manifest) <TAB> raw text.
struct ManifestEntry {
  std::string id;
  std::string feature_path;
  std::string text;
};

std::vector<ManifestEntry> read_manifest(std::istream& in);
void write_manifest(std::ostream& out, const std::vector<ManifestEntry>& entries);

struct PairedItem {
  std::string id;
  std::string feature_path;
  std::vector<std::string> tokens;
  std::vector<std::uint32_t> token_ids;
  // Per-frame features or per-clip features, depending on the dataset kind.
  Matrix features;
};

struct PairedDataset {
  std::string split;
  Vocab vocab;
  std::vector<PairedItem> items;
};

// Flat key=value metadata stored next to the manifests (meta.txt).
using DatasetMeta = std::map<std::string, std::string>;

DatasetMeta read_meta(const std::filesystem::path& dir);
void write_meta(const std::filesystem::path& dir, const DatasetMeta& meta);

// Loads dir/vocab.txt, dir/<split>.tsv and every referenced feature file.
PairedDataset load_split(const std::filesystem::path& dir, const std::string& split);

// Where each sign sits in a video and which sign every word of the paired
// text denotes (-1 for words without a sign).
struct SignSegment {
  std::uint32_t sign = 0;
  std::size_t start = 0;
  std::size_t end = 0;
};

struct PairAlignment {
  std::string id;
  std::vector<SignSegment> segments;
  std::vector<int> word_signs;

  // Sign under `frame`, or -1.
  int sign_at(std::size_t frame) const;
};

// id <TAB> sign:start:end ... <TAB> word signs separated by spaces.
std::map<std::string, PairAlignment> read_alignments(std::istream& in);
void write_alignments(std::ostream& out, const std::vector<PairAlignment>& alignments);

std::map<std::string, VideoFeatureStream> load_streams(const std::filesystem::path& dir, const std::string& split);

}  // namespace signret
