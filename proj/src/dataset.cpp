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

#include "signret/dataset.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "signret/errors.hpp"

namespace signret {

namespace {

constexpr std::array<char, 4> kFeatureMagic = {'S', 'R', 'F', 'T'};
constexpr std::uint32_t kFeatureVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                         static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(bytes, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw InputError("feature file truncated");
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, '\t')) out.push_back(field);
  if (!line.empty() && line.back() == '\t') out.emplace_back();
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return in;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    std::transform(tok.begin(), tok.end(), tok.begin(), [](unsigned char c) { return std::tolower(c); });
    out.push_back(tok);
  }
  return out;
}

Vocab::Vocab() { add(kUnkToken); }

std::uint32_t Vocab::add(const std::string& word) {
  if (const auto it = index_.find(word); it != index_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(words_.size());
  words_.push_back(word);
  index_.emplace(word, id);
  return id;
}

std::uint32_t Vocab::id(const std::string& word) const {
  const auto it = index_.find(word);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<std::uint32_t> Vocab::encode(const std::vector<std::string>& tokens) const {
  std::vector<std::uint32_t> out;
  out.reserve(tokens.size());
  for (const std::string& t : tokens) out.push_back(id(t));
  return out;
}

Vocab Vocab::read(std::istream& in) {
  Vocab v;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line != kUnkToken) throw InputError("vocabulary must start with " + std::string(kUnkToken));
      continue;
    }
    v.add(line);
  }
  return v;
}

void Vocab::write(std::ostream& out) const {
  for (const std::string& w : words_) out << w << '\n';
}

void write_feature_file(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out.write(kFeatureMagic.data(), kFeatureMagic.size());
  put_u32(out, kFeatureVersion);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (double v : m.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

Matrix read_feature_file(const std::filesystem::path& path) {
  std::ifstream in = open_in(path, true);
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kFeatureMagic) {
    throw InputError("'" + path.string() + "' is not a feature file");
  }
  const std::uint32_t version = get_u32(in);
  if (version != kFeatureVersion) throw InputError("'" + path.string() + "': unsupported version");
  const std::uint32_t rows = get_u32(in);
  const std::uint32_t cols = get_u32(in);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = static_cast<double>(std::bit_cast<float>(get_u32(in)));
  return m;
}

std::vector<ManifestEntry> read_manifest(std::istream& in) {
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_tabs(line);
    if (f.size() < 2 || f.size() > 3) {
      throw InputError("manifest line " + std::to_string(line_no) + ": expected id, feature path, text");
    }
    out.push_back({f[0], f[1], f.size() == 3 ? f[2] : ""});
  }
  return out;
}

void write_manifest(std::ostream& out, const std::vector<ManifestEntry>& entries) {
  for (const ManifestEntry& e : entries) out << e.id << '\t' << e.feature_path << '\t' << e.text << '\n';
}

DatasetMeta read_meta(const std::filesystem::path& dir) {
  DatasetMeta meta;
  const auto path = dir / "meta.txt";
  if (!std::filesystem::exists(path)) return meta;
  std::ifstream in = open_in(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return meta;
}

void write_meta(const std::filesystem::path& dir, const DatasetMeta& meta) {
  std::ofstream out(dir / "meta.txt");
  for (const auto& [k, v] : meta) out << k << '=' << v << '\n';
}

PairedDataset load_split(const std::filesystem::path& dir, const std::string& split) {
  PairedDataset ds;
  ds.split = split;
  {
    std::ifstream in = open_in(dir / "vocab.txt");
    ds.vocab = Vocab::read(in);
  }
  std::ifstream in = open_in(dir / (split + ".tsv"));
  for (ManifestEntry& e : read_manifest(in)) {
    PairedItem item;
    item.id = std::move(e.id);
    item.feature_path = std::move(e.feature_path);
    item.tokens = tokenize(e.text);
    item.token_ids = ds.vocab.encode(item.tokens);
    item.features = read_feature_file(dir / item.feature_path);
    ds.items.push_back(std::move(item));
  }
  return ds;
}

int PairAlignment::sign_at(std::size_t frame) const {
  for (const SignSegment& s : segments) {
    if (frame >= s.start && frame < s.end) return static_cast<int>(s.sign);
  }
  return -1;
}

std::map<std::string, PairAlignment> read_alignments(std::istream& in) {
  std::map<std::string, PairAlignment> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_tabs(line);
    if (f.size() != 3) throw InputError("alignment line " + std::to_string(line_no) + ": expected 3 fields");
    PairAlignment a;
    a.id = f[0];
    std::istringstream segs(f[1]);
    std::string seg;
    while (segs >> seg) {
      SignSegment s;
      char c1 = 0;
      char c2 = 0;
      std::istringstream parts(seg);
      if (!(parts >> s.sign >> c1 >> s.start >> c2 >> s.end) || c1 != ':' || c2 != ':') {
        throw InputError("alignment line " + std::to_string(line_no) + ": bad segment '" + seg + "'");
      }
      a.segments.push_back(s);
    }
    std::istringstream words(f[2]);
    int w = 0;
    while (words >> w) a.word_signs.push_back(w);
    out.emplace(a.id, std::move(a));
  }
  return out;
}

void write_alignments(std::ostream& out, const std::vector<PairAlignment>& alignments) {
  for (const PairAlignment& a : alignments) {
    out << a.id << '\t';
    for (std::size_t i = 0; i < a.segments.size(); ++i) {
      const SignSegment& s = a.segments[i];
      out << (i ? " " : "") << s.sign << ':' << s.start << ':' << s.end;
    }
    out << '\t';
    for (std::size_t i = 0; i < a.word_signs.size(); ++i) out << (i ? " " : "") << a.word_signs[i];
    out << '\n';
  }
}

std::map<std::string, VideoFeatureStream> load_streams(const std::filesystem::path& dir, const std::string& split) {
  std::ifstream in = open_in(dir / (split + ".tsv"));
  std::map<std::string, VideoFeatureStream> out;
  for (const ManifestEntry& e : read_manifest(in)) {
    out.emplace(e.id, VideoFeatureStream{e.id, read_feature_file(dir / e.feature_path)});
  }
  return out;
}

}  // namespace signret
