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

#include "signret/augment.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "signret/errors.hpp"

namespace signret {

namespace {

std::size_t operation_count(double rate, std::size_t n) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(rate * static_cast<double>(n))));
}

}  // namespace

std::string to_string(AugmentKind kind) {
  switch (kind) {
    case AugmentKind::kNone:
      return "none";
    case AugmentKind::kRandomSwap:
      return "rs";
    case AugmentKind::kRandomDelete:
      return "rd";
    case AugmentKind::kSynonymReplace:
      return "sr";
  }
  return "?";
}

AugmentKind parse_augment_kind(const std::string& s) {
  if (s == "none") return AugmentKind::kNone;
  if (s == "rs") return AugmentKind::kRandomSwap;
  if (s == "rd") return AugmentKind::kRandomDelete;
  if (s == "sr") return AugmentKind::kSynonymReplace;
  throw ConfigError("unknown augmentation '" + s + "' (expected none, rs, rd or sr)");
}

std::vector<std::string> augment(const std::vector<std::string>& tokens, const AugmentConfig& cfg, Rng& rng) {
  if (!(cfg.rate >= 0.0 && cfg.rate <= 1.0)) throw ParameterError("augment: rate must lie in [0, 1]");
  std::vector<std::string> out = tokens;
  const std::size_t n = out.size();
  switch (cfg.kind) {
    case AugmentKind::kNone:
      break;
    case AugmentKind::kRandomSwap: {
      if (n < 2) break;
      const std::size_t swaps = operation_count(cfg.rate, n);
      for (std::size_t s = 0; s < swaps; ++s) {
        const std::size_t a = rng.below(n);
        std::size_t b = rng.below(n - 1);
        if (b >= a) ++b;
        std::swap(out[a], out[b]);
      }
      break;
    }
    case AugmentKind::kRandomDelete: {
      if (n < 2 || cfg.rate == 0.0) break;
      std::vector<std::string> kept;
      for (const std::string& t : out) {
        if (rng.uniform() >= cfg.rate) kept.push_back(t);
      }
      if (kept.empty()) kept.push_back(out[rng.below(n)]);
      out = std::move(kept);
      break;
    }
    case AugmentKind::kSynonymReplace: {
      std::vector<std::size_t> candidates;
      for (std::size_t i = 0; i < n; ++i) {
        const auto it = cfg.lexicon.find(out[i]);
        if (it != cfg.lexicon.end() && !it->second.empty()) candidates.push_back(i);
      }
      if (candidates.empty()) break;
      rng.shuffle(std::span<std::size_t>(candidates));
      const std::size_t count = std::min(candidates.size(), operation_count(cfg.rate, n));
      for (std::size_t c = 0; c < count; ++c) {
        const auto& synonyms = cfg.lexicon.at(out[candidates[c]]);
        out[candidates[c]] = synonyms[rng.below(synonyms.size())];
      }
      break;
    }
  }
  return out;
}

SynonymLexicon read_lexicon(std::istream& in) {
  SynonymLexicon lexicon;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string head;
    std::getline(fields, head, '\t');
    std::string syn;
    auto& entry = lexicon[head];
    while (std::getline(fields, syn, '\t')) {
      if (!syn.empty()) entry.push_back(syn);
    }
  }
  return lexicon;
}

void write_lexicon(std::ostream& out, const SynonymLexicon& lexicon) {
  for (const auto& [head, synonyms] : lexicon) {
    out << head;
    for (const std::string& s : synonyms) out << '\t' << s;
    out << '\n';
  }
}

}  // namespace signret
