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

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "signret/numerics.hpp"

namespace signret {

enum class AugmentKind { kNone, kRandomSwap, kRandomDelete, kSynonymReplace };

std::string to_string(AugmentKind kind);
// Accepts none, rs, rd, sr.
AugmentKind parse_augment_kind(const std::string& s);

using SynonymLexicon = std::map<std::string, std::vector<std::string>>;

struct AugmentConfig {
  AugmentKind kind = AugmentKind::kRandomSwap;
  double rate = 0.1;
  SynonymLexicon lexicon;
};

// rs: max(1, round(rate * n)) swaps of two distinct positions.
// rd: each token dropped with probability `rate`; one always survives.
// sr: up to max(1, round(rate * n)) tokens that have lexicon entries are
//     replaced by a uniformly drawn synonym.
std::vector<std::string> augment(const std::vector<std::string>& tokens, const AugmentConfig& cfg, Rng& rng);

// One entry per line: head token followed by tab-separated synonyms.
SynonymLexicon read_lexicon(std::istream& in);
void write_lexicon(std::ostream& out, const SynonymLexicon& lexicon);

}  // namespace signret
