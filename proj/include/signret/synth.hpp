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
#include <string>
#include <vector>

#include "signret/augment.hpp"
#include "signret/dataset.hpp"
#include "signret/encoders.hpp"
#include "signret/spotting.hpp"

namespace signret {

// Synthetic sign-language corpus with planted sign-to-word alignments.
// Every video is a sequence of signs, each held for frames_per_sign frames
// of prototype + Gaussian noise; the paired text lists the aligned words in
// shuffled order, sometimes with one filler word that has no sign.
struct SynthSpec {
  std::size_t sign_vocab = 20;
  std::size_t word_vocab = 50;
  std::size_t feature_dim = 32;
  std::size_t frames_per_sign = 16;
  std::size_t min_signs = 3;
  std::size_t max_signs = 5;
  double noise = 0.5;
  // Std-dev of the constant offset separating the target domain from the
  // source domain the agnostic encoder is trained on.
  double domain_shift = 0.5;
  double filler_prob = 0.3;
  std::size_t train_pairs = 256;
  std::size_t val_pairs = 64;
  std::size_t test_pairs = 64;
  std::size_t source_videos = 200;
  std::uint64_t seed = 0;
};

struct SyntheticSplit {
  std::string name;
  std::vector<VideoFeatureStream> videos;
  std::vector<std::string> texts;
  std::vector<PairAlignment> alignments;
};

struct SyntheticCorpus {
  SynthSpec spec;
  Matrix prototypes;                        // sign_vocab x feature_dim
  std::vector<std::string> words;           // word_vocab entries
  std::vector<std::uint32_t> sign_to_word;  // injective
  SyntheticSplit train;
  SyntheticSplit val;
  SyntheticSplit test;
  // Labelled source-domain videos for pre-training the agnostic encoder.
  SyntheticSplit source;
  PseudoLabelSet source_labels;
  SynonymLexicon lexicon;
  Vocab vocab;
};

SyntheticCorpus generate_synthetic(const SynthSpec& spec);

// Writes vocab.txt, {train,val,test,source}.tsv, frames/*.feat,
// alignments.tsv, source_labels.tsv, lexicon.tsv and meta.txt.
void write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

// The split as a PairedDataset over raw frames, as load_split would return it.
PairedDataset to_dataset(const SyntheticSplit& split, const Vocab& vocab);

}  // namespace signret
