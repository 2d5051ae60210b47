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

#include "signret/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "signret/errors.hpp"

namespace signret {

namespace {

std::string word_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "w%02zu", i);
  return buf;
}

// Frames are stored as fp32 on disk; rounding here keeps in-memory runs
// identical to runs that go through files.
double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

void validate_spec(const SynthSpec& s) {
  if (s.sign_vocab < 2) throw ConfigError("synthetic data needs at least 2 signs");
  if (s.word_vocab < s.sign_vocab) throw ConfigError("word vocabulary must be at least as large as the sign vocabulary");
  if (s.feature_dim == 0 || s.frames_per_sign == 0) throw ConfigError("feature_dim and frames_per_sign must be positive");
  if (s.min_signs == 0 || s.min_signs > s.max_signs) throw ConfigError("need 1 <= min_signs <= max_signs");
  if (s.max_signs > s.sign_vocab) throw ConfigError("max_signs exceeds the sign vocabulary");
  if (!(s.noise >= 0.0) || !(s.domain_shift >= 0.0)) throw ConfigError("noise levels must be non-negative");
  if (!(s.filler_prob >= 0.0 && s.filler_prob <= 1.0)) throw ConfigError("filler_prob must lie in [0, 1]");
}

struct Generator {
  const SynthSpec& spec;
  const Matrix& prototypes;
  const std::vector<std::string>& words;
  const std::vector<std::uint32_t>& sign_to_word;
  const std::vector<std::uint32_t>& fillers;

  // One video + text. `offset` is empty for the source domain.
  void make_pair(const std::string& id, std::span<const double> offset, Rng& rng, SyntheticSplit& out) const {
    const std::size_t count = spec.min_signs + rng.below(spec.max_signs - spec.min_signs + 1);
    std::vector<std::uint32_t> signs(spec.sign_vocab);
    std::iota(signs.begin(), signs.end(), 0);
    rng.shuffle(std::span<std::uint32_t>(signs));
    signs.resize(count);

    const std::size_t d = spec.feature_dim;
    VideoFeatureStream video{id, Matrix(count * spec.frames_per_sign, d)};
    PairAlignment align;
    align.id = id;
    for (std::size_t s = 0; s < count; ++s) {
      const std::size_t begin = s * spec.frames_per_sign;
      align.segments.push_back({signs[s], begin, begin + spec.frames_per_sign});
      for (std::size_t f = begin; f < begin + spec.frames_per_sign; ++f) {
        for (std::size_t j = 0; j < d; ++j) {
          double v = prototypes(signs[s], j) + spec.noise * rng.normal();
          if (!offset.empty()) v += offset[j];
          video.frames(f, j) = f32(v);
        }
      }
    }

    std::vector<int> word_signs(signs.begin(), signs.end());
    if (!fillers.empty() && rng.uniform() < spec.filler_prob) word_signs.push_back(-1);
    rng.shuffle(std::span<int>(word_signs));
    std::string text;
    for (int ws : word_signs) {
      const std::uint32_t w =
          ws >= 0 ? sign_to_word[static_cast<std::size_t>(ws)] : fillers[rng.below(fillers.size())];
      if (!text.empty()) text += ' ';
      text += words[w];
    }
    align.word_signs = std::move(word_signs);

    out.videos.push_back(std::move(video));
    out.texts.push_back(std::move(text));
    out.alignments.push_back(std::move(align));
  }
};

void write_split(const SyntheticSplit& split, const std::filesystem::path& dir) {
  std::vector<ManifestEntry> entries;
  for (std::size_t i = 0; i < split.videos.size(); ++i) {
    const std::string rel = "frames/" + split.videos[i].id + ".feat";
    write_feature_file(dir / rel, split.videos[i].frames);
    entries.push_back({split.videos[i].id, rel, split.texts[i]});
  }
  std::ofstream out(dir / (split.name + ".tsv"));
  write_manifest(out, entries);
}

}  // namespace

SyntheticCorpus generate_synthetic(const SynthSpec& spec) {
  validate_spec(spec);
  SyntheticCorpus c;
  c.spec = spec;
  Rng rng(spec.seed, streams::kData);

  Rng proto_rng = rng.split(0);
  c.prototypes = Matrix(spec.sign_vocab, spec.feature_dim);
  for (double& v : c.prototypes.values()) v = proto_rng.normal();

  for (std::size_t i = 0; i < spec.word_vocab; ++i) {
    c.words.push_back(word_name(i));
    c.vocab.add(c.words.back());
  }
  Rng align_rng = rng.split(1);
  std::vector<std::uint32_t> order(spec.word_vocab);
  std::iota(order.begin(), order.end(), 0);
  align_rng.shuffle(std::span<std::uint32_t>(order));
  c.sign_to_word.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(spec.sign_vocab));
  std::vector<std::uint32_t> fillers(order.begin() + static_cast<std::ptrdiff_t>(spec.sign_vocab), order.end());
  std::sort(fillers.begin(), fillers.end());

  // Each signed word gets one synonym drawn from the filler words.
  if (!fillers.empty()) {
    for (std::uint32_t w : c.sign_to_word) c.lexicon[c.words[w]] = {c.words[fillers[align_rng.below(fillers.size())]]};
  }

  Rng shift_rng = rng.split(2);
  std::vector<double> offset(spec.feature_dim);
  for (double& v : offset) v = spec.domain_shift * shift_rng.normal();

  const Generator gen{spec, c.prototypes, c.words, c.sign_to_word, fillers};
  const auto fill = [&](SyntheticSplit& split, const std::string& name, const std::string& prefix, std::size_t n,
                        std::uint64_t key, std::span<const double> domain) {
    split.name = name;
    Rng split_rng = rng.split(key);
    char id[32];
    for (std::size_t i = 0; i < n; ++i) {
      std::snprintf(id, sizeof(id), "%s%04zu", prefix.c_str(), i);
      gen.make_pair(id, domain, split_rng, split);
    }
  };
  fill(c.train, "train", "tr", spec.train_pairs, 10, offset);
  fill(c.val, "val", "va", spec.val_pairs, 11, offset);
  fill(c.test, "test", "te", spec.test_pairs, 12, offset);
  fill(c.source, "source", "src", spec.source_videos, 13, {});

  for (const PairAlignment& a : c.source.alignments) {
    for (const SignSegment& s : a.segments) c.source_labels.detections.push_back({a.id, s.start, s.end, s.sign, 1.0});
  }
  return c;
}

void write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "frames");
  {
    std::ofstream out(dir / "vocab.txt");
    corpus.vocab.write(out);
  }
  for (const SyntheticSplit* s : {&corpus.train, &corpus.val, &corpus.test, &corpus.source}) write_split(*s, dir);
  {
    std::ofstream out(dir / "alignments.tsv");
    for (const SyntheticSplit* s : {&corpus.train, &corpus.val, &corpus.test}) write_alignments(out, s->alignments);
  }
  {
    std::ofstream out(dir / "source_labels.tsv");
    write_pseudo_labels(out, corpus.source_labels);
  }
  {
    std::ofstream out(dir / "lexicon.tsv");
    write_lexicon(out, corpus.lexicon);
  }
  const SynthSpec& s = corpus.spec;
  write_meta(dir, {{"kind", "frames"},
                   {"sign_vocab", std::to_string(s.sign_vocab)},
                   {"word_vocab", std::to_string(s.word_vocab)},
                   {"feature_dim", std::to_string(s.feature_dim)},
                   {"frames_per_sign", std::to_string(s.frames_per_sign)},
                   {"seed", std::to_string(s.seed)}});
}

PairedDataset to_dataset(const SyntheticSplit& split, const Vocab& vocab) {
  PairedDataset ds;
  ds.split = split.name;
  ds.vocab = vocab;
  for (std::size_t i = 0; i < split.videos.size(); ++i) {
    PairedItem item;
    item.id = split.videos[i].id;
    item.feature_path = "frames/" + item.id + ".feat";
    item.tokens = tokenize(split.texts[i]);
    item.token_ids = vocab.encode(item.tokens);
    item.features = split.videos[i].frames;
    ds.items.push_back(std::move(item));
  }
  return ds;
}

}  // namespace signret
