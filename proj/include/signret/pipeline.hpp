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
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "signret/config.hpp"
#include "signret/dataset.hpp"
#include "signret/encoders.hpp"
#include "signret/eval.hpp"
#include "signret/spotting.hpp"
#include "signret/synth.hpp"
#include "signret/train.hpp"

namespace signret {

struct SpottingConfig {
  std::size_t window = 16;
  std::size_t stride = 1;
  double lambda = 0.6;
  std::size_t nms_window = 24;
  FinetuneConfig finetune;
};

// Fresh, randomly initialised spotter for `classes` signs.
SpotterModel make_spotter(std::size_t dim, std::size_t classes, std::uint64_t seed);

// Score -> threshold -> temporal NMS over every stream.
PseudoLabelSet pseudo_label(const std::map<std::string, VideoFeatureStream>& streams, const SpotterModel& model,
                            const SpottingConfig& cfg);

std::map<std::string, VideoFeatureStream> streams_of(const PairedDataset& frames);
std::map<std::string, VideoFeatureStream> streams_of(const SyntheticSplit& split);

// Slides windows over every item's frames and replaces them with fused
// clip features, rounded to fp32 like the on-disk format.
PairedDataset extract_features(const PairedDataset& frames, const EncoderPair& pair, std::size_t window,
                               std::size_t stride);

// Writes clip-level splits (as returned by extract_features) under `dir`:
// vocab.txt, <split>.tsv, clips/*.feat and meta.txt with kind=clips plus
// the entries of `meta`. load_split reads them back.
void write_clip_dataset(const std::filesystem::path& dir, const std::vector<PairedDataset>& splits,
                        const DatasetMeta& meta);

// Spotter file: "SRSP", version, then named parameter matrices.
void save_spotter(const std::filesystem::path& path, const SpotterModel& model);
SpotterModel load_spotter(const std::filesystem::path& path);

// Everything the sign encoder needs from the spotting stage.
struct SpottingOutcome {
  SpotterModel agnostic;
  SpotterModel aware;
  PseudoLabelSet pseudo_labels;
  double agnostic_source_accuracy = 0.0;
  double pseudo_label_precision = 0.0;  // against planted signs
};

// Trains a fresh spotter on the labelled source videos. `source_accuracy`
// receives its training accuracy when non-null.
SpotterModel pretrain_agnostic(const SyntheticCorpus& corpus, const FinetuneConfig& cfg,
                               double* source_accuracy = nullptr);

// Pre-trains the agnostic spotter on the labelled source videos,
// pseudo-labels the target training videos and fine-tunes the aware spotter.
SpottingOutcome run_spotting(const SyntheticCorpus& corpus, const SpottingConfig& cfg);

// Fraction of detections whose centre frame lies on a planted sign of the
// same class.
double pseudo_label_precision(const PseudoLabelSet& set, const std::vector<PairAlignment>& alignments);

struct RunOutcome {
  Checkpoint checkpoint;
  std::vector<RetrievalResult> test;
  AlignmentDiagnosis diagnosis;
  std::string report;
};

// Extracts features with cfg.alpha / cfg.window / cfg.stride, trains and
// evaluates on the test split.
RunOutcome train_and_evaluate(const TrainConfig& cfg, const SyntheticCorpus& corpus, const EncoderPair& encoders);

struct AblationRow {
  std::string value;
  RetrievalResult t2v;
  RetrievalResult v2t;
};

// Axes: fine-strategy, global-strategy, stride, alpha, beta, sigma,
// max-length, augmentation.
std::vector<AblationRow> ablate(const TrainConfig& base, const std::string& axis,
                                const std::vector<std::string>& values, const SyntheticCorpus& corpus,
                                const EncoderPair& encoders);
// axis value | T2V R@1 R@5 R@10 | V2T R@1 R@5 R@10
std::string format_ablation(const std::string& axis, const std::vector<AblationRow>& rows);

// Applies one ablation value to a config.
TrainConfig with_axis_value(TrainConfig cfg, const std::string& axis, const std::string& value);

// Reloads a corpus written by write_corpus.
SyntheticCorpus load_corpus(const std::filesystem::path& dir);

}  // namespace signret
