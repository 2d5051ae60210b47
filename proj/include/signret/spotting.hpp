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
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "signret/encoders.hpp"
#include "signret/numerics.hpp"

namespace signret {

// A scored clip: frames [start, end) predicted as class_id.
struct Detection {
  std::string video_id;
  std::size_t start = 0;
  std::size_t end = 0;
  std::uint32_t class_id = 0;
  double score = 0.0;

  std::size_t center() const { return start + (end - start) / 2; }
};

struct PseudoLabelSet {
  std::vector<Detection> detections;

  // Number of distinct classes among the detections.
  std::size_t vocabulary_coverage() const;
};

// Classifier plus the clip encoder it sits on.
struct SpotterModel {
  ClipEncoder encoder;
  ClassifierHead head;

  std::vector<Param*> params();
};

// Argmax class and probability for every sliding-window clip of `stream`.
std::vector<Detection> score_clips(const VideoFeatureStream& stream, const ClipEncoder& encoder,
                                   const ClassifierHead& head, std::size_t window, std::size_t stride);

// Keeps detections with score >= lambda, lambda in (0, 1].
std::vector<Detection> threshold(std::vector<Detection> detections, double lambda);

// Greedy per-(video, class) suppression: a detection is dropped when its
// center lies closer than `window` frames to an already kept one. Higher
// scores win; ties go to the earlier center, then the earlier input index.
// Output is sorted by (video, start, class).
std::vector<Detection> temporal_nms(std::vector<Detection> detections, std::size_t window);

// Tab-separated: video-id, start, end, class-id, score (6 decimals).
void write_pseudo_labels(std::ostream& out, const PseudoLabelSet& set);
PseudoLabelSet read_pseudo_labels(std::istream& in);

// One training example for the classifier.
struct LabeledClip {
  std::vector<double> feature;
  std::uint32_t class_id = 0;
};

// Re-extracts the labelled spans from their videos with `featurizer`.
std::vector<LabeledClip> collect_clips(const PseudoLabelSet& set,
                                       const std::map<std::string, VideoFeatureStream>& streams,
                                       const ClipFeaturizer& featurizer = mean_pool);

struct FinetuneConfig {
  double learning_rate = 1e-2;
  std::size_t batch_size = 4;
  std::size_t epochs = 15;
  std::uint64_t seed = 0;
  // Keep the given batch order every epoch instead of reshuffling.
  bool fixed_order = false;
};

struct FinetuneResult {
  SpotterModel model;
  std::vector<double> epoch_loss;  // mean minibatch cross-entropy per epoch
  double train_accuracy = 0.0;
};

// Minibatch SGD on cross-entropy starting from `init`. `init` itself is
// never modified.
FinetuneResult finetune_aware(const std::vector<LabeledClip>& samples, const SpotterModel& init,
                              const FinetuneConfig& cfg);

// Fraction of samples whose argmax prediction matches the label.
double classification_accuracy(const SpotterModel& model, const std::vector<LabeledClip>& samples);

}  // namespace signret
