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

#include "signret/spotting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "signret/errors.hpp"

namespace signret {

std::size_t PseudoLabelSet::vocabulary_coverage() const {
  std::set<std::uint32_t> classes;
  for (const Detection& d : detections) classes.insert(d.class_id);
  return classes.size();
}

std::vector<Param*> SpotterModel::params() {
  std::vector<Param*> out = encoder.params();
  for (Param* p : head.params()) out.push_back(p);
  return out;
}

std::vector<Detection> score_clips(const VideoFeatureStream& stream, const ClipEncoder& encoder,
                                   const ClassifierHead& head, std::size_t window, std::size_t stride) {
  const ClipFeatureSequence seq = slide_windows(stream, window, stride);
  const Matrix encoded = encoder.forward(seq.clips);
  std::vector<Detection> out;
  out.reserve(seq.valid);
  for (std::size_t m = 0; m < seq.valid; ++m) {
    const std::vector<double> p = classify(head, encoded.row(m));
    const auto best = std::max_element(p.begin(), p.end());
    Detection d;
    d.video_id = stream.id;
    d.start = m * stride;
    d.end = d.start + window;
    d.class_id = static_cast<std::uint32_t>(best - p.begin());
    d.score = *best;
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Detection> threshold(std::vector<Detection> detections, double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ParameterError("threshold: lambda must lie in (0, 1]");
  std::erase_if(detections, [&](const Detection& d) { return d.score < lambda; });
  return detections;
}

std::vector<Detection> temporal_nms(std::vector<Detection> detections, std::size_t window) {
  if (window == 0) throw ParameterError("temporal_nms: window must be at least 1");
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Detection& x = detections[a];
    const Detection& y = detections[b];
    return std::forward_as_tuple(x.video_id, x.class_id, -x.score, x.center(), x.start, a) <
           std::forward_as_tuple(y.video_id, y.class_id, -y.score, y.center(), y.start, b);
  });

  std::vector<Detection> kept;
  std::size_t group_begin = 0;
  for (std::size_t idx : order) {
    const Detection& d = detections[idx];
    if (group_begin < kept.size() &&
        (kept[group_begin].video_id != d.video_id || kept[group_begin].class_id != d.class_id)) {
      group_begin = kept.size();
    }
    bool suppressed = false;
    for (std::size_t k = group_begin; k < kept.size(); ++k) {
      const std::size_t a = kept[k].center();
      const std::size_t b = d.center();
      if ((a > b ? a - b : b - a) < window) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(d);
  }
  std::sort(kept.begin(), kept.end(), [](const Detection& x, const Detection& y) {
    return std::tie(x.video_id, x.start, x.class_id) < std::tie(y.video_id, y.start, y.class_id);
  });
  return kept;
}

void write_pseudo_labels(std::ostream& out, const PseudoLabelSet& set) {
  char score[64];
  for (const Detection& d : set.detections) {
    std::snprintf(score, sizeof(score), "%.6f", d.score);
    out << d.video_id << '\t' << d.start << '\t' << d.end << '\t' << d.class_id << '\t' << score << '\n';
  }
}

PseudoLabelSet read_pseudo_labels(std::istream& in) {
  PseudoLabelSet set;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    Detection d;
    std::string start, end, cls, score;
    if (!std::getline(fields, d.video_id, '\t') || !std::getline(fields, start, '\t') ||
        !std::getline(fields, end, '\t') || !std::getline(fields, cls, '\t') || !std::getline(fields, score, '\t')) {
      throw InputError("pseudo-label line " + std::to_string(line_no) + ": expected 5 tab-separated fields");
    }
    try {
      d.start = std::stoul(start);
      d.end = std::stoul(end);
      d.class_id = static_cast<std::uint32_t>(std::stoul(cls));
      d.score = std::stod(score);
    } catch (const std::exception&) {
      throw InputError("pseudo-label line " + std::to_string(line_no) + ": malformed number");
    }
    if (d.end <= d.start) throw InputError("pseudo-label line " + std::to_string(line_no) + ": empty span");
    set.detections.push_back(std::move(d));
  }
  return set;
}

std::vector<LabeledClip> collect_clips(const PseudoLabelSet& set,
                                       const std::map<std::string, VideoFeatureStream>& streams,
                                       const ClipFeaturizer& featurizer) {
  std::vector<LabeledClip> out;
  out.reserve(set.detections.size());
  for (const Detection& d : set.detections) {
    const auto it = streams.find(d.video_id);
    if (it == streams.end()) throw InputError("pseudo label refers to unknown video '" + d.video_id + "'");
    const Matrix& frames = it->second.frames;
    if (frames.rows() == 0) throw InputError("video '" + d.video_id + "' has no frames");
    Matrix clip(d.end - d.start, frames.cols());
    for (std::size_t f = d.start; f < d.end; ++f) {
      const std::size_t src = std::min(f, frames.rows() - 1);
      std::copy(frames.row(src).begin(), frames.row(src).end(), clip.row(f - d.start).begin());
    }
    out.push_back({featurizer(clip), d.class_id});
  }
  return out;
}

namespace {

Matrix stack_features(const std::vector<LabeledClip>& samples, std::span<const std::size_t> idx) {
  const std::size_t width = samples[idx[0]].feature.size();
  Matrix x(idx.size(), width);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto& f = samples[idx[r]].feature;
    if (f.size() != width) throw DimensionError("labelled clips differ in width");
    std::copy(f.begin(), f.end(), x.row(r).begin());
  }
  return x;
}

}  // namespace

FinetuneResult finetune_aware(const std::vector<LabeledClip>& samples, const SpotterModel& init,
                              const FinetuneConfig& cfg) {
  if (samples.empty()) throw ConfigError("finetune: the pseudo-labelled set is empty");
  if (cfg.batch_size == 0) throw ConfigError("finetune: batch size must be positive");
  if (!(cfg.learning_rate >= 0.0)) throw ConfigError("finetune: learning rate must be non-negative");
  for (const LabeledClip& s : samples) {
    if (s.class_id >= init.head.classes()) throw InputError("finetune: label outside the classifier's classes");
  }

  FinetuneResult result{init, {}, 0.0};
  SpotterModel& model = result.model;
  const std::vector<Param*> params = model.params();
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  const Rng sampling(cfg.seed, streams::kSampling);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (!cfg.fixed_order) {
      std::iota(order.begin(), order.end(), 0);
      Rng rng = sampling.split(epoch);
      rng.shuffle(std::span<std::size_t>(order));
    }
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      for (Param* p : params) p->zero_grad();

      const Matrix x = stack_features(samples, idx);
      const Matrix h = model.encoder.forward(x);
      const Matrix probs = softmax_rows(model.head.logits(h), 1.0);
      Matrix dlogits = probs;
      double loss = 0.0;
      const double inv = 1.0 / static_cast<double>(idx.size());
      for (std::size_t r = 0; r < idx.size(); ++r) {
        const std::uint32_t label = samples[idx[r]].class_id;
        loss -= std::log(std::max(probs(r, label), 1e-300));
        dlogits(r, label) -= 1.0;
      }
      for (double& v : dlogits.values()) v *= inv;
      loss *= inv;

      const Matrix dh = model.head.backward(h, dlogits);
      model.encoder.backward(x, h, dh);
      for (Param* p : params) add_inplace(p->value, p->grad, -cfg.learning_rate);
      loss_sum += loss;
      ++batches;
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(batches));
  }
  result.train_accuracy = classification_accuracy(model, samples);
  return result;
}

double classification_accuracy(const SpotterModel& model, const std::vector<LabeledClip>& samples) {
  if (samples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const LabeledClip& s : samples) {
    const std::vector<double> p = classify(model.head, model.encoder(s.feature));
    if (static_cast<std::uint32_t>(std::max_element(p.begin(), p.end()) - p.begin()) == s.class_id) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

}  // namespace signret
