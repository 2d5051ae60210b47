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

#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "oracles.hpp"
#include "signret/errors.hpp"
#include "signret/spotting.hpp"

using namespace signret;

namespace {

Detection at(std::size_t center, double score, std::uint32_t cls = 0, std::string video = "v") {
  // Window 16 puts the center at start + 8.
  return {std::move(video), center - 8, center + 8, cls, score};
}

std::vector<std::size_t> centers(const std::vector<Detection>& ds) {
  std::vector<std::size_t> out;
  for (const auto& d : ds) out.push_back(d.center());
  return out;
}

std::vector<Detection> random_detections(Rng& rng) {
  std::vector<Detection> out;
  const std::size_t n = rng.below(40);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t center = 8 + rng.below(120);
    // Coarse scores make ties common.
    const double score = 0.05 * static_cast<double>(1 + rng.below(20));
    out.push_back(at(center, score, static_cast<std::uint32_t>(rng.below(3)), rng.below(2) ? "a" : "b"));
  }
  return out;
}

SpotterModel model(std::size_t dim, std::size_t classes, std::uint64_t seed) {
  Rng rng(seed, streams::kInit);
  ClipEncoder enc(dim, rng);
  ClassifierHead head(dim, classes, rng);
  return {std::move(enc), std::move(head)};
}

// Two well-separated Gaussian blobs.
std::vector<LabeledClip> separable(std::size_t n, Rng& rng) {
  std::vector<LabeledClip> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t c = static_cast<std::uint32_t>(i % 2);
    const double sign = c == 0 ? -1.0 : 1.0;
    out.push_back({{sign * 2.0 + 0.3 * rng.normal(), sign + 0.3 * rng.normal(), 0.3 * rng.normal()}, c});
  }
  return out;
}

}  // namespace

TEST_CASE("temporal_nms examples") {
  const auto kept = temporal_nms({at(10, 0.9), at(20, 0.8), at(40, 0.7)}, 24);
  CHECK(centers(kept) == std::vector<std::size_t>{10, 40});
  CHECK(temporal_nms({at(30, 0.5)}, 24).size() == 1);
  CHECK(temporal_nms({at(30, 0.9, 0), at(30, 0.8, 1)}, 24).size() == 2);
  CHECK(temporal_nms({at(30, 0.9, 0, "x"), at(30, 0.8, 0, "y")}, 24).size() == 2);
  CHECK(temporal_nms({}, 24).empty());
  // A distance of exactly the window is not a conflict.
  CHECK(temporal_nms({at(10, 0.9), at(34, 0.8)}, 24).size() == 2);
  CHECK_THROWS_AS(temporal_nms({at(10, 0.9)}, 0), ParameterError);
}

TEST_CASE("temporal_nms tie-breaking") {
  // Equal scores: the earlier center wins.
  CHECK(centers(temporal_nms({at(20, 0.5), at(12, 0.5)}, 24)) == std::vector<std::size_t>{12});
}

TEST_CASE("temporal_nms satisfies the brute-force checker") {
  Rng rng(41, streams::kData);
  for (int t = 0; t < 200; ++t) {
    const std::vector<Detection> input = random_detections(rng);
    const std::size_t window = 1 + rng.below(40);
    const std::vector<Detection> kept = temporal_nms(input, window);
    const oracle::NmsVerdict v = oracle::check_nms(input, kept, window);
    INFO(v.detail);
    CHECK(v.ok());
    CHECK(std::is_sorted(kept.begin(), kept.end(), [](const Detection& a, const Detection& b) {
      return std::tie(a.video_id, a.start, a.class_id) < std::tie(b.video_id, b.start, b.class_id);
    }));

    std::vector<Detection> shuffled = input;
    rng.shuffle(std::span<Detection>(shuffled));
    const std::vector<Detection> again = temporal_nms(shuffled, window);
    REQUIRE(again.size() == kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) CHECK(oracle::key_of(again[i]) == oracle::key_of(kept[i]));
  }
}

TEST_CASE("threshold examples") {
  const auto kept = threshold({at(10, 0.7), at(40, 0.55)}, 0.6);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].score == 0.7);
  CHECK(threshold({at(10, 0.7), at(40, 1e-9)}, 1e-12).size() == 2);
  const auto exact = threshold({at(10, 1.0), at(40, 0.999999)}, 1.0);
  REQUIRE(exact.size() == 1);
  CHECK(exact[0].score == 1.0);
  CHECK(threshold({at(10, 0.6)}, 0.6).size() == 1);
  CHECK_THROWS_AS(threshold({}, 0.0), ParameterError);
  CHECK_THROWS_AS(threshold({}, 1.5), ParameterError);
}

TEST_CASE("score_clips matches classify on each window") {
  Rng rng(42, streams::kData);
  SpotterModel m = model(3, 4, 1);
  VideoFeatureStream s{"vid", Matrix(20, 3)};
  for (double& v : s.frames.values()) v = rng.normal();
  const auto ds = score_clips(s, m.encoder, m.head, 16, 1);
  REQUIRE(ds.size() == 5);
  const ClipFeatureSequence seq = slide_windows(s, 16, 1);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(ds[i].video_id == "vid");
    CHECK(ds[i].start == i);
    CHECK(ds[i].end == i + 16);
    const std::vector<double> p = classify(m.head, m.encoder(seq.clips.row(i)));
    const auto best = std::max_element(p.begin(), p.end());
    CHECK(ds[i].class_id == static_cast<std::uint32_t>(best - p.begin()));
    CHECK(ds[i].score == doctest::Approx(*best).epsilon(1e-15));
  }
  CHECK(score_clips(s, m.encoder, m.head, 16, 4).size() == 2);

  m.head.weight.value.fill(0.0);
  m.head.bias.value.fill(0.0);
  for (const auto& d : score_clips(s, m.encoder, m.head, 16, 1)) CHECK(d.score == doctest::Approx(0.25));
}

TEST_CASE("pseudo labels round-trip through text") {
  PseudoLabelSet set{{{"a", 0, 16, 3, 0.75}, {"b", 4, 20, 1, 0.625}, {"a", 30, 46, 3, 0.9}}};
  std::stringstream buf;
  write_pseudo_labels(buf, set);
  CHECK(buf.str().find("a\t0\t16\t3\t0.750000\n") == 0);
  const PseudoLabelSet back = read_pseudo_labels(buf);
  REQUIRE(back.detections.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(oracle::key_of(back.detections[i]) == oracle::key_of(set.detections[i]));
  CHECK(set.vocabulary_coverage() == 2);

  std::stringstream bad("a\t0\t16\t3\n");
  CHECK_THROWS_AS(read_pseudo_labels(bad), InputError);
  std::stringstream empty_span("a\t5\t5\t3\t0.5\n");
  CHECK_THROWS_AS(read_pseudo_labels(empty_span), InputError);
  std::stringstream junk("a\tx\t16\t3\t0.5\n");
  CHECK_THROWS_AS(read_pseudo_labels(junk), InputError);
}

TEST_CASE("collect_clips re-pools the labelled spans") {
  VideoFeatureStream s{"a", Matrix(20, 2)};
  for (std::size_t i = 0; i < 20; ++i) s.frames(i, 0) = static_cast<double>(i);
  const std::map<std::string, VideoFeatureStream> streams{{"a", s}};
  const auto clips = collect_clips(PseudoLabelSet{{{"a", 2, 6, 1, 0.9}}}, streams);
  REQUIRE(clips.size() == 1);
  CHECK(clips[0].class_id == 1);
  CHECK(clips[0].feature[0] == doctest::Approx(3.5));
  CHECK_THROWS_AS(collect_clips(PseudoLabelSet{{{"zz", 2, 6, 1, 0.9}}}, streams), InputError);
}

TEST_CASE("finetune with zero epochs returns the initial model") {
  Rng rng(43, streams::kData);
  const SpotterModel init = model(3, 2, 2);
  FinetuneConfig cfg;
  cfg.epochs = 0;
  const FinetuneResult r = finetune_aware(separable(8, rng), init, cfg);
  CHECK(r.model.encoder.weight.value == init.encoder.weight.value);
  CHECK(r.model.encoder.bias.value == init.encoder.bias.value);
  CHECK(r.model.head.weight.value == init.head.weight.value);
  CHECK(r.model.head.bias.value == init.head.bias.value);
}

TEST_CASE("finetune separates a linearly separable toy set") {
  Rng rng(44, streams::kData);
  const auto samples = separable(64, rng);
  const SpotterModel init = model(3, 2, 3);
  const Matrix before = init.head.weight.value;
  FinetuneConfig cfg;
  cfg.seed = 5;
  const FinetuneResult r = finetune_aware(samples, init, cfg);
  CHECK(r.epoch_loss.size() == 15);
  CHECK(r.train_accuracy >= 0.99);
  CHECK(classification_accuracy(r.model, samples) == r.train_accuracy);
  CHECK(init.head.weight.value == before);
}

TEST_CASE("full-batch finetune with a fixed order never increases the loss") {
  Rng rng(45, streams::kData);
  const auto samples = separable(32, rng);
  FinetuneConfig cfg;
  cfg.batch_size = samples.size();
  cfg.fixed_order = true;
  cfg.learning_rate = 1e-2;
  cfg.epochs = 30;
  const FinetuneResult r = finetune_aware(samples, model(3, 2, 4), cfg);
  for (std::size_t e = 1; e < r.epoch_loss.size(); ++e) CHECK(r.epoch_loss[e] <= r.epoch_loss[e - 1]);
}

TEST_CASE("finetune is deterministic and validates its input") {
  Rng rng(46, streams::kData);
  const auto samples = separable(16, rng);
  FinetuneConfig cfg;
  cfg.seed = 9;
  const SpotterModel init = model(3, 2, 5);
  const FinetuneResult a = finetune_aware(samples, init, cfg);
  const FinetuneResult b = finetune_aware(samples, init, cfg);
  CHECK(a.epoch_loss == b.epoch_loss);
  CHECK(a.model.head.weight.value == b.model.head.weight.value);

  CHECK_THROWS_AS(finetune_aware({}, init, cfg), ConfigError);
  cfg.batch_size = 0;
  CHECK_THROWS_AS(finetune_aware(samples, init, cfg), ConfigError);
  cfg.batch_size = 4;
  std::vector<LabeledClip> bad = samples;
  bad[0].class_id = 7;
  CHECK_THROWS_AS(finetune_aware(bad, init, cfg), InputError);
}
