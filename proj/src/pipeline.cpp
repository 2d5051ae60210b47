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

#include "signret/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "signret/errors.hpp"

namespace signret {

namespace {

constexpr char kSpotterMagic[] = "SRSP";
constexpr std::uint32_t kSpotterVersion = 1;

std::size_t to_size(const std::string& key, const std::string& v) {
  try {
    return static_cast<std::size_t>(std::stoull(v));
  } catch (const std::exception&) {
    throw ConfigError("'" + v + "' is not a valid value for " + key);
  }
}

}  // namespace

SpotterModel make_spotter(std::size_t dim, std::size_t classes, std::uint64_t seed) {
  const Rng init(seed, streams::kInit);
  Rng enc_rng = init.split(100);
  Rng head_rng = init.split(101);
  return SpotterModel{ClipEncoder(dim, enc_rng), ClassifierHead(dim, classes, head_rng)};
}

PseudoLabelSet pseudo_label(const std::map<std::string, VideoFeatureStream>& streams, const SpotterModel& model,
                            const SpottingConfig& cfg) {
  std::vector<Detection> all;
  for (const auto& [id, stream] : streams) {
    std::vector<Detection> d = score_clips(stream, model.encoder, model.head, cfg.window, cfg.stride);
    d = threshold(std::move(d), cfg.lambda);
    all.insert(all.end(), std::make_move_iterator(d.begin()), std::make_move_iterator(d.end()));
  }
  return PseudoLabelSet{temporal_nms(std::move(all), cfg.nms_window)};
}

std::map<std::string, VideoFeatureStream> streams_of(const PairedDataset& frames) {
  std::map<std::string, VideoFeatureStream> out;
  for (const PairedItem& item : frames.items) out.emplace(item.id, VideoFeatureStream{item.id, item.features});
  return out;
}

std::map<std::string, VideoFeatureStream> streams_of(const SyntheticSplit& split) {
  std::map<std::string, VideoFeatureStream> out;
  for (const VideoFeatureStream& v : split.videos) out.emplace(v.id, v);
  return out;
}

PairedDataset extract_features(const PairedDataset& frames, const EncoderPair& pair, std::size_t window,
                               std::size_t stride) {
  PairedDataset out = frames;
  for (PairedItem& item : out.items) {
    const ClipFeatureSequence seq = slide_windows(VideoFeatureStream{item.id, item.features}, window, stride);
    item.features = fuse_rows(pair, seq.clips.top_rows(seq.valid));
    for (double& v : item.features.values()) v = static_cast<double>(static_cast<float>(v));
    item.feature_path = "clips/" + item.id + ".feat";
  }
  return out;
}

void write_clip_dataset(const std::filesystem::path& dir, const std::vector<PairedDataset>& splits,
                        const DatasetMeta& meta) {
  if (splits.empty()) throw InputError("write_clip_dataset: no splits");
  std::filesystem::create_directories(dir / "clips");
  {
    std::ofstream out(dir / "vocab.txt");
    splits.front().vocab.write(out);
  }
  for (const PairedDataset& split : splits) {
    if (!(split.vocab == splits.front().vocab)) throw InputError("write_clip_dataset: splits disagree on the vocabulary");
    std::vector<ManifestEntry> entries;
    for (const PairedItem& item : split.items) {
      std::string text;
      for (const std::string& t : item.tokens) text += (text.empty() ? "" : " ") + t;
      const std::string rel = "clips/" + item.id + ".feat";
      write_feature_file(dir / rel, item.features);
      entries.push_back({item.id, rel, text});
    }
    std::ofstream out(dir / (split.split + ".tsv"));
    write_manifest(out, entries);
  }
  DatasetMeta all = meta;
  all["kind"] = "clips";
  write_meta(dir, all);
}

void save_spotter(const std::filesystem::path& path, const SpotterModel& model) {
  detail::ByteWriter w;
  w.raw(std::string_view(kSpotterMagic, 4));
  w.u32(kSpotterVersion);
  SpotterModel copy = model;
  const std::vector<Param*> params = copy.params();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const Param* p : params) {
    w.str(p->name);
    w.matrix(p->value);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
}

SpotterModel load_spotter(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open encoder file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  detail::ByteReader r(bytes);
  if (r.raw(4) != std::string_view(kSpotterMagic, 4)) throw InputError("'" + path.string() + "' is not an encoder file");
  if (r.u32() != kSpotterVersion) throw InputError("unsupported encoder file version");
  std::map<std::string, Matrix> values;
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    values.emplace(std::move(name), r.matrix());
  }
  SpotterModel model;
  for (auto [param, name] : {std::pair{&model.encoder.weight, "clip.w"}, std::pair{&model.encoder.bias, "clip.b"},
                             std::pair{&model.head.weight, "head.w"}, std::pair{&model.head.bias, "head.b"}}) {
    const auto it = values.find(name);
    if (it == values.end()) throw InputError("encoder file lacks '" + std::string(name) + "'");
    *param = Param(name, it->second);
  }
  if (model.encoder.weight.value.rows() != model.encoder.weight.value.cols() ||
      model.head.weight.value.rows() != model.encoder.dim()) {
    throw InputError("encoder file has inconsistent shapes");
  }
  return model;
}

double pseudo_label_precision(const PseudoLabelSet& set, const std::vector<PairAlignment>& alignments) {
  if (set.detections.empty()) return 0.0;
  std::map<std::string, const PairAlignment*> by_id;
  for (const PairAlignment& a : alignments) by_id[a.id] = &a;
  std::size_t hits = 0;
  for (const Detection& d : set.detections) {
    const auto it = by_id.find(d.video_id);
    if (it != by_id.end() && it->second->sign_at(d.center()) == static_cast<int>(d.class_id)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(set.detections.size());
}

SpotterModel pretrain_agnostic(const SyntheticCorpus& corpus, const FinetuneConfig& cfg, double* source_accuracy) {
  const std::vector<LabeledClip> source = collect_clips(corpus.source_labels, streams_of(corpus.source));
  const SpotterModel init = make_spotter(corpus.spec.feature_dim, corpus.spec.sign_vocab, cfg.seed);
  FinetuneResult pre = finetune_aware(source, init, cfg);
  if (source_accuracy != nullptr) *source_accuracy = pre.train_accuracy;
  return std::move(pre.model);
}

SpottingOutcome run_spotting(const SyntheticCorpus& corpus, const SpottingConfig& cfg) {
  SpottingOutcome out;
  out.agnostic = pretrain_agnostic(corpus, cfg.finetune, &out.agnostic_source_accuracy);

  const auto train_streams = streams_of(corpus.train);
  out.pseudo_labels = pseudo_label(train_streams, out.agnostic, cfg);
  out.pseudo_label_precision = pseudo_label_precision(out.pseudo_labels, corpus.train.alignments);
  const std::vector<LabeledClip> target = collect_clips(out.pseudo_labels, train_streams);
  out.aware = finetune_aware(target, out.agnostic, cfg.finetune).model;
  return out;
}

RunOutcome train_and_evaluate(const TrainConfig& cfg, const SyntheticCorpus& corpus, const EncoderPair& encoders) {
  EncoderPair pair = encoders;
  pair.alpha = cfg.alpha;
  const PairedDataset train = extract_features(to_dataset(corpus.train, corpus.vocab), pair, cfg.window, cfg.stride);
  const PairedDataset val = extract_features(to_dataset(corpus.val, corpus.vocab), pair, cfg.window, cfg.stride);
  const PairedDataset test = extract_features(to_dataset(corpus.test, corpus.vocab), pair, cfg.window, cfg.stride);

  Trainer trainer(cfg, train, val.items.empty() ? nullptr : &val);
  trainer.set_lexicon(corpus.lexicon);
  trainer.run();

  RunOutcome out;
  out.checkpoint = trainer.checkpoint();
  const ClclModel model = out.checkpoint.model();
  out.test = evaluate(model, test, cfg.aggregation());
  std::map<std::string, PairAlignment> truth;
  for (const PairAlignment& a : corpus.test.alignments) truth.emplace(a.id, a);
  out.diagnosis = diagnose_alignments(model, test, truth, cfg.window, cfg.stride);
  out.report = format_report(out.test);
  return out;
}

TrainConfig with_axis_value(TrainConfig cfg, const std::string& axis, const std::string& value) {
  if (axis == "fine-strategy") {
    set_config_value(cfg, "fine_strategy", value);
  } else if (axis == "global-strategy") {
    set_config_value(cfg, "global_strategy", value);
  } else if (axis == "stride") {
    cfg.stride = to_size(axis, value);
  } else if (axis == "alpha") {
    set_config_value(cfg, "alpha", value);
  } else if (axis == "beta") {
    set_config_value(cfg, "beta", value);
  } else if (axis == "sigma") {
    set_config_value(cfg, "sigma", value);
  } else if (axis == "max-length") {
    cfg.max_clips = to_size(axis, value);
  } else if (axis == "augmentation") {
    set_config_value(cfg, "augment", value);
  } else {
    throw ConfigError("unknown ablation axis '" + axis + "'");
  }
  validate(cfg);
  return cfg;
}

std::vector<AblationRow> ablate(const TrainConfig& base, const std::string& axis,
                                const std::vector<std::string>& values, const SyntheticCorpus& corpus,
                                const EncoderPair& encoders) {
  if (values.empty()) throw ConfigError("ablation needs at least one value");
  std::vector<TrainConfig> configs;
  for (const std::string& v : values) configs.push_back(with_axis_value(base, axis, v));
  std::vector<AblationRow> rows;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const RunOutcome run = train_and_evaluate(configs[i], corpus, encoders);
    rows.push_back({values[i], run.test[0], run.test[1]});
  }
  return rows;
}

std::string format_ablation(const std::string& axis, const std::vector<AblationRow>& rows) {
  std::string out;
  char line[200];
  std::snprintf(line, sizeof(line), "%-16s | %-23s | %-23s\n", axis.c_str(), "T2V", "V2T");
  out += line;
  std::snprintf(line, sizeof(line), "%-16s | %7s %7s %7s | %7s %7s %7s\n", "", "R@1", "R@5", "R@10", "R@1", "R@5",
                "R@10");
  out += line;
  for (const AblationRow& r : rows) {
    std::snprintf(line, sizeof(line), "%-16s | %7.1f %7.1f %7.1f | %7.1f %7.1f %7.1f\n", r.value.c_str(),
                  100.0 * r.t2v.recall_at.at(1), 100.0 * r.t2v.recall_at.at(5), 100.0 * r.t2v.recall_at.at(10),
                  100.0 * r.v2t.recall_at.at(1), 100.0 * r.v2t.recall_at.at(5), 100.0 * r.v2t.recall_at.at(10));
    out += line;
  }
  for (const AblationRow& r : rows) {
    char buf[64];
    for (const auto* res : {&r.t2v, &r.v2t}) {
      std::string prefix = res->direction == Direction::kT2V ? "t2v" : "v2t";
      for (const auto& [k, v] : res->recall_at) {
        std::snprintf(buf, sizeof(buf), "%.6f", v);
        out += axis + "=" + r.value + "\t" + prefix + "_r" + std::to_string(k) + "\t" + buf + "\n";
      }
    }
  }
  return out;
}

SyntheticCorpus load_corpus(const std::filesystem::path& dir) {
  const DatasetMeta meta = read_meta(dir);
  if (meta.count("kind") == 0 || meta.at("kind") != "frames") {
    throw InputError("'" + dir.string() + "' is not a frame-level dataset (meta.txt kind=frames)");
  }
  SyntheticCorpus c;
  c.spec.sign_vocab = to_size("sign_vocab", meta.at("sign_vocab"));
  c.spec.word_vocab = to_size("word_vocab", meta.at("word_vocab"));
  c.spec.feature_dim = to_size("feature_dim", meta.at("feature_dim"));
  c.spec.frames_per_sign = to_size("frames_per_sign", meta.at("frames_per_sign"));
  c.spec.seed = to_size("seed", meta.at("seed"));

  std::map<std::string, PairAlignment> alignments;
  if (std::ifstream in(dir / "alignments.tsv"); in) alignments = read_alignments(in);

  const auto load = [&](SyntheticSplit& split, const std::string& name) {
    split.name = name;
    if (!std::filesystem::exists(dir / (name + ".tsv"))) return;
    const PairedDataset ds = load_split(dir, name);
    c.vocab = ds.vocab;
    for (const PairedItem& item : ds.items) {
      split.videos.push_back({item.id, item.features});
      std::string text;
      for (const std::string& t : item.tokens) text += (text.empty() ? "" : " ") + t;
      split.texts.push_back(text);
      if (const auto it = alignments.find(item.id); it != alignments.end()) split.alignments.push_back(it->second);
    }
  };
  load(c.train, "train");
  load(c.val, "val");
  load(c.test, "test");
  load(c.source, "source");
  if (std::ifstream in(dir / "source_labels.tsv"); in) c.source_labels = read_pseudo_labels(in);
  if (std::ifstream in(dir / "lexicon.tsv"); in) c.lexicon = read_lexicon(in);
  return c;
}

}  // namespace signret
