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

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "signret/config.hpp"
#include "signret/errors.hpp"
#include "signret/gradient_suite.hpp"
#include "signret/pipeline.hpp"

using namespace signret;
namespace fs = std::filesystem;

namespace {

// Applies --config and then every --set key=value on top of `cfg`.
TrainConfig load_train_config(TrainConfig cfg, const std::string& path, const std::vector<std::string>& sets) {
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config '" + path + "'");
    cfg = parse_config(in, cfg);
  }
  for (const std::string& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

std::size_t meta_size(const DatasetMeta& meta, const std::string& key, std::size_t fallback) {
  const auto it = meta.find(key);
  return it == meta.end() ? fallback : static_cast<std::size_t>(std::stoull(it->second));
}

std::map<std::string, PairAlignment> read_alignment_file(const fs::path& data_dir) {
  std::ifstream in(data_dir / "alignments.tsv");
  if (!in) throw InputError("no alignments.tsv in '" + data_dir.string() + "'");
  return read_alignments(in);
}

struct SpotFlags {
  std::uint64_t seed = 0;
  double lambda = 0.6;
  std::size_t nms_window = 24;
  std::size_t window = 16;
  std::size_t stride = 4;
  std::size_t epochs = 15;
  double lr = 1e-2;
  std::size_t batch = 4;

  void add(CLI::App* app) {
    app->add_option("--seed", seed, "Seed for spotter initialization and batch order");
    app->add_option("--lambda", lambda, "Confidence threshold for pseudo labels")->check(CLI::Range(0.0, 1.0));
    app->add_option("--nms-window", nms_window, "Temporal NMS window in frames");
    app->add_option("--window", window, "Clip length in frames");
    app->add_option("--stride", stride, "Clip stride in frames while spotting");
    app->add_option("--epochs", epochs, "Spotter training epochs");
    app->add_option("--lr", lr, "Spotter learning rate");
    app->add_option("--batch", batch, "Spotter minibatch size");
  }

  SpottingConfig config() const {
    SpottingConfig c;
    c.window = window;
    c.stride = stride;
    c.lambda = lambda;
    c.nms_window = nms_window;
    c.finetune.seed = seed;
    c.finetune.epochs = epochs;
    c.finetune.learning_rate = lr;
    c.finetune.batch_size = batch;
    return c;
  }
};

void print_history(const std::vector<EpochRecord>& history) {
  for (const EpochRecord& e : history) {
    std::printf("epoch %zu  loss %.6f  tau %.5f", e.epoch + 1, e.train_loss, e.tau);
    if (e.val_t2v_r1 >= 0.0) std::printf("  val T2V R@1 %.3f  V2T R@1 %.3f", e.val_t2v_r1, e.val_v2t_r1);
    std::printf("\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sign-language video/text retrieval with cross-lingual contrastive learning"};
  app.require_subcommand(1);

  // synth-data
  SynthSpec spec;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth-data", "Generate a synthetic corpus with planted sign-to-word alignments");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", spec.seed, "Generator seed")->required();
  synth->add_option("--signs", spec.sign_vocab, "Number of distinct signs");
  synth->add_option("--words", spec.word_vocab, "Word vocabulary size");
  synth->add_option("--dim", spec.feature_dim, "Frame feature width");
  synth->add_option("--frames-per-sign", spec.frames_per_sign, "Frames each sign is held");
  synth->add_option("--noise", spec.noise, "Frame noise standard deviation");
  synth->add_option("--domain-shift", spec.domain_shift, "Offset between source and target domains");
  synth->add_option("--filler-prob", spec.filler_prob, "Chance of an unsigned filler word per text");
  synth->add_option("--train", spec.train_pairs, "Training pairs");
  synth->add_option("--val", spec.val_pairs, "Validation pairs");
  synth->add_option("--test", spec.test_pairs, "Test pairs");
  synth->add_option("--source", spec.source_videos, "Labelled source-domain videos");

  // pseudo-label
  std::string pl_data;
  std::string pl_labels;
  std::string pl_spotter;
  SpotFlags pl_flags;
  auto* pl = app.add_subcommand("pseudo-label",
                                "Pre-train the agnostic spotter on source videos and pseudo-label the training videos");
  pl->add_option("--data", pl_data, "Corpus directory written by synth-data")->required();
  pl->add_option("--labels-out", pl_labels, "Pseudo-label TSV to write")->required();
  pl->add_option("--spotter-out", pl_spotter, "Agnostic spotter file to write")->required();
  pl_flags.add(pl);

  // finetune-encoder
  std::string ft_data;
  std::string ft_spotter;
  std::string ft_labels;
  std::string ft_out;
  SpotFlags ft_flags;
  auto* ft = app.add_subcommand("finetune-encoder", "Fine-tune the agnostic spotter into the domain-aware one");
  ft->add_option("--data", ft_data, "Corpus directory")->required();
  ft->add_option("--spotter", ft_spotter, "Agnostic spotter file")->required();
  ft->add_option("--labels", ft_labels, "Pseudo-label TSV")->required();
  ft->add_option("--out", ft_out, "Aware spotter file to write")->required();
  ft_flags.add(ft);

  // extract-features
  std::string ex_data;
  std::string ex_agnostic;
  std::string ex_aware;
  std::string ex_out;
  double ex_alpha = 0.8;
  std::size_t ex_window = 16;
  std::size_t ex_stride = 1;
  auto* ex = app.add_subcommand("extract-features", "Write fused clip features for the train, val and test splits");
  ex->add_option("--data", ex_data, "Corpus directory")->required();
  ex->add_option("--agnostic", ex_agnostic, "Agnostic spotter file")->required();
  ex->add_option("--aware", ex_aware, "Aware spotter file")->required();
  ex->add_option("--out", ex_out, "Output directory")->required();
  ex->add_option("--alpha", ex_alpha, "Weight of the agnostic encoder")->check(CLI::Range(0.0, 1.0));
  ex->add_option("--window", ex_window, "Clip length in frames");
  ex->add_option("--stride", ex_stride, "Clip stride in frames");

  // train
  std::string tr_features;
  std::string tr_config;
  std::string tr_out;
  std::vector<std::string> tr_sets;
  std::uint64_t tr_seed = 0;
  std::string tr_lexicon;
  auto* tr = app.add_subcommand("train", "Train the sign and text encoders contrastively");
  tr->add_option("--features", tr_features, "Clip-feature directory from extract-features")->required();
  tr->add_option("--seed", tr_seed, "Seed for initialization, batching and augmentation")->required();
  tr->add_option("--out", tr_out, "Checkpoint to write")->required();
  tr->add_option("--config", tr_config, "key = value config file");
  tr->add_option("--set", tr_sets, "Override one config key (key=value); repeatable");
  tr->add_option("--lexicon", tr_lexicon, "Synonym lexicon for sr augmentation");

  // evaluate
  std::string ev_ckpt;
  std::string ev_features;
  std::string ev_split = "test";
  auto* ev = app.add_subcommand("evaluate", "Report R@1/5/10 and median rank in both directions");
  ev->add_option("--checkpoint", ev_ckpt, "Checkpoint file")->required();
  ev->add_option("--features", ev_features, "Clip-feature directory")->required();
  ev->add_option("--split", ev_split, "Split to evaluate");

  // ablate
  std::string ab_data;
  std::string ab_axis;
  std::vector<std::string> ab_values;
  std::string ab_config;
  std::vector<std::string> ab_sets;
  std::uint64_t ab_seed = 0;
  auto* ab = app.add_subcommand("ablate", "Run the full pipeline once per value of one axis");
  ab->add_option("--data", ab_data, "Corpus directory")->required();
  ab->add_option("--axis", ab_axis,
                 "fine-strategy, global-strategy, stride, alpha, beta, sigma, max-length or augmentation")
      ->required();
  ab->add_option("--values", ab_values, "Values to try")->required()->delimiter(',');
  ab->add_option("--seed", ab_seed, "Seed for every run")->required();
  ab->add_option("--config", ab_config, "Base config file");
  ab->add_option("--set", ab_sets, "Override one base config key (key=value); repeatable");

  // gradcheck
  std::size_t gc_cases = 27;
  std::uint64_t gc_seed = 1;
  double gc_step = 1e-5;
  double gc_tol = 1e-5;
  auto* gc = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients on random models");
  gc->add_option("--cases", gc_cases, "Number of random configurations");
  gc->add_option("--seed", gc_seed, "Seed for drawing configurations");
  gc->add_option("--step", gc_step, "Central-difference step");
  gc->add_option("--tolerance", gc_tol, "Maximum allowed relative error");

  // diagnose
  std::string dg_ckpt;
  std::string dg_features;
  std::string dg_data;
  std::string dg_split = "test";
  auto* dg = app.add_subcommand("diagnose", "Check learned clip-word attention against planted alignments");
  dg->add_option("--checkpoint", dg_ckpt, "Checkpoint file")->required();
  dg->add_option("--features", dg_features, "Clip-feature directory")->required();
  dg->add_option("--data", dg_data, "Corpus directory holding alignments.tsv")->required();
  dg->add_option("--split", dg_split, "Split to diagnose");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      const SyntheticCorpus c = generate_synthetic(spec);
      write_corpus(c, synth_out);
      std::printf("wrote %zu train, %zu val, %zu test and %zu source videos to %s\n", c.train.videos.size(),
                  c.val.videos.size(), c.test.videos.size(), c.source.videos.size(), synth_out.c_str());
    } else if (pl->parsed()) {
      const SyntheticCorpus c = load_corpus(pl_data);
      const SpottingConfig sc = pl_flags.config();
      double acc = 0.0;
      const SpotterModel agnostic = pretrain_agnostic(c, sc.finetune, &acc);
      const PseudoLabelSet labels = pseudo_label(streams_of(c.train), agnostic, sc);
      save_spotter(pl_spotter, agnostic);
      std::ofstream out(pl_labels);
      write_pseudo_labels(out, labels);
      std::printf("source accuracy %.3f\n%zu pseudo labels covering %zu signs\n", acc, labels.detections.size(),
                  labels.vocabulary_coverage());
      if (!c.train.alignments.empty()) {
        std::printf("precision against planted signs %.3f\n", pseudo_label_precision(labels, c.train.alignments));
      }
    } else if (ft->parsed()) {
      const SyntheticCorpus c = load_corpus(ft_data);
      const SpotterModel agnostic = load_spotter(ft_spotter);
      std::ifstream in(ft_labels);
      if (!in) throw InputError("cannot open '" + ft_labels + "'");
      const PseudoLabelSet labels = read_pseudo_labels(in);
      const FinetuneResult r = finetune_aware(collect_clips(labels, streams_of(c.train)), agnostic,
                                              ft_flags.config().finetune);
      save_spotter(ft_out, r.model);
      for (std::size_t e = 0; e < r.epoch_loss.size(); ++e) std::printf("epoch %zu  loss %.6f\n", e + 1, r.epoch_loss[e]);
      std::printf("train accuracy %.3f\n", r.train_accuracy);
    } else if (ex->parsed()) {
      const SyntheticCorpus c = load_corpus(ex_data);
      const EncoderPair pair{load_spotter(ex_agnostic).encoder, load_spotter(ex_aware).encoder, ex_alpha};
      std::vector<PairedDataset> splits;
      for (const SyntheticSplit* s : {&c.train, &c.val, &c.test}) {
        if (!s->videos.empty()) splits.push_back(extract_features(to_dataset(*s, c.vocab), pair, ex_window, ex_stride));
      }
      std::ostringstream alpha;
      alpha << ex_alpha;
      write_clip_dataset(ex_out, splits,
                         {{"window", std::to_string(ex_window)}, {"stride", std::to_string(ex_stride)},
                          {"alpha", alpha.str()}});
      for (const PairedDataset& d : splits) std::printf("%s: %zu items\n", d.split.c_str(), d.items.size());
    } else if (tr->parsed()) {
      const DatasetMeta meta = read_meta(tr_features);
      TrainConfig base;
      base.window = meta_size(meta, "window", base.window);
      base.stride = meta_size(meta, "stride", base.stride);
      if (const auto it = meta.find("alpha"); it != meta.end()) base.alpha = std::stod(it->second);
      TrainConfig cfg = load_train_config(base, tr_config, tr_sets);
      cfg.seed = tr_seed;
      const PairedDataset train = load_split(tr_features, "train");
      const bool has_val = fs::exists(fs::path(tr_features) / "val.tsv");
      const PairedDataset val = has_val ? load_split(tr_features, "val") : PairedDataset{};
      Trainer trainer(cfg, train, has_val && !val.items.empty() ? &val : nullptr);
      if (!tr_lexicon.empty()) {
        std::ifstream in(tr_lexicon);
        if (!in) throw InputError("cannot open '" + tr_lexicon + "'");
        trainer.set_lexicon(read_lexicon(in));
      }
      trainer.run();
      for (const std::string& w : trainer.warnings()) std::fprintf(stderr, "warning: %s\n", w.c_str());
      print_history(trainer.history());
      trainer.checkpoint().save(tr_out);
      std::printf("saved %s after %llu steps\n", tr_out.c_str(), static_cast<unsigned long long>(trainer.global_step()));
    } else if (ev->parsed()) {
      const Checkpoint ck = Checkpoint::load(ev_ckpt);
      std::cout << format_report(evaluate(ck, load_split(ev_features, ev_split)));
    } else if (ab->parsed()) {
      SyntheticCorpus c = load_corpus(ab_data);
      TrainConfig base = load_train_config(TrainConfig{}, ab_config, ab_sets);
      base.seed = ab_seed;
      SpottingConfig sc;
      sc.stride = 4;
      sc.finetune.seed = ab_seed;
      const SpottingOutcome spot = run_spotting(c, sc);
      const EncoderPair pair{spot.agnostic.encoder, spot.aware.encoder, base.alpha};
      std::cout << format_ablation(ab_axis, ablate(base, ab_axis, ab_values, c, pair));
    } else if (gc->parsed()) {
      std::size_t failed = 0;
      for (const GradCase& gcase : random_grad_cases(gc_cases, gc_seed)) {
        const GradCaseResult r = check_gradients(gcase, gc_step);
        const bool ok = r.max_error < gc_tol;
        failed += !ok;
        std::string worst;
        for (const auto& [name, err] : r.errors) {
          if (err == r.max_error) worst = name;
        }
        std::printf("%s  %s  max rel err %.3g (%s)\n", ok ? "ok  " : "FAIL", describe(gcase).c_str(), r.max_error,
                    worst.c_str());
      }
      std::printf("%zu of %zu configurations over %.g\n", failed, gc_cases, gc_tol);
      return failed == 0 ? 0 : 1;
    } else if (dg->parsed()) {
      const Checkpoint ck = Checkpoint::load(dg_ckpt);
      const DatasetMeta meta = read_meta(dg_features);
      const PairedDataset data = load_split(dg_features, dg_split);
      const AlignmentDiagnosis d =
          diagnose_alignments(ck.model(), data, read_alignment_file(dg_data), meta_size(meta, "window", 16),
                              meta_size(meta, "stride", 1));
      std::printf("%zu of %zu signed words attend to their sign: accuracy %.3f\n", d.correct, d.words, d.accuracy());
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
