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

#include <cmath>
#include <numeric>

#include "signret/encoders.hpp"
#include "signret/errors.hpp"

using namespace signret;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

// Featurizer that returns the frame indices stored in column 0.
std::vector<double> frame_ids(const Matrix& clip) {
  std::vector<double> out;
  for (std::size_t i = 0; i < clip.rows(); ++i) out.push_back(clip(i, 0));
  return out;
}

VideoFeatureStream counting_stream(std::size_t frames) {
  VideoFeatureStream s{"v", Matrix(frames, 2)};
  for (std::size_t i = 0; i < frames; ++i) {
    s.frames(i, 0) = static_cast<double>(i);
    s.frames(i, 1) = 1.0;
  }
  return s;
}

double row_norm(const Matrix& m, std::size_t r) {
  double s = 0.0;
  for (double v : m.row(r)) s += v * v;
  return std::sqrt(s);
}

TokenEncoderConfig small_config(std::size_t input_dim, std::size_t dim) {
  TokenEncoderConfig cfg;
  cfg.input_dim = input_dim;
  cfg.model_dim = dim;
  cfg.max_len = 8;
  cfg.ffn_mult = 2;
  return cfg;
}

}  // namespace

TEST_CASE("clip_count examples and formula") {
  CHECK(clip_count(20, 16, 1) == 5);
  CHECK(clip_count(20, 16, 4) == 2);
  CHECK(clip_count(10, 16, 1) == 1);
  CHECK_THROWS_AS(clip_count(10, 0, 1), ParameterError);
  CHECK_THROWS_AS(clip_count(10, 4, 0), ParameterError);
  for (std::size_t w = 1; w < 20; ++w) {
    for (std::size_t s = 1; s < 10; ++s) {
      for (std::size_t t = w; t < 60; ++t) {
        std::size_t brute = 0;
        while (brute * s + w <= t) ++brute;
        CHECK(clip_count(t, w, s) == brute);
      }
    }
  }
}

TEST_CASE("slide_windows covers the stated frame ranges") {
  const VideoFeatureStream s = counting_stream(20);
  const ClipFeatureSequence seq = slide_windows(s, 16, 4, frame_ids);
  REQUIRE(seq.valid == 2);
  CHECK(seq.clips.rows() == 2);
  CHECK(seq.window == 16);
  CHECK(seq.stride == 4);
  for (std::size_t m = 0; m < 2; ++m) {
    for (std::size_t f = 0; f < 16; ++f) CHECK(seq.clips(m, f) == static_cast<double>(m * 4 + f));
  }
  CHECK(slide_windows(s, 16, 1).valid == 5);
}

TEST_CASE("short streams are padded by repeating the last frame") {
  const VideoFeatureStream s = counting_stream(10);
  const ClipFeatureSequence seq = slide_windows(s, 16, 1, frame_ids);
  REQUIRE(seq.valid == 1);
  std::vector<double> expect(16);
  for (std::size_t f = 0; f < 16; ++f) expect[f] = static_cast<double>(std::min<std::size_t>(f, 9));
  CHECK(std::vector<double>(seq.clips.row(0).begin(), seq.clips.row(0).end()) == expect);

  const ClipFeatureSequence pooled = slide_windows(s, 16, 1);
  CHECK(pooled.clips(0, 0) == doctest::Approx((45.0 + 6 * 9.0) / 16.0));
  CHECK(pooled.clips(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("slide_windows rejects an empty stream") {
  CHECK_THROWS_AS(slide_windows(VideoFeatureStream{"e", Matrix(0, 3)}, 16, 1), InputError);
}

TEST_CASE("fuse is the convex combination of the two encoders") {
  Rng rng(1, streams::kInit);
  EncoderPair pair{ClipEncoder(3, rng, "a"), ClipEncoder(3, rng, "b"), 0.8};
  const std::vector<double> x{0.3, -1.2, 0.5};
  const std::vector<double> u = pair.agnostic(x);
  const std::vector<double> v = pair.aware(x);
  const std::vector<double> f = fuse(pair, x);
  for (std::size_t i = 0; i < 3; ++i) CHECK(f[i] == doctest::Approx(0.8 * u[i] + 0.2 * v[i]).epsilon(1e-15));

  pair.alpha = 1.0;
  CHECK(fuse(pair, x) == u);

  // Swapping alpha and the encoders gives the same map.
  pair.alpha = 0.3;
  EncoderPair swapped{pair.aware, pair.agnostic, 0.7};
  const std::vector<double> f1 = fuse(pair, x);
  const std::vector<double> f2 = fuse(swapped, x);
  for (std::size_t i = 0; i < 3; ++i) CHECK(f1[i] == doctest::Approx(f2[i]).epsilon(1e-15));

  EncoderPair same{pair.agnostic, pair.agnostic, 0.5};
  const std::vector<double> g = fuse(same, x);
  for (std::size_t i = 0; i < 3; ++i) CHECK(g[i] == doctest::Approx(u[i]).epsilon(1e-15));

  // Row-wise variant agrees with the per-clip one.
  const Matrix rows = Matrix::from_rows({{0.3, -1.2, 0.5}, {1, 2, 3}});
  const Matrix fr = fuse_rows(pair, rows);
  for (std::size_t i = 0; i < 3; ++i) CHECK(fr(0, i) == doctest::Approx(f1[i]));

  pair.alpha = 1.5;
  CHECK_THROWS_AS(fuse(pair, x), ParameterError);
  pair.alpha = -0.1;
  CHECK_THROWS_AS(fuse_rows(pair, rows), ParameterError);
}

TEST_CASE("fuse with hand-set encoder outputs") {
  // tanh(atanh(t)) reproduces t, which lets the encoders emit chosen vectors.
  Rng rng(2, streams::kInit);
  EncoderPair pair{ClipEncoder(2, rng), ClipEncoder(2, rng), 0.8};
  for (ClipEncoder* e : {&pair.agnostic, &pair.aware}) e->weight.value.fill(0.0);
  pair.agnostic.bias.value = Matrix::from_rows({{std::atanh(0.5), 0.0}});
  pair.aware.bias.value = Matrix::from_rows({{0.0, std::atanh(0.5)}});
  const std::vector<double> f = fuse(pair, std::vector<double>{7.0, -3.0});
  CHECK(f[0] == doctest::Approx(0.4));
  CHECK(f[1] == doctest::Approx(0.1));
}

TEST_CASE("classify examples") {
  Rng rng(3, streams::kInit);
  ClassifierHead head(2, 4, rng);
  head.weight.value.fill(0.0);
  head.bias.value.fill(0.0);
  for (double p : classify(head, std::vector<double>{1.0, -2.0})) CHECK(p == doctest::Approx(0.25));

  ClassifierHead two(2, 2, rng);
  two.weight.value.fill(0.0);
  two.bias.value = Matrix::from_rows({{10.0, 0.0}});
  const std::vector<double> p = classify(two, std::vector<double>{0.5, 0.5});
  CHECK(p[0] == doctest::Approx(1.0 / (1.0 + std::exp(-10.0))).epsilon(1e-12));
  CHECK(p[0] == doctest::Approx(0.99995).epsilon(1e-5));

  for (int t = 0; t < 50; ++t) {
    ClassifierHead r(5, 7, rng);
    std::vector<double> x(5);
    for (double& v : x) v = 3 * rng.normal();
    const std::vector<double> q = classify(r, x);
    CHECK(std::abs(std::accumulate(q.begin(), q.end(), 0.0) - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(classify(head, std::vector<double>{1.0}), DimensionError);
}

TEST_CASE("clip encoder and classifier backward pass grad_check") {
  Rng rng(4, streams::kInit);
  ClipEncoder enc(4, rng);
  ClassifierHead head(4, 3, rng);
  const Matrix x = random_matrix(5, 4, rng);
  const Matrix w = random_matrix(5, 3, rng);
  std::vector<Param*> ps = enc.params();
  for (Param* p : head.params()) ps.push_back(p);
  const LossFn f = [&](bool g) {
    const Matrix h = enc.forward(x);
    const Matrix logits = head.logits(h);
    double l = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) l += w.values()[i] * logits.values()[i];
    if (g) enc.backward(x, h, head.backward(h, w));
    return l;
  };
  for (double e : grad_check(f, ps)) CHECK(e < 1e-5);
}

TEST_CASE("token encoder init range") {
  Rng rng(5, streams::kInit);
  TokenEncoderConfig cfg = small_config(6, 4);
  cfg.vocab_size = 0;
  TokenEncoder enc(cfg, rng, "sign");
  for (const Param* p : enc.params()) {
    const bool gain = p->name.find(".gain") != std::string::npos;
    const bool zero_init = p->name.find(".bias") != std::string::npos || p->name.ends_with(".b") ||
                           p->name.ends_with(".b1") || p->name.ends_with(".b2");
    for (double v : p->value.values()) {
      if (gain) {
        CHECK(v == 1.0);
      } else if (zero_init) {
        CHECK(v == 0.0);
      } else {
        const double fan_in = p->name.ends_with("ffn.w2") ? 8.0 : p->name.ends_with("proj.w") ? 6.0 : 4.0;
        CHECK(std::abs(v) <= 1.0 / std::sqrt(fan_in));
      }
    }
  }
  CHECK(enc.find("sign.block0.attn.wq") != nullptr);
  CHECK(enc.find("sign.embedding") == nullptr);
}

TEST_CASE("zero-depth encoder with identity projection returns normalized inputs") {
  Rng rng(6, streams::kInit);
  TokenEncoderConfig cfg = small_config(3, 3);
  cfg.depth = 0;
  cfg.positional = false;
  cfg.input_norm = false;
  TokenEncoder enc(cfg, rng, "sign");
  enc.find("sign.proj.w")->value = Matrix::identity(3);
  const Matrix x = Matrix::from_rows({{3, 4, 0}, {0, 0, 2}, {9, 9, 9}});
  const TokenFeatures out = enc.encode_rows(x, 2);
  REQUIRE(out.rows.rows() == 3);
  CHECK(out.rows(0, 0) == doctest::Approx(0.6));
  CHECK(out.rows(0, 1) == doctest::Approx(0.8));
  CHECK(out.rows(1, 2) == doctest::Approx(1.0));
  CHECK(out.mask == Mask{1, 1, 0});
  for (double v : out.rows.row(2)) CHECK(v == 0.0);
}

TEST_CASE("single token through a zero-depth text encoder is its normalized embedding") {
  Rng rng(7, streams::kInit);
  TokenEncoderConfig cfg = small_config(4, 4);
  cfg.vocab_size = 6;
  cfg.depth = 0;
  cfg.positional = false;
  cfg.input_norm = false;
  TokenEncoder enc(cfg, rng, "text");
  enc.find("text.proj.w")->value = Matrix::identity(4);
  const std::vector<std::uint32_t> ids{3};
  const TokenFeatures out = encode_text(ids, enc);
  const auto emb = enc.find("text.embedding")->value.row(3);
  double n = 0.0;
  for (double v : emb) n += v * v;
  n = std::sqrt(n);
  for (std::size_t j = 0; j < 4; ++j) CHECK(out.rows(0, j) == doctest::Approx(emb[j] / n).epsilon(1e-12));
}

TEST_CASE("encoded rows are unit length and padding is masked") {
  Rng rng(8, streams::kInit);
  TokenEncoder enc(small_config(5, 6), rng, "sign");
  for (int t = 0; t < 20; ++t) {
    const std::size_t rows = 1 + rng.below(8);
    const std::size_t valid = 1 + rng.below(rows);
    const TokenFeatures out = enc.encode_rows(random_matrix(rows, 5, rng), valid);
    for (std::size_t r = 0; r < rows; ++r) {
      if (r < valid) {
        CHECK(out.mask[r] == 1);
        CHECK(std::abs(row_norm(out.rows, r) - 1.0) < 1e-9);
      } else {
        CHECK(out.mask[r] == 0);
        CHECK(row_norm(out.rows, r) == 0.0);
      }
    }
  }
}

TEST_CASE("without positions the encoders are permutation equivariant") {
  Rng rng(9, streams::kInit);
  TokenEncoderConfig cfg = small_config(5, 6);
  cfg.positional = false;
  TokenEncoder sign(cfg, rng, "sign");
  const Matrix x = random_matrix(4, 5, rng);
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  Matrix xp(4, 5);
  for (std::size_t i = 0; i < 4; ++i) std::copy(x.row(perm[i]).begin(), x.row(perm[i]).end(), xp.row(i).begin());
  const TokenFeatures a = encode_sign(ClipFeatureSequence{x, 4, 16, 1}, sign);
  const TokenFeatures b = encode_sign(ClipFeatureSequence{xp, 4, 16, 1}, sign);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 6; ++j) CHECK(b.rows(i, j) == doctest::Approx(a.rows(perm[i], j)).epsilon(1e-12));
  }

  TokenEncoderConfig tcfg = small_config(6, 6);
  tcfg.vocab_size = 10;
  tcfg.positional = false;
  TokenEncoder text(tcfg, rng, "text");
  const std::vector<std::uint32_t> ids{4, 7, 1, 9};
  const std::vector<std::uint32_t> pids{1, 4, 9, 7};
  const TokenFeatures ta = encode_text(ids, text);
  const TokenFeatures tb = encode_text(pids, text);
  const std::size_t map[] = {2, 0, 3, 1};
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 6; ++j) CHECK(tb.rows(i, j) == doctest::Approx(ta.rows(map[i], j)).epsilon(1e-12));
  }

  const std::vector<std::uint32_t> twins{5, 5};
  const TokenFeatures tw = encode_text(twins, text);
  for (std::size_t j = 0; j < 6; ++j) CHECK(tw.rows(0, j) == tw.rows(1, j));
}

TEST_CASE("text longer than max_len is truncated and flagged") {
  Rng rng(10, streams::kInit);
  TokenEncoderConfig cfg = small_config(4, 4);
  cfg.vocab_size = 5;
  cfg.max_len = 32;
  TokenEncoder enc(cfg, rng, "text");
  std::vector<std::uint32_t> ids(33, 2);
  const TokenFeatures out = encode_text(ids, enc);
  CHECK(out.rows.rows() == 32);
  CHECK(out.truncated_from == 33);
  ids.resize(32);
  CHECK(encode_text(ids, enc).truncated_from == 0);
  CHECK_THROWS_AS(encode_text(std::vector<std::uint32_t>{}, enc), InputError);
  CHECK_THROWS_AS(encode_text(std::vector<std::uint32_t>{5}, enc), InputError);
}

TEST_CASE("sign sequences longer than max_len keep the first max_len clips") {
  Rng rng(11, streams::kInit);
  TokenEncoderConfig cfg = small_config(3, 4);
  cfg.max_len = 4;
  TokenEncoder enc(cfg, rng, "sign");
  const Matrix x = random_matrix(6, 3, rng);
  const TokenFeatures full = enc.encode_rows(x, 6);
  CHECK(full.rows.rows() == 4);
  CHECK(full.truncated_from == 6);
  const TokenFeatures head = enc.encode_rows(x.top_rows(4), 4);
  CHECK(full.rows == head.rows);
  CHECK_THROWS_AS(enc.encode_rows(random_matrix(2, 5, rng), 2), DimensionError);
  CHECK_THROWS_AS(enc.encode_rows(x, 0), InputError);
}

TEST_CASE("token encoder backward passes grad_check") {
  struct Variant {
    bool positional, input_norm, normalize;
    std::size_t depth, vocab;
  };
  const Variant variants[] = {{true, true, true, 1, 0},  {false, true, true, 2, 0}, {true, false, true, 1, 7},
                              {true, true, false, 1, 7}, {false, false, false, 0, 0}};
  Rng rng(12, streams::kInit);
  for (const Variant& v : variants) {
    TokenEncoderConfig cfg = small_config(v.vocab > 0 ? 4 : 3, 4);
    cfg.positional = v.positional;
    cfg.input_norm = v.input_norm;
    cfg.normalize = v.normalize;
    cfg.depth = v.depth;
    cfg.vocab_size = v.vocab;
    TokenEncoder enc(cfg, rng, "enc");
    const Matrix x = random_matrix(5, 3, rng);
    const std::vector<std::uint32_t> ids{1, 6, 3, 3};
    const Matrix w = random_matrix(cfg.max_len, 4, rng);
    const LossFn f = [&](bool g) {
      TokenEncoder::Trace trace;
      const TokenFeatures out = v.vocab > 0 ? enc.forward_ids(ids, trace) : enc.forward_rows(x, 4, trace);
      double l = 0.0;
      Matrix d(out.rows.rows(), 4);
      for (std::size_t i = 0; i < out.rows.rows(); ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
          l += w(i, j) * out.rows(i, j);
          d(i, j) = w(i, j);
        }
      }
      if (g) enc.backward(trace, d);
      return l;
    };
    const std::vector<Param*> ps = enc.params();
    const std::vector<double> errs = grad_check(f, ps);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      INFO(ps[i]->name << " depth=" << v.depth << " vocab=" << v.vocab);
      CHECK(errs[i] < 1e-5);
    }
  }
}
