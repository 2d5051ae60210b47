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
#include <set>

#include "oracles.hpp"
#include "signret/errors.hpp"
#include "signret/numerics.hpp"

using namespace signret;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.values()[i] - b.values()[i]));
  return d;
}

}  // namespace

TEST_CASE("matrix construction checks the data length") {
  CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1, 2, 3}), DimensionError);
  const Matrix m = Matrix::from_rows({{1, 2}, {3, 4}});
  CHECK(m.shape() == "2x2");
  CHECK(m(1, 0) == 3);
  CHECK(Matrix::identity(3)(2, 2) == 1.0);
  CHECK(m.top_rows(1) == Matrix::from_rows({{1, 2}}));
}

TEST_CASE("matmul examples") {
  const Matrix id = Matrix::identity(2);
  const Matrix b = Matrix::from_rows({{1, 0, 1}, {0, 1, 1}});
  CHECK(matmul(id, b) == b);
  CHECK(matmul(Matrix::from_rows({{2}}), Matrix::from_rows({{3}})) == Matrix::from_rows({{6}}));
  CHECK_THROWS_AS(matmul(b, b), DimensionError);
  try {
    matmul(b, b);
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
  }
}

TEST_CASE("matmul and its transposed variants match the triple-loop oracle") {
  Rng rng(11, streams::kData);
  SUBCASE("3x4 by 4x2") {
    const Matrix a = random_matrix(3, 4, rng);
    const Matrix b = random_matrix(4, 2, rng);
    CHECK(max_abs_diff(matmul(a, b), oracle::matmul(a, b)) < 1e-14);
  }
  SUBCASE("100 random shapes") {
    for (int t = 0; t < 100; ++t) {
      const std::size_t r = 1 + rng.below(7), k = 1 + rng.below(7), c = 1 + rng.below(7);
      const Matrix a = random_matrix(r, k, rng);
      const Matrix b = random_matrix(k, c, rng);
      const Matrix expect = oracle::matmul(a, b);
      CHECK(max_abs_diff(matmul(a, b), expect) < 1e-12);
      CHECK(max_abs_diff(matmul_nt(a, transpose(b)), expect) < 1e-12);
      CHECK(max_abs_diff(matmul_tn(transpose(a), b), expect) < 1e-12);
    }
  }
}

TEST_CASE("softmax_rows examples") {
  const Matrix row = Matrix::from_rows({{1, 0, 1}});
  const Matrix p = softmax_rows(row, 1.0);
  const double e = std::exp(1.0);
  CHECK(p(0, 0) == doctest::Approx(e / (2 * e + 1)).epsilon(1e-12));
  CHECK(p(0, 0) == doctest::Approx(0.42232).epsilon(1e-5));
  CHECK(p(0, 1) == doctest::Approx(0.15536).epsilon(1e-4));

  const Matrix u = softmax_rows(Matrix::from_rows({{-7.5, -7.5, -7.5}}), 0.3);
  for (double v : u.values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  const Mask mask{1, 0, 1};
  const Matrix masked = softmax_rows(row, 1.0, mask);
  CHECK(masked(0, 0) == doctest::Approx(0.5));
  CHECK(masked(0, 1) == 0.0);
  CHECK(masked(0, 2) == doctest::Approx(0.5));
}

TEST_CASE("softmax_rows errors") {
  const Matrix row = Matrix::from_rows({{1, 2}});
  CHECK_THROWS_AS(softmax_rows(row, 0.0), ParameterError);
  CHECK_THROWS_AS(softmax_rows(row, -1.0), ParameterError);
  const Mask none{0, 0};
  CHECK_THROWS_AS(softmax_rows(row, 1.0, none), DegenerateInputError);
}

TEST_CASE("softmax_rows properties") {
  Rng rng(5, streams::kData);
  for (int t = 0; t < 200; ++t) {
    const std::size_t r = 1 + rng.below(5), c = 1 + rng.below(6);
    Matrix m = random_matrix(r, c, rng);
    for (double& v : m.values()) v *= 30.0;
    Mask mask(c, 1);
    for (auto& f : mask) f = rng.uniform() < 0.7;
    mask[rng.below(c)] = 1;
    const double temp = rng.uniform(0.01, 3.0);
    const Matrix p = softmax_rows(m, temp, mask);
    CHECK(p.all_finite());
    for (std::size_t i = 0; i < r; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        if (!mask[j]) CHECK(p(i, j) == 0.0);
        s += p(i, j);
      }
      CHECK(std::abs(s - 1.0) < 1e-12);
    }
    // Row-shift invariance.
    Matrix shifted = m;
    for (std::size_t i = 0; i < r; ++i) {
      const double k = rng.uniform(-50, 50);
      for (double& v : shifted.row(i)) v += k;
    }
    CHECK(max_abs_diff(softmax_rows(shifted, temp, mask), p) < 1e-12);
  }
}

TEST_CASE("softmax does not overflow on large inputs") {
  const Matrix p = softmax_rows(Matrix::from_rows({{1000, 999, -1000}}), 1.0);
  CHECK(p.all_finite());
  CHECK(p(0, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
}

TEST_CASE("grad_check examples") {
  Param x("x", Matrix::from_rows({{3.0}}));
  Param* ps[] = {&x};
  SUBCASE("quadratic") {
    const LossFn f = [&](bool g) {
      const double v = x.value(0, 0);
      if (g) x.grad(0, 0) += 2 * v;
      return v * v;
    };
    const auto err = grad_check(f, ps, 1e-5);
    REQUIRE(err.size() == 1);
    CHECK(err[0] < 1e-9);
  }
  SUBCASE("constant") {
    const LossFn f = [&](bool) { return 4.0; };
    CHECK(grad_check(f, ps, 1e-5)[0] == 0.0);
  }
  SUBCASE("a wrong gradient is reported") {
    const LossFn f = [&](bool g) {
      const double v = x.value(0, 0);
      if (g) x.grad(0, 0) += 3 * v;
      return v * v;
    };
    CHECK(grad_check(f, ps, 1e-5)[0] > 0.3);
  }
  SUBCASE("step and finiteness are validated") {
    const LossFn ok = [&](bool) { return 1.0; };
    CHECK_THROWS_AS(grad_check(ok, ps, 0.0), ParameterError);
    CHECK_THROWS_AS(grad_check(ok, ps, 1e-2), ParameterError);
    const LossFn bad = [&](bool) { return std::nan(""); };
    CHECK_THROWS_AS(grad_check(bad, ps, 1e-5), EvaluationError);
  }
  CHECK(x.value(0, 0) == 3.0);
}

TEST_CASE("matmul backward passes grad_check") {
  Rng rng(3, streams::kData);
  Param a("a", random_matrix(3, 4, rng));
  Param b("b", random_matrix(4, 2, rng));
  const Matrix w = random_matrix(3, 2, rng);
  Param* ps[] = {&a, &b};
  const LossFn f = [&](bool g) {
    const Matrix c = matmul(a.value, b.value);
    double l = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) l += w.values()[i] * c.values()[i];
    if (g) {
      const MatmulGrad mg = matmul_backward(a.value, b.value, w);
      add_inplace(a.grad, mg.da);
      add_inplace(b.grad, mg.db);
    }
    return l;
  };
  for (double e : grad_check(f, ps)) CHECK(e < 1e-5);
}

TEST_CASE("softmax backward passes grad_check") {
  Rng rng(4, streams::kData);
  const Matrix base = random_matrix(3, 5, rng);
  const Matrix w = random_matrix(3, 5, rng);
  for (double temp : {0.07, 1.0, 2.5}) {
    // Inputs on the temperature's scale keep the softmax away from saturation.
    Param x("x", base);
    for (double& v : x.value.values()) v *= 2.0 * temp;
    Param* ps[] = {&x};
    const LossFn f = [&](bool g) {
      const Matrix y = softmax_rows(x.value, temp);
      double l = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) l += w.values()[i] * y.values()[i];
      if (g) add_inplace(x.grad, softmax_rows_backward(y, w, temp));
      return l;
    };
    INFO("temperature " << temp);
    CHECK(grad_check(f, ps)[0] < 1e-5);
  }
}

TEST_CASE("rng streams are reproducible and independent") {
  Rng a(42, streams::kInit);
  Rng b(42, streams::kInit);
  Rng c(42, streams::kSampling);
  std::vector<std::uint64_t> xa, xb, xc;
  for (int i = 0; i < 64; ++i) {
    xa.push_back(a.next_u64());
    xb.push_back(b.next_u64());
    xc.push_back(c.next_u64());
  }
  CHECK(xa == xb);
  CHECK(xa != xc);

  // Pinned values guard against accidental changes to the generator.
  Rng pinned(42, streams::kInit);
  CHECK(pinned.next_u64() == 0xf8e9115529569ef6ULL);
  CHECK(pinned.next_u64() == 0x46c7a090a4f5675eULL);
  CHECK(pinned.next_u64() == 0xb9ca30e26deba89eULL);
  // The first uniform is the top 53 bits of the first word above.
  Rng draws(42, streams::kInit);
  CHECK(draws.uniform() == 0.97230633095872532);
  CHECK(draws.normal() == -0.12215260652246565);
  CHECK(draws.below(1000) == 474);

  const Rng root(7, streams::kAugment);
  Rng s1 = root.split(1);
  Rng s1b = root.split(1);
  Rng s2 = root.split(2);
  CHECK(s1.next_u64() == s1b.next_u64());
  CHECK(s1.next_u64() != s2.next_u64());
  CHECK(root.counter() == 0);
}

TEST_CASE("rng draws stay in range with sane moments") {
  Rng rng(9, streams::kData);
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double z = rng.normal();
    sum += z;
    sq += z * z;
    CHECK(rng.below(7) < 7);
  }
  CHECK(std::abs(sum / n) < 0.05);
  CHECK(std::abs(sq / n - 1.0) < 0.05);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 500; ++i) seen.insert(rng.below(5));
  CHECK(seen.size() == 5);
}

TEST_CASE("shuffle is a permutation and deterministic") {
  std::vector<int> v(20), w;
  for (int i = 0; i < 20; ++i) v[i] = i;
  w = v;
  Rng a(1, 2), b(1, 2);
  a.shuffle(std::span<int>(v));
  b.shuffle(std::span<int>(w));
  CHECK(v == w);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 20; ++i) CHECK(sorted[i] == i);
}
