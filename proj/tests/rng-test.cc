// tests/rng-test.cc

// Copyright 2026  The zeroseg Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <cmath>

#include "doctest.h"
#include "zeroseg/rng.h"

namespace zeroseg {

TEST_CASE("FNV-1a reference values") {
  CHECK(HashString("") == 0xcbf29ce484222325ULL);
  CHECK(HashString("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(HashString("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("counter streams are pure functions of their key") {
  CounterRng a(7, 1, 2, 3), b(7, 1, 2, 3), c(7, 1, 2, 4);
  for (int i = 0; i < 10; ++i) {
    const double u = a.Uniform();
    CHECK(u == b.Uniform());
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
  CHECK(CounterRng(7, 1, 2, 3).NextU64() != c.NextU64());
}

TEST_CASE("uniform and normal moments") {
  CounterRng r(1, 0, 0);
  double s = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) s += r.Uniform();
  CHECK(std::abs(s / n - 0.5) < 0.005);

  Engine e = MakeEngine(3);
  double m = 0.0, v = 0.0;
  for (int i = 0; i < n / 10; ++i) {
    const double x = SampleStandardNormal(e, 1)(0);
    m += x;
    v += x * x;
  }
  m /= n / 10;
  v /= n / 10;
  CHECK(std::abs(m) < 0.03);
  CHECK(std::abs(v - 1.0) < 0.05);
}

TEST_CASE("gamma moments") {
  Engine e = MakeEngine(11);
  for (double shape : {0.3, 1.0, 4.5}) {
    double s = 0.0, s2 = 0.0;
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
      const double g = SampleGamma(e, shape);
      CHECK(g >= 0.0);
      s += g;
      s2 += g * g;
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    CHECK(std::abs(mean - shape) < 0.05 * std::max(1.0, shape));
    CHECK(std::abs(var - shape) < 0.1 * std::max(1.0, shape));
  }
}

TEST_CASE("Dirichlet draws") {
  Engine e = MakeEngine(5);
  const std::vector<double> w = SampleDirichlet(e, {1.0, 0.0, 2.0});
  CHECK(w[1] == 0.0);
  CHECK(std::abs(w[0] + w[1] + w[2] - 1.0) < 1e-12);
  std::vector<double> mean(3, 0.0);
  for (int i = 0; i < 20000; ++i) {
    const auto d = SampleDirichlet(e, {1.0, 2.0, 3.0});
    for (int k = 0; k < 3; ++k) mean[k] += d[k] / 20000.0;
  }
  CHECK(std::abs(mean[0] - 1.0 / 6) < 0.01);
  CHECK(std::abs(mean[2] - 0.5) < 0.01);
}

TEST_CASE("inverse-Wishart mean") {
  Engine e = MakeEngine(9);
  Matrix scale(2, 2);
  scale << 2.0, 0.5, 0.5, 1.0;
  const double dof = 8.0;
  Matrix mean = Matrix::Zero(2, 2);
  const int n = 20000;
  for (int i = 0; i < n; ++i) mean += SampleInverseWishart(e, scale, dof) / n;
  const Matrix expect = scale / (dof - 2 - 1);
  CHECK((mean - expect).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("sampling from log weights") {
  const double lw[2] = {std::log(1.0), std::log(3.0)};
  CHECK(SampleFromLogWeights(lw, 2, 0.2) == 0);
  CHECK(SampleFromLogWeights(lw, 2, 0.3) == 1);
  const double huge[3] = {-1e300, 0.0, -1e300};
  CHECK(SampleFromLogWeights(huge, 3, 0.999) == 1);
}

}  // namespace zeroseg
