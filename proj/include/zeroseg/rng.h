// zeroseg/rng.h

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

#ifndef ZEROSEG_RNG_H_
#define ZEROSEG_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "zeroseg/base.h"

namespace zeroseg {

// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t HashCombine(std::uint64_t a, std::uint64_t b) {
  return Mix64(a ^ Mix64(b));
}

/// Stable 64-bit FNV-1a hash of a string.
std::uint64_t HashString(std::string_view s);

/// Counter-based random stream: the n-th draw of stream (seed, a, b, c) is a
/// pure function of those five integers.  Used wherever draws must not depend
/// on the order in which frames are visited (e.g. parallel sweeps).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
             std::uint64_t c = 0)
      : key_(HashCombine(HashCombine(HashCombine(seed, a), b), c)) {}

  std::uint64_t NextU64() { return Mix64(key_ ^ Mix64(++counter_)); }

  /// Uniform in (0, 1).
  double Uniform() {
    return (static_cast<double>(NextU64() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Sequential generator for draws made by one thread in a fixed order.
using Engine = std::mt19937_64;

inline Engine MakeEngine(std::uint64_t seed, std::uint64_t a = 0,
                         std::uint64_t b = 0) {
  return Engine(HashCombine(HashCombine(seed, a), b));
}

double SampleGamma(Engine &rng, double shape);

/// Dirichlet draw; zero-valued parameters yield exact zeros.
std::vector<double> SampleDirichlet(Engine &rng, const std::vector<double> &alpha);

Vector SampleStandardNormal(Engine &rng, int dim);

/// Draws a covariance from the inverse-Wishart IW(scale, dof) via the Bartlett
/// decomposition of the matching Wishart on the precision.
Matrix SampleInverseWishart(Engine &rng, const Matrix &scale, double dof);

/// Index drawn from unnormalized log-weights using one uniform in (0,1).
/// Ties in cumulative mass go to the lower index.
int SampleFromLogWeights(const double *log_weights, int n, double uniform);

}  // namespace zeroseg

#endif  // ZEROSEG_RNG_H_
