// src/rng.cc

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

#include "zeroseg/rng.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace zeroseg {

std::uint64_t HashString(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double SampleGamma(Engine &rng, double shape) {
  if (shape <= 0.0) return 0.0;
  std::gamma_distribution<double> gamma(shape, 1.0);
  return gamma(rng);
}

std::vector<double> SampleDirichlet(Engine &rng, const std::vector<double> &alpha) {
  std::vector<double> out(alpha.size());
  double total = 0.0;
  for (size_t i = 0; i < alpha.size(); ++i) {
    out[i] = SampleGamma(rng, alpha[i]);
    total += out[i];
  }
  if (total <= 0.0) {
    // Every shape tiny enough that all gammas underflowed: fall back to the
    // mean of the distribution.
    double asum = 0.0;
    for (double a : alpha) asum += a;
    for (size_t i = 0; i < alpha.size(); ++i)
      out[i] = asum > 0 ? alpha[i] / asum : 1.0 / alpha.size();
    return out;
  }
  for (double &v : out) v /= total;
  return out;
}

Vector SampleStandardNormal(Engine &rng, int dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = normal(rng);
  return v;
}

Matrix SampleInverseWishart(Engine &rng, const Matrix &scale, double dof) {
  const int d = static_cast<int>(scale.rows());
  // scale = U U^T.  With A the Bartlett factor of a standard Wishart,
  // Sigma = (U A^{-T}) (U A^{-T})^T is distributed IW(scale, dof).
  Eigen::LLT<Matrix> llt(scale);
  Matrix u = llt.matrixL();
  Matrix a = Matrix::Zero(d, d);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < d; ++i) {
    std::chi_squared_distribution<double> chi2(dof - i);
    a(i, i) = std::sqrt(std::max(chi2(rng), std::numeric_limits<double>::min()));
    for (int j = 0; j < i; ++j) a(i, j) = normal(rng);
  }
  Matrix a_inv = a.triangularView<Eigen::Lower>().solve(Matrix::Identity(d, d));
  Matrix c = u * a_inv.transpose();
  Matrix sigma = c * c.transpose();
  return 0.5 * (sigma + sigma.transpose());
}

int SampleFromLogWeights(const double *log_weights, int n, double uniform) {
  double max_lw = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) max_lw = std::max(max_lw, log_weights[k]);
  if (!std::isfinite(max_lw)) return 0;
  double total = 0.0;
  for (int k = 0; k < n; ++k) total += std::exp(log_weights[k] - max_lw);
  const double target = uniform * total;
  double acc = 0.0;
  for (int k = 0; k < n; ++k) {
    acc += std::exp(log_weights[k] - max_lw);
    if (target < acc) return k;
  }
  // Rounding left target >= acc; return the last index with non-zero mass.
  for (int k = n - 1; k >= 0; --k)
    if (log_weights[k] > -std::numeric_limits<double>::infinity()) return k;
  return n - 1;
}

}  // namespace zeroseg
