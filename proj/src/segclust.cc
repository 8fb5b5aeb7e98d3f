// src/segclust.cc

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

#include "zeroseg/segclust.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "zeroseg/text-io.h"

namespace zeroseg {

SymmetricEigen JacobiEigen(const Matrix &a, double tol, int max_sweeps) {
  if (a.rows() != a.cols()) throw ShapeError("eigen decomposition needs a square matrix");
  const Eigen::Index n = a.rows();
  Matrix m = 0.5 * (a + a.transpose());
  Matrix v = Matrix::Identity(n, n);
  const double target = tol * std::max(m.norm(), 1e-300);
  auto off_norm = [&]() {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) s += 2.0 * m(i, j) * m(i, j);
    return std::sqrt(s);
  };
  SymmetricEigen out;
  while (out.sweeps < max_sweeps && off_norm() > target) {
    ++out.sweeps;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (apq == 0.0) continue;
        // Rotation angle that zeroes m(p, q).
        const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double mkp = m(k, p), mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double mpk = m(p, k), mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
        m(p, q) = m(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (off_norm() > target)
    ZS_WARN << "Jacobi eigensolver stopped after " << out.sweeps
            << " sweeps with off-diagonal norm " << off_norm();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return m(i, i) < m(j, j); });
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = m(order[i], order[i]);
    out.vectors.col(i) = v.col(order[i]);
  }
  return out;
}

Matrix NormalizedLaplacian(const Matrix &affinity, std::vector<int> *isolated) {
  if (affinity.rows() != affinity.cols()) throw ShapeError("affinity must be square");
  const Eigen::Index n = affinity.rows();
  Vector inv_sqrt(n);
  if (isolated) isolated->clear();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = affinity.row(i).sum();
    if (d > 0) {
      inv_sqrt(i) = 1.0 / std::sqrt(d);
    } else {
      inv_sqrt(i) = 0.0;
      if (isolated) isolated->push_back(static_cast<int>(i));
    }
  }
  Matrix l = -(inv_sqrt.asDiagonal() * affinity * inv_sqrt.asDiagonal());
  l.diagonal().array() += 1.0;
  return 0.5 * (l + l.transpose());
}

namespace {

int Nearest(const Matrix &centroids, const Eigen::Ref<const Eigen::RowVectorXd> &x,
            double *dist = nullptr) {
  int best = 0;
  double best_d = (centroids.row(0) - x).squaredNorm();
  for (Eigen::Index c = 1; c < centroids.rows(); ++c) {
    const double d = (centroids.row(c) - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  if (dist) *dist = best_d;
  return best;
}

}  // namespace

KMeansResult KMeans(const Matrix &rows, int k, std::uint64_t seed, int max_iter,
                    double tol) {
  const Eigen::Index n = rows.rows();
  if (k < 1) throw ParameterError("k-means needs k >= 1");
  if (n < 1) throw InputError("k-means needs at least one point");
  std::mt19937_64 rng(seed);
  KMeansResult out;
  out.centroids.resize(k, rows.cols());

  // k-means++ seeding.
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  out.centroids.row(0) = rows.row(pick(rng));
  std::vector<double> d2(n);
  for (Eigen::Index i = 0; i < n; ++i)
    d2[i] = (rows.row(i) - out.centroids.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    Eigen::Index chosen = 0;
    if (total > 0) {
      const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      double acc = 0.0;
      chosen = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (d2[i] > 0 && u < acc) {
          chosen = i;
          break;
        }
      }
      if (chosen < 0)
        for (Eigen::Index i = n - 1; i >= 0; --i)
          if (d2[i] > 0) {
            chosen = i;
            break;
          }
    } else {
      chosen = pick(rng);
    }
    out.centroids.row(c) = rows.row(chosen);
    for (Eigen::Index i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], (rows.row(i) - out.centroids.row(c)).squaredNorm());
  }

  out.assignment.assign(n, 0);
  for (out.iterations = 1; out.iterations <= max_iter; ++out.iterations) {
    for (Eigen::Index i = 0; i < n; ++i) out.assignment[i] = Nearest(out.centroids, rows.row(i));
    Matrix sums = Matrix::Zero(k, rows.cols());
    std::vector<std::int64_t> counts(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(out.assignment[i]) += rows.row(i);
      ++counts[out.assignment[i]];
    }
    double moved = 0.0;
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      Eigen::RowVectorXd next = sums.row(c) / static_cast<double>(counts[c]);
      moved = std::max(moved, (next - out.centroids.row(c)).norm());
      out.centroids.row(c) = next;
    }
    if (moved < tol) break;
  }
  out.iterations = std::min(out.iterations, max_iter);
  for (Eigen::Index i = 0; i < n; ++i) out.assignment[i] = Nearest(out.centroids, rows.row(i));
  std::vector<bool> used(k, false);
  for (int a : out.assignment) used[a] = true;
  for (int c = 0; c < k; ++c)
    if (!used[c]) out.empty_clusters.push_back(c);
  if (!out.empty_clusters.empty())
    ZS_LOG << "k-means left " << out.empty_clusters.size() << " empty cluster(s)";
  return out;
}

ClusterAssignment SpectralCluster(const Matrix &segments, int num_clusters,
                                  std::uint64_t seed) {
  const Eigen::Index num_phones = segments.cols();
  if (num_clusters < 1 || num_clusters > num_phones)
    throw ParameterError("cluster count " + std::to_string(num_clusters) +
                         " outside [1, " + std::to_string(num_phones) + "]");
  if (segments.size() > 0 && segments.minCoeff() < 0)
    throw InputError("posteriorgram has negative entries");

  const Matrix x = segments.transpose();  // phones x segments
  const Matrix a = x * x.transpose();
  std::vector<int> isolated;
  NormalizedLaplacian(a, &isolated);
  std::vector<bool> is_isolated(num_phones, false);
  for (int i : isolated) is_isolated[i] = true;
  std::vector<Eigen::Index> connected;
  for (Eigen::Index i = 0; i < num_phones; ++i)
    if (!is_isolated[i]) connected.push_back(i);

  ClusterAssignment out;
  out.num_clusters = num_clusters;
  out.phone_to_cluster.assign(num_phones, 0);
  std::vector<std::int64_t> sizes(num_clusters, 0);
  // Isolated phones take clusters of their own while at least one is left
  // for the connected ones.
  int reserved = static_cast<int>(isolated.size());
  if (!connected.empty()) reserved = std::min(reserved, num_clusters - 1);
  reserved = std::min(reserved, num_clusters);
  const int k = num_clusters - reserved;
  if (!connected.empty()) {
    const auto nc = static_cast<Eigen::Index>(connected.size());
    Matrix sub(nc, nc);
    for (Eigen::Index r = 0; r < nc; ++r)
      for (Eigen::Index c = 0; c < nc; ++c) sub(r, c) = a(connected[r], connected[c]);
    const SymmetricEigen eig = JacobiEigen(NormalizedLaplacian(sub));
    const int kk = static_cast<int>(std::min<Eigen::Index>(k, nc));
    Matrix y(nc, kk);
    for (Eigen::Index r = 0; r < nc; ++r) {
      y.row(r) = eig.vectors.row(r).head(kk);
      const double norm = y.row(r).norm();
      if (norm > 0) y.row(r) /= norm;
    }
    const KMeansResult km = KMeans(y, kk, seed);
    for (Eigen::Index r = 0; r < nc; ++r) {
      out.phone_to_cluster[connected[r]] = km.assignment[r] + 1;
      ++sizes[km.assignment[r]];
    }
  }
  for (size_t j = 0; j < isolated.size(); ++j) {
    int target;
    if (static_cast<int>(j) < reserved)
      target = k + static_cast<int>(j);
    else
      target = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    ZS_LOG << "phone " << isolated[j] << " has no affinity; assigned to cluster " << target + 1;
    out.phone_to_cluster[isolated[j]] = target + 1;
    ++sizes[target];
  }
  for (int c = 0; c < num_clusters; ++c)
    if (sizes[c] == 0) out.empty_clusters.push_back(c + 1);
  return out;
}

std::vector<int> LabelSegments(const Matrix &segments, const ClusterAssignment &assignment) {
  if (static_cast<Eigen::Index>(assignment.phone_to_cluster.size()) != segments.cols())
    throw ShapeError("assignment covers " +
                     std::to_string(assignment.phone_to_cluster.size()) +
                     " phones, posteriorgram has " + std::to_string(segments.cols()));
  std::vector<int> labels(segments.rows());
  for (Eigen::Index k = 0; k < segments.rows(); ++k) {
    std::vector<double> score(assignment.num_clusters + 1, 0.0);
    for (Eigen::Index p = 0; p < segments.cols(); ++p)
      score[assignment.phone_to_cluster[p]] += segments(k, p);
    int best = 1;
    for (int r = 2; r <= assignment.num_clusters; ++r)
      if (score[r] > score[best]) best = r;
    labels[k] = best;
  }
  return labels;
}

void WriteAssignment(const std::string &path, const ClusterAssignment &assignment) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  for (size_t p = 0; p < assignment.phone_to_cluster.size(); ++p)
    os << p << '\t' << assignment.phone_to_cluster[p] << '\n';
  if (!os) throw Error("write failed: " + path);
}

ClusterAssignment ReadAssignment(const std::string &path) {
  ClusterAssignment out;
  ForEachTextRecord(path, [&](const std::vector<std::string> &f, std::uint64_t lineno) {
    if (f.size() != 2) throw FormatError("assignment line needs 2 fields", lineno);
    if (ParseInt(f[0], lineno) != static_cast<std::int64_t>(out.phone_to_cluster.size()))
      throw FormatError("phone indices must count up from 0", lineno);
    const int c = static_cast<int>(ParseInt(f[1], lineno));
    if (c < 1) throw FormatError("cluster ids start at 1", lineno);
    out.phone_to_cluster.push_back(c);
    out.num_clusters = std::max(out.num_clusters, c);
  });
  std::vector<bool> used(out.num_clusters + 1, false);
  for (int c : out.phone_to_cluster) used[c] = true;
  for (int c = 1; c <= out.num_clusters; ++c)
    if (!used[c]) out.empty_clusters.push_back(c);
  return out;
}

}  // namespace zeroseg
