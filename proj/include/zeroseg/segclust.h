// zeroseg/segclust.h

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

// Spectral clustering of phone classes from a segment-level posteriorgram
// and labeling of segments with the resulting clusters.

#ifndef ZEROSEG_SEGCLUST_H_
#define ZEROSEG_SEGCLUST_H_

#include <cstdint>
#include <string>
#include <vector>

#include "zeroseg/base.h"

namespace zeroseg {

/// Cluster id (1..num_clusters) of every phone class.
struct ClusterAssignment {
  std::vector<int> phone_to_cluster;
  int num_clusters = 0;
  std::vector<int> empty_clusters;  // ids with no phone
};

/// Eigenpairs of a symmetric matrix, eigenvalues ascending; vectors are the
/// columns of `vectors`.
struct SymmetricEigen {
  Vector values;
  Matrix vectors;
  int sweeps = 0;
};

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm falls
/// below tol * ||A||_F.  Throws ShapeError for a non-square input.
SymmetricEigen JacobiEigen(const Matrix &a, double tol = 1e-13, int max_sweeps = 100);

/// L = I - D^{-1/2} A D^{-1/2} with D the row sums of A.  Rows with zero
/// degree get a zero D^{-1/2} entry and are listed in `isolated`.
Matrix NormalizedLaplacian(const Matrix &affinity, std::vector<int> *isolated = nullptr);

struct KMeansResult {
  std::vector<int> assignment;  // 0-based cluster per row
  Matrix centroids;             // k x dim
  int iterations = 0;
  std::vector<int> empty_clusters;
};

/// Lloyd's algorithm from k-means++ seeding (std::mt19937_64 seeded with
/// `seed`).  Stops when no centroid moves by more than `tol` or after
/// `max_iter` iterations.  Ties in distance go to the lower cluster index.
/// A cluster that loses all its points keeps its centroid and is reported.
KMeansResult KMeans(const Matrix &rows, int k, std::uint64_t seed, int max_iter = 300,
                    double tol = 1e-9);

/// Clusters the phone classes (columns of `segments`, one row per segment)
/// into `num_clusters` groups: affinity A = X X^T over phones, normalized
/// Laplacian, the num_clusters smallest eigenvectors, unit row
/// normalization, k-means.  Throws ParameterError unless
/// 1 <= num_clusters <= number of phones, InputError for negative entries.
ClusterAssignment SpectralCluster(const Matrix &segments, int num_clusters,
                                  std::uint64_t seed);

/// Per segment, the cluster with the largest summed posterior mass over its
/// phones; ties go to the lowest cluster id.
std::vector<int> LabelSegments(const Matrix &segments, const ClusterAssignment &assignment);

// Assignment files: "phone_index<TAB>cluster_id" per phone, 0-based phone
// indices.
void WriteAssignment(const std::string &path, const ClusterAssignment &assignment);
ClusterAssignment ReadAssignment(const std::string &path);

}  // namespace zeroseg

#endif  // ZEROSEG_SEGCLUST_H_
