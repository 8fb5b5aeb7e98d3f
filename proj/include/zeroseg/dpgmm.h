// zeroseg/dpgmm.h

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

// Dirichlet-process Gaussian mixture clustering with the sub-cluster
// split/merge sampler.  One iteration alternates
//   1. a restricted Gibbs sweep over the K instantiated components
//      (weights, Gaussian parameters, frame assignments);
//   2. a sweep over the two sub-clusters maintained inside every component;
//   3. a round of Metropolis-Hastings split/merge proposals built from the
//      sub-clusters.
// All per-frame draws come from counter-based streams keyed by
// (seed, step, frame), so results do not depend on the thread count.

#ifndef ZEROSEG_DPGMM_H_
#define ZEROSEG_DPGMM_H_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "zeroseg/base.h"
#include "zeroseg/features.h"
#include "zeroseg/labeling.h"
#include "zeroseg/rng.h"

namespace zeroseg {

/// Normal-inverse-Wishart parameters {mean, scale, kappa, nu}.
struct NiwParams {
  Vector mean;
  Matrix scale;
  double kappa = 1.0;
  double nu = 1.0;

  int Dim() const { return static_cast<int>(mean.size()); }
  bool operator==(const NiwParams &other) const;
};

/// Throws ParameterError unless scale is symmetric positive-definite,
/// kappa > 0 and nu > D - 1.
void ValidateNiw(const NiwParams &p);

/// Count, sum and sum of outer products of a set of frames.
struct SufficientStats {
  std::int64_t count = 0;
  Vector sum;
  Matrix outer;

  explicit SufficientStats(int dim = 0)
      : sum(Vector::Zero(dim)), outer(Matrix::Zero(dim, dim)) {}
  void Add(const Eigen::Ref<const Vector> &x);
  void Merge(const SufficientStats &other);
  static SufficientStats FromRows(const Matrix &rows);
};

/// Conjugate NIW update.  With no frames the prior is returned unchanged.
NiwParams NiwPosterior(const NiwParams &prior, const SufficientStats &stats);
NiwParams NiwPosterior(const NiwParams &prior, const Matrix &frames);

/// log p(frames) with the Gaussian parameters integrated out under `prior`.
double LogMarginalLikelihood(const NiwParams &prior, const SufficientStats &stats);

/// Weakly informative prior scaled to the data: mean = data mean,
/// scale = D * data covariance (eigenvalues floored), kappa = 1, nu = D + 3.
NiwParams DefaultPrior(const Matrix &data);

/// 1e-6 times the mean per-dimension variance of the data (1e-6 if the data
/// are constant).
double VarianceFloor(const Matrix &data);

/// Full-covariance Gaussian with a cached Cholesky factor.
class Gaussian {
 public:
  Gaussian() = default;
  Gaussian(Vector mean, Matrix cov);

  const Vector &mean() const { return mean_; }
  const Matrix &cov() const { return cov_; }
  int Dim() const { return static_cast<int>(mean_.size()); }

  double LogDensity(const Eigen::Ref<const Vector> &x) const;
  /// Log densities of rows [begin, end) of `data`.
  Vector LogDensities(const Matrix &data, Eigen::Index begin, Eigen::Index end) const;

 private:
  Vector mean_;
  Matrix cov_;
  Matrix chol_;  // lower Cholesky factor of cov_
  double log_norm_ = 0.0;
};

/// Raises covariance eigenvalues below `floor` to `floor`.  Returns true if
/// anything changed.
bool FloorCovariance(double floor, Matrix *cov);

/// Draws (mean, covariance) from NIW(p); covariance eigenvalues floored.
Gaussian SampleNiw(const NiwParams &p, double variance_floor, Engine &rng);

struct SubComponent {
  double weight = 0.5;
  Gaussian gaussian;
  std::int64_t count = 0;
};

struct GaussianComponent {
  double weight = 0.0;
  Gaussian gaussian;
  std::int64_t count = 0;
  std::array<SubComponent, 2> sub;  // [0] = "l", [1] = "r"
};

struct MoveCounters {
  std::int64_t splits_proposed = 0, splits_accepted = 0;
  std::int64_t merges_proposed = 0, merges_accepted = 0;
};

struct DpgmmState {
  double alpha = 1.0;
  NiwParams prior;
  double variance_floor = 1e-6;
  std::vector<GaussianComponent> components;
  std::vector<int> z;               // component per frame
  std::vector<std::uint8_t> z_sub;  // 0 = l, 1 = r
  std::uint64_t seed = 0;
  std::int64_t step = 0;  // advanced by every sampling operation
  MoveCounters moves;

  int NumComponents() const { return static_cast<int>(components.size()); }
};

/// Throws ConsistencyError if counts, labels or weights violate the state
/// invariants.
void CheckState(const DpgmmState &state, std::int64_t num_frames);

/// All frames of an archive stacked in archive order.
Matrix FlattenFrames(const FeatureArchive &archive);

/// A single component holding every frame with moments taken from the data.
/// Sub-labels split the frames at the mean along the leading principal axis.
DpgmmState InitState(const Matrix &data, double alpha, const NiwParams &prior,
                     std::uint64_t seed);
DpgmmState InitState(const FeatureArchive &data, double alpha, const NiwParams &prior,
                     std::uint64_t seed);

void RestrictedGibbsSweep(const Matrix &data, int threads, DpgmmState *state);
/// Dirichlet parameters of a component's two sub-cluster weights.
std::array<double, 2> SubWeightPrior(std::int64_t n_left, std::int64_t n_right, double alpha);

void SampleSubclusters(const Matrix &data, int threads, DpgmmState *state);

enum class MoveKind { kRandom, kSplit, kMerge };

struct MoveOutcome {
  MoveKind kind = MoveKind::kSplit;
  bool accepted = false;
  double log_hastings = 0.0;
};

/// One Metropolis-Hastings split or merge proposal.  With kRandom the move
/// type and its target are drawn from the state's RNG; otherwise `first`
/// (and `second` for merges) select the components, or are drawn when < 0.
/// A merge with fewer than two components is skipped and reported rejected.
MoveOutcome ProposeSplitMerge(const Matrix &data, DpgmmState *state,
                              MoveKind kind = MoveKind::kRandom, int first = -1,
                              int second = -1);

/// max(1, K) random proposals.
void SplitMergeRound(const Matrix &data, DpgmmState *state);

/// Mixture read off a sampler state, or loaded from a DPGM1 file.
struct DpgmmModel {
  double alpha = 1.0;
  NiwParams prior;
  std::vector<double> weights;
  std::vector<Gaussian> gaussians;

  int NumComponents() const { return static_cast<int>(weights.size()); }
};

DpgmmModel ModelFromState(const DpgmmState &state);

/// Posterior responsibilities pi_k N(x|k) / sum_j pi_j N(x|j), computed in
/// the log domain.
Vector Posterior(const DpgmmModel &model, const Eigen::Ref<const Vector> &frame);

/// Argmax-posterior label per frame; ties go to the lowest component index.
std::vector<LabelSequence> LabelFrames(const DpgmmModel &model,
                                       const FeatureArchive &data, int threads = 1);

struct DpgmmConfig {
  double alpha = 1.0;
  std::optional<NiwParams> prior;  // DefaultPrior(data) when unset
  int iterations = 100;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct DpgmmResult {
  DpgmmState state;
  DpgmmModel model;
  std::vector<LabelSequence> labels;
};

DpgmmResult RunDpgmm(const FeatureArchive &data, const DpgmmConfig &config);

// DPGM1 (little-endian): "DPGM1\0", u32 D, f64 alpha, prior mean (D f64),
// prior scale (D*D f64 row-major), f64 kappa, f64 nu, u32 K, then per
// component f64 weight, D f64 mean, D*D f64 covariance.
void WriteDpgmmModel(std::ostream &os, const DpgmmModel &model);
void WriteDpgmmModel(const std::string &path, const DpgmmModel &model);
DpgmmModel ReadDpgmmModel(std::istream &is);
DpgmmModel ReadDpgmmModel(const std::string &path);

}  // namespace zeroseg

#endif  // ZEROSEG_DPGMM_H_
