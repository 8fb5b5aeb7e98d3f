// src/dpgmm.cc

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

#include "zeroseg/dpgmm.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "zeroseg/binary-io.h"
#include "zeroseg/parallel.h"

namespace zeroseg {

namespace {

// Stream tags for counter-based and sequential draws.
enum StreamTag : std::uint64_t {
  kTagWeights = 1,
  kTagParams,
  kTagAssign,
  kTagSubParams,
  kTagSubAssign,
  kTagMove,
};

constexpr std::int64_t kStatsChunk = 4096;

double LogMultiGamma(double a, int dim) {
  double r = 0.25 * dim * (dim - 1) * std::log(std::numbers::pi);
  for (int j = 1; j <= dim; ++j) r += std::lgamma(a + 0.5 * (1 - j));
  return r;
}

double LogDet(const Matrix &spd) {
  Eigen::LLT<Matrix> llt(spd);
  if (llt.info() != Eigen::Success)
    throw ConsistencyError("matrix is not positive-definite");
  const Matrix &l = llt.matrixLLT();
  double r = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) r += std::log(l(i, i));
  return 2.0 * r;
}

Gaussian MomentGaussian(const SufficientStats &s, double floor) {
  Vector mean = s.sum / static_cast<double>(s.count);
  Matrix cov = s.outer / static_cast<double>(s.count) - mean * mean.transpose();
  cov = 0.5 * (cov + cov.transpose());
  FloorCovariance(floor, &cov);
  return Gaussian(std::move(mean), std::move(cov));
}

// Per-component and per-sub-cluster statistics.  Accumulated over fixed
// chunks and merged in chunk order so that sums are identical for any thread
// count.
struct StateStats {
  std::vector<SufficientStats> comp;
  std::vector<std::array<SufficientStats, 2>> sub;
};

StateStats GatherStats(const Matrix &data, const DpgmmState &state, int threads) {
  const int k_count = state.NumComponents();
  const int dim = static_cast<int>(data.cols());
  const std::int64_t n = data.rows();
  const std::int64_t num_chunks = (n + kStatsChunk - 1) / kStatsChunk;
  std::vector<std::vector<std::array<SufficientStats, 2>>> partial(num_chunks);
  ParallelFor(num_chunks, threads, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t c = begin; c < end; ++c) {
      auto &acc = partial[c];
      acc.assign(k_count, {SufficientStats(dim), SufficientStats(dim)});
      const std::int64_t lo = c * kStatsChunk, hi = std::min(n, lo + kStatsChunk);
      for (std::int64_t i = lo; i < hi; ++i)
        acc[state.z[i]][state.z_sub[i]].Add(data.row(i).transpose());
    }
  });
  StateStats out;
  out.sub.assign(k_count, {SufficientStats(dim), SufficientStats(dim)});
  for (const auto &acc : partial)
    for (int k = 0; k < k_count; ++k)
      for (int s = 0; s < 2; ++s) out.sub[k][s].Merge(acc[k][s]);
  out.comp.assign(k_count, SufficientStats(dim));
  for (int k = 0; k < k_count; ++k) {
    out.comp[k].Merge(out.sub[k][0]);
    out.comp[k].Merge(out.sub[k][1]);
  }
  return out;
}

void RefreshCounts(const StateStats &stats, DpgmmState *state) {
  for (int k = 0; k < state->NumComponents(); ++k) {
    auto &c = state->components[k];
    c.count = stats.comp[k].count;
    c.sub[0].count = stats.sub[k][0].count;
    c.sub[1].count = stats.sub[k][1].count;
  }
}

// Drops components without frames and renumbers z.
void PruneEmpty(DpgmmState *state) {
  std::vector<int> remap(state->components.size(), -1);
  std::vector<GaussianComponent> kept;
  for (size_t k = 0; k < state->components.size(); ++k) {
    if (state->components[k].count > 0) {
      remap[k] = static_cast<int>(kept.size());
      kept.push_back(std::move(state->components[k]));
    }
  }
  if (kept.size() == state->components.size()) {
    state->components = std::move(kept);
    return;
  }
  ZS_VLOG << "removing " << state->components.size() - kept.size()
          << " empty component(s)";
  state->components = std::move(kept);
  for (int &z : state->z) z = remap[z];
}

// Re-initializes the sub-labels of component k by splitting its frames at
// the mean along the leading eigenvector of their scatter.
void ResetSubLabels(const Matrix &data, int k, DpgmmState *state) {
  const int dim = static_cast<int>(data.cols());
  SufficientStats s(dim);
  for (size_t i = 0; i < state->z.size(); ++i)
    if (state->z[i] == k) s.Add(data.row(i).transpose());
  if (s.count == 0) return;
  const Vector mean = s.sum / static_cast<double>(s.count);
  const Matrix scatter = s.outer - static_cast<double>(s.count) * mean * mean.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(scatter);
  const Vector axis = eig.eigenvectors().col(dim - 1);
  for (size_t i = 0; i < state->z.size(); ++i) {
    if (state->z[i] != k) continue;
    state->z_sub[i] = (data.row(i).transpose() - mean).dot(axis) > 0 ? 1 : 0;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// NIW algebra.

bool NiwParams::operator==(const NiwParams &other) const {
  return mean.size() == other.mean.size() && scale.rows() == other.scale.rows() &&
         scale.cols() == other.scale.cols() && mean == other.mean &&
         scale == other.scale && kappa == other.kappa && nu == other.nu;
}

void ValidateNiw(const NiwParams &p) {
  const int d = p.Dim();
  if (d < 1) throw ParameterError("NIW prior has zero dimension");
  if (p.scale.rows() != d || p.scale.cols() != d)
    throw ParameterError("NIW scale matrix does not match the mean dimension");
  if (!(p.kappa > 0)) throw ParameterError("NIW kappa must be positive");
  if (!(p.nu > d - 1)) throw ParameterError("NIW nu must exceed D - 1");
  if (!p.scale.isApprox(p.scale.transpose(), 1e-10))
    throw ParameterError("NIW scale matrix is not symmetric");
  Eigen::LLT<Matrix> llt(p.scale);
  if (llt.info() != Eigen::Success)
    throw ParameterError("NIW scale matrix is not positive-definite");
}

void SufficientStats::Add(const Eigen::Ref<const Vector> &x) {
  ++count;
  sum += x;
  outer.noalias() += x * x.transpose();
}

void SufficientStats::Merge(const SufficientStats &other) {
  count += other.count;
  sum += other.sum;
  outer += other.outer;
}

SufficientStats SufficientStats::FromRows(const Matrix &rows) {
  SufficientStats s(static_cast<int>(rows.cols()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) s.Add(rows.row(i).transpose());
  return s;
}

NiwParams NiwPosterior(const NiwParams &prior, const SufficientStats &stats) {
  if (stats.count == 0) return prior;
  const double n = static_cast<double>(stats.count);
  NiwParams post;
  post.kappa = prior.kappa + n;
  post.nu = prior.nu + n;
  const Vector xbar = stats.sum / n;
  post.mean = (prior.kappa * prior.mean + stats.sum) / post.kappa;
  // S0 + sum x x^T + k0 m0 m0^T - kn mn mn^T, rearranged as
  // S0 + scatter + (k0 n / kn)(xbar - m0)(xbar - m0)^T to avoid cancellation.
  const Matrix scatter = stats.outer - n * xbar * xbar.transpose();
  const Vector diff = xbar - prior.mean;
  post.scale = prior.scale + scatter +
               (prior.kappa * n / post.kappa) * diff * diff.transpose();
  post.scale = 0.5 * (post.scale + post.scale.transpose());
  return post;
}

NiwParams NiwPosterior(const NiwParams &prior, const Matrix &frames) {
  return NiwPosterior(prior, SufficientStats::FromRows(frames));
}

double LogMarginalLikelihood(const NiwParams &prior, const SufficientStats &stats) {
  if (stats.count == 0) return 0.0;
  const NiwParams post = NiwPosterior(prior, stats);
  const int d = prior.Dim();
  const double n = static_cast<double>(stats.count);
  return -0.5 * n * d * std::log(std::numbers::pi) +
         LogMultiGamma(0.5 * post.nu, d) - LogMultiGamma(0.5 * prior.nu, d) +
         0.5 * prior.nu * LogDet(prior.scale) - 0.5 * post.nu * LogDet(post.scale) +
         0.5 * d * (std::log(prior.kappa) - std::log(post.kappa));
}

double VarianceFloor(const Matrix &data) {
  if (data.rows() < 2) return 1e-6;
  const Eigen::RowVectorXd mean = data.colwise().mean();
  const double mean_var =
      (data.rowwise() - mean).array().square().colwise().mean().mean();
  return mean_var > 0 ? 1e-6 * mean_var : 1e-6;
}

NiwParams DefaultPrior(const Matrix &data) {
  if (data.rows() == 0) throw InputError("cannot derive a prior from empty data");
  const int d = static_cast<int>(data.cols());
  NiwParams p;
  p.mean = data.colwise().mean().transpose();
  Matrix centered = data.rowwise() - p.mean.transpose();
  Matrix cov = centered.transpose() * centered / static_cast<double>(data.rows());
  cov = 0.5 * (cov + cov.transpose());
  FloorCovariance(VarianceFloor(data), &cov);
  p.scale = cov * static_cast<double>(d);
  p.kappa = 1.0;
  p.nu = d + 3.0;
  return p;
}

bool FloorCovariance(double floor, Matrix *cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(*cov);
  const Vector &values = eig.eigenvalues();
  if (values.minCoeff() >= floor) return false;
  Vector clamped = values.cwiseMax(floor);
  *cov = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
  *cov = 0.5 * (*cov + cov->transpose());
  return true;
}

Gaussian::Gaussian(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
  Eigen::LLT<Matrix> llt(cov_);
  if (llt.info() != Eigen::Success)
    throw ConsistencyError("Gaussian covariance is not positive-definite");
  chol_ = llt.matrixL();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < chol_.rows(); ++i) log_det += std::log(chol_(i, i));
  log_norm_ = -0.5 * Dim() * std::log(2.0 * std::numbers::pi) - log_det;
}

double Gaussian::LogDensity(const Eigen::Ref<const Vector> &x) const {
  Vector y = chol_.triangularView<Eigen::Lower>().solve(x - mean_);
  return log_norm_ - 0.5 * y.squaredNorm();
}

Vector Gaussian::LogDensities(const Matrix &data, Eigen::Index begin,
                              Eigen::Index end) const {
  Matrix diff = (data.middleRows(begin, end - begin).rowwise() - mean_.transpose())
                    .transpose();
  chol_.triangularView<Eigen::Lower>().solveInPlace(diff);
  return (log_norm_ - 0.5 * diff.colwise().squaredNorm().array()).transpose();
}

Gaussian SampleNiw(const NiwParams &p, double variance_floor, Engine &rng) {
  Matrix cov = SampleInverseWishart(rng, p.scale, p.nu);
  if (FloorCovariance(variance_floor, &cov))
    ZS_VLOG << "sampled covariance repaired by variance floor";
  Eigen::LLT<Matrix> llt(cov / p.kappa);
  Vector mean = p.mean + Matrix(llt.matrixL()) * SampleStandardNormal(rng, p.Dim());
  return Gaussian(std::move(mean), std::move(cov));
}

// ---------------------------------------------------------------------------
// Sampler state.

void CheckState(const DpgmmState &state, std::int64_t num_frames) {
  if (static_cast<std::int64_t>(state.z.size()) != num_frames ||
      state.z_sub.size() != state.z.size())
    throw ConsistencyError("label vectors do not match the frame count");
  const int k_count = state.NumComponents();
  std::vector<std::array<std::int64_t, 2>> counts(k_count, {0, 0});
  for (size_t i = 0; i < state.z.size(); ++i) {
    if (state.z[i] < 0 || state.z[i] >= k_count)
      throw ConsistencyError("frame label indexes a missing component");
    if (state.z_sub[i] > 1) throw ConsistencyError("sub-label out of range");
    ++counts[state.z[i]][state.z_sub[i]];
  }
  double weight_sum = 0.0;
  for (int k = 0; k < k_count; ++k) {
    const auto &c = state.components[k];
    if (c.count != counts[k][0] + counts[k][1] || c.sub[0].count != counts[k][0] ||
        c.sub[1].count != counts[k][1])
      throw ConsistencyError("component counts disagree with frame labels");
    if (std::abs(c.sub[0].weight + c.sub[1].weight - 1.0) > 1e-10)
      throw ConsistencyError("sub-component weights do not sum to one");
    weight_sum += c.weight;
  }
  if (weight_sum > 1.0 + 1e-10) throw ConsistencyError("mixture weights exceed one");
}

Matrix FlattenFrames(const FeatureArchive &archive) {
  if (archive.Empty()) return Matrix();
  Matrix out(archive.TotalFrames(), *archive.Dim());
  Eigen::Index row = 0;
  for (const auto &m : archive) {
    out.middleRows(row, m.NumFrames()) = m.frames;
    row += m.NumFrames();
  }
  return out;
}

DpgmmState InitState(const Matrix &data, double alpha, const NiwParams &prior,
                     std::uint64_t seed) {
  if (data.rows() == 0) throw InputError("DPGMM needs at least one frame");
  if (!(alpha > 0)) throw ParameterError("DP concentration alpha must be positive");
  ValidateNiw(prior);
  if (prior.Dim() != data.cols())
    throw ShapeError("prior dimension does not match the data");

  DpgmmState state;
  state.alpha = alpha;
  state.prior = prior;
  state.seed = seed;
  state.variance_floor = VarianceFloor(data);
  const std::int64_t n = data.rows();
  state.z.assign(n, 0);
  state.z_sub.assign(n, 0);
  state.components.emplace_back();
  ResetSubLabels(data, 0, &state);
  StateStats stats = GatherStats(data, state, 1);
  auto &c = state.components[0];
  c.gaussian = MomentGaussian(stats.comp[0], state.variance_floor);
  c.weight = static_cast<double>(n) / (n + alpha);
  for (int s = 0; s < 2; ++s) {
    const auto &ss = stats.sub[0][s];
    c.sub[s].gaussian = ss.count > 0 ? MomentGaussian(ss, state.variance_floor) : c.gaussian;
    c.sub[s].weight = (ss.count + 0.5 * alpha) / (n + alpha);
  }
  RefreshCounts(stats, &state);
  return state;
}

DpgmmState InitState(const FeatureArchive &data, double alpha, const NiwParams &prior,
                     std::uint64_t seed) {
  return InitState(FlattenFrames(data), alpha, prior, seed);
}

void RestrictedGibbsSweep(const Matrix &data, int threads, DpgmmState *state) {
  const std::uint64_t step = static_cast<std::uint64_t>(++state->step);
  PruneEmpty(state);
  const int k_count = state->NumComponents();
  StateStats stats = GatherStats(data, *state, threads);

  // (pi_1..pi_K, pi'_{K+1}) ~ Dir(N_1..N_K, alpha); the remainder is the mass
  // reserved for unseen components and is not stored.
  Engine weight_rng = MakeEngine(state->seed, step, kTagWeights);
  std::vector<double> dir_params;
  for (const auto &c : state->components) dir_params.push_back(static_cast<double>(c.count));
  dir_params.push_back(state->alpha);
  const std::vector<double> pi = SampleDirichlet(weight_rng, dir_params);

  Engine param_rng = MakeEngine(state->seed, step, kTagParams);
  for (int k = 0; k < k_count; ++k) {
    auto &c = state->components[k];
    c.weight = pi[k];
    c.gaussian = SampleNiw(NiwPosterior(state->prior, stats.comp[k]),
                           state->variance_floor, param_rng);
  }

  std::vector<double> log_weights(k_count);
  for (int k = 0; k < k_count; ++k) log_weights[k] = std::log(state->components[k].weight);
  ParallelFor(data.rows(), threads, [&](std::int64_t begin, std::int64_t end) {
    Matrix ll(end - begin, k_count);
    for (int k = 0; k < k_count; ++k)
      ll.col(k) = state->components[k].gaussian.LogDensities(data, begin, end).array() +
                  log_weights[k];
    std::vector<double> row(k_count);
    for (std::int64_t i = begin; i < end; ++i) {
      for (int k = 0; k < k_count; ++k) row[k] = ll(i - begin, k);
      CounterRng rng(state->seed, step, static_cast<std::uint64_t>(i), kTagAssign);
      state->z[i] = SampleFromLogWeights(row.data(), k_count, rng.Uniform());
    }
  });

  RefreshCounts(GatherStats(data, *state, threads), state);
  PruneEmpty(state);
}

std::array<double, 2> SubWeightPrior(std::int64_t n_left, std::int64_t n_right,
                                     double alpha) {
  return {static_cast<double>(n_left) + 0.5 * alpha, static_cast<double>(n_right) + 0.5 * alpha};
}

void SampleSubclusters(const Matrix &data, int threads, DpgmmState *state) {
  const std::uint64_t step = static_cast<std::uint64_t>(++state->step);
  const int k_count = state->NumComponents();
  StateStats stats = GatherStats(data, *state, threads);
  Engine rng = MakeEngine(state->seed, step, kTagSubParams);
  for (int k = 0; k < k_count; ++k) {
    auto &c = state->components[k];
    const auto prior = SubWeightPrior(stats.sub[k][0].count, stats.sub[k][1].count,
                                      state->alpha);
    const auto w = SampleDirichlet(rng, {prior[0], prior[1]});
    // Keep the two weights summing to one exactly.
    c.sub[0].weight = w[0];
    c.sub[1].weight = 1.0 - w[0];
    for (int s = 0; s < 2; ++s) {
      // An empty sub-cluster has the prior as its posterior.
      c.sub[s].gaussian = SampleNiw(NiwPosterior(state->prior, stats.sub[k][s]),
                                    state->variance_floor, rng);
    }
  }

  ParallelFor(data.rows(), threads, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t i = begin; i < end; ++i) {
      const auto &c = state->components[state->z[i]];
      const auto x = data.row(i).transpose();
      double lw[2];
      for (int s = 0; s < 2; ++s)
        lw[s] = std::log(c.sub[s].weight) + c.sub[s].gaussian.LogDensity(x);
      CounterRng r(state->seed, step, static_cast<std::uint64_t>(i), kTagSubAssign);
      state->z_sub[i] = static_cast<std::uint8_t>(SampleFromLogWeights(lw, 2, r.Uniform()));
    }
  });
  RefreshCounts(GatherStats(data, *state, threads), state);
}

namespace {

// Hastings ratios of the sub-cluster split/merge sampler.  With f(.) the NIW marginal likelihood and N the frame counts:
//
//   H_split(c -> l, r) = alpha * G(N_l) f(x_l) * G(N_r) f(x_r) / (G(N_c) f(x_c))
//
//   H_merge(m, n -> c) = G(N_m + N_n) f(x_m u x_n) / (alpha G(N_m) f(x_m) G(N_n) f(x_n))
//                        * G(alpha) / G(alpha + N_m + N_n)
//                        * G(alpha/2 + N_m) G(alpha/2 + N_n) / G(alpha/2)^2
//
// where G is the gamma function.  The last two factors of the merge ratio are
// the probability of the reverse split under the sub-cluster weight prior.
double LogSplitRatio(double alpha, const NiwParams &prior, const SufficientStats &whole,
                     const SufficientStats &left, const SufficientStats &right) {
  return std::log(alpha) + std::lgamma(static_cast<double>(left.count)) +
         LogMarginalLikelihood(prior, left) +
         std::lgamma(static_cast<double>(right.count)) +
         LogMarginalLikelihood(prior, right) -
         std::lgamma(static_cast<double>(whole.count)) -
         LogMarginalLikelihood(prior, whole);
}

double LogMergeRatio(double alpha, const NiwParams &prior, const SufficientStats &m,
                     const SufficientStats &n) {
  SufficientStats merged = m;
  merged.Merge(n);
  const double nm = static_cast<double>(m.count), nn = static_cast<double>(n.count);
  return -LogSplitRatio(alpha, prior, merged, m, n) + std::lgamma(alpha) -
         std::lgamma(alpha + nm + nn) + std::lgamma(0.5 * alpha + nm) +
         std::lgamma(0.5 * alpha + nn) - 2.0 * std::lgamma(0.5 * alpha);
}

MoveOutcome TrySplit(const Matrix &data, const StateStats &stats, int c, Engine &rng,
                     DpgmmState *state) {
  MoveOutcome out;
  out.kind = MoveKind::kSplit;
  ++state->moves.splits_proposed;
  const auto &left = stats.sub[c][0], &right = stats.sub[c][1];
  if (left.count == 0 || right.count == 0) {
    out.log_hastings = -std::numeric_limits<double>::infinity();
    return out;
  }
  out.log_hastings = LogSplitRatio(state->alpha, state->prior, stats.comp[c], left, right);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  if (!(out.log_hastings >= 0 || std::log(u) < out.log_hastings)) return out;

  out.accepted = true;
  ++state->moves.splits_accepted;
  // (pi_m, pi_n) = pi_c * Dir(N_l, N_r); parameters taken from the
  // sub-clusters, which were sampled from the posterior of exactly these
  // frames.
  const auto frac = SampleDirichlet(
      rng, {static_cast<double>(left.count), static_cast<double>(right.count)});
  GaussianComponent parent = state->components[c];
  const int new_index = state->NumComponents();
  GaussianComponent m, n;
  m.weight = parent.weight * frac[0];
  n.weight = parent.weight * frac[1];
  m.gaussian = parent.sub[0].gaussian;
  n.gaussian = parent.sub[1].gaussian;
  for (int s = 0; s < 2; ++s) {
    m.sub[s].gaussian = m.gaussian;
    n.sub[s].gaussian = n.gaussian;
  }
  state->components[c] = std::move(m);
  state->components.push_back(std::move(n));
  for (size_t i = 0; i < state->z.size(); ++i)
    if (state->z[i] == c && state->z_sub[i] == 1) state->z[i] = new_index;
  ResetSubLabels(data, c, state);
  ResetSubLabels(data, new_index, state);
  RefreshCounts(GatherStats(data, *state, 1), state);
  return out;
}

MoveOutcome TryMerge(const Matrix &data, const StateStats &stats, int a, int b,
                     Engine &rng, DpgmmState *state) {
  MoveOutcome out;
  out.kind = MoveKind::kMerge;
  ++state->moves.merges_proposed;
  if (a > b) std::swap(a, b);
  const auto &sa = stats.comp[a], &sb = stats.comp[b];
  if (sa.count == 0 || sb.count == 0) {
    out.log_hastings = -std::numeric_limits<double>::infinity();
    return out;
  }
  out.log_hastings = LogMergeRatio(state->alpha, state->prior, sa, sb);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  if (!(out.log_hastings >= 0 || std::log(u) < out.log_hastings)) return out;

  out.accepted = true;
  ++state->moves.merges_accepted;
  SufficientStats merged = sa;
  merged.Merge(sb);
  GaussianComponent c;
  const double wa = state->components[a].weight, wb = state->components[b].weight;
  c.weight = wa + wb;
  c.gaussian = SampleNiw(NiwPosterior(state->prior, merged), state->variance_floor, rng);
  // The merged component's sub-clusters start as the two merged components.
  c.sub[0].gaussian = state->components[a].gaussian;
  c.sub[1].gaussian = state->components[b].gaussian;
  c.sub[0].weight = wa + wb > 0 ? wa / (wa + wb) : 0.5;
  c.sub[1].weight = 1.0 - c.sub[0].weight;
  for (size_t i = 0; i < state->z.size(); ++i) {
    if (state->z[i] == a) {
      state->z_sub[i] = 0;
    } else if (state->z[i] == b) {
      state->z[i] = a;
      state->z_sub[i] = 1;
    } else if (state->z[i] > b) {
      --state->z[i];
    }
  }
  state->components[a] = std::move(c);
  state->components.erase(state->components.begin() + b);
  RefreshCounts(GatherStats(data, *state, 1), state);
  return out;
}

MoveOutcome ProposeWithStats(const Matrix &data, const StateStats &stats, MoveKind kind,
                             int first, int second, Engine &rng, DpgmmState *state) {
  const int k_count = state->NumComponents();
  if (kind == MoveKind::kRandom) {
    std::bernoulli_distribution coin(0.5);
    kind = coin(rng) ? MoveKind::kSplit : MoveKind::kMerge;
  }
  if (kind == MoveKind::kSplit) {
    if (first < 0) first = std::uniform_int_distribution<int>(0, k_count - 1)(rng);
    if (first >= k_count) throw ParameterError("split target out of range");
    return TrySplit(data, stats, first, rng, state);
  }
  if (k_count < 2) {
    ++state->moves.merges_proposed;
    MoveOutcome skipped;
    skipped.kind = MoveKind::kMerge;
    skipped.log_hastings = -std::numeric_limits<double>::infinity();
    return skipped;
  }
  if (first < 0) first = std::uniform_int_distribution<int>(0, k_count - 1)(rng);
  if (second < 0) {
    second = std::uniform_int_distribution<int>(0, k_count - 2)(rng);
    if (second >= first) ++second;
  }
  if (first >= k_count || second >= k_count || first == second)
    throw ParameterError("merge targets must be two distinct components");
  return TryMerge(data, stats, first, second, rng, state);
}

}  // namespace

MoveOutcome ProposeSplitMerge(const Matrix &data, DpgmmState *state, MoveKind kind,
                              int first, int second) {
  const std::uint64_t step = static_cast<std::uint64_t>(++state->step);
  Engine rng = MakeEngine(state->seed, step, kTagMove);
  StateStats stats = GatherStats(data, *state, 1);
  return ProposeWithStats(data, stats, kind, first, second, rng, state);
}

void SplitMergeRound(const Matrix &data, DpgmmState *state) {
  const std::uint64_t step = static_cast<std::uint64_t>(++state->step);
  Engine rng = MakeEngine(state->seed, step, kTagMove);
  StateStats stats = GatherStats(data, *state, 1);
  const int proposals = std::max(1, state->NumComponents());
  for (int p = 0; p < proposals; ++p) {
    MoveOutcome o = ProposeWithStats(data, stats, MoveKind::kRandom, -1, -1, rng, state);
    if (o.accepted) {
      ZS_VLOG << (o.kind == MoveKind::kSplit ? "split" : "merge")
              << " accepted, K = " << state->NumComponents();
      stats = GatherStats(data, *state, 1);
    }
  }
}

// ---------------------------------------------------------------------------
// Frame labeling.

DpgmmModel ModelFromState(const DpgmmState &state) {
  DpgmmModel model;
  model.alpha = state.alpha;
  model.prior = state.prior;
  for (const auto &c : state.components) {
    model.weights.push_back(c.weight);
    model.gaussians.push_back(c.gaussian);
  }
  return model;
}

Vector Posterior(const DpgmmModel &model, const Eigen::Ref<const Vector> &frame) {
  const int k_count = model.NumComponents();
  if (k_count == 0) throw InputError("model has no components");
  if (frame.size() != model.gaussians[0].Dim())
    throw ShapeError("frame dimension does not match the model");
  Vector lp(k_count);
  for (int k = 0; k < k_count; ++k)
    lp(k) = std::log(model.weights[k]) + model.gaussians[k].LogDensity(frame);
  const double mx = lp.maxCoeff();
  if (!std::isfinite(mx)) return Vector::Constant(k_count, 1.0 / k_count);
  Vector p = (lp.array() - mx).exp();
  return p / p.sum();
}

std::vector<LabelSequence> LabelFrames(const DpgmmModel &model, const FeatureArchive &data,
                                       int threads) {
  const int k_count = model.NumComponents();
  if (k_count == 0) throw InputError("model has no components");
  if (data.Dim() && *data.Dim() != model.gaussians[0].Dim())
    throw ShapeError("feature dimension does not match the model");
  std::vector<LabelSequence> out(data.Size());
  ParallelFor(static_cast<std::int64_t>(data.Size()), threads,
              [&](std::int64_t begin, std::int64_t end) {
                for (std::int64_t u = begin; u < end; ++u) {
                  const auto &m = data[u];
                  Matrix lp(m.NumFrames(), k_count);
                  for (int k = 0; k < k_count; ++k)
                    lp.col(k) = model.gaussians[k].LogDensities(m.frames, 0, m.NumFrames())
                                    .array() +
                                std::log(model.weights[k]);
                  std::vector<int> labels(m.NumFrames());
                  for (Eigen::Index t = 0; t < lp.rows(); ++t) {
                    int best = 0;
                    for (int k = 1; k < k_count; ++k)
                      if (lp(t, k) > lp(t, best)) best = k;
                    labels[t] = best;
                  }
                  out[u] = LabelSequence(m.utterance_id, std::move(labels));
                }
              });
  return out;
}

DpgmmResult RunDpgmm(const FeatureArchive &data, const DpgmmConfig &config) {
  if (config.iterations < 1) throw ParameterError("iterations must be at least 1");
  if (data.Empty() || data.TotalFrames() == 0) throw InputError("DPGMM needs frames");
  const Matrix frames = FlattenFrames(data);
  const NiwParams prior = config.prior ? *config.prior : DefaultPrior(frames);
  DpgmmResult result;
  result.state = InitState(frames, config.alpha, prior, config.seed);
  for (int it = 1; it <= config.iterations; ++it) {
    RestrictedGibbsSweep(frames, config.threads, &result.state);
    SampleSubclusters(frames, config.threads, &result.state);
    SplitMergeRound(frames, &result.state);
    if (it % 10 == 0 || it == config.iterations)
      ZS_LOG << "iteration " << it << ": K = " << result.state.NumComponents();
  }
  result.model = ModelFromState(result.state);
  result.labels = LabelFrames(result.model, data, config.threads);
  return result;
}

// ---------------------------------------------------------------------------
// DPGM1 model files.

void WriteDpgmmModel(std::ostream &os, const DpgmmModel &model) {
  const int d = model.prior.Dim();
  BinaryWriter w(os);
  w.Magic("DPGM1");
  w.U32(static_cast<std::uint32_t>(d));
  w.F64(model.alpha);
  for (int i = 0; i < d; ++i) w.F64(model.prior.mean(i));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) w.F64(model.prior.scale(i, j));
  w.F64(model.prior.kappa);
  w.F64(model.prior.nu);
  w.U32(static_cast<std::uint32_t>(model.NumComponents()));
  for (int k = 0; k < model.NumComponents(); ++k) {
    w.F64(model.weights[k]);
    const auto &g = model.gaussians[k];
    for (int i = 0; i < d; ++i) w.F64(g.mean()(i));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) w.F64(g.cov()(i, j));
  }
  w.Check("DPGMM model");
}

void WriteDpgmmModel(const std::string &path, const DpgmmModel &model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  WriteDpgmmModel(os, model);
}

DpgmmModel ReadDpgmmModel(std::istream &is) {
  BinaryReader r(is);
  r.Magic("DPGM1");
  const std::uint64_t dim_offset = r.offset();
  const int d = static_cast<int>(r.U32("dimension"));
  if (d < 1 || d > 1 << 16) throw FormatError("implausible model dimension", dim_offset);
  DpgmmModel model;
  model.alpha = r.F64("alpha");
  model.prior.mean.resize(d);
  model.prior.scale.resize(d, d);
  for (int i = 0; i < d; ++i) model.prior.mean(i) = r.F64("prior mean");
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) model.prior.scale(i, j) = r.F64("prior scale");
  model.prior.kappa = r.F64("prior kappa");
  model.prior.nu = r.F64("prior nu");
  const std::uint32_t k_count = r.U32("component count");
  for (std::uint32_t k = 0; k < k_count; ++k) {
    model.weights.push_back(r.F64("weight"));
    Vector mean(d);
    Matrix cov(d, d);
    for (int i = 0; i < d; ++i) mean(i) = r.F64("mean");
    const std::uint64_t cov_offset = r.offset();
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) cov(i, j) = r.F64("covariance");
    try {
      model.gaussians.emplace_back(std::move(mean), std::move(cov));
    } catch (const ConsistencyError &) {
      throw FormatError("component covariance is not positive-definite", cov_offset);
    }
  }
  return model;
}

DpgmmModel ReadDpgmmModel(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open model " + path);
  return ReadDpgmmModel(is);
}

}  // namespace zeroseg
