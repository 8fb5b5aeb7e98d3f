// zeroseg/mtlnet.h

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

// Feed-forward multi-task network: shared dense layers (sigmoid, except one
// linear bottleneck) followed by one softmax head per task.  Trained with
// plain SGD on the weighted sum of per-task cross-entropies, optionally with
// a speaker head whose gradient is reversed into the shared layers.

#ifndef ZEROSEG_MTLNET_H_
#define ZEROSEG_MTLNET_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "zeroseg/base.h"
#include "zeroseg/features.h"

namespace zeroseg {

enum class Activation : std::uint8_t { kSigmoid = 0, kLinear = 1 };

struct DenseLayer {
  Matrix w;  // out x in
  Vector b;  // out
  Activation act = Activation::kSigmoid;

  int In() const { return static_cast<int>(w.cols()); }
  int Out() const { return static_cast<int>(w.rows()); }
};

struct TaskHead {
  std::string name;
  double weight = 1.0;  // task weight omega
  Matrix w;             // classes x top shared width
  Vector b;

  int NumClasses() const { return static_cast<int>(w.rows()); }
};

struct MtlNetwork {
  std::vector<DenseLayer> shared;
  int bottleneck = 0;  // index into `shared`
  std::vector<TaskHead> heads;

  int InputDim() const { return shared.front().In(); }
  int BottleneckDim() const { return shared[bottleneck].Out(); }
  int HeadIndex(const std::string &name) const;  // -1 if absent
};

/// Throws ShapeError or ParameterError unless layer sizes chain, exactly the
/// bottleneck layer is linear, and every head reads the top shared layer.
void ValidateNetwork(const MtlNetwork &net);

struct TaskSpec {
  std::string name;
  int num_classes;
  double weight = 1.0;
};

/// Shared layer widths `hidden`, with hidden[bottleneck] linear.  Weights are
/// drawn uniformly from +-sqrt(6 / (fan_in + fan_out)); biases start at 0.
MtlNetwork CreateNetwork(int input_dim, const std::vector<int> &hidden, int bottleneck,
                         const std::vector<TaskSpec> &tasks, std::uint64_t seed);

struct ForwardOutput {
  std::vector<Vector> task_probs;  // one softmax vector per head
  Vector bottleneck;
};

ForwardOutput Forward(const MtlNetwork &net, const Eigen::Ref<const Vector> &input);

/// Bottleneck activations of every row of `inputs`.
Matrix BottleneckRows(const MtlNetwork &net, const Matrix &inputs);

/// Frames of one task.  `utterance_ids` (one per frame, may be empty) drive
/// the held-out split.
struct TaskData {
  Matrix inputs;
  std::vector<int> labels;
  std::vector<std::string> utterance_ids;

  Eigen::Index Size() const { return inputs.rows(); }
};

struct Batch {
  int task = 0;
  Matrix inputs;
  std::vector<int> labels;
};

/// omega_task * sum_i -log p(label_i | input_i).
double BatchLoss(const MtlNetwork &net, const Batch &batch);

/// Gradient buffers shaped like the network.
struct Gradients {
  std::vector<Matrix> w;
  std::vector<Vector> b;
  std::vector<Matrix> head_w;
  std::vector<Vector> head_b;

  explicit Gradients(const MtlNetwork &net);
  void SetZero();
};

/// Adds d(BatchLoss)/d(theta) * scale to `grad` and returns BatchLoss.
/// Only the batch's head receives a head gradient.
double AccumulateGradients(const MtlNetwork &net, const Batch &batch, double scale,
                           Gradients *grad);

struct TrainConfig {
  double learning_rate = 0.1;
  int batch_size = 32;
  int epochs = 10;
  double min_improvement = 1e-4;  // held-out loss gain below this halves the rate
  double holdout_fraction = 0.1;
  std::uint64_t seed = 0;
  /// Called after every epoch with the epoch number (1-based).
  std::function<void(int, const MtlNetwork &)> on_epoch;
};

struct TrainReport {
  std::vector<double> train_loss;    // per epoch, summed over batches
  std::vector<double> holdout_loss;  // per epoch; empty without a held-out set
  std::vector<double> learning_rate; // rate used in each epoch
};

/// Utterance ids placed in the held-out set: the last `fraction` of the
/// distinct ids ordered by (FNV-1a hash, id).  Empty when fewer than
/// 1 / fraction distinct ids exist.
std::vector<std::string> HoldoutUtterances(const std::vector<std::string> &ids,
                                           double fraction);

/// Mini-batches of one epoch: indices of every task shuffled, cut into
/// batches, and interleaved round-robin across tasks.
std::vector<std::pair<int, std::vector<Eigen::Index>>> EpochSchedule(
    const std::vector<Eigen::Index> &task_sizes, int batch_size, std::uint64_t seed,
    int epoch);

/// SGD with the batch-mean gradient of sum_i omega_i L_i.  Each batch updates
/// the shared layers and only its own head.  tasks[i] trains heads[i].
TrainReport TrainMtl(const std::vector<TaskData> &tasks, const TrainConfig &config,
                     MtlNetwork *net);

struct AdversarialConfig {
  int phone_head = 0;
  int speaker_head = 1;
  double lambda = 0.0;
};

/// Frames carrying both a subword label (`data.labels`) and a speaker label.
/// Per batch: phone head -= rate * dLp, speaker head -= rate * dLs, shared
/// layers -= rate * (dLp - lambda dLs).  Rate halving follows the held-out
/// subword loss.  Throws MetadataError if speaker labels are missing.
TrainReport TrainAdversarial(const TaskData &data, const std::vector<int> &speaker_labels,
                             const AdversarialConfig &adv, const TrainConfig &config,
                             MtlNetwork *net);

/// Per-frame bottleneck activations of every utterance.
FeatureArchive ExtractBnf(const MtlNetwork &net, const FeatureArchive &archive);

// MTLN1 (little-endian): "MTLN1\0", u32 shared layer count, per layer
// u32 in, u32 out, u8 activation (0 sigmoid, 1 linear), out*in f64 weights
// row-major, out f64 biases; u32 bottleneck index; u32 head count, per head
// u32 name length, name, f64 omega, u32 classes, u32 in, weights, biases.
void WriteNetwork(std::ostream &os, const MtlNetwork &net);
void WriteNetwork(const std::string &path, const MtlNetwork &net);
MtlNetwork ReadNetwork(std::istream &is);
MtlNetwork ReadNetwork(const std::string &path);

}  // namespace zeroseg

#endif  // ZEROSEG_MTLNET_H_
