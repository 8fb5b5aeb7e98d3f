// src/mtlnet.cc

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

#include "zeroseg/mtlnet.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_set>

#include "zeroseg/binary-io.h"
#include "zeroseg/rng.h"

namespace zeroseg {

int MtlNetwork::HeadIndex(const std::string &name) const {
  for (size_t i = 0; i < heads.size(); ++i)
    if (heads[i].name == name) return static_cast<int>(i);
  return -1;
}

void ValidateNetwork(const MtlNetwork &net) {
  if (net.shared.empty()) throw ParameterError("network has no shared layers");
  if (net.bottleneck < 0 || net.bottleneck >= static_cast<int>(net.shared.size()))
    throw ParameterError("bottleneck index out of range");
  for (size_t l = 0; l < net.shared.size(); ++l) {
    const auto &layer = net.shared[l];
    if (layer.In() < 1 || layer.Out() < 1 || layer.b.size() != layer.Out())
      throw ShapeError("shared layer " + std::to_string(l) + " has inconsistent sizes");
    if (l > 0 && layer.In() != net.shared[l - 1].Out())
      throw ShapeError("shared layer " + std::to_string(l) + " input does not match layer " +
                       std::to_string(l - 1));
    const bool linear = layer.act == Activation::kLinear;
    if (linear != (static_cast<int>(l) == net.bottleneck))
      throw ParameterError("exactly the bottleneck layer must be linear");
  }
  if (net.heads.empty()) throw ParameterError("network has no task heads");
  const int top = net.shared.back().Out();
  std::set<std::string> names;
  for (const auto &h : net.heads) {
    if (h.NumClasses() < 1 || h.w.cols() != top || h.b.size() != h.NumClasses())
      throw ShapeError("head " + h.name + " does not attach to the top shared layer");
    if (!(h.weight >= 0)) throw ParameterError("head " + h.name + " has a negative weight");
    if (!names.insert(h.name).second) throw ParameterError("duplicate head name " + h.name);
  }
}

MtlNetwork CreateNetwork(int input_dim, const std::vector<int> &hidden, int bottleneck,
                         const std::vector<TaskSpec> &tasks, std::uint64_t seed) {
  if (input_dim < 1) throw ParameterError("input dimension must be positive");
  if (hidden.empty()) throw ParameterError("at least one shared layer is required");
  Engine rng = MakeEngine(seed, 0x6d746c6e);
  auto init = [&](int out, int in) {
    const double r = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> u(-r, r);
    Matrix w(out, in);
    for (int i = 0; i < out; ++i)
      for (int j = 0; j < in; ++j) w(i, j) = u(rng);
    return w;
  };
  MtlNetwork net;
  net.bottleneck = bottleneck;
  int in = input_dim;
  for (size_t l = 0; l < hidden.size(); ++l) {
    if (hidden[l] < 1) throw ParameterError("layer widths must be positive");
    DenseLayer layer;
    layer.w = init(hidden[l], in);
    layer.b = Vector::Zero(hidden[l]);
    layer.act = static_cast<int>(l) == bottleneck ? Activation::kLinear : Activation::kSigmoid;
    net.shared.push_back(std::move(layer));
    in = hidden[l];
  }
  for (const auto &t : tasks) {
    if (t.num_classes < 1) throw ParameterError("task " + t.name + " has no classes");
    TaskHead h;
    h.name = t.name;
    h.weight = t.weight;
    h.w = init(t.num_classes, in);
    h.b = Vector::Zero(t.num_classes);
    net.heads.push_back(std::move(h));
  }
  ValidateNetwork(net);
  return net;
}

namespace {

// Row-wise activations of every shared layer; acts[0] is the input.
std::vector<Matrix> SharedActivations(const MtlNetwork &net, const Matrix &inputs,
                                      size_t num_layers) {
  if (inputs.cols() != net.InputDim())
    throw ShapeError("input dimension " + std::to_string(inputs.cols()) +
                     " does not match network input " + std::to_string(net.InputDim()));
  std::vector<Matrix> acts;
  acts.reserve(num_layers + 1);
  acts.push_back(inputs);
  for (size_t l = 0; l < num_layers; ++l) {
    const auto &layer = net.shared[l];
    Matrix a = acts.back() * layer.w.transpose();
    a.rowwise() += layer.b.transpose();
    if (layer.act == Activation::kSigmoid) a = (1.0 + (-a.array()).exp()).inverse().matrix();
    acts.push_back(std::move(a));
  }
  return acts;
}

Matrix LogSoftmaxRows(const Matrix &z) {
  Matrix out = z;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double mx = z.row(i).maxCoeff();
    const double lse = mx + std::log((z.row(i).array() - mx).exp().sum());
    out.row(i).array() -= lse;
  }
  return out;
}

Matrix HeadLogits(const TaskHead &head, const Matrix &top) {
  Matrix z = top * head.w.transpose();
  z.rowwise() += head.b.transpose();
  return z;
}

void CheckBatch(const MtlNetwork &net, const Batch &batch) {
  if (batch.task < 0 || batch.task >= static_cast<int>(net.heads.size()))
    throw ParameterError("batch task index out of range");
  if (static_cast<Eigen::Index>(batch.labels.size()) != batch.inputs.rows())
    throw ShapeError("batch has " + std::to_string(batch.labels.size()) + " labels for " +
                     std::to_string(batch.inputs.rows()) + " inputs");
  const int classes = net.heads[batch.task].NumClasses();
  for (int y : batch.labels)
    if (y < 0 || y >= classes)
      throw ParameterError("label " + std::to_string(y) + " outside task " +
                           net.heads[batch.task].name);
}

}  // namespace

ForwardOutput Forward(const MtlNetwork &net, const Eigen::Ref<const Vector> &input) {
  const Matrix row = input.transpose();
  const auto acts = SharedActivations(net, row, net.shared.size());
  ForwardOutput out;
  out.bottleneck = acts[net.bottleneck + 1].row(0).transpose();
  for (const auto &h : net.heads)
    out.task_probs.push_back(
        LogSoftmaxRows(HeadLogits(h, acts.back())).row(0).transpose().array().exp());
  return out;
}

Matrix BottleneckRows(const MtlNetwork &net, const Matrix &inputs) {
  return SharedActivations(net, inputs, net.bottleneck + 1).back();
}

double BatchLoss(const MtlNetwork &net, const Batch &batch) {
  CheckBatch(net, batch);
  const auto acts = SharedActivations(net, batch.inputs, net.shared.size());
  const auto &head = net.heads[batch.task];
  const Matrix logp = LogSoftmaxRows(HeadLogits(head, acts.back()));
  double nll = 0.0;
  for (size_t i = 0; i < batch.labels.size(); ++i) nll -= logp(i, batch.labels[i]);
  return head.weight * nll;
}

Gradients::Gradients(const MtlNetwork &net) {
  for (const auto &l : net.shared) {
    w.push_back(Matrix::Zero(l.w.rows(), l.w.cols()));
    b.push_back(Vector::Zero(l.b.size()));
  }
  for (const auto &h : net.heads) {
    head_w.push_back(Matrix::Zero(h.w.rows(), h.w.cols()));
    head_b.push_back(Vector::Zero(h.b.size()));
  }
}

void Gradients::SetZero() {
  for (auto &m : w) m.setZero();
  for (auto &v : b) v.setZero();
  for (auto &m : head_w) m.setZero();
  for (auto &v : head_b) v.setZero();
}

double AccumulateGradients(const MtlNetwork &net, const Batch &batch, double scale,
                           Gradients *grad) {
  CheckBatch(net, batch);
  const auto acts = SharedActivations(net, batch.inputs, net.shared.size());
  const auto &head = net.heads[batch.task];
  const Matrix logp = LogSoftmaxRows(HeadLogits(head, acts.back()));
  double nll = 0.0;
  Matrix dz = logp.array().exp();
  for (size_t i = 0; i < batch.labels.size(); ++i) {
    nll -= logp(i, batch.labels[i]);
    dz(i, batch.labels[i]) -= 1.0;
  }
  dz *= head.weight * scale;
  grad->head_w[batch.task].noalias() += dz.transpose() * acts.back();
  grad->head_b[batch.task] += dz.colwise().sum().transpose();
  Matrix dh = dz * head.w;
  for (int l = static_cast<int>(net.shared.size()) - 1; l >= 0; --l) {
    const auto &layer = net.shared[l];
    if (layer.act == Activation::kSigmoid)
      dh.array() *= acts[l + 1].array() * (1.0 - acts[l + 1].array());
    grad->w[l].noalias() += dh.transpose() * acts[l];
    grad->b[l] += dh.colwise().sum().transpose();
    if (l > 0) dh = dh * layer.w;
  }
  return head.weight * nll;
}

std::vector<std::string> HoldoutUtterances(const std::vector<std::string> &ids,
                                           double fraction) {
  if (!(fraction >= 0 && fraction < 1))
    throw ParameterError("held-out fraction must lie in [0, 1)");
  std::set<std::string> distinct(ids.begin(), ids.end());
  std::vector<std::pair<std::uint64_t, std::string>> keyed;
  for (const auto &id : distinct) keyed.emplace_back(HashString(id), id);
  std::sort(keyed.begin(), keyed.end());
  const size_t n = static_cast<size_t>(std::floor(fraction * keyed.size()));
  std::vector<std::string> out;
  for (size_t i = keyed.size() - n; i < keyed.size(); ++i) out.push_back(keyed[i].second);
  return out;
}

std::vector<std::pair<int, std::vector<Eigen::Index>>> EpochSchedule(
    const std::vector<Eigen::Index> &task_sizes, int batch_size, std::uint64_t seed,
    int epoch) {
  if (batch_size < 1) throw ParameterError("batch size must be positive");
  std::vector<std::vector<std::vector<Eigen::Index>>> per_task;
  size_t most = 0;
  for (size_t t = 0; t < task_sizes.size(); ++t) {
    std::vector<Eigen::Index> order(task_sizes[t]);
    std::iota(order.begin(), order.end(), 0);
    Engine rng = MakeEngine(seed, static_cast<std::uint64_t>(epoch), t);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<Eigen::Index>> batches;
    for (size_t i = 0; i < order.size(); i += batch_size)
      batches.emplace_back(order.begin() + i,
                           order.begin() + std::min(order.size(), i + batch_size));
    most = std::max(most, batches.size());
    per_task.push_back(std::move(batches));
  }
  std::vector<std::pair<int, std::vector<Eigen::Index>>> out;
  for (size_t k = 0; k < most; ++k)
    for (size_t t = 0; t < per_task.size(); ++t)
      if (k < per_task[t].size()) out.emplace_back(static_cast<int>(t), per_task[t][k]);
  return out;
}

namespace {

struct Split {
  std::vector<Eigen::Index> train, holdout;
};

std::vector<Split> SplitTasks(const std::vector<const TaskData *> &tasks, double fraction) {
  std::vector<std::string> all_ids;
  for (const auto *t : tasks) all_ids.insert(all_ids.end(), t->utterance_ids.begin(), t->utterance_ids.end());
  const auto held = HoldoutUtterances(all_ids, fraction);
  const std::unordered_set<std::string> held_set(held.begin(), held.end());
  std::vector<Split> splits(tasks.size());
  bool usable = !held_set.empty();
  for (size_t t = 0; t < tasks.size(); ++t) {
    const auto &d = *tasks[t];
    for (Eigen::Index i = 0; i < d.Size(); ++i) {
      const bool h = !d.utterance_ids.empty() && held_set.count(d.utterance_ids[i]);
      (h ? splits[t].holdout : splits[t].train).push_back(i);
    }
    if (splits[t].train.empty()) usable = false;
  }
  if (!usable) {
    if (!held_set.empty())
      ZS_WARN << "held-out split would empty a task; training without held-out data";
    for (size_t t = 0; t < tasks.size(); ++t) {
      splits[t].train.resize(tasks[t]->Size());
      std::iota(splits[t].train.begin(), splits[t].train.end(), 0);
      splits[t].holdout.clear();
    }
  }
  return splits;
}

Batch MakeBatch(int task, const TaskData &d, const std::vector<Eigen::Index> &rows,
                const std::vector<int> &labels) {
  Batch b;
  b.task = task;
  b.inputs.resize(static_cast<Eigen::Index>(rows.size()), d.inputs.cols());
  b.labels.resize(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    b.inputs.row(i) = d.inputs.row(rows[i]);
    b.labels[i] = labels[rows[i]];
  }
  return b;
}

void CheckTask(const TaskData &d, const std::string &name) {
  if (d.Size() == 0) throw ConfigError("task " + name + " has no training examples");
  if (static_cast<Eigen::Index>(d.labels.size()) != d.Size())
    throw ShapeError("task " + name + " has a label count different from its frame count");
  if (!d.utterance_ids.empty() && static_cast<Eigen::Index>(d.utterance_ids.size()) != d.Size())
    throw ShapeError("task " + name + " has an utterance id count different from its frames");
}

// Returns the rate for the next epoch.
double NextRate(double rate, double prev_loss, double loss, double min_improvement) {
  if (std::isfinite(prev_loss) && prev_loss - loss < min_improvement) {
    ZS_LOG << "held-out loss " << loss << " (previous " << prev_loss
           << "); halving learning rate to " << 0.5 * rate;
    return 0.5 * rate;
  }
  return rate;
}

}  // namespace

TrainReport TrainMtl(const std::vector<TaskData> &tasks, const TrainConfig &config,
                     MtlNetwork *net) {
  ValidateNetwork(*net);
  if (tasks.empty()) throw ConfigError("no training tasks");
  if (tasks.size() != net->heads.size())
    throw ConfigError("network has " + std::to_string(net->heads.size()) + " heads for " +
                      std::to_string(tasks.size()) + " tasks");
  if (config.epochs < 1 || !(config.learning_rate > 0))
    throw ConfigError("epochs and learning rate must be positive");
  std::vector<const TaskData *> ptrs;
  for (size_t t = 0; t < tasks.size(); ++t) {
    CheckTask(tasks[t], net->heads[t].name);
    ptrs.push_back(&tasks[t]);
  }
  const auto splits = SplitTasks(ptrs, config.holdout_fraction);
  std::vector<Eigen::Index> sizes;
  for (const auto &s : splits) sizes.push_back(static_cast<Eigen::Index>(s.train.size()));
  const bool has_holdout = std::any_of(splits.begin(), splits.end(),
                                       [](const Split &s) { return !s.holdout.empty(); });

  TrainReport report;
  Gradients grad(*net);
  double rate = config.learning_rate;
  double prev = std::numeric_limits<double>::infinity();
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    report.learning_rate.push_back(rate);
    double total = 0.0;
    for (const auto &[task, idx] : EpochSchedule(sizes, config.batch_size, config.seed, epoch)) {
      std::vector<Eigen::Index> rows;
      for (Eigen::Index i : idx) rows.push_back(splits[task].train[i]);
      const Batch batch = MakeBatch(task, tasks[task], rows, tasks[task].labels);
      grad.SetZero();
      total += AccumulateGradients(*net, batch, 1.0 / static_cast<double>(rows.size()), &grad);
      for (size_t l = 0; l < net->shared.size(); ++l) {
        net->shared[l].w -= rate * grad.w[l];
        net->shared[l].b -= rate * grad.b[l];
      }
      net->heads[task].w -= rate * grad.head_w[task];
      net->heads[task].b -= rate * grad.head_b[task];
    }
    report.train_loss.push_back(total);
    if (has_holdout) {
      double held = 0.0;
      for (size_t t = 0; t < tasks.size(); ++t)
        if (!splits[t].holdout.empty())
          held += BatchLoss(*net, MakeBatch(static_cast<int>(t), tasks[t], splits[t].holdout,
                                            tasks[t].labels));
      report.holdout_loss.push_back(held);
      rate = NextRate(rate, prev, held, config.min_improvement);
      prev = held;
    }
    ZS_VLOG << "epoch " << epoch << ": training loss " << total;
    if (config.on_epoch) config.on_epoch(epoch, *net);
  }
  return report;
}

TrainReport TrainAdversarial(const TaskData &data, const std::vector<int> &speaker_labels,
                             const AdversarialConfig &adv, const TrainConfig &config,
                             MtlNetwork *net) {
  ValidateNetwork(*net);
  const int np = static_cast<int>(net->heads.size());
  if (adv.phone_head < 0 || adv.phone_head >= np || adv.speaker_head < 0 ||
      adv.speaker_head >= np || adv.phone_head == adv.speaker_head)
    throw ConfigError("adversarial training needs distinct phone and speaker heads");
  if (!(adv.lambda >= 0)) throw ParameterError("adversarial weight lambda must be >= 0");
  if (config.epochs < 1 || !(config.learning_rate > 0))
    throw ConfigError("epochs and learning rate must be positive");
  CheckTask(data, net->heads[adv.phone_head].name);
  if (static_cast<Eigen::Index>(speaker_labels.size()) != data.Size())
    throw MetadataError("every training frame needs a speaker label (" +
                        std::to_string(speaker_labels.size()) + " for " +
                        std::to_string(data.Size()) + " frames)");

  const auto splits = SplitTasks({&data}, config.holdout_fraction);
  const Split &split = splits[0];
  const std::vector<Eigen::Index> sizes = {static_cast<Eigen::Index>(split.train.size())};

  TrainReport report;
  Gradients gp(*net), gs(*net);
  double rate = config.learning_rate;
  double prev = std::numeric_limits<double>::infinity();
  auto &ph = net->heads[adv.phone_head];
  auto &sh = net->heads[adv.speaker_head];
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    report.learning_rate.push_back(rate);
    double total = 0.0;
    for (const auto &[task, idx] : EpochSchedule(sizes, config.batch_size, config.seed, epoch)) {
      std::vector<Eigen::Index> rows;
      for (Eigen::Index i : idx) rows.push_back(split.train[i]);
      const double scale = 1.0 / static_cast<double>(rows.size());
      gp.SetZero();
      gs.SetZero();
      total += AccumulateGradients(*net, MakeBatch(adv.phone_head, data, rows, data.labels),
                                   scale, &gp);
      AccumulateGradients(*net, MakeBatch(adv.speaker_head, data, rows, speaker_labels), scale,
                          &gs);
      for (size_t l = 0; l < net->shared.size(); ++l) {
        net->shared[l].w -= rate * (gp.w[l] - adv.lambda * gs.w[l]);
        net->shared[l].b -= rate * (gp.b[l] - adv.lambda * gs.b[l]);
      }
      ph.w -= rate * gp.head_w[adv.phone_head];
      ph.b -= rate * gp.head_b[adv.phone_head];
      sh.w -= rate * gs.head_w[adv.speaker_head];
      sh.b -= rate * gs.head_b[adv.speaker_head];
    }
    report.train_loss.push_back(total);
    if (!split.holdout.empty()) {
      const double held =
          BatchLoss(*net, MakeBatch(adv.phone_head, data, split.holdout, data.labels));
      report.holdout_loss.push_back(held);
      rate = NextRate(rate, prev, held, config.min_improvement);
      prev = held;
    }
    ZS_VLOG << "epoch " << epoch << ": subword loss " << total;
    if (config.on_epoch) config.on_epoch(epoch, *net);
  }
  return report;
}

FeatureArchive ExtractBnf(const MtlNetwork &net, const FeatureArchive &archive) {
  ValidateNetwork(net);
  return MapArchive(archive, [&](const FeatureMatrix &m) {
    FeatureMatrix out = m;
    out.frames = BottleneckRows(net, m.frames);
    return out;
  });
}

void WriteNetwork(std::ostream &os, const MtlNetwork &net) {
  ValidateNetwork(net);
  BinaryWriter w(os);
  auto write_matrix = [&](const Matrix &m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) w.F64(m(i, j));
  };
  w.Magic("MTLN1");
  w.U32(static_cast<std::uint32_t>(net.shared.size()));
  for (const auto &l : net.shared) {
    w.U32(static_cast<std::uint32_t>(l.In()));
    w.U32(static_cast<std::uint32_t>(l.Out()));
    w.U8(static_cast<std::uint8_t>(l.act));
    write_matrix(l.w);
    for (Eigen::Index i = 0; i < l.b.size(); ++i) w.F64(l.b(i));
  }
  w.U32(static_cast<std::uint32_t>(net.bottleneck));
  w.U32(static_cast<std::uint32_t>(net.heads.size()));
  for (const auto &h : net.heads) {
    w.String(h.name);
    w.F64(h.weight);
    w.U32(static_cast<std::uint32_t>(h.NumClasses()));
    w.U32(static_cast<std::uint32_t>(h.w.cols()));
    write_matrix(h.w);
    for (Eigen::Index i = 0; i < h.b.size(); ++i) w.F64(h.b(i));
  }
  w.Check("network");
}

void WriteNetwork(const std::string &path, const MtlNetwork &net) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  WriteNetwork(os, net);
}

MtlNetwork ReadNetwork(std::istream &is) {
  BinaryReader r(is);
  auto read_size = [&](const char *what) {
    const std::uint64_t at = r.offset();
    const std::uint32_t v = r.U32(what);
    if (v == 0 || v > (1u << 20)) throw FormatError(std::string("implausible ") + what, at);
    return static_cast<Eigen::Index>(v);
  };
  auto read_matrix = [&](Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = r.F64("weight");
    return m;
  };
  auto read_vector = [&](Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = r.F64("bias");
    return v;
  };
  r.Magic("MTLN1");
  MtlNetwork net;
  const Eigen::Index num_layers = read_size("layer count");
  for (Eigen::Index l = 0; l < num_layers; ++l) {
    DenseLayer layer;
    const Eigen::Index in = read_size("layer input size");
    const Eigen::Index out = read_size("layer output size");
    const std::uint64_t at = r.offset();
    const std::uint8_t act = r.U8("activation");
    if (act > 1) throw FormatError("unknown activation code", at);
    layer.act = static_cast<Activation>(act);
    layer.w = read_matrix(out, in);
    layer.b = read_vector(out);
    net.shared.push_back(std::move(layer));
  }
  net.bottleneck = static_cast<int>(r.U32("bottleneck index"));
  const Eigen::Index num_heads = read_size("head count");
  for (Eigen::Index k = 0; k < num_heads; ++k) {
    TaskHead h;
    h.name = r.String("head name");
    h.weight = r.F64("task weight");
    const Eigen::Index classes = read_size("class count");
    const Eigen::Index in = read_size("head input size");
    h.w = read_matrix(classes, in);
    h.b = read_vector(classes);
    net.heads.push_back(std::move(h));
  }
  ValidateNetwork(net);
  return net;
}

MtlNetwork ReadNetwork(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open network " + path);
  return ReadNetwork(is);
}

}  // namespace zeroseg
