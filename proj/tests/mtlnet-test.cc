// tests/mtlnet-test.cc

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
#include <random>
#include <sstream>

#include "doctest.h"
#include "test-util.h"
#include "zeroseg/mtlnet.h"

namespace zeroseg {

namespace {

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Straight-line evaluation of one head's probabilities.
Vector NaiveForward(const MtlNetwork &net, const Vector &x, int head, Vector *bn) {
  Vector a = x;
  for (size_t l = 0; l < net.shared.size(); ++l) {
    const auto &layer = net.shared[l];
    Vector z(layer.Out());
    for (int i = 0; i < layer.Out(); ++i) {
      double s = layer.b(i);
      for (int j = 0; j < layer.In(); ++j) s += layer.w(i, j) * a(j);
      z(i) = layer.act == Activation::kSigmoid ? Sigmoid(s) : s;
    }
    a = z;
    if (static_cast<int>(l) == net.bottleneck && bn) *bn = a;
  }
  const auto &h = net.heads[head];
  Vector logits(h.NumClasses());
  for (int k = 0; k < h.NumClasses(); ++k) logits(k) = h.b(k) + h.w.row(k).dot(a);
  Vector p = (logits.array() - logits.maxCoeff()).exp();
  return p / p.sum();
}

MtlNetwork RandomNet(std::mt19937_64 &rng, std::uint64_t seed) {
  std::uniform_int_distribution<int> width(2, 6);
  std::vector<int> hidden = {width(rng), width(rng), width(rng)};
  MtlNetwork net = CreateNetwork(width(rng), hidden, 1,
                                 {{"p", width(rng), 1.0}, {"s", width(rng), 0.7}}, seed);
  // Nonzero biases so every parameter kind is exercised.
  for (auto &l : net.shared) l.b = testing::RandomMatrix(rng, l.Out(), 1) * 0.3;
  for (auto &h : net.heads) h.b = testing::RandomMatrix(rng, h.NumClasses(), 1) * 0.3;
  return net;
}

Batch RandomBatch(std::mt19937_64 &rng, const MtlNetwork &net, int task, int n) {
  Batch b;
  b.task = task;
  b.inputs = testing::RandomMatrix(rng, n, net.InputDim());
  std::uniform_int_distribution<int> y(0, net.heads[task].NumClasses() - 1);
  for (int i = 0; i < n; ++i) b.labels.push_back(y(rng));
  return b;
}

// |a - b| relative to the larger magnitude, floored so exact zeros compare.
double RelErr(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-7});
}

// Checks every parameter of `net` against central differences of `f`.
template <typename Fn, typename Get>
void CheckAllParams(MtlNetwork *net, Fn &&f, Get &&analytic) {
  const double h = 1e-5;
  auto probe = [&](double *p, double grad) {
    const double keep = *p;
    *p = keep + h;
    const double up = f();
    *p = keep - h;
    const double down = f();
    *p = keep;
    CHECK(RelErr(grad, (up - down) / (2 * h)) <= 1e-4);
  };
  for (size_t l = 0; l < net->shared.size(); ++l) {
    auto &layer = net->shared[l];
    for (Eigen::Index i = 0; i < layer.w.size(); ++i)
      probe(layer.w.data() + i, analytic(0, l, i));
    for (Eigen::Index i = 0; i < layer.b.size(); ++i)
      probe(layer.b.data() + i, analytic(1, l, i));
  }
  for (size_t k = 0; k < net->heads.size(); ++k) {
    auto &head = net->heads[k];
    for (Eigen::Index i = 0; i < head.w.size(); ++i)
      probe(head.w.data() + i, analytic(2, k, i));
    for (Eigen::Index i = 0; i < head.b.size(); ++i)
      probe(head.b.data() + i, analytic(3, k, i));
  }
}

double Pick(const Gradients &g, int kind, size_t l, Eigen::Index i) {
  switch (kind) {
    case 0: return g.w[l].data()[i];
    case 1: return g.b[l].data()[i];
    case 2: return g.head_w[l].data()[i];
    default: return g.head_b[l].data()[i];
  }
}

// Clustered inputs with labels = cluster id and an unrelated second label.
TaskData ClusterTask(std::mt19937_64 &rng, int n, int dim, int clusters,
                     std::vector<int> *other, int other_classes) {
  Matrix centers = testing::RandomMatrix(rng, clusters, dim) * 3.0;
  TaskData d;
  d.inputs.resize(n, dim);
  std::uniform_int_distribution<int> c(0, clusters - 1), o(0, other_classes - 1);
  for (int i = 0; i < n; ++i) {
    const int k = c(rng);
    d.inputs.row(i) = centers.row(k) + testing::RandomMatrix(rng, 1, dim) * 0.5;
    d.labels.push_back(k);
    d.utterance_ids.push_back("u" + std::to_string(i / 20));
    if (other) other->push_back(o(rng));
  }
  return d;
}

// Accuracy of a softmax regression probe trained by full-batch descent.
double ProbeAccuracy(const Matrix &train_x, const std::vector<int> &train_y,
                     const Matrix &test_x, const std::vector<int> &test_y, int classes) {
  MtlNetwork probe = CreateNetwork(static_cast<int>(train_x.cols()), {static_cast<int>(train_x.cols())},
                                   0, {{"probe", classes, 1.0}}, 1);
  probe.shared[0].w = Matrix::Identity(train_x.cols(), train_x.cols());
  Batch b{0, train_x, train_y};
  Gradients g(probe);
  for (int it = 0; it < 500; ++it) {
    g.SetZero();
    AccumulateGradients(probe, b, 1.0 / train_x.rows(), &g);
    probe.heads[0].w -= 0.5 * g.head_w[0];
    probe.heads[0].b -= 0.5 * g.head_b[0];
  }
  int hit = 0;
  for (Eigen::Index i = 0; i < test_x.rows(); ++i) {
    Eigen::Index best;
    Forward(probe, test_x.row(i).transpose()).task_probs[0].maxCoeff(&best);
    hit += best == test_y[i];
  }
  return static_cast<double>(hit) / test_x.rows();
}

}  // namespace

TEST_CASE("network construction") {
  const MtlNetwork net = CreateNetwork(10, {16, 40, 16}, 1, {{"a", 5, 1.0}, {"b", 3, 0.5}}, 3);
  CHECK(net.InputDim() == 10);
  CHECK(net.BottleneckDim() == 40);
  CHECK(net.shared[1].act == Activation::kLinear);
  CHECK(net.shared[0].act == Activation::kSigmoid);
  CHECK(net.HeadIndex("b") == 1);
  CHECK(net.HeadIndex("c") == -1);
  const double r = std::sqrt(6.0 / 26.0);
  CHECK(net.shared[0].w.cwiseAbs().maxCoeff() <= r);
  const MtlNetwork again = CreateNetwork(10, {16, 40, 16}, 1, {{"a", 5, 1.0}, {"b", 3, 0.5}}, 3);
  CHECK(again.shared[2].w == net.shared[2].w);
  CHECK_THROWS_AS(CreateNetwork(10, {16}, 1, {{"a", 2, 1.0}}, 1), ParameterError);
  MtlNetwork bad = net;
  bad.shared[0].act = Activation::kLinear;
  CHECK_THROWS_AS(ValidateNetwork(bad), ParameterError);
}

TEST_CASE("forward pass") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const MtlNetwork net = RandomNet(rng, trial);
    const Vector x = testing::RandomMatrix(rng, net.InputDim(), 1);
    const ForwardOutput out = Forward(net, x);
    for (size_t k = 0; k < net.heads.size(); ++k) {
      CHECK(std::abs(out.task_probs[k].sum() - 1.0) <= 1e-10);
      CHECK(out.task_probs[k].minCoeff() >= 0.0);
      Vector bn;
      const Vector ref = NaiveForward(net, x, static_cast<int>(k), &bn);
      CHECK((ref - out.task_probs[k]).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK((bn - out.bottleneck).cwiseAbs().maxCoeff() <= 1e-12);
    }
    // A constant added to every logit of a head leaves its output alone.
    MtlNetwork shifted = net;
    shifted.heads[0].b.array() += 17.0;
    CHECK((Forward(shifted, x).task_probs[0] - out.task_probs[0]).cwiseAbs().maxCoeff() <=
          1e-10);
  }
  MtlNetwork zero = CreateNetwork(3, {4, 2}, 1, {{"a", 5, 1.0}}, 2);
  for (auto &l : zero.shared) l.w.setZero();
  zero.heads[0].w.setZero();
  const Vector p = Forward(zero, Vector::Ones(3)).task_probs[0];
  CHECK((p.array() - 0.2).abs().maxCoeff() <= 1e-15);
  CHECK_THROWS_AS(Forward(zero, Vector::Ones(4)), ShapeError);
}

TEST_CASE("loss") {
  MtlNetwork net = CreateNetwork(3, {4, 2}, 1, {{"a", 5, 1.0}, {"b", 2, 1.0}}, 2);
  for (auto &l : net.shared) l.w.setZero();
  net.heads[0].w.setZero();
  std::mt19937_64 rng(2);
  Batch b = RandomBatch(rng, net, 0, 7);
  CHECK(BatchLoss(net, b) == doctest::Approx(7 * std::log(5.0)).epsilon(1e-14));
  net.heads[0].weight = 2.0;
  CHECK(BatchLoss(net, b) == doctest::Approx(14 * std::log(5.0)).epsilon(1e-14));

  // Near-one-hot outputs give near-zero loss.
  net.heads[0].weight = 1.0;
  net.heads[0].b.setZero();
  net.heads[0].b(3) = 60.0;
  b.labels.assign(7, 3);
  CHECK(BatchLoss(net, b) < 1e-20);
  b.labels[0] = 5;
  CHECK_THROWS_AS(BatchLoss(net, b), ParameterError);
}

TEST_CASE("gradients match central differences") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    MtlNetwork net = RandomNet(rng, 100 + trial);
    const Batch b = RandomBatch(rng, net, trial % 2, 5);
    Gradients g(net);
    AccumulateGradients(net, b, 1.0, &g);
    CheckAllParams(&net, [&] { return BatchLoss(net, b); },
                   [&](int kind, size_t l, Eigen::Index i) { return Pick(g, kind, l, i); });
  }
}

TEST_CASE("adversarial update matches central differences of the combined loss") {
  std::mt19937_64 rng(4);
  const double lambda = 0.3;
  for (int trial = 0; trial < 10; ++trial) {
    MtlNetwork net = RandomNet(rng, 200 + trial);
    Batch bp = RandomBatch(rng, net, 0, 6);
    Batch bs = bp;
    bs.task = 1;
    std::uniform_int_distribution<int> y(0, net.heads[1].NumClasses() - 1);
    for (int &l : bs.labels) l = y(rng);
    Gradients gp(net), gs(net);
    AccumulateGradients(net, bp, 1.0, &gp);
    AccumulateGradients(net, bs, 1.0, &gs);
    // Shared layers and the subword head follow Lp - lambda Ls; the speaker
    // head itself minimizes Ls, so it is checked against Ls alone.
    auto combined = [&](int kind, size_t l, Eigen::Index i) {
      if (kind >= 2 && l == 1) return -lambda * Pick(gs, kind, l, i);
      return Pick(gp, kind, l, i) - lambda * Pick(gs, kind, l, i);
    };
    CheckAllParams(&net, [&] { return BatchLoss(net, bp) - lambda * BatchLoss(net, bs); },
                   combined);
  }
}

TEST_CASE("mini-batch schedule") {
  const auto s = EpochSchedule({5, 3}, 2, 9, 1);
  // Round robin: t0, t1, t0, t1, t0.
  REQUIRE(s.size() == 5);
  CHECK(s[0].first == 0);
  CHECK(s[1].first == 1);
  CHECK(s[4].first == 0);
  std::vector<int> seen(5, 0);
  for (const auto &[t, idx] : s)
    if (t == 0)
      for (auto i : idx) ++seen[i];
  CHECK(seen == std::vector<int>(5, 1));
  CHECK(EpochSchedule({5, 3}, 2, 9, 1) == s);
  CHECK(EpochSchedule({50}, 50, 9, 2) != EpochSchedule({50}, 50, 9, 3));

  std::vector<std::string> ids;
  for (int i = 0; i < 40; ++i) ids.push_back("utt" + std::to_string(i));
  const auto held = HoldoutUtterances(ids, 0.1);
  CHECK(held.size() == 4);
  CHECK(HoldoutUtterances(ids, 0.1) == held);
  CHECK(HoldoutUtterances(ids, 0.0).empty());
}

TEST_CASE("training") {
  std::mt19937_64 rng(5);
  SUBCASE("separable two-class task") {
    TaskData d;
    d.inputs = testing::RandomMatrix(rng, 200, 2);
    for (Eigen::Index i = 0; i < 200; ++i) {
      d.inputs(i, 0) += d.inputs(i, 0) > 0 ? 1.0 : -1.0;
      d.labels.push_back(d.inputs(i, 0) > 0);
    }
    MtlNetwork net = CreateNetwork(2, {8, 2, 8}, 1, {{"y", 2, 1.0}}, 1);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.learning_rate = 0.5;
    cfg.batch_size = 10;
    TrainMtl({d}, cfg, &net);
    int hit = 0;
    for (Eigen::Index i = 0; i < 200; ++i) {
      Eigen::Index best;
      Forward(net, d.inputs.row(i).transpose()).task_probs[0].maxCoeff(&best);
      hit += best == d.labels[i];
    }
    CHECK(hit >= 198);
  }
  SUBCASE("a batch leaves the other task head alone") {
    std::vector<int> unused;
    const TaskData a = ClusterTask(rng, 40, 3, 3, &unused, 2);
    TaskData b = a;
    b.labels = unused;
    MtlNetwork net = CreateNetwork(3, {5, 2, 5}, 1, {{"a", 3, 1.0}, {"b", 2, 1.0}}, 4);
    const MtlNetwork before = net;
    TaskData only_a = a;
    TaskData empty_b = b;
    // One epoch over a single batch of task a.
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 40;
    cfg.holdout_fraction = 0.0;
    MtlNetwork single = before;
    single.heads.pop_back();
    TrainMtl({only_a}, cfg, &single);
    CHECK(single.heads[0].w != before.heads[0].w);
    // Two tasks: both heads move, each only through its own batches.
    TrainMtl({a, b}, cfg, &net);
    CHECK(net.heads[1].w != before.heads[1].w);
    Gradients g(before);
    Batch batch{0, a.inputs, a.labels};
    AccumulateGradients(before, batch, 1.0 / 40, &g);
    CHECK(g.head_w[1].cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.head_b[1].cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("seeded determinism and halving") {
    std::vector<int> other;
    const TaskData d = ClusterTask(rng, 300, 4, 3, &other, 2);
    MtlNetwork n1 = CreateNetwork(4, {6, 3, 6}, 1, {{"a", 3, 1.0}}, 7);
    MtlNetwork n2 = n1;
    TrainConfig cfg;
    cfg.epochs = 8;
    cfg.seed = 3;
    const TrainReport r1 = TrainMtl({d}, cfg, &n1);
    const TrainReport r2 = TrainMtl({d}, cfg, &n2);
    CHECK(n1.shared[0].w == n2.shared[0].w);
    CHECK(r1.train_loss == r2.train_loss);
    REQUIRE(r1.holdout_loss.size() == 8);
    for (size_t e = 1; e < r1.learning_rate.size(); ++e) {
      const bool improved =
          e < 2 || r1.holdout_loss[e - 2] - r1.holdout_loss[e - 1] >= cfg.min_improvement;
      CHECK(r1.learning_rate[e] == (improved ? r1.learning_rate[e - 1]
                                             : 0.5 * r1.learning_rate[e - 1]));
    }
  }
  SUBCASE("empty task is a configuration error") {
    MtlNetwork net = CreateNetwork(2, {3, 2}, 1, {{"a", 2, 1.0}}, 1);
    TaskData empty;
    empty.inputs.resize(0, 2);
    CHECK_THROWS_AS(TrainMtl({empty}, TrainConfig(), &net), ConfigError);
  }
}

TEST_CASE("adversarial training with lambda 0 follows plain training") {
  std::mt19937_64 rng(6);
  std::vector<int> speakers;
  const TaskData d = ClusterTask(rng, 400, 5, 4, &speakers, 3);
  const MtlNetwork start =
      CreateNetwork(5, {8, 3, 8}, 1, {{"subword", 4, 1.0}, {"speaker", 3, 1.0}}, 11);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 2;
  MtlNetwork adv = start;
  TrainAdversarial(d, speakers, {0, 1, 0.0}, cfg, &adv);
  MtlNetwork plain = start;
  plain.heads.pop_back();
  TrainMtl({d}, cfg, &plain);
  for (size_t l = 0; l < adv.shared.size(); ++l) {
    CHECK((adv.shared[l].w - plain.shared[l].w).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((adv.shared[l].b - plain.shared[l].b).cwiseAbs().maxCoeff() <= 1e-10);
  }
  CHECK((adv.heads[0].w - plain.heads[0].w).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(adv.heads[1].w != start.heads[1].w);

  CHECK_THROWS_AS(TrainAdversarial(d, std::vector<int>(3, 0), {0, 1, 0.1}, cfg, &adv),
                  MetadataError);
  CHECK_THROWS_AS(TrainAdversarial(d, speakers, {0, 1, -0.1}, cfg, &adv), ParameterError);
}

TEST_CASE("bottleneck features") {
  std::mt19937_64 rng(7);
  SUBCASE("width and per-frame agreement") {
    const MtlNetwork net = CreateNetwork(6, {12, 40, 12}, 1, {{"a", 3, 1.0}}, 1);
    FeatureArchive a;
    FeatureMatrix m;
    m.utterance_id = "u";
    m.frames = testing::RandomMatrix(rng, 9, 6);
    a.Add(m);
    const FeatureArchive out = ExtractBnf(net, a);
    const Matrix &f = out.Find("u")->frames;
    CHECK(f.cols() == 40);
    for (int t = 0; t < 9; ++t)
      CHECK((f.row(t).transpose() - Forward(net, m.frames.row(t).transpose()).bottleneck)
                .cwiseAbs()
                .maxCoeff() <= 1e-12);
  }
  SUBCASE("identity bottleneck") {
    MtlNetwork net = CreateNetwork(4, {4}, 0, {{"a", 2, 1.0}}, 1);
    net.shared[0].w = Matrix::Identity(4, 4);
    net.shared[0].b.setZero();
    const Matrix x = testing::RandomMatrix(rng, 5, 4);
    CHECK(BottleneckRows(net, x) == x);
  }
  SUBCASE("trained features separate the input clusters") {
    const TaskData d = ClusterTask(rng, 600, 6, 4, nullptr, 1);
    MtlNetwork net = CreateNetwork(6, {16, 4, 16}, 1, {{"a", 4, 1.0}}, 5);
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.learning_rate = 0.5;
    TrainMtl({d}, cfg, &net);
    const Matrix bnf = BottleneckRows(net, d.inputs);
    CHECK(ProbeAccuracy(bnf.topRows(400), {d.labels.begin(), d.labels.begin() + 400},
                        bnf.bottomRows(200), {d.labels.begin() + 400, d.labels.end()},
                        4) >= 0.95);
  }
}

TEST_CASE("speaker adversary against a probe on plain features") {
  // Inputs carry the subword class and an additive speaker shift.
  std::mt19937_64 rng(8);
  const int n = 1200, train_n = 800, dim = 6;
  const Matrix centers = testing::RandomMatrix(rng, 3, dim) * 3.0;
  const Matrix shifts = testing::RandomMatrix(rng, 3, dim) * 1.5;
  TaskData all;
  all.inputs.resize(n, dim);
  std::vector<int> spk;
  for (int i = 0; i < n; ++i) {
    const int c = i % 3, s = (i / 3) % 3;
    all.inputs.row(i) = centers.row(c) + shifts.row(s) + testing::RandomMatrix(rng, 1, dim) * 0.5;
    all.labels.push_back(c);
    spk.push_back(s);
  }
  TaskData train;
  train.inputs = all.inputs.topRows(train_n);
  train.labels.assign(all.labels.begin(), all.labels.begin() + train_n);
  const std::vector<int> train_spk(spk.begin(), spk.begin() + train_n);
  const std::vector<int> test_spk(spk.begin() + train_n, spk.end());
  const Matrix test_x = all.inputs.bottomRows(n - train_n);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.learning_rate = 0.2;
  cfg.holdout_fraction = 0.0;
  auto trained = [&](double lambda) {
    MtlNetwork net =
        CreateNetwork(dim, {16, 4, 16}, 1, {{"subword", 3, 1.0}, {"speaker", 3, 1.0}}, 9);
    TrainAdversarial(train, train_spk, {0, 1, lambda}, cfg, &net);
    return net;
  };
  const MtlNetwork adv = trained(0.04);
  int hit = 0;
  for (Eigen::Index i = 0; i < test_x.rows(); ++i) {
    Eigen::Index best;
    Forward(adv, test_x.row(i).transpose()).task_probs[1].maxCoeff(&best);
    hit += best == test_spk[i];
  }
  const double head_acc = static_cast<double>(hit) / test_x.rows();
  const MtlNetwork plain = trained(0.0);
  const double probe_acc = ProbeAccuracy(BottleneckRows(plain, train.inputs), train_spk,
                                         BottleneckRows(plain, test_x), test_spk, 3);
  MESSAGE("speaker accuracy: adversarial head " << head_acc << ", probe on plain features "
                                                << probe_acc);
  CHECK(head_acc < probe_acc);
}

TEST_CASE("MTLN1 round trip") {
  std::mt19937_64 rng(9);
  const MtlNetwork net = RandomNet(rng, 1);
  std::stringstream ss;
  WriteNetwork(ss, net);
  const MtlNetwork back = ReadNetwork(ss);
  REQUIRE(back.shared.size() == net.shared.size());
  for (size_t l = 0; l < net.shared.size(); ++l) {
    CHECK(back.shared[l].w == net.shared[l].w);
    CHECK(back.shared[l].b == net.shared[l].b);
    CHECK(back.shared[l].act == net.shared[l].act);
  }
  CHECK(back.bottleneck == net.bottleneck);
  CHECK(back.heads[1].name == "s");
  CHECK(back.heads[1].weight == 0.7);
  CHECK(back.heads[1].w == net.heads[1].w);
  std::string bytes = ss.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(ReadNetwork(truncated), FormatError);
}

}  // namespace zeroseg
