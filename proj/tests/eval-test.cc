// tests/eval-test.cc

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
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "doctest.h"
#include "test-util.h"
#include "zeroseg/eval.h"

namespace zeroseg {

namespace {

ReferenceAlignment OneUtterance(const std::string &utt, const std::vector<int> &frame_phones) {
  ReferenceAlignment ref;
  auto &spans = ref.utterances[utt];
  for (size_t t = 0; t < frame_phones.size(); ++t) {
    if (spans.empty() || spans.back().phone != frame_phones[t])
      spans.push_back({static_cast<std::int64_t>(t), static_cast<std::int64_t>(t),
                       frame_phones[t]});
    else
      spans.back().end_frame = static_cast<std::int64_t>(t);
    ref.inventory.insert(frame_phones[t]);
  }
  return ref;
}

double BruteForcePurity(const std::vector<int> &labels, const std::vector<int> &phones) {
  std::set<int> ls(labels.begin(), labels.end()), ps(phones.begin(), phones.end());
  int sum = 0;
  for (int l : ls) {
    int best = 0;
    for (int p : ps) {
      int n = 0;
      for (size_t t = 0; t < labels.size(); ++t) n += labels[t] == l && phones[t] == p;
      best = std::max(best, n);
    }
    sum += best;
  }
  return static_cast<double>(sum) / labels.size();
}

double DirectKl(const Vector &p, const Vector &q) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    s += p(i) * std::log(p(i) / q(i)) + q(i) * std::log(q(i) / p(i));
  return s;
}

// Minimum over all monotone paths by (accumulated cost, length), as cost / length.
double BruteForceDtw(const Matrix &a, const Matrix &b) {
  double best_cost = 1e300;
  std::int64_t best_len = 0;
  std::function<void(Eigen::Index, Eigen::Index, double, std::int64_t)> walk =
      [&](Eigen::Index i, Eigen::Index j, double cost, std::int64_t len) {
        cost += CosineDistance(a.row(i).transpose(), b.row(j).transpose());
        ++len;
        if (i == a.rows() - 1 && j == b.rows() - 1) {
          if (cost < best_cost || (cost == best_cost && len < best_len)) {
            best_cost = cost;
            best_len = len;
          }
          return;
        }
        if (i + 1 < a.rows() && j + 1 < b.rows()) walk(i + 1, j + 1, cost, len);
        if (i + 1 < a.rows()) walk(i + 1, j, cost, len);
        if (j + 1 < b.rows()) walk(i, j + 1, cost, len);
      };
  walk(0, 0, 0.0, 0);
  return best_cost / static_cast<double>(best_len);
}

// One utterance per item so every item is a whole utterance.
struct AbxFixture {
  FeatureArchive features;
  std::vector<AbxItem> items;
  void Add(const Matrix &frames, int center, int left, int right, const std::string &spk) {
    FeatureMatrix m;
    m.utterance_id = "i" + std::to_string(items.size());
    m.frames = frames;
    features.Add(m);
    items.push_back({m.utterance_id, 0, frames.rows() - 1, center, left, right, spk});
  }
};

}  // namespace

TEST_CASE("purity") {
  const ReferenceAlignment ref = OneUtterance("u", {1, 1, 1, 2, 2, 2, 2, 2});
  SUBCASE("hand example") {
    const auto r = Purity({LabelSequence("u", {7, 7, 7, 7, 9, 9, 9, 9})}, ref);
    CHECK(r.overall == 0.875);
    CHECK(r.per_cluster.at(7) == 0.75);
    CHECK(r.per_cluster.at(9) == 1.0);
    CHECK(r.frames == 8);
  }
  SUBCASE("identical partition") {
    CHECK(Purity({LabelSequence("u", {4, 4, 4, 5, 5, 5, 5, 5})}, ref).overall == 1.0);
  }
  SUBCASE("one cluster over two phones in equal parts") {
    const ReferenceAlignment half = OneUtterance("u", {1, 1, 2, 2});
    CHECK(Purity({LabelSequence("u", {3, 3, 3, 3})}, half).per_cluster.at(3) == 0.5);
  }
  SUBCASE("silence and removed frames are not scored") {
    ReferenceAlignment sil = OneUtterance("u", {0, 1, 1, 2});
    sil.silence = {0};
    LabelSequence s("u", {5, 5, 6, 6});
    s.removed[3] = true;
    const auto r = Purity({s}, sil);
    CHECK(r.frames == 2);
    CHECK(r.overall == 1.0);
  }
  SUBCASE("length mismatch names the utterance") {
    try {
      Purity({LabelSequence("u", {1, 2})}, ref);
      FAIL("expected an alignment error");
    } catch (const AlignmentError &e) {
      CHECK(std::string(e.what()).find("utterance u") != std::string::npos);
    }
    CHECK_THROWS_AS(Purity({LabelSequence("v", {1})}, ref), AlignmentError);
  }
}

TEST_CASE("purity against brute force on random instances") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> lab(0, 9), ph(0, 4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> labels(200), phones(200);
    for (int t = 0; t < 200; ++t) {
      labels[t] = lab(rng);
      phones[t] = ph(rng);
    }
    const auto r = Purity({LabelSequence("u", labels)}, OneUtterance("u", phones));
    CHECK(r.overall == BruteForcePurity(labels, phones));
    CHECK(r.overall >= 0.0);
    CHECK(r.overall <= 1.0);
  }
}

TEST_CASE("symmetric KL") {
  Vector p(2), q(2);
  p << 0.5, 0.5;
  q << 0.25, 0.75;
  CHECK(std::abs(SymmetricKl(p, q) - DirectKl(p, q)) <= 1e-10);
  CHECK(std::abs(SymmetricKl(p, q) - 0.25 * std::log(3.0)) <= 1e-12);
  CHECK(SymmetricKl(p, q) == SymmetricKl(q, p));
  CHECK(SymmetricKl(p, p) == 0.0);

  std::mt19937_64 rng(2);
  for (int i = 0; i < 10000; ++i) {
    const Vector a = testing::RandomDistribution(rng, 6), b = testing::RandomDistribution(rng, 6);
    const double d = SymmetricKl(a, b);
    CHECK(d >= 0.0);
    CHECK(d == SymmetricKl(b, a));
    CHECK(SymmetricKl(a, a) <= 1e-12);
  }
  Vector zero(3);
  zero << 1.0, 0.0, 0.0;
  CHECK(std::isfinite(SymmetricKl(zero, Vector::Constant(3, 1.0 / 3))));
  CHECK_THROWS_AS(SymmetricKl(p, zero), ShapeError);
  Vector bad(2);
  bad << 0.5, 0.6;
  CHECK_THROWS_AS(SymmetricKl(p, bad), InputError);
}

TEST_CASE("centroids and distances") {
  std::mt19937_64 rng(3);
  const int T = 50, K = 4;
  FeatureArchive post;
  FeatureMatrix m;
  m.utterance_id = "u";
  m.frames.resize(T, K);
  for (int t = 0; t < T; ++t) m.frames.row(t) = testing::RandomDistribution(rng, K).transpose();
  post.Add(m);
  std::vector<int> phones(T);
  for (int t = 0; t < T; ++t) phones[t] = t < 20 ? 1 : (t < 49 ? 2 : 3);
  ReferenceAlignment ref = OneUtterance("u", phones);
  ref.inventory.insert(8);
  const PhoneCentroids c = ComputeCentroids(post, ref);
  CHECK(c.missing == std::vector<int>{8});
  CHECK(c.centroid.at(3) == m.frames.row(49).transpose());
  Vector mean1 = Vector::Zero(K);
  for (int t = 0; t < 20; ++t) mean1 += m.frames.row(t).transpose();
  CHECK((c.centroid.at(1) - mean1 / 20).cwiseAbs().maxCoeff() <= 1e-12);

  std::uniform_int_distribution<int> unit(0, 2);
  std::vector<int> units(T);
  for (int &u : units) u = unit(rng);
  units[5] = 9;  // a single-frame unit
  const DistanceReport r = UnitPhoneDistances(post, {LabelSequence("u", units)}, c);
  REQUIRE(r.units == std::vector<int>{0, 1, 2, 9});
  REQUIRE(r.phones == std::vector<int>{1, 2, 3});
  for (size_t i = 0; i < r.units.size(); ++i) {
    for (size_t k = 0; k < r.phones.size(); ++k) {
      double sum = 0.0;
      int n = 0;
      for (int t = 0; t < T; ++t)
        if (units[t] == r.units[i]) {
          sum += SymmetricKl(m.frames.row(t).transpose(), c.centroid.at(r.phones[k]));
          ++n;
        }
      CHECK(std::abs(r.d(i, k) - sum / n) <= 1e-12);
    }
  }

  // A unit whose frames all equal a centroid sits at distance 0 from it.
  FeatureArchive flat;
  m.frames.row(0) = c.centroid.at(1).transpose();
  m.frames.row(1) = c.centroid.at(1).transpose();
  flat.Add(m);
  std::vector<int> one(T, 0);
  one[0] = one[1] = 5;
  const DistanceReport z = UnitPhoneDistances(flat, {LabelSequence("u", one)}, c);
  CHECK(z.d(1, 0) <= 1e-12);
}

TEST_CASE("relevance summary") {
  // Two phones with concentrated posteriors; units equal the phones.
  FeatureArchive post;
  FeatureMatrix m;
  m.utterance_id = "u";
  m.frames.resize(6, 2);
  m.frames << 0.9, 0.1, 0.8, 0.2, 0.9, 0.1, 0.1, 0.9, 0.2, 0.8, 0.1, 0.9;
  post.Add(m);
  const ReferenceAlignment ref = OneUtterance("u", {1, 1, 1, 2, 2, 2});
  SUBCASE("distinct units cover both phones") {
    const auto r = RelevanceReport(post, {LabelSequence("u", {0, 0, 0, 1, 1, 1})}, ref);
    REQUIRE(r.summary.size() == 2);
    CHECK(r.summary[0].best_phone == 1);
    CHECK(r.summary[1].best_phone == 2);
    CHECK(*r.summary[0].delta > 0);
    CHECK(*r.summary[1].delta > 0);
    CHECK(r.uncovered.empty());
    for (const auto &s : r.summary) CHECK(s.best <= *s.second);
  }
  SUBCASE("equidistant unit ties to the lower phone") {
    FeatureArchive sym;
    FeatureMatrix s = m;
    s.frames.resize(2, 2);
    s.frames << 0.9, 0.1, 0.1, 0.9;
    sym.Add(s);
    const ReferenceAlignment r2 = OneUtterance("u", {1, 2});
    const auto r = RelevanceReport(sym, {LabelSequence("u", {0, 0})}, r2);
    CHECK(r.summary[0].best_phone == 1);
    CHECK(std::abs(*r.summary[0].delta) <= 1e-12);
    CHECK(r.uncovered == std::vector<int>{2});
  }
  SUBCASE("one phone leaves the second-best absent") {
    const ReferenceAlignment r1 = OneUtterance("u", {1, 1, 1, 1, 1, 1});
    const auto r = RelevanceReport(post, {LabelSequence("u", {0, 0, 0, 1, 1, 1})}, r1);
    CHECK(!r.summary[0].second_phone.has_value());
    CHECK(!r.mean_delta.has_value());
  }
  SUBCASE("ground-truth units sit within the inherent spread") {
    std::mt19937_64 rng(4);
    FeatureArchive big;
    FeatureMatrix f;
    f.utterance_id = "u";
    const int T = 500, K = 5;
    f.frames.resize(T, K);
    std::vector<int> phones(T);
    for (int t = 0; t < T; ++t) {
      phones[t] = (t / 10) % K;
      Vector v = testing::RandomDistribution(rng, K) * 0.3;
      v(phones[t]) += 0.7;
      f.frames.row(t) = v.transpose();
    }
    big.Add(f);
    const auto r = RelevanceReport(big, {LabelSequence("u", phones)}, OneUtterance("u", phones));
    CHECK(r.mean_best <= r.mean_inherent + 1e-12);
    CHECK(r.uncovered.empty());
  }
}

TEST_CASE("cosine and DTW distances") {
  Vector a(2), b(2);
  a << 1, 0;
  b << 0, 1;
  CHECK(CosineDistance(a, b) == 1.0);
  CHECK(CosineDistance(a, -a) == 2.0);
  CHECK(CosineDistance(Vector::Zero(2), Vector::Zero(2)) == 0.0);
  CHECK(CosineDistance(Vector::Zero(2), a) == 1.0);

  Matrix x(2, 2), y(3, 2);
  x << 1, 0, 0, 1;
  y << 1, 0, 1, 0, 0, 1;
  CHECK(DtwDistance(x, y) == BruteForceDtw(x, y));
  CHECK(DtwDistance(x, y) == 0.0);
  CHECK(DtwDistance(Matrix(a.transpose()), Matrix(b.transpose())) == 1.0);

  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> len(1, 5);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix p = testing::RandomMatrix(rng, len(rng), 3);
    const Matrix q = testing::RandomMatrix(rng, len(rng), 3);
    CHECK(std::abs(DtwDistance(p, q) - BruteForceDtw(p, q)) <= 1e-12);
    CHECK(std::abs(DtwDistance(p, q) - DtwDistance(q, p)) <= 1e-12);
    CHECK(DtwDistance(p, p) == 0.0);
  }
  CHECK_THROWS_AS(DtwDistance(Matrix(0, 2), x), InputError);
}

TEST_CASE("ABX pair error") {
  // A1 = 0, A2 = 1, B = 2.
  std::map<std::pair<int, int>, double> d = {{{0, 1}, 1.0}, {{1, 0}, 1.0}, {{2, 1}, 2.0},
                                             {{2, 0}, 0.5}};
  std::int64_t triples = 0;
  const double e = AbxPairError({0, 1}, {2}, {0, 1}, [&](int p, int q) { return d.at({p, q}); },
                                &triples);
  CHECK(e == 0.5);
  CHECK(triples == 2);
  CHECK(AbxPairError({0}, {1}, {2}, [](int, int) { return 3.0; }) == 0.5);
  CHECK(std::isnan(AbxPairError({0}, {1}, {0}, [](int, int) { return 1.0; })));
}

TEST_CASE("ABX error") {
  std::mt19937_64 rng(6);
  SUBCASE("separable categories") {
    AbxFixture f;
    Matrix ea = Matrix::Zero(3, 2), eb = Matrix::Zero(3, 2);
    ea.col(0).setOnes();
    eb.col(1).setOnes();
    for (int i = 0; i < 4; ++i) {
      f.Add(ea + testing::RandomMatrix(rng, 3, 2) * 0.05, 1, 0, 0, "s");
      f.Add(eb + testing::RandomMatrix(rng, 3, 2) * 0.05, 2, 0, 0, "s");
    }
    const auto r = AbxError(f.items, f.features, AbxCondition::kWithinSpeaker);
    CHECK(r.error == 0.0);
    CHECK(r.triples == 2 * 4 * 3 * 4);
  }
  SUBCASE("identical features tie everywhere") {
    AbxFixture f;
    for (int i = 0; i < 3; ++i) {
      f.Add(Matrix::Ones(2, 3), 1, 0, 0, "s");
      f.Add(Matrix::Ones(2, 3), 2, 0, 0, "s");
    }
    CHECK(AbxError(f.items, f.features, AbxCondition::kWithinSpeaker).error == 0.5);
  }
  SUBCASE("random features score one half") {
    AbxFixture f;
    std::uniform_int_distribution<int> len(3, 8);
    for (int i = 0; i < 30; ++i) {
      f.Add(testing::RandomMatrix(rng, len(rng), 4), 1, 0, 0, "s");
      f.Add(testing::RandomMatrix(rng, len(rng), 4), 2, 0, 0, "s");
    }
    const auto r = AbxError(f.items, f.features, AbxCondition::kWithinSpeaker, 4);
    CHECK(r.triples >= 10000);
    CHECK(std::abs(r.error - 0.5) <= 0.03);
    CHECK(r.error == AbxError(f.items, f.features, AbxCondition::kWithinSpeaker, 1).error);
  }
  SUBCASE("contexts and speakers") {
    AbxFixture f;
    // Context (0,0) has both centers; context (5,5) has one and is ignored.
    for (const std::string spk : {"a", "b"}) {
      f.Add(testing::RandomMatrix(rng, 3, 2), 1, 0, 0, spk);
      f.Add(testing::RandomMatrix(rng, 3, 2), 1, 0, 0, spk);
      f.Add(testing::RandomMatrix(rng, 3, 2), 2, 0, 0, spk);
    }
    f.Add(testing::RandomMatrix(rng, 3, 2), 1, 5, 5, "a");
    const auto within = AbxError(f.items, f.features, AbxCondition::kWithinSpeaker);
    CHECK(within.per_context.size() == 2);
    const auto across = AbxError(f.items, f.features, AbxCondition::kAcrossSpeaker);
    CHECK(across.per_context.count("a>b"));
    CHECK(across.per_context.count("b>a"));
    // Across: A and B from the first speaker, X from the second.
    for (const auto &p : across.pairs) CHECK(p.triples == 2 * 1 * 2 + 1 * 2 * 1);
    CHECK(within.error >= 0.0);
    CHECK(within.error <= 1.0);
  }
  SUBCASE("malformed items") {
    AbxFixture f;
    f.Add(Matrix::Ones(2, 2), 1, 0, 0, "s");
    auto items = f.items;
    items[0].offset_frame = 2;
    CHECK_THROWS_AS(AbxError(items, f.features, AbxCondition::kWithinSpeaker), BoundsError);
    items = f.items;
    items[0].speaker.clear();
    CHECK_THROWS_AS(AbxError(items, f.features, AbxCondition::kWithinSpeaker), MetadataError);
  }
}

TEST_CASE("alignment, item and report files") {
  const std::string dir = testing::ScratchDir("eval");
  const ReferenceAlignment ref = OneUtterance("u", {1, 1, 2});
  WriteAlignment(dir + "/ali.txt", ref);
  const auto back = ReadAlignment(dir + "/ali.txt", {0});
  CHECK(back.utterances == ref.utterances);
  CHECK(back.inventory == std::set<int>{0, 1, 2});

  const std::vector<AbxItem> items = {{"u", 0, 2, 3, 1, 4, "spk01"}};
  WriteAbxItems(dir + "/items.txt", items);
  CHECK(ReadAbxItems(dir + "/items.txt") == items);

  std::ostringstream table, summary;
  WritePurityReport(table, summary, Purity({LabelSequence("u", {7, 7, 7})}, ref));
  CHECK(summary.str().find("purity=") != std::string::npos);
}

}  // namespace zeroseg
