// tests/features-test.cc

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

#include <cstring>
#include <sstream>

#include "doctest.h"
#include "test-util.h"
#include "zeroseg/features.h"

namespace zeroseg {

namespace {

FeatureMatrix Make(const std::string &id, const Matrix &frames,
                   std::optional<std::string> spk = std::nullopt) {
  FeatureMatrix m;
  m.utterance_id = id;
  m.frames = frames;
  m.speaker_id = spk;
  return m;
}

std::string Serialize(const FeatureArchive &a) {
  std::ostringstream os;
  WriteFeatureArchive(os, a);
  return os.str();
}

FeatureArchive Deserialize(const std::string &bytes) {
  std::istringstream is(bytes);
  return ReadFeatureArchive(is);
}

}  // namespace

TEST_CASE("archive round trip of a single 3x2 utterance") {
  Matrix x(3, 2);
  x << 1, 2, 3, 4, 5, 6;
  FeatureArchive a;
  a.Add(Make("u1", x));
  const FeatureArchive b = Deserialize(Serialize(a));
  REQUIRE(b.Size() == 1);
  CHECK(b[0].NumFrames() == 3);
  CHECK(b.Dim() == 2);
  CHECK(b[0].frames == x);
}

TEST_CASE("empty archive") {
  const FeatureArchive b = Deserialize(Serialize(FeatureArchive()));
  CHECK(b.Empty());
  CHECK(!b.Dim().has_value());
}

TEST_CASE("archive bytes match an independent encoder") {
  std::mt19937_64 rng(3);
  FeatureArchive a;
  a.Add(Make("A", testing::RandomMatrix(rng, 5, 13)));
  a.Add(Make("B", testing::RandomMatrix(rng, 7, 13)));
  // Little-endian layout written by hand.
  std::string expect = std::string("FEAT1\0", 6);
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) expect.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  u32(2);
  for (const auto &m : a) {
    u32(static_cast<std::uint32_t>(m.utterance_id.size()));
    expect += m.utterance_id;
    u32(static_cast<std::uint32_t>(m.NumFrames()));
    u32(13);
    for (Eigen::Index t = 0; t < m.frames.rows(); ++t)
      for (Eigen::Index d = 0; d < 13; ++d) {
        const float f = static_cast<float>(m.frames(t, d));
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        u32(bits);
      }
  }
  CHECK(Serialize(a) == expect);
  const FeatureArchive b = Deserialize(expect);
  REQUIRE(b.Size() == 2);
  CHECK(b.Dim() == 13);
  // Stored values are the 32-bit roundings; a second trip is bit-exact.
  CHECK(Serialize(b) == expect);
  for (size_t u = 0; u < 2; ++u)
    CHECK(b[u].frames == a[u].frames.cast<float>().cast<double>());
}

TEST_CASE("malformed archives report a byte offset") {
  SUBCASE("bad magic") {
    try {
      Deserialize(std::string("FEAT2\0\0\0\0\0", 10));
      FAIL("expected FormatError");
    } catch (const FormatError &e) {
      CHECK(e.offset() == 0);
    }
  }
  SUBCASE("truncated values") {
    FeatureArchive a;
    a.Add(Make("u", Matrix::Ones(2, 2)));
    std::string bytes = Serialize(a);
    bytes.resize(bytes.size() - 3);
    try {
      Deserialize(bytes);
      FAIL("expected FormatError");
    } catch (const FormatError &e) {
      CHECK(e.offset() == bytes.size());  // where the input ran out
    }
  }
}

TEST_CASE("dimension mismatch is a consistency error") {
  FeatureArchive a;
  a.Add(Make("a", Matrix::Ones(2, 3)));
  CHECK_THROWS_AS(a.Add(Make("b", Matrix::Ones(2, 4))), ConsistencyError);
  CHECK_THROWS_AS(a.Add(Make("a", Matrix::Ones(2, 3))), ConsistencyError);
  CHECK_THROWS_AS(a.Add(Make("c", Matrix(0, 3))), InputError);
  Matrix bad = Matrix::Ones(2, 3);
  bad(1, 1) = std::nan("");
  CHECK_THROWS_AS(a.Add(Make("d", bad)), InputError);
}

TEST_CASE("CMN") {
  SUBCASE("constant matrix becomes zero") {
    const FeatureMatrix out = ApplyCmn(Make("u", Matrix::Constant(4, 3, 2.5)));
    CHECK(out.frames.isZero(0.0));
  }
  SUBCASE("hand example") {
    Matrix x(2, 2);
    x << 1, 2, 3, 4;
    Matrix expect(2, 2);
    expect << -1, -1, 1, 1;
    CHECK(ApplyCmn(Make("u", x)).frames == expect);
  }
  SUBCASE("zero column means and idempotence") {
    std::mt19937_64 rng(5);
    const FeatureMatrix once = ApplyCmn(Make("u", testing::RandomMatrix(rng, 50, 6)));
    CHECK(once.frames.colwise().mean().cwiseAbs().maxCoeff() < 1e-10);
    const FeatureMatrix twice = ApplyCmn(once);
    CHECK((twice.frames - once.frames).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("speaker scope pools the speaker's utterances") {
    Matrix a(1, 1), b(1, 1), c(1, 1);
    a << 1;
    b << 3;
    c << 10;
    FeatureArchive arch;
    arch.Add(Make("a", a, "s1"));
    arch.Add(Make("b", b, "s1"));
    arch.Add(Make("c", c, "s2"));
    const FeatureArchive out = ApplyCmn(arch, CmnScope::kSpeaker);
    CHECK(out[0].frames(0, 0) == -1.0);
    CHECK(out[1].frames(0, 0) == 1.0);
    CHECK(out[2].frames(0, 0) == 0.0);
  }
  SUBCASE("speaker scope needs speaker ids") {
    FeatureArchive arch;
    arch.Add(Make("a", Matrix::Ones(2, 2)));
    CHECK_THROWS_AS(ApplyCmn(arch, CmnScope::kSpeaker), MetadataError);
  }
}

TEST_CASE("deltas") {
  SUBCASE("13 -> 39 columns") {
    CHECK(AppendDeltas(Make("u", Matrix::Ones(4, 13))).Dim() == 39);
  }
  SUBCASE("constant signal has zero deltas") {
    const FeatureMatrix out = AppendDeltas(Make("u", Matrix::Constant(6, 2, 3.0)));
    CHECK(out.frames.rightCols(4).isZero(0.0));
    CHECK(out.NumFrames() == 6);
  }
  SUBCASE("ramp has unit delta on interior frames") {
    Matrix x(9, 1);
    for (int t = 0; t < 9; ++t) x(t, 0) = t;
    const FeatureMatrix out = AppendDeltas(Make("u", x));
    // (1*(1) + 2*(2)) * 2 / (2 * (1 + 4)) = 1
    for (int t = 2; t < 7; ++t) CHECK(out.frames(t, 1) == doctest::Approx(1.0).epsilon(1e-12));
    for (int t = 4; t < 5; ++t) CHECK(std::abs(out.frames(t, 2)) < 1e-12);
  }
  SUBCASE("matches the regression formula with edge replication") {
    std::mt19937_64 rng(9);
    const Matrix x = testing::RandomMatrix(rng, 7, 3);
    const FeatureMatrix out = AppendDeltas(Make("u", x));
    auto clamp = [&](int t) { return std::clamp(t, 0, 6); };
    Matrix d(7, 3);
    for (int t = 0; t < 7; ++t)
      d.row(t) = (1 * (x.row(clamp(t + 1)) - x.row(clamp(t - 1))) +
                  2 * (x.row(clamp(t + 2)) - x.row(clamp(t - 2)))) /
                 10.0;
    Matrix dd(7, 3);
    for (int t = 0; t < 7; ++t)
      dd.row(t) = (1 * (d.row(clamp(t + 1)) - d.row(clamp(t - 1))) +
                   2 * (d.row(clamp(t + 2)) - d.row(clamp(t - 2)))) /
                  10.0;
    CHECK((out.frames.middleCols(3, 3) - d).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((out.frames.rightCols(3) - dd).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("splicing") {
  SUBCASE("context 5 on 39 dims") {
    CHECK(Splice(Make("u", Matrix::Ones(3, 39)), 5).Dim() == 429);
  }
  SUBCASE("context 0 is the identity") {
    std::mt19937_64 rng(1);
    const Matrix x = testing::RandomMatrix(rng, 4, 3);
    CHECK(Splice(Make("u", x), 0).frames == x);
  }
  SUBCASE("single frame replicated") {
    Matrix x(1, 2);
    x << 7, 8;
    const FeatureMatrix out = Splice(Make("u", x), 2);
    REQUIRE(out.Dim() == 10);
    for (int k = 0; k < 5; ++k) CHECK(out.frames.block(0, 2 * k, 1, 2) == x);
  }
  SUBCASE("row t holds frames t-c..t+c") {
    Matrix x(5, 1);
    x << 0, 1, 2, 3, 4;
    const FeatureMatrix out = Splice(Make("u", x), 1);
    Matrix expect(5, 3);
    expect << 0, 0, 1, 0, 1, 2, 1, 2, 3, 2, 3, 4, 3, 4, 4;
    CHECK(out.frames == expect);
  }
}

TEST_CASE("speaker map round trip") {
  const std::string dir = testing::ScratchDir("spk");
  const std::map<std::string, std::string> m = {{"u1", "a"}, {"u2", "b"}};
  WriteSpeakerMap(dir + "/utt2spk", m);
  CHECK(ReadSpeakerMap(dir + "/utt2spk") == m);
}

}  // namespace zeroseg
