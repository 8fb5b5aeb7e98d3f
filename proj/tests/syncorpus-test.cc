// tests/syncorpus-test.cc

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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "test-util.h"
#include "zeroseg/syncorpus.h"

namespace zeroseg {

namespace {

std::string Slurp(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("smallest corpus") {
  CorpusSpec spec;
  spec.n_phones = 1;
  spec.n_speakers = 1;
  spec.n_utterances = 1;
  spec.recognizer_classes = {1};
  const SyntheticCorpus c = GenerateCorpus(spec);
  REQUIRE(c.features.Size() == 1);
  const auto &spans = c.alignment.utterances.at(c.features[0].utterance_id);
  REQUIRE(spans.size() == 1);
  CHECK(spans[0].start_frame == 0);
  CHECK(spans[0].end_frame == c.features[0].NumFrames() - 1);
}

TEST_CASE("determinism") {
  CorpusSpec spec;
  spec.n_utterances = 12;
  const std::string d1 = testing::ScratchDir("syncorpus-1"), d2 = testing::ScratchDir("syncorpus-2");
  const auto files = WriteCorpus(d1, GenerateCorpus(spec, 1));
  WriteCorpus(d2, GenerateCorpus(spec, 4));
  REQUIRE(!files.empty());
  for (const auto &f : files) {
    const std::string name = std::filesystem::path(f).filename().string();
    CHECK(Slurp(d1 + "/" + name) == Slurp(d2 + "/" + name));
  }
  spec.seed = 2;
  const std::string d3 = testing::ScratchDir("syncorpus-3");
  WriteCorpus(d3, GenerateCorpus(spec));
  CHECK(Slurp(d1 + "/" + kCorpusFeatures) != Slurp(d3 + "/" + kCorpusFeatures));
}

TEST_CASE("corpus structure") {
  CorpusSpec spec;
  const SyntheticCorpus c = GenerateCorpus(spec);
  CHECK(c.features.Size() == static_cast<size_t>(spec.n_utterances));
  CHECK(c.speakers.size() == static_cast<size_t>(spec.n_speakers));
  // Phone means are well apart relative to the frame spread.
  for (int i = 0; i < spec.n_phones; ++i)
    for (int j = i + 1; j < spec.n_phones; ++j)
      CHECK((c.phones.means[i] - c.phones.means[j]).norm() >= 4 * spec.phone_scale);

  std::int64_t hit = 0, total = 0;
  for (const auto &m : c.features) {
    const std::string &spk = c.utt2spk.at(m.utterance_id);
    CHECK(m.speaker_id == spk);
    const int s = static_cast<int>(std::find(c.speakers.begin(), c.speakers.end(), spk) -
                                   c.speakers.begin());
    const auto phones = c.alignment.FramePhones(m.utterance_id, m.NumFrames());
    for (Eigen::Index t = 0; t < m.NumFrames(); ++t) {
      int best = 0;
      double best_d = 1e300;
      for (int k = 0; k < spec.n_phones; ++k) {
        const double d =
            (m.frames.row(t).transpose() - c.phones.means[k] - c.speaker_offsets[s]).norm();
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      hit += best == phones[t];
      ++total;
    }
    const auto &spans = c.alignment.utterances.at(m.utterance_id);
    for (size_t i = 1; i < spans.size(); ++i) CHECK(spans[i].phone != spans[i - 1].phone);
  }
  CHECK(static_cast<double>(hit) / total >= 0.99);

  REQUIRE(c.posteriorgrams.size() == spec.recognizer_classes.size());
  for (size_t j = 0; j < c.posteriorgrams.size(); ++j) {
    for (const auto &p : c.posteriorgrams[j]) {
      CHECK(p.Dim() == spec.recognizer_classes[j]);
      CHECK(p.NumFrames() == c.features.Find(p.utterance_id)->NumFrames());
      for (Eigen::Index t = 0; t < p.NumFrames(); ++t)
        CHECK(std::abs(p.frames.row(t).sum() - 1.0) <= 1e-10);
    }
    for (const auto &b : c.boundaries[j]) ValidateBoundarySet(b, spec.frame_shift_ms);
  }

  REQUIRE(!c.abx_items.empty());
  for (const auto &it : c.abx_items) {
    const auto &spans = c.alignment.utterances.at(it.utterance_id);
    bool found = false;
    for (size_t i = 1; i + 1 < spans.size(); ++i) {
      if (spans[i].start_frame != it.onset_frame) continue;
      found = spans[i].end_frame == it.offset_frame && spans[i].phone == it.center &&
              spans[i - 1].phone == it.left && spans[i + 1].phone == it.right;
    }
    CHECK(found);
    CHECK(it.speaker == c.utt2spk.at(it.utterance_id));
  }
}

TEST_CASE("speaker offsets") {
  CorpusSpec spec;
  spec.speaker_offset = 5.0;
  const SyntheticCorpus c = GenerateCorpus(spec);
  for (const auto &o : c.speaker_offsets) CHECK(std::abs(o.norm() - 5.0) <= 1e-12);
  spec.speaker_offsets = {Vector::Zero(spec.dim), Vector::Ones(spec.dim), Vector::Zero(spec.dim),
                          Vector::Zero(spec.dim)};
  CHECK(GenerateCorpus(spec).speaker_offsets[1] == Vector::Ones(spec.dim));
}

TEST_CASE("invalid specs") {
  CorpusSpec spec;
  spec.n_phones = 0;
  CHECK_THROWS_AS(ValidateCorpusSpec(spec), SpecError);
  spec = CorpusSpec();
  spec.recognizer_classes = {3};
  CHECK_THROWS_AS(GenerateCorpus(spec), SpecError);
  spec = CorpusSpec();
  spec.speaker_offsets = {Vector::Zero(spec.dim)};
  CHECK_THROWS_AS(GenerateCorpus(spec), SpecError);
  spec = CorpusSpec();
  spec.min_phone_frames = 9;
  spec.max_phone_frames = 3;
  CHECK_THROWS_AS(ValidateCorpusSpec(spec), SpecError);
}

}  // namespace zeroseg
