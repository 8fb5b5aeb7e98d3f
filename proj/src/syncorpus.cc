// src/syncorpus.cc

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

#include "zeroseg/syncorpus.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <set>

#include "zeroseg/parallel.h"
#include "zeroseg/rng.h"

namespace zeroseg {

namespace {

// Stream tags.
constexpr std::uint64_t kTagModels = 0x6d6f64656c73;
constexpr std::uint64_t kTagUtterance = 0x757474;
constexpr std::uint64_t kTagBoundary = 0x626e64;

int UniformInt(Engine &rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double Uniform(Engine &rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

PhoneModels DrawPhoneModels(const CorpusSpec &spec, Engine &rng) {
  PhoneModels m;
  const double sigma = 1.5 * spec.mean_spacing * std::sqrt(static_cast<double>(spec.n_phones)) /
                       std::sqrt(2.0 * spec.dim);
  for (int p = 0; p < spec.n_phones; ++p) {
    bool placed = false;
    for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
      Vector mean = sigma * SampleStandardNormal(rng, spec.dim);
      placed = std::all_of(m.means.begin(), m.means.end(), [&](const Vector &other) {
        return (other - mean).norm() >= spec.mean_spacing;
      });
      if (placed) m.means.push_back(mean);
    }
    if (!placed)
      throw SpecError("cannot place " + std::to_string(spec.n_phones) +
                      " phone means with spacing " + std::to_string(spec.mean_spacing) +
                      " in " + std::to_string(spec.dim) + " dimensions");
    Vector sd(spec.dim);
    for (int d = 0; d < spec.dim; ++d) sd(d) = Uniform(rng, 0.5, 1.0) * spec.phone_scale;
    m.stddevs.push_back(sd);
  }
  return m;
}

double DiagLogDensity(const Vector &x, const Vector &mean, const Vector &sd) {
  double s = 0.0;
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    const double z = (x(d) - mean(d)) / sd(d);
    s += -0.5 * z * z - std::log(sd(d));
  }
  return s - 0.5 * static_cast<double>(x.size()) * std::log(2.0 * M_PI);
}

struct RecognizerModel {
  std::vector<int> phone;
  std::vector<Vector> means;
};

std::string Pad(int value, int width) {
  std::string s = std::to_string(value);
  return std::string(std::max(0, width - static_cast<int>(s.size())), '0') + s;
}

}  // namespace

void ValidateCorpusSpec(const CorpusSpec &spec) {
  auto fail = [](const std::string &what) { throw SpecError("corpus spec: " + what); };
  if (spec.n_phones < 1) fail("n_phones must be >= 1");
  if (spec.n_speakers < 1) fail("n_speakers must be >= 1");
  if (spec.n_utterances < spec.n_speakers)
    fail("n_utterances (" + std::to_string(spec.n_utterances) +
         ") must be at least n_speakers (" + std::to_string(spec.n_speakers) + ")");
  if (spec.min_phone_frames < 1 || spec.max_phone_frames < spec.min_phone_frames)
    fail("phone frame range must satisfy 1 <= min <= max");
  if (spec.min_phones_per_utt < 1 || spec.max_phones_per_utt < spec.min_phones_per_utt)
    fail("phones per utterance range must satisfy 1 <= min <= max");
  if (spec.dim < 1) fail("dim must be >= 1");
  if (spec.frame_shift_ms < 1) fail("frame_shift_ms must be >= 1");
  if (!(spec.phone_scale > 0)) fail("phone_scale must be positive");
  if (!(spec.mean_spacing >= 4.0 * spec.phone_scale))
    fail("mean_spacing must be at least 4 * phone_scale");
  if (!(spec.speaker_offset >= 0)) fail("speaker_offset must be non-negative");
  if (!spec.speaker_offsets.empty()) {
    if (static_cast<int>(spec.speaker_offsets.size()) != spec.n_speakers)
      fail(std::to_string(spec.n_speakers) + " speakers but " +
           std::to_string(spec.speaker_offsets.size()) + " offset vectors");
    for (const auto &o : spec.speaker_offsets)
      if (o.size() != spec.dim) fail("speaker offset of wrong dimension");
  }
  for (int m : spec.recognizer_classes)
    if (m < spec.n_phones) fail("every recognizer needs at least n_phones classes");
  if (!(spec.recognizer_jitter >= 0)) fail("recognizer_jitter must be non-negative");
  if (!(spec.posterior_temperature > 0)) fail("posterior_temperature must be positive");
  if (spec.boundary_jitter_frames < 0) fail("boundary_jitter_frames must be >= 0");
}

std::string CorpusPosteriorFile(int recognizer) {
  return "post." + std::to_string(recognizer) + ".ark";
}

std::string CorpusBoundaryFile(int recognizer) {
  return "bounds." + std::to_string(recognizer) + ".txt";
}

SyntheticCorpus GenerateCorpus(const CorpusSpec &spec, int threads) {
  ValidateCorpusSpec(spec);
  SyntheticCorpus c;
  c.spec = spec;
  Engine rng = MakeEngine(spec.seed, kTagModels);
  c.phones = DrawPhoneModels(spec, rng);
  for (int s = 0; s < spec.n_speakers; ++s) {
    c.speakers.push_back("spk" + Pad(s + 1, 2));
    if (!spec.speaker_offsets.empty()) {
      c.speaker_offsets.push_back(spec.speaker_offsets[s]);
    } else {
      Vector dir = SampleStandardNormal(rng, spec.dim);
      const double n = dir.norm();
      c.speaker_offsets.push_back(n > 0 ? Vector(dir * (spec.speaker_offset / n))
                                        : Vector(Vector::Zero(spec.dim)));
    }
  }
  std::vector<RecognizerModel> recognizers;
  for (int m : spec.recognizer_classes) {
    RecognizerModel r;
    for (int k = 0; k < m; ++k) {
      const int p = k % spec.n_phones;
      r.phone.push_back(p);
      r.means.push_back(c.phones.means[p] +
                        spec.recognizer_jitter * SampleStandardNormal(rng, spec.dim));
    }
    c.recognizer_phone.push_back(r.phone);
    recognizers.push_back(std::move(r));
  }
  const int nrec = static_cast<int>(recognizers.size());

  struct Utterance {
    FeatureMatrix feats;
    std::vector<PhoneSpan> spans;
    std::vector<FeatureMatrix> posts;
    std::vector<BoundarySet> bounds;
  };
  std::vector<Utterance> utts(spec.n_utterances);
  ParallelFor(spec.n_utterances, threads, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t i = begin; i < end; ++i) {
      Engine urng = MakeEngine(spec.seed, kTagUtterance, static_cast<std::uint64_t>(i));
      const int s = static_cast<int>(i % spec.n_speakers);
      Utterance &u = utts[i];
      u.feats.utterance_id = c.speakers[s] + "_u" + Pad(static_cast<int>(i) + 1, 4);
      u.feats.speaker_id = c.speakers[s];
      u.feats.frame_shift_ms = spec.frame_shift_ms;
      const int length = spec.n_phones == 1
                             ? 1
                             : UniformInt(urng, spec.min_phones_per_utt, spec.max_phones_per_utt);
      std::int64_t t = 0;
      for (int k = 0; k < length; ++k) {
        int p;
        if (k == 0) {
          p = UniformInt(urng, 0, spec.n_phones - 1);
        } else {
          // Uniform over the phones other than the previous one.
          p = UniformInt(urng, 0, spec.n_phones - 2);
          if (p >= u.spans.back().phone) ++p;
        }
        const int dur = UniformInt(urng, spec.min_phone_frames, spec.max_phone_frames);
        u.spans.push_back({t, t + dur - 1, p});
        t += dur;
      }
      Matrix frames(t, spec.dim);
      for (const auto &span : u.spans)
        for (std::int64_t f = span.start_frame; f <= span.end_frame; ++f)
          frames.row(f) = (c.phones.means[span.phone] + c.speaker_offsets[s] +
                           c.phones.stddevs[span.phone].cwiseProduct(
                               SampleStandardNormal(urng, spec.dim)))
                              .transpose();
      for (int j = 0; j < nrec; ++j) {
        const RecognizerModel &r = recognizers[j];
        const int m = static_cast<int>(r.phone.size());
        FeatureMatrix post;
        post.utterance_id = u.feats.utterance_id;
        post.speaker_id = u.feats.speaker_id;
        post.frame_shift_ms = spec.frame_shift_ms;
        post.frames.resize(t, m);
        Vector ll(m);
        for (std::int64_t f = 0; f < t; ++f) {
          const Vector x = frames.row(f).transpose();
          for (int k = 0; k < m; ++k)
            ll(k) = DiagLogDensity(x, r.means[k], c.phones.stddevs[r.phone[k]]) /
                    spec.posterior_temperature;
          const double mx = ll.maxCoeff();
          Vector e = (ll.array() - mx).exp();
          post.frames.row(f) = (e / e.sum()).transpose();
        }
        u.posts.push_back(std::move(post));

        Engine brng = MakeEngine(spec.seed, kTagBoundary + static_cast<std::uint64_t>(j),
                                 static_cast<std::uint64_t>(i));
        std::set<std::int64_t> frames_set;
        for (size_t k = 1; k < u.spans.size(); ++k) {
          const std::int64_t b =
              u.spans[k].start_frame +
              UniformInt(brng, -spec.boundary_jitter_frames, spec.boundary_jitter_frames);
          if (b > 0 && b < t) frames_set.insert(b);
        }
        BoundarySet bs{u.feats.utterance_id, {}};
        for (std::int64_t b : frames_set) bs.times_ms.push_back(b * spec.frame_shift_ms);
        u.bounds.push_back(std::move(bs));
      }
      u.feats.frames = std::move(frames);
    }
  });

  c.posteriorgrams.resize(nrec);
  c.boundaries.resize(nrec);
  for (int p = 0; p < spec.n_phones; ++p) c.alignment.inventory.insert(p);
  for (auto &u : utts) {
    c.utt2spk[u.feats.utterance_id] = *u.feats.speaker_id;
    c.alignment.utterances[u.feats.utterance_id] = u.spans;
    for (int j = 0; j < nrec; ++j) {
      c.posteriorgrams[j].Add(std::move(u.posts[j]));
      c.boundaries[j].push_back(std::move(u.bounds[j]));
    }
    c.features.Add(std::move(u.feats));
  }
  c.abx_items = MinimalPairItems(c.alignment, c.utt2spk);
  return c;
}

std::vector<AbxItem> MinimalPairItems(const ReferenceAlignment &alignment,
                                      const std::map<std::string, std::string> &utt2spk) {
  std::vector<AbxItem> all;
  std::map<std::pair<int, int>, std::set<int>> centers;
  for (const auto &[utt, spans] : alignment.utterances) {
    auto spk = utt2spk.find(utt);
    if (spk == utt2spk.end()) throw MetadataError("utterance " + utt + " has no speaker");
    for (size_t k = 1; k + 1 < spans.size(); ++k) {
      AbxItem it{utt,           spans[k].start_frame, spans[k].end_frame, spans[k].phone,
                 spans[k - 1].phone, spans[k + 1].phone, spk->second};
      centers[{it.left, it.right}].insert(it.center);
      all.push_back(std::move(it));
    }
  }
  std::vector<AbxItem> items;
  for (auto &it : all)
    if (centers[{it.left, it.right}].size() >= 2) items.push_back(std::move(it));
  return items;
}

std::vector<std::string> WriteCorpus(const std::string &dir, const SyntheticCorpus &corpus) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path root(dir);
  std::vector<std::string> paths;
  auto path = [&](const std::string &name) {
    paths.push_back((root / name).string());
    return paths.back();
  };
  WriteFeatureArchive(path(kCorpusFeatures), corpus.features);
  WriteAlignment(path(kCorpusAlignment), corpus.alignment);
  WriteSpeakerMap(path(kCorpusSpeakers), corpus.utt2spk);
  WriteAbxItems(path(kCorpusItems), corpus.abx_items);
  for (size_t j = 0; j < corpus.posteriorgrams.size(); ++j) {
    WriteFeatureArchive(path(CorpusPosteriorFile(static_cast<int>(j))), corpus.posteriorgrams[j]);
    WriteBoundaries(path(CorpusBoundaryFile(static_cast<int>(j))), corpus.boundaries[j]);
  }
  return paths;
}

}  // namespace zeroseg
