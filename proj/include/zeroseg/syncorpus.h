// zeroseg/syncorpus.h

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

// Deterministic synthetic corpus with known phone, speaker and boundary
// truth.  Frames of phone p spoken by speaker s are drawn from
// N(mean_p + offset_s, diag(std_p^2)).  Pseudo-recognizers emit softmax
// posteriorgrams under jittered copies of the phone models and boundary
// hypotheses obtained by jittering the true phone boundaries.

#ifndef ZEROSEG_SYNCORPUS_H_
#define ZEROSEG_SYNCORPUS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "zeroseg/base.h"
#include "zeroseg/eval.h"
#include "zeroseg/features.h"
#include "zeroseg/segmentation.h"

namespace zeroseg {

struct CorpusSpec {
  int n_phones = 5;
  int n_speakers = 4;
  int n_utterances = 40;
  int min_phone_frames = 6;  // frames per phone occurrence, inclusive range
  int max_phone_frames = 12;
  int min_phones_per_utt = 6;
  int max_phones_per_utt = 12;
  int dim = 8;
  int frame_shift_ms = 10;
  double phone_scale = 1.0;    // largest per-dimension standard deviation
  double mean_spacing = 6.0;   // minimum pairwise distance of phone means
  double speaker_offset = 1.0; // norm of each speaker's offset vector
  // Explicit offsets, one per speaker; overrides speaker_offset when set.
  std::vector<Vector> speaker_offsets;
  // Class count of each pseudo-recognizer; every count must be >= n_phones.
  std::vector<int> recognizer_classes{7, 9};
  double recognizer_jitter = 0.3;  // std of the jitter added to model means
  double posterior_temperature = 1.0;
  int boundary_jitter_frames = 1;  // per-recognizer boundary perturbation
  std::uint64_t seed = 1;
};

/// Throws SpecError if the spec cannot be generated.
void ValidateCorpusSpec(const CorpusSpec &spec);

struct PhoneModels {
  std::vector<Vector> means;
  std::vector<Vector> stddevs;
};

struct SyntheticCorpus {
  CorpusSpec spec;
  PhoneModels phones;
  std::vector<Vector> speaker_offsets;
  std::vector<std::string> speakers;
  FeatureArchive features;  // speaker_id set on every utterance
  std::map<std::string, std::string> utt2spk;
  ReferenceAlignment alignment;
  // Class of recognizer j's class c is phone recognizer_phone[j][c].
  std::vector<std::vector<int>> recognizer_phone;
  std::vector<FeatureArchive> posteriorgrams;          // one per recognizer
  std::vector<std::vector<BoundarySet>> boundaries;     // one per recognizer
  std::vector<AbxItem> abx_items;
};

/// Pure function of the spec; utterances are generated in parallel from
/// per-utterance streams, so `threads` does not affect the result.
SyntheticCorpus GenerateCorpus(const CorpusSpec &spec, int threads = 1);

/// Triphone items (interior phone occurrences) whose (left, right) context
/// occurs with at least two distinct center phones.
std::vector<AbxItem> MinimalPairItems(const ReferenceAlignment &alignment,
                                      const std::map<std::string, std::string> &utt2spk);

// File names used by WriteCorpus inside the output directory.
inline constexpr const char *kCorpusFeatures = "feats.ark";
inline constexpr const char *kCorpusAlignment = "ali.txt";
inline constexpr const char *kCorpusSpeakers = "utt2spk";
inline constexpr const char *kCorpusItems = "items.txt";
std::string CorpusPosteriorFile(int recognizer);  // "post.<j>.ark"
std::string CorpusBoundaryFile(int recognizer);   // "bounds.<j>.txt"

/// Writes every artifact into `dir` (created if needed); returns the paths.
std::vector<std::string> WriteCorpus(const std::string &dir, const SyntheticCorpus &corpus);

}  // namespace zeroseg

#endif  // ZEROSEG_SYNCORPUS_H_
