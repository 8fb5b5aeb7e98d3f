// zeroseg/labeling.h

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

#ifndef ZEROSEG_LABELING_H_
#define ZEROSEG_LABELING_H_

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace zeroseg {

/// Frame-level cluster labels of one utterance.  removed[t] marks frames
/// dropped by label filtering.
struct LabelSequence {
  std::string utterance_id;
  std::vector<int> labels;
  std::vector<bool> removed;

  LabelSequence() = default;
  LabelSequence(std::string id, std::vector<int> l)
      : utterance_id(std::move(id)), labels(std::move(l)), removed(labels.size(), false) {}

  size_t Size() const { return labels.size(); }
  size_t NumRetained() const;
};

/// Cluster sizes pooled over a corpus.  `sorted` lists (label, count) by
/// descending count, ties by ascending label; sorted[k].first is the index
/// map m(k).
struct ClusterHistogram {
  std::map<int, std::int64_t> counts;
  std::vector<std::pair<int, std::int64_t>> sorted;
  std::int64_t total = 0;
};

ClusterHistogram ClusterCounts(const std::vector<LabelSequence> &seqs);

struct FilterResult {
  std::vector<LabelSequence> seqs;  // copies with `removed` set
  std::set<int> retained;           // the k_cut dominant clusters
  int k_cut = 0;
};

/// Keeps the smallest set of largest clusters covering at least a fraction
/// `retain` of all frames and marks every other frame as removed.  Counts
/// are pooled over all sequences.  Throws ParameterError unless
/// 0 < retain <= 1.
FilterResult FilterLabels(const std::vector<LabelSequence> &seqs, double retain);

struct Token {
  int label;
  std::int64_t start_frame;  // inclusive
  std::int64_t end_frame;    // inclusive

  bool operator==(const Token &) const = default;
};

/// Collapses runs of identical labels into tokens.  Removed frames are
/// skipped; equal labels separated only by removed frames form one token.
std::vector<Token> CollapseToTranscription(const LabelSequence &seq);

/// Inverse of collapsing: a sequence of length `num_frames` with each token's
/// span filled by its label; frames outside every span are marked removed.
LabelSequence ExpandTranscription(const std::string &utterance_id,
                                  const std::vector<Token> &tokens,
                                  std::int64_t num_frames);

// Frame labels: "utterance_id<TAB>frame_index<TAB>label", one line per frame.
// A fourth column "removed" marks filtered frames.
void WriteFrameLabels(const std::string &path, const std::vector<LabelSequence> &seqs);
std::vector<LabelSequence> ReadFrameLabels(const std::string &path);

// Transcriptions: "utterance_id<TAB>start_frame<TAB>end_frame<TAB>label".
using Transcription = std::vector<std::pair<std::string, std::vector<Token>>>;
void WriteTranscription(const std::string &path, const Transcription &trans);
Transcription ReadTranscription(const std::string &path);

}  // namespace zeroseg

#endif  // ZEROSEG_LABELING_H_
