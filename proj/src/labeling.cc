// src/labeling.cc

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

#include "zeroseg/labeling.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "zeroseg/base.h"
#include "zeroseg/text-io.h"

namespace zeroseg {

size_t LabelSequence::NumRetained() const {
  return static_cast<size_t>(std::count(removed.begin(), removed.end(), false));
}

ClusterHistogram ClusterCounts(const std::vector<LabelSequence> &seqs) {
  ClusterHistogram h;
  for (const auto &s : seqs) {
    for (int l : s.labels) ++h.counts[l];
    h.total += static_cast<std::int64_t>(s.labels.size());
  }
  h.sorted.assign(h.counts.begin(), h.counts.end());
  // std::map iterates labels in ascending order, so a stable sort by count
  // leaves equal counts ordered by label.
  std::stable_sort(h.sorted.begin(), h.sorted.end(),
                   [](const auto &a, const auto &b) { return a.second > b.second; });
  return h;
}

FilterResult FilterLabels(const std::vector<LabelSequence> &seqs, double retain) {
  if (!(retain > 0.0 && retain <= 1.0))
    throw ParameterError("retained fraction must lie in (0, 1]");
  for (const auto &s : seqs)
    if (s.removed.size() != s.labels.size())
      throw ConsistencyError("utterance " + s.utterance_id +
                             " has a removed mask of the wrong length");
  const ClusterHistogram h = ClusterCounts(seqs);
  FilterResult out;
  std::int64_t covered = 0;
  for (const auto &[label, count] : h.sorted) {
    if (out.k_cut > 0 &&
        static_cast<double>(covered) / static_cast<double>(h.total) >= retain)
      break;
    out.retained.insert(label);
    covered += count;
    ++out.k_cut;
  }
  out.seqs = seqs;
  for (auto &s : out.seqs)
    for (size_t t = 0; t < s.labels.size(); ++t)
      s.removed[t] = !out.retained.count(s.labels[t]);
  return out;
}

std::vector<Token> CollapseToTranscription(const LabelSequence &seq) {
  std::vector<Token> tokens;
  for (size_t t = 0; t < seq.labels.size(); ++t) {
    if (t < seq.removed.size() && seq.removed[t]) continue;
    const auto frame = static_cast<std::int64_t>(t);
    if (!tokens.empty() && tokens.back().label == seq.labels[t]) {
      tokens.back().end_frame = frame;
    } else {
      tokens.push_back({seq.labels[t], frame, frame});
    }
  }
  return tokens;
}

LabelSequence ExpandTranscription(const std::string &utterance_id,
                                  const std::vector<Token> &tokens,
                                  std::int64_t num_frames) {
  LabelSequence seq(utterance_id, std::vector<int>(num_frames, 0));
  std::fill(seq.removed.begin(), seq.removed.end(), true);
  std::int64_t prev_end = -1;
  for (const auto &tok : tokens) {
    if (tok.start_frame <= prev_end || tok.end_frame < tok.start_frame ||
        tok.end_frame >= num_frames)
      throw BoundsError("token spans of utterance " + utterance_id +
                        " overlap or exceed the utterance");
    for (std::int64_t t = tok.start_frame; t <= tok.end_frame; ++t) {
      seq.labels[t] = tok.label;
      seq.removed[t] = false;
    }
    prev_end = tok.end_frame;
  }
  return seq;
}

void WriteFrameLabels(const std::string &path, const std::vector<LabelSequence> &seqs) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  for (const auto &s : seqs) {
    for (size_t t = 0; t < s.labels.size(); ++t) {
      os << s.utterance_id << '\t' << t << '\t' << s.labels[t];
      if (t < s.removed.size() && s.removed[t]) os << "\tremoved";
      os << '\n';
    }
  }
  if (!os) throw Error("write failed: " + path);
}

std::vector<LabelSequence> ReadFrameLabels(const std::string &path) {
  std::vector<LabelSequence> seqs;
  ForEachTextRecord(path, [&](const std::vector<std::string> &f, std::uint64_t lineno) {
    if (f.size() != 3 && f.size() != 4)
      throw FormatError("frame label line needs 3 or 4 fields", lineno);
    if (f.size() == 4 && f[3] != "removed")
      throw FormatError("fourth frame label field must be \"removed\"", lineno);
    const auto frame = ParseInt(f[1], lineno);
    const int label = static_cast<int>(ParseInt(f[2], lineno));
    if (seqs.empty() || seqs.back().utterance_id != f[0]) {
      for (const auto &s : seqs)
        if (s.utterance_id == f[0])
          throw FormatError("frames of utterance " + f[0] + " are not contiguous", lineno);
      seqs.emplace_back(f[0], std::vector<int>());
    }
    auto &s = seqs.back();
    if (frame != static_cast<std::int64_t>(s.labels.size()))
      throw FormatError("utterance " + f[0] + " frame indices must count up from 0",
                        lineno);
    s.labels.push_back(label);
    s.removed.push_back(f.size() == 4);
  });
  return seqs;
}

void WriteTranscription(const std::string &path, const Transcription &trans) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  for (const auto &[utt, tokens] : trans)
    for (const auto &tok : tokens)
      os << utt << '\t' << tok.start_frame << '\t' << tok.end_frame << '\t' << tok.label
         << '\n';
  if (!os) throw Error("write failed: " + path);
}

Transcription ReadTranscription(const std::string &path) {
  Transcription trans;
  ForEachTextRecord(path, [&](const std::vector<std::string> &f, std::uint64_t lineno) {
    if (f.size() != 4) throw FormatError("transcription line needs 4 fields", lineno);
    Token tok{static_cast<int>(ParseInt(f[3], lineno)), ParseInt(f[1], lineno),
              ParseInt(f[2], lineno)};
    if (tok.end_frame < tok.start_frame || tok.start_frame < 0)
      throw FormatError("token end precedes its start", lineno);
    if (trans.empty() || trans.back().first != f[0]) trans.emplace_back(f[0], std::vector<Token>());
    trans.back().second.push_back(tok);
  });
  return trans;
}

}  // namespace zeroseg
