// src/segmentation.cc

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

#include "zeroseg/segmentation.h"

#include <algorithm>
#include <fstream>
#include <map>

#include "zeroseg/text-io.h"

namespace zeroseg {

void ValidateBoundarySet(const BoundarySet &b, int frame_shift_ms) {
  if (frame_shift_ms <= 0) throw ParameterError("frame shift must be positive");
  for (size_t i = 0; i < b.times_ms.size(); ++i) {
    const std::int64_t t = b.times_ms[i];
    if (t < 0)
      throw InputError("utterance " + b.utterance_id + ": negative boundary time");
    if (t % frame_shift_ms != 0)
      throw InputError("utterance " + b.utterance_id + ": boundary " + std::to_string(t) +
                       " ms is not a multiple of the frame shift");
    if (i > 0 && t <= b.times_ms[i - 1])
      throw InputError("utterance " + b.utterance_id +
                       ": boundaries are not strictly increasing at " + std::to_string(t) +
                       " ms");
  }
}

BoundarySet FuseBoundaries(const std::vector<BoundarySet> &sets, int frame_shift_ms,
                           int min_dur_ms) {
  if (sets.empty()) throw InputError("boundary fusion needs at least one set");
  if (min_dur_ms < frame_shift_ms)
    throw ParameterError("minimum duration must be at least one frame shift");
  BoundarySet out;
  out.utterance_id = sets[0].utterance_id;
  std::vector<std::int64_t> all;
  for (const auto &s : sets) {
    if (s.utterance_id != out.utterance_id)
      throw ConsistencyError("fusing boundaries of different utterances: " +
                             out.utterance_id + " and " + s.utterance_id);
    ValidateBoundarySet(s, frame_shift_ms);
    all.insert(all.end(), s.times_ms.begin(), s.times_ms.end());
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  auto &kept = out.times_ms;
  for (std::int64_t t : all) {
    if (kept.empty()) {
      kept.push_back(t);
      continue;
    }
    const std::int64_t gap = t - kept.back();
    if (gap >= min_dur_ms) {
      kept.push_back(t);
    } else if (gap > frame_shift_ms) {
      // Midpoint on the frame grid; an exact half-frame goes down.
      const std::int64_t twice = kept.back() + t;
      const std::int64_t unit = 2 * static_cast<std::int64_t>(frame_shift_ms);
      std::int64_t frames = twice / unit;
      if (twice % unit > frame_shift_ms) ++frames;
      kept.back() = frames * frame_shift_ms;
    }
    // gap <= frame_shift_ms: drop t.
  }
  return out;
}

Posteriorgram PosteriorgramFromFeatures(const FeatureMatrix &m) {
  Posteriorgram p;
  p.rows = m.frames;
  p.block_sizes = {m.Dim()};
  return p;
}

void ValidatePosteriorgram(const Posteriorgram &p, double tol) {
  int total = 0;
  for (int b : p.block_sizes) {
    if (b <= 0) throw InputError("posteriorgram block of non-positive width");
    total += b;
  }
  if (total != p.rows.cols())
    throw InputError("posteriorgram blocks do not cover its columns");
  if (p.rows.size() > 0 && p.rows.minCoeff() < 0)
    throw InputError("posteriorgram has negative entries");
  for (Eigen::Index r = 0; r < p.rows.rows(); ++r) {
    int col = 0;
    for (int b : p.block_sizes) {
      const double s = p.rows.row(r).segment(col, b).sum();
      if (std::abs(s - 1.0) > tol)
        throw InputError("posteriorgram row " + std::to_string(r) +
                         " has a block summing to " + std::to_string(s));
      col += b;
    }
  }
}

Posteriorgram ConcatPosteriors(const std::vector<Posteriorgram> &sources) {
  if (sources.empty()) throw InputError("no posteriorgrams to concatenate");
  const Eigen::Index t = sources[0].NumRows();
  Eigen::Index cols = 0;
  for (size_t i = 0; i < sources.size(); ++i) {
    if (sources[i].NumRows() != t)
      throw AlignmentError("posteriorgram source " + std::to_string(i) + " has " +
                           std::to_string(sources[i].NumRows()) + " frames, expected " +
                           std::to_string(t));
    cols += sources[i].rows.cols();
  }
  Posteriorgram out;
  out.rows.resize(t, cols);
  Eigen::Index col = 0;
  for (const auto &s : sources) {
    out.rows.middleCols(col, s.rows.cols()) = s.rows;
    col += s.rows.cols();
    out.block_sizes.insert(out.block_sizes.end(), s.block_sizes.begin(), s.block_sizes.end());
  }
  return out;
}

Posteriorgram SegmentPosteriorgram(const Posteriorgram &frames, const Segmentation &seg) {
  Posteriorgram out;
  out.block_sizes = frames.block_sizes;
  out.rows.resize(static_cast<Eigen::Index>(seg.segments.size()), frames.rows.cols());
  for (size_t k = 0; k < seg.segments.size(); ++k) {
    const Segment &s = seg.segments[k];
    if (s.begin < 0 || s.end < s.begin || s.end >= frames.NumRows())
      throw BoundsError("utterance " + seg.utterance_id + ": segment [" +
                        std::to_string(s.begin) + ", " + std::to_string(s.end) +
                        "] outside " + std::to_string(frames.NumRows()) + " frames");
    out.rows.row(k) = frames.rows.middleRows(s.begin, s.end - s.begin + 1).colwise().mean();
  }
  return out;
}

Segmentation BoundariesToSegmentation(const BoundarySet &b, std::int64_t num_frames,
                                      int frame_shift_ms) {
  if (num_frames < 1) throw InputError("utterance " + b.utterance_id + " has no frames");
  ValidateBoundarySet(b, frame_shift_ms);
  Segmentation seg;
  seg.utterance_id = b.utterance_id;
  std::int64_t start = 0;
  for (std::int64_t t : b.times_ms) {
    const std::int64_t f = t / frame_shift_ms;
    if (f > num_frames)
      throw BoundsError("utterance " + b.utterance_id + ": boundary at " +
                        std::to_string(t) + " ms is past the last frame");
    if (f == 0 || f == num_frames) continue;
    seg.segments.push_back({start, f - 1});
    start = f;
  }
  seg.segments.push_back({start, num_frames - 1});
  return seg;
}

std::vector<BoundarySet> ReadBoundaries(const std::string &path) {
  std::vector<BoundarySet> sets;
  std::map<std::string, size_t> index;
  ForEachTextRecord(path, [&](const std::vector<std::string> &f, std::uint64_t lineno) {
    if (f.size() != 2) throw FormatError("boundary line needs 2 fields", lineno);
    auto it = index.find(f[0]);
    if (it == index.end()) {
      it = index.emplace(f[0], sets.size()).first;
      sets.push_back({f[0], {}});
    }
    sets[it->second].times_ms.push_back(ParseInt(f[1], lineno));
  });
  return sets;
}

void WriteBoundaries(const std::string &path, const std::vector<BoundarySet> &sets) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  for (const auto &s : sets)
    for (std::int64_t t : s.times_ms) os << s.utterance_id << '\t' << t << '\n';
  if (!os) throw Error("write failed: " + path);
}

}  // namespace zeroseg
