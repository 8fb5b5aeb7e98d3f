// zeroseg/segmentation.h

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

// Phone-boundary fusion across recognizers and frame/segment posteriorgrams.

#ifndef ZEROSEG_SEGMENTATION_H_
#define ZEROSEG_SEGMENTATION_H_

#include <cstdint>
#include <string>
#include <vector>

#include "zeroseg/base.h"
#include "zeroseg/features.h"

namespace zeroseg {

/// Boundary times (ms) of one utterance, strictly increasing multiples of
/// the frame shift.
struct BoundarySet {
  std::string utterance_id;
  std::vector<std::int64_t> times_ms;
};

/// Throws InputError (naming the utterance) unless the times are
/// non-negative, strictly increasing and on the frame grid.
void ValidateBoundarySet(const BoundarySet &b, int frame_shift_ms);

/// Merges boundary hypotheses of one utterance: concatenate, sort,
/// de-duplicate, then a single left-to-right scan in which a boundary one
/// frame after its predecessor is dropped and a boundary closer than
/// min_dur_ms replaces its predecessor by their midpoint (rounded to the
/// frame grid, ties down).  Every gap of the result is >= min_dur_ms.
BoundarySet FuseBoundaries(const std::vector<BoundarySet> &sets, int frame_shift_ms = 10,
                           int min_dur_ms = 30);

/// Probability rows (frames or segments) with the column span of every
/// concatenated source recorded in `block_sizes`.
struct Posteriorgram {
  Matrix rows;
  std::vector<int> block_sizes;

  Eigen::Index NumRows() const { return rows.rows(); }
  int NumSources() const { return static_cast<int>(block_sizes.size()); }
};

/// A single-source posteriorgram over the rows of `m`.
Posteriorgram PosteriorgramFromFeatures(const FeatureMatrix &m);

/// Throws InputError unless entries are >= 0 and every block of every row
/// sums to 1 within `tol`.
void ValidatePosteriorgram(const Posteriorgram &p, double tol = 1e-6);

/// Column-wise concatenation of per-recognizer posteriorgrams of one
/// utterance.  Throws AlignmentError if frame counts differ.
Posteriorgram ConcatPosteriors(const std::vector<Posteriorgram> &sources);

struct Segment {
  std::int64_t begin;  // first frame
  std::int64_t end;    // last frame, inclusive

  bool operator==(const Segment &) const = default;
};

struct Segmentation {
  std::string utterance_id;
  std::vector<Segment> segments;
};

/// Segment row k is the mean of frame rows begin_k..end_k.  Throws
/// BoundsError if a span leaves [0, T).
Posteriorgram SegmentPosteriorgram(const Posteriorgram &frames, const Segmentation &seg);

/// Tiles [0, num_frames) with segments; a boundary at t ms starts a segment
/// at frame t / frame_shift_ms.  Boundaries at 0 or at the utterance end add
/// nothing.  Throws BoundsError for a boundary past the end.
Segmentation BoundariesToSegmentation(const BoundarySet &b, std::int64_t num_frames,
                                      int frame_shift_ms = 10);

// Boundary files: "utterance_id<TAB>time_ms" per line.  Sets are returned in
// order of first appearance.
std::vector<BoundarySet> ReadBoundaries(const std::string &path);
void WriteBoundaries(const std::string &path, const std::vector<BoundarySet> &sets);

}  // namespace zeroseg

#endif  // ZEROSEG_SEGMENTATION_H_
