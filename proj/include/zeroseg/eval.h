// zeroseg/eval.h

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

// Evaluation: cluster purity against a reference alignment, symmetric-KL
// linguistic relevance of discovered units, and ABX discriminability with
// DTW over cosine frame distances.

#ifndef ZEROSEG_EVAL_H_
#define ZEROSEG_EVAL_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "zeroseg/base.h"
#include "zeroseg/features.h"
#include "zeroseg/labeling.h"

namespace zeroseg {

struct PhoneSpan {
  std::int64_t start_frame;
  std::int64_t end_frame;  // inclusive
  int phone;

  bool operator==(const PhoneSpan &) const = default;
};

struct ReferenceAlignment {
  std::map<std::string, std::vector<PhoneSpan>> utterances;
  std::set<int> inventory;  // every phone id, silence included
  std::set<int> silence;

  /// Phone id per frame.  Throws AlignmentError (naming the utterance) if
  /// the utterance is unknown or its spans do not tile [0, num_frames).
  std::vector<int> FramePhones(const std::string &utterance_id,
                               std::int64_t num_frames) const;
};

/// Throws InputError unless spans are sorted, non-overlapping and use phones
/// of the inventory.
void ValidateAlignment(const ReferenceAlignment &ref);

// Alignment files: "utterance_id start_frame end_frame phone_id" per line.
// The inventory is every phone id found in the file.
ReferenceAlignment ReadAlignment(const std::string &path, const std::set<int> &silence = {});
void WriteAlignment(const std::string &path, const ReferenceAlignment &ref);

struct PurityResult {
  std::map<int, double> per_cluster;
  double overall = 0.0;
  std::map<int, std::map<int, std::int64_t>> counts;  // cluster -> phone -> frames
  std::int64_t frames = 0;                           // frames scored
};

/// Frames whose reference phone is silence, and frames marked removed in
/// `labels`, are excluded before counting.
PurityResult Purity(const std::vector<LabelSequence> &labels, const ReferenceAlignment &ref);

constexpr double kKlFloor = 1e-10;

/// Symmetric KL divergence sum_i (p_i - q_i)(log p_i - log q_i) after
/// flooring both vectors at kKlFloor and renormalizing.  Throws ShapeError
/// on a length mismatch and InputError unless both are distributions
/// (entries >= 0, sum 1 within 1e-6).
double SymmetricKl(const Eigen::Ref<const Vector> &p, const Eigen::Ref<const Vector> &q);

struct PhoneCentroids {
  std::map<int, Vector> centroid;  // non-silence phones with frames
  std::map<int, std::int64_t> frames;
  std::vector<int> missing;  // non-silence inventory phones without frames
};

/// Mean posterior row of the frames of every non-silence phone.
PhoneCentroids ComputeCentroids(const FeatureArchive &posteriors,
                                const ReferenceAlignment &ref);

struct UnitSummary {
  int unit = 0;
  int best_phone = 0;  // g*
  double best = 0.0;   // D*
  std::optional<int> second_phone;  // g**
  std::optional<double> second;     // D**
  std::optional<double> delta;      // D** - D*
};

struct DistanceReport {
  std::vector<int> units;   // rows of `d`
  std::vector<int> phones;  // columns of `d`
  Matrix d;                 // mean symmetric KL of unit frames to phone centroids
  std::vector<int> empty_units;
  std::vector<UnitSummary> summary;
  std::map<int, double> inherent;  // per phone: mean KL of its frames to its centroid
  double mean_best = 0.0;
  std::optional<double> mean_second;
  std::optional<double> mean_delta;  // |mean D** - mean D*|
  double mean_inherent = 0.0;
  std::vector<int> uncovered;       // phones that are nobody's g*
  std::vector<int> missing_phones;  // phones without frames
};

/// D(u, g) for every unit (label of `units`) and centroid.  Removed frames,
/// and silence frames when `ref` is given, are skipped.  Units left without
/// frames are listed in empty_units.
DistanceReport UnitPhoneDistances(const FeatureArchive &posteriors,
                                  const std::vector<LabelSequence> &units,
                                  const PhoneCentroids &centroids,
                                  const ReferenceAlignment *ref = nullptr);

/// Fills the per-unit, per-phone and corpus summaries of `report`.  Argmin
/// ties go to the lowest phone id.
void SummarizeRelevance(const FeatureArchive &posteriors, const ReferenceAlignment &ref,
                        const PhoneCentroids &centroids, DistanceReport *report);

/// Centroids, distances and summaries in one call.
DistanceReport RelevanceReport(const FeatureArchive &posteriors,
                               const std::vector<LabelSequence> &units,
                               const ReferenceAlignment &ref);

/// 1 - a.b / (|a||b|); 0 if both vectors are zero, 1 if exactly one is.
double CosineDistance(const Eigen::Ref<const Vector> &a, const Eigen::Ref<const Vector> &b);

/// DTW over rows with steps (1,0), (0,1), (1,1) and cosine frame cost.  The
/// path minimizing accumulated cost (ties: fewer cells) is chosen and its
/// cost is divided by its number of cells.  Throws InputError if either
/// sequence is empty.
double DtwDistance(const Matrix &a, const Matrix &b);

struct AbxItem {
  std::string utterance_id;
  std::int64_t onset_frame;
  std::int64_t offset_frame;  // inclusive
  int center;
  int left;
  int right;
  std::string speaker;

  bool operator==(const AbxItem &) const = default;
};

// Item files: one header line, then
// "utterance_id onset_frame offset_frame center left right speaker".
std::vector<AbxItem> ReadAbxItems(const std::string &path);
void WriteAbxItems(const std::string &path, const std::vector<AbxItem> &items);

/// Error of one ordered category pair: the mean over A in `a`, B in `b`,
/// X in `x` with X != A of 1[d(A,X) > d(B,X)] + 1/2 1[d(A,X) = d(B,X)].
/// `triples` receives the number of terms; returns NaN if there are none.
double AbxPairError(const std::vector<int> &a, const std::vector<int> &b,
                    const std::vector<int> &x, const std::function<double(int, int)> &dist,
                    std::int64_t *triples = nullptr);

enum class AbxCondition { kWithinSpeaker, kAcrossSpeaker };

struct AbxPairResult {
  std::string speaker_context;  // "spk" or "spkAB>spkX"
  int left, right;              // shared context phones
  int x, y;                     // center phones, x < y
  double error;                 // mean of the valid directions
  std::int64_t triples;
};

struct AbxResult {
  std::vector<AbxPairResult> pairs;
  std::map<std::string, double> per_context;  // mean over pairs
  double error = 0.0;                         // mean over contexts
  std::int64_t triples = 0;
  std::vector<std::string> skipped;  // pairs without any valid triple
};

/// Triphone minimal pairs (same left/right context, different centers).
/// Within-speaker: A, B and X share a speaker.  Across-speaker: A and B
/// share a speaker that differs from X's.  Errors are symmetrized over the
/// two orders of each pair, averaged over pairs within a speaker context and
/// then over contexts.  Throws MetadataError for items lacking a speaker and
/// BoundsError for spans outside their utterance.
AbxResult AbxError(const std::vector<AbxItem> &items, const FeatureArchive &features,
                   AbxCondition condition, int threads = 1);

// Report writers: tab-separated tables with a header row, and key=value
// summaries.
void WritePurityReport(std::ostream &table, std::ostream &summary, const PurityResult &r);
void WriteRelevanceReport(std::ostream &table, std::ostream &summary, const DistanceReport &r);
void WriteAbxReport(std::ostream &table, std::ostream &summary, const AbxResult &r,
                    AbxCondition condition);

}  // namespace zeroseg

#endif  // ZEROSEG_EVAL_H_
