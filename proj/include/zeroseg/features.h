// zeroseg/features.h

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

#ifndef ZEROSEG_FEATURES_H_
#define ZEROSEG_FEATURES_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "zeroseg/base.h"

namespace zeroseg {

/// Frame-level features of one utterance: T rows (frames) by D columns.
/// Values are held in double precision and stored on disk as binary32.
struct FeatureMatrix {
  std::string utterance_id;
  Matrix frames;
  int frame_shift_ms = 10;
  std::optional<std::string> speaker_id;

  std::int64_t NumFrames() const { return frames.rows(); }
  int Dim() const { return static_cast<int>(frames.cols()); }
};

/// Throws InputError unless T >= 1, D >= 1, every entry finite and the frame
/// shift positive.
void ValidateFeatureMatrix(const FeatureMatrix &m);

/// Ordered collection of utterances sharing one feature dimension.
class FeatureArchive {
 public:
  FeatureArchive() = default;

  /// Appends an utterance.  Throws ConsistencyError on a duplicate id or a
  /// dimension that differs from earlier utterances.
  void Add(FeatureMatrix m);

  size_t Size() const { return utts_.size(); }
  bool Empty() const { return utts_.empty(); }
  /// Shared dimension; nullopt until the first utterance is added.
  std::optional<int> Dim() const { return dim_; }
  std::int64_t TotalFrames() const;

  const FeatureMatrix &operator[](size_t i) const { return utts_[i]; }
  FeatureMatrix &operator[](size_t i) { return utts_[i]; }
  const FeatureMatrix *Find(const std::string &utterance_id) const;

  std::vector<FeatureMatrix>::const_iterator begin() const { return utts_.begin(); }
  std::vector<FeatureMatrix>::const_iterator end() const { return utts_.end(); }

 private:
  std::vector<FeatureMatrix> utts_;
  std::unordered_map<std::string, size_t> index_;
  std::optional<int> dim_;
};

// FEAT1 binary archive (little-endian):
//   "FEAT1\0", u32 count, then per utterance
//   u32 id_len, id bytes, u32 T, u32 D, T*D binary32 row-major.
void WriteFeatureArchive(std::ostream &os, const FeatureArchive &archive);
void WriteFeatureArchive(const std::string &path, const FeatureArchive &archive);
FeatureArchive ReadFeatureArchive(std::istream &is);
FeatureArchive ReadFeatureArchive(const std::string &path);

/// Speaker map: lines "utterance_id<TAB>speaker_id".
std::map<std::string, std::string> ReadSpeakerMap(const std::string &path);
void WriteSpeakerMap(const std::string &path,
                     const std::map<std::string, std::string> &utt2spk);
/// Sets speaker_id on every utterance present in the map.
void AttachSpeakers(const std::map<std::string, std::string> &utt2spk,
                    FeatureArchive *archive);

enum class CmnScope { kUtterance, kSpeaker };

/// Subtracts the per-dimension mean of the utterance.
FeatureMatrix ApplyCmn(const FeatureMatrix &m);

/// Mean normalization over every utterance of the archive.  kSpeaker pools
/// the mean over all utterances sharing a speaker_id and throws MetadataError
/// if any utterance lacks one.
FeatureArchive ApplyCmn(const FeatureArchive &archive, CmnScope scope);

/// Appends first and second order regression deltas (window 2, edge frames
/// replicated).  Output has 3*D columns: static, delta, delta-delta.
FeatureMatrix AppendDeltas(const FeatureMatrix &m);

/// Concatenates frames t-context .. t+context for every t, replicating the
/// first/last frame at utterance edges.  Output has (2*context+1)*D columns.
FeatureMatrix Splice(const FeatureMatrix &m, int context);

/// Applies a per-utterance transform to every utterance of an archive.
template <typename Fn>
FeatureArchive MapArchive(const FeatureArchive &archive, Fn &&fn) {
  FeatureArchive out;
  for (const auto &m : archive) out.Add(fn(m));
  return out;
}

}  // namespace zeroseg

#endif  // ZEROSEG_FEATURES_H_
