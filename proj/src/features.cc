// src/features.cc

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

#include "zeroseg/features.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "zeroseg/binary-io.h"

namespace zeroseg {

void ValidateFeatureMatrix(const FeatureMatrix &m) {
  if (m.frames.rows() < 1 || m.frames.cols() < 1)
    throw InputError("utterance " + m.utterance_id + " has an empty feature matrix");
  if (m.frame_shift_ms <= 0)
    throw InputError("utterance " + m.utterance_id + " has non-positive frame shift");
  if (!m.frames.allFinite())
    throw InputError("utterance " + m.utterance_id + " has non-finite features");
}

void FeatureArchive::Add(FeatureMatrix m) {
  ValidateFeatureMatrix(m);
  if (index_.count(m.utterance_id))
    throw ConsistencyError("duplicate utterance id " + m.utterance_id);
  if (dim_ && *dim_ != m.Dim())
    throw ConsistencyError("utterance " + m.utterance_id + " has dimension " +
                           std::to_string(m.Dim()) + ", archive has " +
                           std::to_string(*dim_));
  dim_ = m.Dim();
  index_.emplace(m.utterance_id, utts_.size());
  utts_.push_back(std::move(m));
}

std::int64_t FeatureArchive::TotalFrames() const {
  std::int64_t n = 0;
  for (const auto &m : utts_) n += m.NumFrames();
  return n;
}

const FeatureMatrix *FeatureArchive::Find(const std::string &utterance_id) const {
  auto it = index_.find(utterance_id);
  return it == index_.end() ? nullptr : &utts_[it->second];
}

void WriteFeatureArchive(std::ostream &os, const FeatureArchive &archive) {
  BinaryWriter w(os);
  w.Magic("FEAT1");
  w.U32(static_cast<std::uint32_t>(archive.Size()));
  for (const auto &m : archive) {
    w.String(m.utterance_id);
    w.U32(static_cast<std::uint32_t>(m.frames.rows()));
    w.U32(static_cast<std::uint32_t>(m.frames.cols()));
    for (Eigen::Index t = 0; t < m.frames.rows(); ++t)
      for (Eigen::Index d = 0; d < m.frames.cols(); ++d)
        w.F32(static_cast<float>(m.frames(t, d)));
  }
  w.Check("feature archive");
}

void WriteFeatureArchive(const std::string &path, const FeatureArchive &archive) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  WriteFeatureArchive(os, archive);
}

FeatureArchive ReadFeatureArchive(std::istream &is) {
  BinaryReader r(is);
  r.Magic("FEAT1");
  const std::uint32_t count = r.U32("utterance count");
  FeatureArchive archive;
  std::optional<int> dim;
  for (std::uint32_t u = 0; u < count; ++u) {
    FeatureMatrix m;
    m.utterance_id = r.String("utterance id");
    const std::uint64_t header_offset = r.offset();
    const std::uint32_t rows = r.U32("frame count");
    const std::uint32_t cols = r.U32("dimension");
    if (rows == 0 || cols == 0)
      throw FormatError("utterance " + m.utterance_id + " has zero rows or columns",
                        header_offset);
    if (dim && static_cast<int>(cols) != *dim)
      throw ConsistencyError("utterance " + m.utterance_id + " has dimension " +
                             std::to_string(cols) + ", expected " +
                             std::to_string(*dim));
    dim = static_cast<int>(cols);
    m.frames.resize(rows, cols);
    for (std::uint32_t t = 0; t < rows; ++t)
      for (std::uint32_t d = 0; d < cols; ++d) m.frames(t, d) = r.F32("feature value");
    archive.Add(std::move(m));
  }
  if (!r.AtEnd()) throw FormatError("trailing bytes after archive", r.offset());
  return archive;
}

FeatureArchive ReadFeatureArchive(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open feature archive " + path);
  return ReadFeatureArchive(is);
}

std::map<std::string, std::string> ReadSpeakerMap(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open speaker map " + path);
  std::map<std::string, std::string> utt2spk;
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size())
      throw FormatError("speaker map line must be utterance<TAB>speaker", lineno);
    utt2spk[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return utt2spk;
}

void WriteSpeakerMap(const std::string &path,
                     const std::map<std::string, std::string> &utt2spk) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  for (const auto &[utt, spk] : utt2spk) os << utt << '\t' << spk << '\n';
}

void AttachSpeakers(const std::map<std::string, std::string> &utt2spk,
                    FeatureArchive *archive) {
  for (size_t i = 0; i < archive->Size(); ++i) {
    auto it = utt2spk.find((*archive)[i].utterance_id);
    if (it != utt2spk.end()) (*archive)[i].speaker_id = it->second;
  }
}

FeatureMatrix ApplyCmn(const FeatureMatrix &m) {
  FeatureMatrix out = m;
  Eigen::RowVectorXd mean = m.frames.colwise().mean();
  out.frames.rowwise() -= mean;
  return out;
}

FeatureArchive ApplyCmn(const FeatureArchive &archive, CmnScope scope) {
  if (scope == CmnScope::kUtterance)
    return MapArchive(archive, [](const FeatureMatrix &m) { return ApplyCmn(m); });

  std::map<std::string, std::pair<Eigen::RowVectorXd, std::int64_t>> sums;
  for (const auto &m : archive) {
    if (!m.speaker_id)
      throw MetadataError("speaker-level CMN requires a speaker id for utterance " +
                          m.utterance_id);
    auto &entry = sums[*m.speaker_id];
    if (entry.first.size() == 0) entry.first = Eigen::RowVectorXd::Zero(m.Dim());
    entry.first += m.frames.colwise().sum();
    entry.second += m.NumFrames();
  }
  return MapArchive(archive, [&](const FeatureMatrix &m) {
    const auto &entry = sums.at(*m.speaker_id);
    FeatureMatrix out = m;
    out.frames.rowwise() -= entry.first / static_cast<double>(entry.second);
    return out;
  });
}

namespace {

// Regression deltas with window 2; frames outside [0, T) replicate the edge.
Matrix Deltas(const Matrix &x) {
  const Eigen::Index rows = x.rows();
  Matrix out(rows, x.cols());
  auto at = [&](Eigen::Index t) {
    return x.row(std::clamp<Eigen::Index>(t, 0, rows - 1));
  };
  constexpr double kDenominator = 2.0 * (1.0 * 1.0 + 2.0 * 2.0);
  for (Eigen::Index t = 0; t < rows; ++t) {
    out.row(t) = (1.0 * (at(t + 1) - at(t - 1)) + 2.0 * (at(t + 2) - at(t - 2))) /
                 kDenominator;
  }
  return out;
}

}  // namespace

FeatureMatrix AppendDeltas(const FeatureMatrix &m) {
  ValidateFeatureMatrix(m);
  const Eigen::Index d = m.frames.cols();
  Matrix delta = Deltas(m.frames);
  Matrix delta2 = Deltas(delta);
  FeatureMatrix out = m;
  out.frames.resize(m.frames.rows(), 3 * d);
  out.frames.leftCols(d) = m.frames;
  out.frames.middleCols(d, d) = delta;
  out.frames.rightCols(d) = delta2;
  return out;
}

FeatureMatrix Splice(const FeatureMatrix &m, int context) {
  if (context < 0) throw ParameterError("splice context must be non-negative");
  const Eigen::Index rows = m.frames.rows(), d = m.frames.cols();
  FeatureMatrix out = m;
  out.frames.resize(rows, (2 * context + 1) * d);
  for (Eigen::Index t = 0; t < rows; ++t) {
    for (int c = -context; c <= context; ++c) {
      Eigen::Index src = std::clamp<Eigen::Index>(t + c, 0, rows - 1);
      out.frames.block(t, (c + context) * d, 1, d) = m.frames.row(src);
    }
  }
  return out;
}

}  // namespace zeroseg
