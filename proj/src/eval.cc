// src/eval.cc

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

#include "zeroseg/eval.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "zeroseg/parallel.h"
#include "zeroseg/text-io.h"

namespace zeroseg {

std::vector<int> ReferenceAlignment::FramePhones(const std::string &utterance_id,
                                                 std::int64_t num_frames) const {
  auto it = utterances.find(utterance_id);
  if (it == utterances.end())
    throw AlignmentError("utterance " + utterance_id + " has no reference alignment");
  std::vector<int> phones;
  phones.reserve(num_frames);
  for (const auto &span : it->second) {
    if (span.start_frame != static_cast<std::int64_t>(phones.size()))
      throw AlignmentError("reference spans of utterance " + utterance_id +
                           " do not tile the utterance");
    phones.insert(phones.end(), span.end_frame - span.start_frame + 1, span.phone);
  }
  if (static_cast<std::int64_t>(phones.size()) != num_frames)
    throw AlignmentError("utterance " + utterance_id + " has " + std::to_string(num_frames) +
                         " frames but its reference covers " +
                         std::to_string(phones.size()));
  return phones;
}

void ValidateAlignment(const ReferenceAlignment &ref) {
  for (const auto &[utt, spans] : ref.utterances) {
    std::int64_t prev_end = -1;
    for (const auto &s : spans) {
      if (s.start_frame <= prev_end || s.end_frame < s.start_frame)
        throw InputError("reference spans of utterance " + utt +
                         " are unsorted, overlapping or empty");
      if (!ref.inventory.count(s.phone))
        throw InputError("utterance " + utt + " uses phone " + std::to_string(s.phone) +
                         " outside the inventory");
      prev_end = s.end_frame;
    }
  }
}

ReferenceAlignment ReadAlignment(const std::string &path, const std::set<int> &silence) {
  ReferenceAlignment ref;
  ref.silence = silence;
  ForEachTextRecord(path, [&](const std::vector<std::string> &f, std::uint64_t lineno) {
    if (f.size() != 4) throw FormatError("alignment line needs 4 fields", lineno);
    PhoneSpan s{ParseInt(f[1], lineno), ParseInt(f[2], lineno),
                static_cast<int>(ParseInt(f[3], lineno))};
    ref.utterances[f[0]].push_back(s);
    ref.inventory.insert(s.phone);
  });
  ref.inventory.insert(silence.begin(), silence.end());
  ValidateAlignment(ref);
  return ref;
}

void WriteAlignment(const std::string &path, const ReferenceAlignment &ref) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  for (const auto &[utt, spans] : ref.utterances)
    for (const auto &s : spans)
      os << utt << ' ' << s.start_frame << ' ' << s.end_frame << ' ' << s.phone << '\n';
  if (!os) throw Error("write failed: " + path);
}

PurityResult Purity(const std::vector<LabelSequence> &labels, const ReferenceAlignment &ref) {
  PurityResult r;
  for (const auto &seq : labels) {
    const auto phones =
        ref.FramePhones(seq.utterance_id, static_cast<std::int64_t>(seq.labels.size()));
    for (size_t t = 0; t < phones.size(); ++t) {
      if (ref.silence.count(phones[t])) continue;
      if (t < seq.removed.size() && seq.removed[t]) continue;
      ++r.counts[seq.labels[t]][phones[t]];
      ++r.frames;
    }
  }
  std::int64_t majority_total = 0;
  for (const auto &[cluster, row] : r.counts) {
    std::int64_t total = 0, best = 0;
    for (const auto &[phone, n] : row) {
      total += n;
      best = std::max(best, n);
    }
    r.per_cluster[cluster] = static_cast<double>(best) / static_cast<double>(total);
    majority_total += best;
  }
  r.overall = r.frames > 0 ? static_cast<double>(majority_total) / static_cast<double>(r.frames)
                           : 0.0;
  return r;
}

namespace {

Vector FloorAndNormalize(const Eigen::Ref<const Vector> &p) {
  Vector out = p.cwiseMax(kKlFloor);
  return out / out.sum();
}

void CheckDistribution(const Eigen::Ref<const Vector> &p) {
  if (p.size() == 0) throw InputError("empty probability vector");
  if (p.minCoeff() < 0) throw InputError("probability vector has negative entries");
  if (std::abs(p.sum() - 1.0) > 1e-6)
    throw InputError("probability vector sums to " + std::to_string(p.sum()));
}

// Symmetric KL on vectors already floored and normalized.
double SymmetricKlPrepared(const Vector &p, const Vector &q) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    s += (p(i) - q(i)) * (std::log(p(i)) - std::log(q(i)));
  return s;
}

}  // namespace

double SymmetricKl(const Eigen::Ref<const Vector> &p, const Eigen::Ref<const Vector> &q) {
  if (p.size() != q.size())
    throw ShapeError("KL arguments have lengths " + std::to_string(p.size()) + " and " +
                     std::to_string(q.size()));
  CheckDistribution(p);
  CheckDistribution(q);
  return SymmetricKlPrepared(FloorAndNormalize(p), FloorAndNormalize(q));
}

PhoneCentroids ComputeCentroids(const FeatureArchive &posteriors,
                                const ReferenceAlignment &ref) {
  PhoneCentroids c;
  for (const auto &m : posteriors) {
    const auto phones = ref.FramePhones(m.utterance_id, m.NumFrames());
    for (size_t t = 0; t < phones.size(); ++t) {
      if (ref.silence.count(phones[t])) continue;
      auto it = c.centroid.find(phones[t]);
      if (it == c.centroid.end()) it = c.centroid.emplace(phones[t], Vector::Zero(m.Dim())).first;
      it->second += m.frames.row(t).transpose();
      ++c.frames[phones[t]];
    }
  }
  for (auto &[phone, v] : c.centroid) v /= static_cast<double>(c.frames[phone]);
  for (int phone : ref.inventory)
    if (!ref.silence.count(phone) && !c.centroid.count(phone)) c.missing.push_back(phone);
  return c;
}

DistanceReport UnitPhoneDistances(const FeatureArchive &posteriors,
                                  const std::vector<LabelSequence> &units,
                                  const PhoneCentroids &centroids,
                                  const ReferenceAlignment *ref) {
  DistanceReport r;
  r.missing_phones = centroids.missing;
  std::vector<Vector> prepared;
  for (const auto &[phone, v] : centroids.centroid) {
    r.phones.push_back(phone);
    prepared.push_back(FloorAndNormalize(v));
  }
  std::map<int, std::vector<double>> sums;
  std::map<int, std::int64_t> counts;
  std::set<int> seen;
  for (const auto &seq : units) {
    const FeatureMatrix *m = posteriors.Find(seq.utterance_id);
    if (!m) throw AlignmentError("no posteriorgram for utterance " + seq.utterance_id);
    if (m->NumFrames() != static_cast<std::int64_t>(seq.labels.size()))
      throw AlignmentError("utterance " + seq.utterance_id + " has " +
                           std::to_string(seq.labels.size()) + " unit labels for " +
                           std::to_string(m->NumFrames()) + " posteriorgram frames");
    std::vector<int> phones;
    if (ref) phones = ref->FramePhones(seq.utterance_id, m->NumFrames());
    for (size_t t = 0; t < seq.labels.size(); ++t) {
      const int unit = seq.labels[t];
      seen.insert(unit);
      if (t < seq.removed.size() && seq.removed[t]) continue;
      if (ref && ref->silence.count(phones[t])) continue;
      const Vector row = m->frames.row(t).transpose();
      CheckDistribution(row);
      const Vector p = FloorAndNormalize(row);
      auto &s = sums[unit];
      s.resize(r.phones.size(), 0.0);
      for (size_t k = 0; k < r.phones.size(); ++k) s[k] += SymmetricKlPrepared(p, prepared[k]);
      ++counts[unit];
    }
  }
  for (int unit : seen)
    if (!counts.count(unit)) r.empty_units.push_back(unit);
  r.d.resize(static_cast<Eigen::Index>(sums.size()), static_cast<Eigen::Index>(r.phones.size()));
  Eigen::Index row = 0;
  for (const auto &[unit, s] : sums) {
    r.units.push_back(unit);
    for (size_t k = 0; k < s.size(); ++k) r.d(row, k) = s[k] / static_cast<double>(counts[unit]);
    ++row;
  }
  return r;
}

void SummarizeRelevance(const FeatureArchive &posteriors, const ReferenceAlignment &ref,
                        const PhoneCentroids &centroids, DistanceReport *report) {
  DistanceReport &r = *report;
  r.summary.clear();
  std::set<int> covered;
  double sum_best = 0.0, sum_second = 0.0;
  for (size_t u = 0; u < r.units.size(); ++u) {
    if (r.phones.empty()) break;
    UnitSummary s;
    s.unit = r.units[u];
    Eigen::Index k1 = 0;
    for (Eigen::Index k = 1; k < r.d.cols(); ++k)
      if (r.d(u, k) < r.d(u, k1)) k1 = k;
    s.best_phone = r.phones[k1];
    s.best = r.d(u, k1);
    covered.insert(s.best_phone);
    Eigen::Index k2 = -1;
    for (Eigen::Index k = 0; k < r.d.cols(); ++k)
      if (k != k1 && (k2 < 0 || r.d(u, k) < r.d(u, k2))) k2 = k;
    if (k2 >= 0) {
      s.second_phone = r.phones[k2];
      s.second = r.d(u, k2);
      s.delta = std::abs(*s.second - s.best);
      sum_second += *s.second;
    }
    sum_best += s.best;
    r.summary.push_back(s);
  }
  const double nu = static_cast<double>(r.summary.size());
  r.mean_best = nu > 0 ? sum_best / nu : 0.0;
  if (nu > 0 && r.phones.size() >= 2) {
    r.mean_second = sum_second / nu;
    r.mean_delta = std::abs(*r.mean_second - r.mean_best);
  } else {
    r.mean_second.reset();
    r.mean_delta.reset();
  }

  std::map<int, double> inherent_sum;
  std::map<int, Vector> prepared;
  for (const auto &[phone, v] : centroids.centroid) prepared[phone] = FloorAndNormalize(v);
  for (const auto &m : posteriors) {
    const auto phones = ref.FramePhones(m.utterance_id, m.NumFrames());
    for (size_t t = 0; t < phones.size(); ++t) {
      auto it = prepared.find(phones[t]);
      if (it == prepared.end()) continue;
      inherent_sum[phones[t]] +=
          SymmetricKlPrepared(FloorAndNormalize(m.frames.row(t).transpose()), it->second);
    }
  }
  r.inherent.clear();
  double sum_inherent = 0.0;
  for (const auto &[phone, s] : inherent_sum) {
    r.inherent[phone] = s / static_cast<double>(centroids.frames.at(phone));
    sum_inherent += r.inherent[phone];
  }
  r.mean_inherent = r.inherent.empty() ? 0.0 : sum_inherent / r.inherent.size();
  r.uncovered.clear();
  for (int phone : r.phones)
    if (!covered.count(phone)) r.uncovered.push_back(phone);
  for (int phone : r.missing_phones) r.uncovered.push_back(phone);
  std::sort(r.uncovered.begin(), r.uncovered.end());
}

DistanceReport RelevanceReport(const FeatureArchive &posteriors,
                               const std::vector<LabelSequence> &units,
                               const ReferenceAlignment &ref) {
  const PhoneCentroids c = ComputeCentroids(posteriors, ref);
  DistanceReport r = UnitPhoneDistances(posteriors, units, c, &ref);
  SummarizeRelevance(posteriors, ref, c, &r);
  return r;
}

double CosineDistance(const Eigen::Ref<const Vector> &a, const Eigen::Ref<const Vector> &b) {
  if (a.size() != b.size()) throw ShapeError("cosine distance of vectors of unequal length");
  const double sa = a.dot(a), sb = b.dot(b);
  if (sa == 0.0 && sb == 0.0) return 0.0;
  if (sa == 0.0 || sb == 0.0) return 1.0;
  return std::clamp(1.0 - a.dot(b) / std::sqrt(sa * sb), 0.0, 2.0);
}

double DtwDistance(const Matrix &a, const Matrix &b) {
  if (a.rows() == 0 || b.rows() == 0) throw InputError("DTW of an empty sequence");
  if (a.cols() != b.cols()) throw ShapeError("DTW sequences differ in dimension");
  const Eigen::Index n = a.rows(), m = b.rows();
  Vector sa(n), sb(m);
  for (Eigen::Index i = 0; i < n; ++i) sa(i) = a.row(i).dot(a.row(i));
  for (Eigen::Index j = 0; j < m; ++j) sb(j) = b.row(j).dot(b.row(j));
  auto cost = [&](Eigen::Index i, Eigen::Index j) {
    if (sa(i) == 0.0 && sb(j) == 0.0) return 0.0;
    if (sa(i) == 0.0 || sb(j) == 0.0) return 1.0;
    return std::clamp(1.0 - a.row(i).dot(b.row(j)) / std::sqrt(sa(i) * sb(j)), 0.0, 2.0);
  };
  // acc(i, j): minimal accumulated cost of a path from (0,0) to (i,j);
  // len(i, j): cells on that path (the shortest among equal-cost paths).
  Matrix acc(n, m);
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> len(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (i == 0 && j == 0) {
        acc(0, 0) = cost(0, 0);
        len(0, 0) = 1;
        continue;
      }
      double best = std::numeric_limits<double>::infinity();
      std::int64_t best_len = 0;
      auto consider = [&](Eigen::Index pi, Eigen::Index pj) {
        if (pi < 0 || pj < 0) return;
        if (acc(pi, pj) < best || (acc(pi, pj) == best && len(pi, pj) < best_len)) {
          best = acc(pi, pj);
          best_len = len(pi, pj);
        }
      };
      consider(i - 1, j - 1);
      consider(i - 1, j);
      consider(i, j - 1);
      acc(i, j) = best + cost(i, j);
      len(i, j) = best_len + 1;
    }
  }
  return acc(n - 1, m - 1) / static_cast<double>(len(n - 1, m - 1));
}

std::vector<AbxItem> ReadAbxItems(const std::string &path) {
  std::vector<AbxItem> items;
  bool header = true;
  ForEachTextRecord(path, [&](const std::vector<std::string> &f, std::uint64_t lineno) {
    if (header) {
      header = false;
      return;
    }
    if (f.size() != 7) throw FormatError("ABX item line needs 7 fields", lineno);
    AbxItem it{f[0],
               ParseInt(f[1], lineno),
               ParseInt(f[2], lineno),
               static_cast<int>(ParseInt(f[3], lineno)),
               static_cast<int>(ParseInt(f[4], lineno)),
               static_cast<int>(ParseInt(f[5], lineno)),
               f[6]};
    if (it.offset_frame < it.onset_frame || it.onset_frame < 0)
      throw FormatError("ABX item offset precedes onset", lineno);
    items.push_back(std::move(it));
  });
  return items;
}

void WriteAbxItems(const std::string &path, const std::vector<AbxItem> &items) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << "#file onset offset #phone prev-phone next-phone speaker\n";
  for (const auto &it : items)
    os << it.utterance_id << ' ' << it.onset_frame << ' ' << it.offset_frame << ' '
       << it.center << ' ' << it.left << ' ' << it.right << ' ' << it.speaker << '\n';
  if (!os) throw Error("write failed: " + path);
}

double AbxPairError(const std::vector<int> &a, const std::vector<int> &b,
                    const std::vector<int> &x, const std::function<double(int, int)> &dist,
                    std::int64_t *triples) {
  double score = 0.0;
  std::int64_t n = 0;
  for (int ia : a) {
    for (int ix : x) {
      if (ix == ia) continue;
      const double dax = dist(ia, ix);
      for (int ib : b) {
        const double dbx = dist(ib, ix);
        if (dax > dbx) {
          score += 1.0;
        } else if (dax == dbx) {
          score += 0.5;
        }
        ++n;
      }
    }
  }
  if (triples) *triples = n;
  return n > 0 ? score / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

AbxResult AbxError(const std::vector<AbxItem> &items, const FeatureArchive &features,
                   AbxCondition condition, int threads) {
  std::vector<Matrix> segs(items.size());
  for (size_t i = 0; i < items.size(); ++i) {
    const auto &it = items[i];
    if (it.speaker.empty())
      throw MetadataError("ABX item in utterance " + it.utterance_id + " has no speaker");
    const FeatureMatrix *m = features.Find(it.utterance_id);
    if (!m) throw InputError("no features for ABX utterance " + it.utterance_id);
    if (it.onset_frame < 0 || it.offset_frame < it.onset_frame ||
        it.offset_frame >= m->NumFrames())
      throw BoundsError("ABX item [" + std::to_string(it.onset_frame) + ", " +
                        std::to_string(it.offset_frame) + "] outside utterance " +
                        it.utterance_id);
    segs[i] = m->frames.middleRows(it.onset_frame, it.offset_frame - it.onset_frame + 1);
  }

  // Items grouped by context, then by center phone, then by speaker.
  using BySpeaker = std::map<std::string, std::vector<int>>;
  std::map<std::pair<int, int>, std::map<int, BySpeaker>> groups;
  for (size_t i = 0; i < items.size(); ++i)
    groups[{items[i].left, items[i].right}][items[i].center][items[i].speaker].push_back(
        static_cast<int>(i));

  AbxResult result;
  std::map<std::string, std::pair<double, std::int64_t>> context_sums;
  for (const auto &[ctx, centers] : groups) {
    if (centers.size() < 2) continue;
    // Pairwise DTW among the items of this context.
    std::vector<int> members;
    for (const auto &[c, spk] : centers)
      for (const auto &[s, v] : spk) members.insert(members.end(), v.begin(), v.end());
    std::sort(members.begin(), members.end());
    std::map<int, int> local;
    for (size_t k = 0; k < members.size(); ++k) local[members[k]] = static_cast<int>(k);
    const Eigen::Index nm = static_cast<Eigen::Index>(members.size());
    Matrix dist = Matrix::Zero(nm, nm);
    ParallelFor(nm, threads, [&](std::int64_t begin, std::int64_t end) {
      for (std::int64_t i = begin; i < end; ++i)
        for (Eigen::Index j = i + 1; j < nm; ++j)
          dist(i, j) = DtwDistance(segs[members[i]], segs[members[j]]);
    });
    for (Eigen::Index i = 0; i < nm; ++i)
      for (Eigen::Index j = 0; j < i; ++j) dist(i, j) = dist(j, i);
    auto d = [&](int p, int q) { return dist(local.at(p), local.at(q)); };

    static const std::vector<int> kNone;
    auto get = [](const BySpeaker &m, const std::string &s) -> const std::vector<int> & {
      auto it = m.find(s);
      return it == m.end() ? kNone : it->second;
    };
    for (auto xi = centers.begin(); xi != centers.end(); ++xi) {
      for (auto yi = std::next(xi); yi != centers.end(); ++yi) {
        const BySpeaker &sx = xi->second, &sy = yi->second;
        std::set<std::string> speakers;
        for (const auto &[s, v] : sx) speakers.insert(s);
        for (const auto &[s, v] : sy) speakers.insert(s);
        std::vector<std::pair<std::string, std::pair<std::string, std::string>>> contexts;
        if (condition == AbxCondition::kWithinSpeaker) {
          for (const auto &s : speakers) contexts.push_back({s, {s, s}});
        } else {
          for (const auto &s1 : speakers)
            for (const auto &s2 : speakers)
              if (s1 != s2) contexts.push_back({s1 + ">" + s2, {s1, s2}});
        }
        for (const auto &[name, spk] : contexts) {
          std::int64_t t1 = 0, t2 = 0;
          const double e1 = AbxPairError(get(sx, spk.first), get(sy, spk.first),
                                         get(sx, spk.second), d, &t1);
          const double e2 = AbxPairError(get(sy, spk.first), get(sx, spk.first),
                                         get(sy, spk.second), d, &t2);
          std::ostringstream label;
          label << name << " " << ctx.first << "-(" << xi->first << "|" << yi->first << ")+"
                << ctx.second;
          if (t1 == 0 && t2 == 0) {
            result.skipped.push_back(label.str());
            continue;
          }
          double e;
          if (t1 > 0 && t2 > 0) {
            e = 0.5 * (e1 + e2);
          } else {
            e = t1 > 0 ? e1 : e2;
          }
          result.pairs.push_back({name, ctx.first, ctx.second, xi->first, yi->first, e, t1 + t2});
          result.triples += t1 + t2;
          auto &cs = context_sums[name];
          cs.first += e;
          ++cs.second;
        }
      }
    }
  }
  double total = 0.0;
  for (const auto &[name, cs] : context_sums) {
    result.per_context[name] = cs.first / static_cast<double>(cs.second);
    total += result.per_context[name];
  }
  result.error = result.per_context.empty()
                     ? std::numeric_limits<double>::quiet_NaN()
                     : total / static_cast<double>(result.per_context.size());
  if (!result.skipped.empty())
    ZS_LOG << result.skipped.size() << " ABX pair(s) had no valid triple";
  return result;
}

namespace {

std::ostream &Precise(std::ostream &os) { return os << std::setprecision(10); }

}  // namespace

void WritePurityReport(std::ostream &table, std::ostream &summary, const PurityResult &r) {
  Precise(table) << "cluster\tframes\tmajority_phone\tpurity\n";
  for (const auto &[cluster, row] : r.counts) {
    std::int64_t total = 0, best = 0;
    int best_phone = 0;
    for (const auto &[phone, n] : row) {
      total += n;
      if (n > best) {
        best = n;
        best_phone = phone;
      }
    }
    table << cluster << '\t' << total << '\t' << best_phone << '\t' << r.per_cluster.at(cluster)
          << '\n';
  }
  Precise(summary) << "purity=" << r.overall << "\nclusters=" << r.counts.size()
                   << "\nframes=" << r.frames << "\n";
}

void WriteRelevanceReport(std::ostream &table, std::ostream &summary, const DistanceReport &r) {
  Precise(table) << "unit\tg_best\tD_best\tg_second\tD_second\tdelta_D\n";
  for (const auto &s : r.summary) {
    table << s.unit << '\t' << s.best_phone << '\t' << s.best << '\t';
    if (s.second_phone) {
      table << *s.second_phone << '\t' << *s.second << '\t' << *s.delta << '\n';
    } else {
      table << "NA\tNA\tNA\n";
    }
  }
  auto join = [](const std::vector<int> &v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
  };
  Precise(summary) << "units=" << r.summary.size() << "\nphones=" << r.phones.size()
                   << "\nmean_D_best=" << r.mean_best << "\n";
  if (r.mean_second) {
    summary << "mean_D_second=" << *r.mean_second << "\nmean_delta_D=" << *r.mean_delta << "\n";
  } else {
    summary << "mean_D_second=NA\nmean_delta_D=NA\n";
  }
  summary << "mean_inherent=" << r.mean_inherent << "\n";
  for (const auto &[phone, v] : r.inherent) summary << "inherent." << phone << "=" << v << "\n";
  summary << "uncovered_phones=" << join(r.uncovered) << "\nmissing_phones="
          << join(r.missing_phones) << "\nempty_units=" << join(r.empty_units) << "\n";
}

void WriteAbxReport(std::ostream &table, std::ostream &summary, const AbxResult &r,
                    AbxCondition condition) {
  Precise(table) << "speaker_context\tleft\tright\tx\ty\terror\ttriples\n";
  for (const auto &p : r.pairs)
    table << p.speaker_context << '\t' << p.left << '\t' << p.right << '\t' << p.x << '\t' << p.y
          << '\t' << p.error << '\t' << p.triples << '\n';
  Precise(summary) << "condition="
                   << (condition == AbxCondition::kWithinSpeaker ? "within" : "across")
                   << "\naggregation=mean over category pairs per speaker context, then mean "
                      "over contexts"
                   << "\nerror=" << r.error << "\ncontexts=" << r.per_context.size()
                   << "\npairs=" << r.pairs.size() << "\ntriples=" << r.triples
                   << "\nskipped_pairs=" << r.skipped.size() << "\n";
}

}  // namespace zeroseg
