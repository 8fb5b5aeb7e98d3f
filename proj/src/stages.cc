// src/stages.cc

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

#include "zeroseg/stages.h"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "zeroseg/dpgmm.h"
#include "zeroseg/eval.h"
#include "zeroseg/features.h"
#include "zeroseg/labeling.h"
#include "zeroseg/mtlnet.h"
#include "zeroseg/segclust.h"
#include "zeroseg/segmentation.h"
#include "zeroseg/syncorpus.h"

namespace zeroseg {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

const std::set<std::string> kTrainKeys = {"hidden",         "bottleneck", "learning_rate",
                                          "batch_size",     "epochs",     "min_improvement",
                                          "holdout_fraction", "splice",   "seed"};

std::set<std::string> With(std::set<std::string> base, std::set<std::string> extra) {
  base.insert(extra.begin(), extra.end());
  return base;
}

}  // namespace

const std::vector<StageSpec> &Stages() {
  static const std::vector<StageSpec> stages = {
      {"gen-corpus",
       "generate a synthetic corpus",
       {},
       {"n_phones", "n_speakers", "n_utterances", "min_phone_frames", "max_phone_frames",
        "min_phones_per_utt", "max_phones_per_utt", "dim", "frame_shift_ms", "phone_scale",
        "mean_spacing", "speaker_offset", "recognizer_classes", "recognizer_jitter",
        "posterior_temperature", "boundary_jitter_frames", "seed"}},
      {"features",
       "mean normalization, deltas and splicing",
       {{"feats", "FEAT1 feature archive"},
        {"utt2spk", "speaker map (needed for cmn = speaker)", false}},
       {"cmn", "deltas", "splice"}},
      {"dpgmm",
       "DPGMM frame clustering",
       {{"feats", "FEAT1 feature archive"}},
       {"alpha", "iterations", "kappa", "nu", "seed"}},
      {"filter-labels", "drop frames of minor clusters", {{"labels", "frame label file"}},
       {"retain"}},
      {"collapse", "collapse frame labels to pseudo-transcriptions",
       {{"labels", "frame label file"}}, {}},
      {"fuse-bounds",
       "fuse boundary hypotheses",
       {{"bounds", "boundary file (repeatable)", true, true}},
       {"frame_shift_ms", "min_dur_ms"}},
      {"segclust",
       "spectral clustering of segment posteriorgrams",
       {{"post", "posteriorgram archive (repeatable)", true, true},
        {"bounds", "fused boundary file"}},
       {"clusters", "frame_shift_ms", "seed"}},
      {"mtl-train",
       "train a multi-task bottleneck network",
       {{"feats", "FEAT1 feature archive"},
        {"labels", "frame label file, one per task (repeatable)", true, true}},
       With(kTrainKeys, {"weights"})},
      {"adv-train",
       "train with an adversarial speaker task",
       {{"feats", "FEAT1 feature archive"},
        {"labels", "subword frame label file"},
        {"utt2spk", "speaker map"}},
       With(kTrainKeys, {"lambda"})},
      {"extract-bnf",
       "extract bottleneck features",
       {{"net", "MTLN1 network"}, {"feats", "FEAT1 feature archive"}},
       {"splice"}},
      {"eval-purity",
       "cluster purity against a reference alignment",
       {{"labels", "frame label file"}, {"ali", "reference alignment"}},
       {"silence"}},
      {"eval-kl",
       "symmetric-KL relevance of units to phones",
       {{"post", "posteriorgram archive (repeatable)", true, true},
        {"units", "unit frame label file"},
        {"ali", "reference alignment"}},
       {"silence"}},
      {"eval-abx",
       "ABX discriminability",
       {{"feats", "FEAT1 feature archive"}, {"items", "ABX item file"}},
       {"condition"}},
  };
  return stages;
}

const StageSpec &FindStage(const std::string &name) {
  for (const auto &s : Stages())
    if (s.name == name) return s;
  throw ConfigError("unknown stage " + name);
}

std::string Sha256File(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path);
  EVP_MD_CTX *ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("SHA-256 initialization failed");
  }
  std::vector<char> buf(1 << 16);
  while (is) {
    is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (is.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<size_t>(is.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i)
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

namespace {

class StageRun {
 public:
  explicit StageRun(const StageRequest &req) : req_(req) {}

  const std::string &Input(const std::string &role) const {
    const auto &v = Inputs(role);
    if (v.size() != 1) throw ConfigError("--" + role + " given " + std::to_string(v.size()) + " times");
    return v.front();
  }

  const std::vector<std::string> &Inputs(const std::string &role) const {
    static const std::vector<std::string> kNone;
    auto it = req_.inputs.find(role);
    return it == req_.inputs.end() ? kNone : it->second;
  }

  bool HasInput(const std::string &role) const { return !Inputs(role).empty(); }

  std::string Output(const std::string &name) {
    outputs_.push_back(name);
    return (fs::path(req_.out_dir) / name).string();
  }

  const std::vector<std::string> &outputs() const { return outputs_; }

 private:
  const StageRequest &req_;
  std::vector<std::string> outputs_;
};

// Frames of `seqs` aligned with the archive, removed frames skipped.  Labels
// are renumbered 0.. in ascending order; `classes` receives the original
// label of each index.
TaskData BuildTaskData(const FeatureArchive &feats, const std::vector<LabelSequence> &seqs,
                       std::vector<int> *classes) {
  std::set<int> distinct;
  for (const auto &s : seqs)
    for (size_t t = 0; t < s.labels.size(); ++t)
      if (!s.removed[t]) distinct.insert(s.labels[t]);
  classes->assign(distinct.begin(), distinct.end());
  std::map<int, int> index;
  for (size_t i = 0; i < classes->size(); ++i) index[(*classes)[i]] = static_cast<int>(i);

  TaskData data;
  std::int64_t n = 0;
  for (const auto &s : seqs) n += static_cast<std::int64_t>(s.NumRetained());
  data.inputs.resize(n, feats.Dim().value_or(0));
  Eigen::Index row = 0;
  for (const auto &s : seqs) {
    const FeatureMatrix *m = feats.Find(s.utterance_id);
    if (!m) throw AlignmentError("utterance " + s.utterance_id + " has labels but no features");
    if (m->NumFrames() != static_cast<std::int64_t>(s.labels.size()))
      throw AlignmentError("utterance " + s.utterance_id + " has " +
                           std::to_string(s.labels.size()) + " labels for " +
                           std::to_string(m->NumFrames()) + " frames");
    for (size_t t = 0; t < s.labels.size(); ++t) {
      if (s.removed[t]) continue;
      data.inputs.row(row++) = m->frames.row(t);
      data.labels.push_back(index.at(s.labels[t]));
      data.utterance_ids.push_back(s.utterance_id);
    }
  }
  if (data.Size() == 0) throw ConfigError("a training task has no frames");
  return data;
}

FeatureArchive SpliceArchive(const FeatureArchive &feats, int context) {
  if (context < 0) throw ParameterError("splice context must be >= 0");
  if (context == 0) return feats;
  return MapArchive(feats, [&](const FeatureMatrix &m) { return Splice(m, context); });
}

TrainConfig ReadTrainConfig(const ConfigSection &p, std::uint64_t seed) {
  TrainConfig c;
  c.learning_rate = p.GetDouble("learning_rate", c.learning_rate);
  c.batch_size = p.GetInt("batch_size", c.batch_size);
  c.epochs = p.GetInt("epochs", c.epochs);
  c.min_improvement = p.GetDouble("min_improvement", c.min_improvement);
  c.holdout_fraction = p.GetDouble("holdout_fraction", c.holdout_fraction);
  c.seed = seed;
  return c;
}

void WriteTrainLog(const std::string &path, const TrainReport &r) {
  std::ofstream os(path);
  os << std::setprecision(10) << "epoch\tlearning_rate\ttrain_loss\tholdout_loss\n";
  for (size_t e = 0; e < r.train_loss.size(); ++e) {
    os << e + 1 << '\t' << r.learning_rate[e] << '\t' << r.train_loss[e] << '\t';
    if (e < r.holdout_loss.size()) {
      os << r.holdout_loss[e];
    } else {
      os << "NA";
    }
    os << '\n';
  }
  if (!os) throw Error("write failed: " + path);
}

std::set<int> SilenceSet(const ConfigSection &p) {
  const auto v = p.GetIntList("silence", {});
  return {v.begin(), v.end()};
}

template <typename Fn>
void WriteText(const std::string &path, Fn &&fn) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  fn(os);
  if (!os) throw Error("write failed: " + path);
}

void GenCorpus(const StageRequest &req, const ConfigSection &p, StageRun *run) {
  CorpusSpec s;
  s.n_phones = p.GetInt("n_phones", s.n_phones);
  s.n_speakers = p.GetInt("n_speakers", s.n_speakers);
  s.n_utterances = p.GetInt("n_utterances", s.n_utterances);
  s.min_phone_frames = p.GetInt("min_phone_frames", s.min_phone_frames);
  s.max_phone_frames = p.GetInt("max_phone_frames", s.max_phone_frames);
  s.min_phones_per_utt = p.GetInt("min_phones_per_utt", s.min_phones_per_utt);
  s.max_phones_per_utt = p.GetInt("max_phones_per_utt", s.max_phones_per_utt);
  s.dim = p.GetInt("dim", s.dim);
  s.frame_shift_ms = p.GetInt("frame_shift_ms", s.frame_shift_ms);
  s.phone_scale = p.GetDouble("phone_scale", s.phone_scale);
  s.mean_spacing = p.GetDouble("mean_spacing", s.mean_spacing);
  s.speaker_offset = p.GetDouble("speaker_offset", s.speaker_offset);
  s.recognizer_classes = p.GetIntList("recognizer_classes", s.recognizer_classes);
  s.recognizer_jitter = p.GetDouble("recognizer_jitter", s.recognizer_jitter);
  s.posterior_temperature = p.GetDouble("posterior_temperature", s.posterior_temperature);
  s.boundary_jitter_frames = p.GetInt("boundary_jitter_frames", s.boundary_jitter_frames);
  s.seed = req.seed;
  const SyntheticCorpus c = GenerateCorpus(s, req.threads);
  run->Output(kCorpusFeatures);
  run->Output(kCorpusAlignment);
  run->Output(kCorpusSpeakers);
  run->Output(kCorpusItems);
  for (size_t j = 0; j < c.posteriorgrams.size(); ++j) {
    run->Output(CorpusPosteriorFile(static_cast<int>(j)));
    run->Output(CorpusBoundaryFile(static_cast<int>(j)));
  }
  WriteCorpus(req.out_dir, c);
}

void Features(const StageRequest &, const ConfigSection &p, StageRun *run) {
  FeatureArchive feats = ReadFeatureArchive(run->Input("feats"));
  const std::string cmn = p.GetChoice("cmn", "utterance", {"none", "utterance", "speaker"});
  if (run->HasInput("utt2spk")) AttachSpeakers(ReadSpeakerMap(run->Input("utt2spk")), &feats);
  if (cmn == "utterance") feats = ApplyCmn(feats, CmnScope::kUtterance);
  if (cmn == "speaker") feats = ApplyCmn(feats, CmnScope::kSpeaker);
  if (p.GetBool("deltas", false)) feats = MapArchive(feats, AppendDeltas);
  feats = SpliceArchive(feats, p.GetInt("splice", 0));
  WriteFeatureArchive(run->Output("feats.ark"), feats);
}

void Dpgmm(const StageRequest &req, const ConfigSection &p, StageRun *run) {
  const FeatureArchive feats = ReadFeatureArchive(run->Input("feats"));
  if (feats.Empty()) throw InputError("empty feature archive");
  DpgmmConfig c;
  c.alpha = p.GetDouble("alpha", c.alpha);
  c.iterations = p.GetInt("iterations", c.iterations);
  NiwParams prior = DefaultPrior(FlattenFrames(feats));
  prior.kappa = p.GetDouble("kappa", prior.kappa);
  prior.nu = p.GetDouble("nu", prior.nu);
  ValidateNiw(prior);
  c.prior = prior;
  c.seed = req.seed;
  c.threads = req.threads;
  const DpgmmResult r = RunDpgmm(feats, c);
  WriteFrameLabels(run->Output("labels.txt"), r.labels);
  WriteDpgmmModel(run->Output("model.dpgm"), r.model);
}

void FilterLabelsStage(const StageRequest &, const ConfigSection &p, StageRun *run) {
  const FilterResult r = FilterLabels(ReadFrameLabels(run->Input("labels")),
                                      p.GetDouble("retain", 0.9));
  WriteFrameLabels(run->Output("labels.txt"), r.seqs);
  WriteText(run->Output("clusters.txt"), [&](std::ostream &os) {
    os << "k_cut=" << r.k_cut << "\nretained=";
    bool first = true;
    for (int l : r.retained) {
      os << (first ? "" : ",") << l;
      first = false;
    }
    os << "\n";
  });
}

void Collapse(const StageRequest &, const ConfigSection &, StageRun *run) {
  Transcription trans;
  for (const auto &s : ReadFrameLabels(run->Input("labels")))
    trans.emplace_back(s.utterance_id, CollapseToTranscription(s));
  WriteTranscription(run->Output("trans.txt"), trans);
}

void FuseBounds(const StageRequest &, const ConfigSection &p, StageRun *run) {
  const int shift = p.GetInt("frame_shift_ms", 10);
  const int min_dur = p.GetInt("min_dur_ms", 30);
  std::vector<std::string> order;
  std::map<std::string, std::vector<BoundarySet>> by_utt;
  for (const auto &path : run->Inputs("bounds")) {
    for (auto &b : ReadBoundaries(path)) {
      ValidateBoundarySet(b, shift);
      if (!by_utt.count(b.utterance_id)) order.push_back(b.utterance_id);
      by_utt[b.utterance_id].push_back(std::move(b));
    }
  }
  std::vector<BoundarySet> fused;
  for (const auto &utt : order) fused.push_back(FuseBoundaries(by_utt[utt], shift, min_dur));
  WriteBoundaries(run->Output("bounds.txt"), fused);
}

void SegClust(const StageRequest &req, const ConfigSection &p, StageRun *run) {
  const int clusters = p.GetInt("clusters", 0);
  if (clusters < 1) throw ConfigError("segclust.clusters must be set to a positive integer");
  const int shift = p.GetInt("frame_shift_ms", 10);
  std::vector<FeatureArchive> sources;
  for (const auto &path : run->Inputs("post")) sources.push_back(ReadFeatureArchive(path));
  std::map<std::string, BoundarySet> bounds;
  for (auto &b : ReadBoundaries(run->Input("bounds"))) bounds[b.utterance_id] = std::move(b);

  std::vector<Segmentation> segs;
  std::vector<Matrix> blocks;
  std::vector<std::int64_t> lengths;
  Eigen::Index rows = 0;
  for (const auto &m : sources.front()) {
    std::vector<Posteriorgram> src;
    for (const auto &a : sources) {
      const FeatureMatrix *s = a.Find(m.utterance_id);
      if (!s) throw AlignmentError("utterance " + m.utterance_id + " missing from a posteriorgram");
      src.push_back(PosteriorgramFromFeatures(*s));
      ValidatePosteriorgram(src.back());
    }
    const Posteriorgram cat = ConcatPosteriors(src);
    auto it = bounds.find(m.utterance_id);
    const BoundarySet b = it == bounds.end() ? BoundarySet{m.utterance_id, {}} : it->second;
    Segmentation seg = BoundariesToSegmentation(b, cat.NumRows(), shift);
    seg.utterance_id = m.utterance_id;
    blocks.push_back(SegmentPosteriorgram(cat, seg).rows);
    rows += blocks.back().rows();
    lengths.push_back(cat.NumRows());
    segs.push_back(std::move(seg));
  }
  for (const auto &[utt, b] : bounds)
    if (!sources.front().Find(utt))
      throw AlignmentError("utterance " + utt + " has boundaries but no posteriorgram");
  Matrix x(rows, blocks.front().cols());
  rows = 0;
  for (const auto &b : blocks) {
    x.middleRows(rows, b.rows()) = b;
    rows += b.rows();
  }
  const ClusterAssignment assignment = SpectralCluster(x, clusters, req.seed);
  const std::vector<int> labels = LabelSegments(x, assignment);

  Transcription trans;
  std::vector<LabelSequence> units;
  size_t k = 0;
  for (size_t u = 0; u < segs.size(); ++u) {
    std::vector<Token> tokens;
    LabelSequence seq(segs[u].utterance_id, std::vector<int>(lengths[u], 0));
    for (const auto &s : segs[u].segments) {
      tokens.push_back({labels[k], s.begin, s.end});
      std::fill(seq.labels.begin() + s.begin, seq.labels.begin() + s.end + 1, labels[k]);
      ++k;
    }
    trans.emplace_back(segs[u].utterance_id, std::move(tokens));
    units.push_back(std::move(seq));
  }
  WriteAssignment(run->Output("assignment.txt"), assignment);
  WriteTranscription(run->Output("segments.txt"), trans);
  WriteFrameLabels(run->Output("units.txt"), units);
}

void WriteClasses(const std::string &path, const std::vector<std::string> &names,
                  const std::vector<std::vector<int>> &classes) {
  WriteText(path, [&](std::ostream &os) {
    os << "task\tindex\tlabel\n";
    for (size_t t = 0; t < names.size(); ++t)
      for (size_t i = 0; i < classes[t].size(); ++i)
        os << names[t] << '\t' << i << '\t' << classes[t][i] << '\n';
  });
}

MtlNetwork NetworkFromConfig(const ConfigSection &p, int input_dim,
                             const std::vector<TaskSpec> &tasks, std::uint64_t seed) {
  const std::vector<int> hidden = p.GetIntList("hidden", {128, 40, 128});
  const int bottleneck = p.GetInt("bottleneck", 1);
  return CreateNetwork(input_dim, hidden, bottleneck, tasks, seed);
}

void MtlTrain(const StageRequest &req, const ConfigSection &p, StageRun *run) {
  const FeatureArchive feats =
      SpliceArchive(ReadFeatureArchive(run->Input("feats")), p.GetInt("splice", 0));
  const auto &label_paths = run->Inputs("labels");
  const std::vector<double> weights =
      p.GetDoubleList("weights", std::vector<double>(label_paths.size(), 1.0));
  if (weights.size() != label_paths.size())
    throw ConfigError("mtl-train.weights needs one weight per label file");
  std::vector<TaskData> tasks;
  std::vector<TaskSpec> specs;
  std::vector<std::string> names;
  std::vector<std::vector<int>> classes(label_paths.size());
  for (size_t t = 0; t < label_paths.size(); ++t) {
    tasks.push_back(BuildTaskData(feats, ReadFrameLabels(label_paths[t]), &classes[t]));
    names.push_back("task" + std::to_string(t));
    specs.push_back({names.back(), static_cast<int>(classes[t].size()), weights[t]});
  }
  MtlNetwork net = NetworkFromConfig(p, feats.Dim().value_or(0), specs, req.seed);
  const TrainReport r = TrainMtl(tasks, ReadTrainConfig(p, req.seed), &net);
  WriteNetwork(run->Output("net.mtln"), net);
  WriteTrainLog(run->Output("train.tsv"), r);
  WriteClasses(run->Output("classes.txt"), names, classes);
}

void AdvTrain(const StageRequest &req, const ConfigSection &p, StageRun *run) {
  const FeatureArchive feats =
      SpliceArchive(ReadFeatureArchive(run->Input("feats")), p.GetInt("splice", 0));
  std::vector<int> subword_classes;
  const TaskData data =
      BuildTaskData(feats, ReadFrameLabels(run->Input("labels")), &subword_classes);
  const auto utt2spk = ReadSpeakerMap(run->Input("utt2spk"));
  std::map<std::string, int> speaker_index;
  for (const auto &[utt, spk] : utt2spk) speaker_index.emplace(spk, 0);
  std::vector<int> speaker_classes;
  int next = 0;
  for (auto &[spk, idx] : speaker_index) idx = next++;
  std::vector<int> speakers;
  for (const auto &utt : data.utterance_ids) {
    auto it = utt2spk.find(utt);
    if (it == utt2spk.end()) throw MetadataError("utterance " + utt + " has no speaker");
    speakers.push_back(speaker_index.at(it->second));
  }
  AdversarialConfig adv;
  adv.lambda = p.GetDouble("lambda", 0.0);
  MtlNetwork net = NetworkFromConfig(
      p, feats.Dim().value_or(0),
      {{"subword", static_cast<int>(subword_classes.size()), 1.0},
       {"speaker", static_cast<int>(speaker_index.size()), 1.0}},
      req.seed);
  const TrainReport r = TrainAdversarial(data, speakers, adv, ReadTrainConfig(p, req.seed), &net);
  WriteNetwork(run->Output("net.mtln"), net);
  WriteTrainLog(run->Output("train.tsv"), r);
  WriteText(run->Output("classes.txt"), [&](std::ostream &os) {
    os << "task\tindex\tlabel\n";
    for (size_t i = 0; i < subword_classes.size(); ++i)
      os << "subword\t" << i << '\t' << subword_classes[i] << '\n';
    for (const auto &[spk, idx] : speaker_index) os << "speaker\t" << idx << '\t' << spk << '\n';
  });
}

void ExtractBnfStage(const StageRequest &, const ConfigSection &p, StageRun *run) {
  const MtlNetwork net = ReadNetwork(run->Input("net"));
  const FeatureArchive feats =
      SpliceArchive(ReadFeatureArchive(run->Input("feats")), p.GetInt("splice", 0));
  WriteFeatureArchive(run->Output("bnf.ark"), ExtractBnf(net, feats));
}

void EvalPurity(const StageRequest &, const ConfigSection &p, StageRun *run) {
  const ReferenceAlignment ref = ReadAlignment(run->Input("ali"), SilenceSet(p));
  const PurityResult r = Purity(ReadFrameLabels(run->Input("labels")), ref);
  std::ofstream table(run->Output("purity.tsv"));
  std::ofstream summary(run->Output("purity.txt"));
  WritePurityReport(table, summary, r);
  if (!table || !summary) throw Error("write failed: purity report");
}

void EvalKl(const StageRequest &, const ConfigSection &p, StageRun *run) {
  const ReferenceAlignment ref = ReadAlignment(run->Input("ali"), SilenceSet(p));
  std::vector<FeatureArchive> sources;
  for (const auto &path : run->Inputs("post")) sources.push_back(ReadFeatureArchive(path));
  // Concatenated rows sum to the number of sources; rescale to distributions.
  FeatureArchive post;
  for (const auto &m : sources.front()) {
    std::vector<Posteriorgram> src;
    for (const auto &a : sources) {
      const FeatureMatrix *s = a.Find(m.utterance_id);
      if (!s) throw AlignmentError("utterance " + m.utterance_id + " missing from a posteriorgram");
      src.push_back(PosteriorgramFromFeatures(*s));
      ValidatePosteriorgram(src.back());
    }
    FeatureMatrix out;
    out.utterance_id = m.utterance_id;
    out.frames = ConcatPosteriors(src).rows / static_cast<double>(sources.size());
    post.Add(std::move(out));
  }
  const DistanceReport r = RelevanceReport(post, ReadFrameLabels(run->Input("units")), ref);
  std::ofstream table(run->Output("relevance.tsv"));
  std::ofstream summary(run->Output("relevance.txt"));
  WriteRelevanceReport(table, summary, r);
  if (!table || !summary) throw Error("write failed: relevance report");
}

void EvalAbx(const StageRequest &req, const ConfigSection &p, StageRun *run) {
  const FeatureArchive feats = ReadFeatureArchive(run->Input("feats"));
  const std::vector<AbxItem> items = ReadAbxItems(run->Input("items"));
  const std::string cond = p.GetChoice("condition", "both", {"within", "across", "both"});
  for (const auto &[name, c] : {std::pair{std::string("within"), AbxCondition::kWithinSpeaker},
                                std::pair{std::string("across"), AbxCondition::kAcrossSpeaker}}) {
    if (cond != "both" && cond != name) continue;
    const AbxResult r = AbxError(items, feats, c, req.threads);
    std::ofstream table(run->Output("abx_" + name + ".tsv"));
    std::ofstream summary(run->Output("abx_" + name + ".txt"));
    WriteAbxReport(table, summary, r, c);
    if (!table || !summary) throw Error("write failed: ABX report");
  }
}

using StageFn = void (*)(const StageRequest &, const ConfigSection &, StageRun *);

StageFn StageFunction(const std::string &name) {
  static const std::map<std::string, StageFn> fns = {
      {"gen-corpus", GenCorpus},   {"features", Features},
      {"dpgmm", Dpgmm},            {"filter-labels", FilterLabelsStage},
      {"collapse", Collapse},      {"fuse-bounds", FuseBounds},
      {"segclust", SegClust},      {"mtl-train", MtlTrain},
      {"adv-train", AdvTrain},     {"extract-bnf", ExtractBnfStage},
      {"eval-purity", EvalPurity}, {"eval-kl", EvalKl},
      {"eval-abx", EvalAbx}};
  return fns.at(name);
}

Json ResultJson(const StageResult &r) {
  Json j;
  j["stage"] = r.stage;
  j["seed"] = r.seed;
  j["threads"] = r.threads;
  j["parameters"] = r.parameters;
  auto files = [](const std::vector<FileRecord> &v) {
    Json a = Json::array();
    for (const auto &f : v) {
      Json e;
      if (!f.role.empty()) e["role"] = f.role;
      e["path"] = f.path;
      e["sha256"] = f.sha256;
      a.push_back(e);
    }
    return a;
  };
  j["inputs"] = files(r.inputs);
  j["outputs"] = files(r.outputs);
  j["seconds"] = r.seconds;
  return j;
}

void WriteJson(const std::string &path, const Json &j) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << j.dump(2) << '\n';
  if (!os) throw Error("write failed: " + path);
}

}  // namespace

StageResult RunStage(const StageRequest &req) {
  StageResult result;
  result.stage = req.stage;
  result.out_dir = req.out_dir;
  result.seed = req.seed;
  result.threads = req.threads;
  try {
    const StageSpec &spec = FindStage(req.stage);
    req.params.CheckKeys(spec.keys);
    for (const auto &role : spec.inputs) {
      auto it = req.inputs.find(role.name);
      const size_t n = it == req.inputs.end() ? 0 : it->second.size();
      if (role.required && n == 0) throw ConfigError("missing input --" + role.name);
      if (!role.multiple && n > 1) throw ConfigError("--" + role.name + " accepts one path");
      for (size_t i = 0; i < n; ++i) {
        const std::string &path = it->second[i];
        if (!fs::is_regular_file(path)) throw InputError("input file " + path + " not found");
        result.inputs.push_back({role.name, path, Sha256File(path)});
      }
    }
    for (const auto &[role, paths] : req.inputs)
      if (std::none_of(spec.inputs.begin(), spec.inputs.end(),
                       [&](const InputRole &r) { return r.name == role; }))
        throw ConfigError("stage " + req.stage + " takes no input --" + role);
    if (req.threads < 1) throw ConfigError("--threads must be >= 1");
    fs::create_directories(req.out_dir);
    const auto start = std::chrono::steady_clock::now();
    ZS_LOG << "running " << req.stage;
    StageRun run(req);
    StageFunction(req.stage)(req, req.params, &run);
    result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.parameters = req.params.resolved();
    for (const auto &name : run.outputs())
      result.outputs.push_back({"", name, Sha256File((fs::path(req.out_dir) / name).string())});
    Json m;
    m["tool"] = "zeroseg";
    m["command"] = req.stage;
    m.update(ResultJson(result));
    WriteJson((fs::path(req.out_dir) / "manifest.json").string(), m);
  } catch (const StageError &) {
    throw;
  } catch (const std::exception &e) {
    throw StageError(req.stage, e.what());
  }
  ZS_LOG << req.stage << " done in " << result.seconds << " s";
  return result;
}

namespace {

struct Wiring {
  Wiring(std::string r, std::string p, std::string f, bool pat = false, std::string suf = "")
      : role(std::move(r)), producer(std::move(p)), file(std::move(f)), pattern(pat),
        suffix(std::move(suf)) {}

  std::string role;
  std::string producer;  // stage whose output directory holds the file
  std::string file;      // file name, or a prefix when `pattern` is set
  bool pattern;          // every "<file>*<suffix>" file in the directory
  std::string suffix;
};

const std::map<std::string, std::vector<Wiring>> &PipelineWiring() {
  static const std::map<std::string, std::vector<Wiring>> w = {
      {"gen-corpus", {}},
      {"features",
       {{"feats", "gen-corpus", kCorpusFeatures}, {"utt2spk", "gen-corpus", kCorpusSpeakers}}},
      {"dpgmm", {{"feats", "features", "feats.ark"}}},
      {"filter-labels", {{"labels", "dpgmm", "labels.txt"}}},
      {"collapse", {{"labels", "filter-labels", "labels.txt"}}},
      {"fuse-bounds", {{"bounds", "gen-corpus", "bounds.", true, ".txt"}}},
      {"segclust",
       {{"post", "gen-corpus", "post.", true, ".ark"}, {"bounds", "fuse-bounds", "bounds.txt"}}},
      {"mtl-train",
       {{"feats", "features", "feats.ark"},
        {"labels", "filter-labels", "labels.txt"},
        {"labels", "segclust", "units.txt"}}},
      {"adv-train",
       {{"feats", "features", "feats.ark"},
        {"labels", "segclust", "units.txt"},
        {"utt2spk", "gen-corpus", kCorpusSpeakers}}},
      {"extract-bnf", {{"feats", "features", "feats.ark"}}},  // net added below
      {"eval-purity", {{"labels", "segclust", "units.txt"}, {"ali", "gen-corpus", kCorpusAlignment}}},
      {"eval-kl",
       {{"post", "gen-corpus", "post.", true, ".ark"},
        {"units", "segclust", "units.txt"},
        {"ali", "gen-corpus", kCorpusAlignment}}},
      {"eval-abx", {{"feats", "extract-bnf", "bnf.ark"}, {"items", "gen-corpus", kCorpusItems}}},
  };
  return w;
}

std::vector<std::string> MatchFiles(const fs::path &dir, const std::string &prefix,
                                    const std::string &suffix) {
  std::vector<std::string> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto &e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.size() > prefix.size() + suffix.size() && name.rfind(prefix, 0) == 0 &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
      out.push_back(e.path().string());
  }
  // Numeric order of the middle part (post.2 before post.10).
  std::sort(out.begin(), out.end(), [](const std::string &a, const std::string &b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  return out;
}

}  // namespace

std::vector<StageResult> RunPipeline(const Config &config, const std::string &config_path,
                                     const std::string &out_dir,
                                     std::optional<std::uint64_t> seed, int threads) {
  std::set<std::string> known = {"", "pipeline"};
  for (const auto &s : Stages()) known.insert(s.name);
  for (const auto &name : config.SectionNames())
    if (!known.count(name)) throw ConfigError("unknown config section [" + name + "]");
  const ConfigSection global = config.Section("");
  global.CheckKeys({"seed"});
  const ConfigSection pipe = config.Section("pipeline");
  pipe.CheckKeys({"stages", "bnf_net"});

  std::vector<std::string> all;
  for (const auto &s : Stages()) all.push_back(s.name);
  std::vector<std::string> selected = all;
  if (pipe.Has("stages")) {
    selected.clear();
    std::stringstream ss(pipe.GetString("stages", ""));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item.erase(0, item.find_first_not_of(" \t"));
      item.erase(item.find_last_not_of(" \t") + 1);
      if (item.empty()) continue;
      FindStage(item);
      selected.push_back(item);
    }
    std::vector<std::string> ordered;
    for (const auto &s : all)
      if (std::count(selected.begin(), selected.end(), s)) ordered.push_back(s);
    if (ordered != selected)
      throw ConfigError("pipeline.stages must list stages in pipeline order without repeats");
  }
  const std::string bnf_net = pipe.GetChoice("bnf_net", "adv-train", {"mtl-train", "adv-train"});

  // Every input must come from an earlier selected stage or an earlier run.
  const fs::path root(out_dir);
  for (size_t i = 0; i < selected.size(); ++i) {
    std::vector<std::string> producers;
    for (const auto &w : PipelineWiring().at(selected[i])) producers.push_back(w.producer);
    if (selected[i] == "extract-bnf") producers.push_back(bnf_net);
    for (const auto &prod : producers) {
      const bool earlier =
          std::find(selected.begin(), selected.begin() + i, prod) != selected.begin() + i;
      if (!earlier && !fs::is_directory(root / prod))
        throw ConfigError("stage " + selected[i] + " needs outputs of " + prod +
                          ", which is neither selected nor present in " + out_dir);
    }
  }

  const std::uint64_t global_seed = seed ? *seed : global.GetUint64("seed", 0);
  fs::create_directories(root);
  std::vector<StageResult> results;
  for (const auto &stage : selected) {
    StageRequest req;
    req.stage = stage;
    req.out_dir = (root / stage).string();
    req.params = config.Section(stage);
    req.seed = req.params.Has("seed") ? req.params.GetUint64("seed", 0) : global_seed;
    req.threads = threads;
    for (const auto &w : PipelineWiring().at(stage)) {
      auto &paths = req.inputs[w.role];
      if (w.pattern) {
        const auto found = MatchFiles(root / w.producer, w.file, w.suffix);
        if (found.empty())
          throw StageError(stage, "no " + w.file + "*" + w.suffix + " files in " +
                                      (root / w.producer).string());
        paths.insert(paths.end(), found.begin(), found.end());
      } else {
        paths.push_back((root / w.producer / w.file).string());
      }
    }
    if (stage == "extract-bnf") {
      req.inputs["net"].push_back((root / bnf_net / "net.mtln").string());
      // The network was trained on features spliced by its training stage.
      if (!req.params.Has("splice"))
        req.params.Set("splice", std::to_string(config.Section(bnf_net).GetInt("splice", 0)));
    }
    results.push_back(RunStage(req));
  }

  Json m;
  m["tool"] = "zeroseg";
  m["command"] = "pipeline";
  m["config"] = {{"path", config_path}, {"sha256", Sha256File(config_path)}};
  m["seed"] = global_seed;
  m["threads"] = threads;
  m["stages"] = Json::array();
  for (const auto &r : results) {
    Json s = ResultJson(r);
    s["dir"] = fs::path(r.out_dir).filename().string();
    m["stages"].push_back(s);
  }
  WriteJson((root / "manifest.json").string(), m);
  return results;
}

}  // namespace zeroseg
