/* Copyright 2026 The maskscore Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "maskscore/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

namespace maskscore {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kManifestSchema = "maskscore.manifest/1";

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

json parse_json_file(const fs::path& path) {
  if (!fs::exists(path)) {
    throw std::runtime_error("missing input file: " + path.string());
  }
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

json section(const json& j, const char* key) {
  if (!j.contains(key)) return json::object();
  const json& s = j.at(key);
  if (!s.is_object()) {
    throw ConfigError(std::string("config: '") + key + "' must be an object");
  }
  if (s.contains("seed")) {
    throw ConfigError(std::string("config: '") + key +
                      ".seed' is not allowed; set the top-level seed");
  }
  return s;
}

int threshold_index(const EvalConfig& c, double t) {
  for (std::size_t i = 0; i < c.iou_thresholds.size(); ++i) {
    if (std::abs(c.iou_thresholds[i] - t) < 1e-9) return static_cast<int>(i);
  }
  return -1;
}

ApTriple triple(const ApSummary& s) { return {s.ap, s.ap50, s.ap75}; }

ApTriple category_triple(const CategoryResult& r, const EvalConfig& c) {
  ApTriple t;
  double sum = 0.0;
  for (double v : r.ap_per_threshold) sum += v;
  t.ap = sum / static_cast<double>(r.ap_per_threshold.size());
  const int i50 = threshold_index(c, 0.5), i75 = threshold_index(c, 0.75);
  if (i50 >= 0) t.ap50 = r.ap_per_threshold[i50];
  if (i75 >= 0) t.ap75 = r.ap_per_threshold[i75];
  return t;
}

std::string pct(double v) { return format_number(100.0 * v, 2); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

// --- config -----------------------------------------------------------------

fs::path Paths::data_dir() const { return data.empty() ? out : data; }

fs::path Paths::checkpoint_path() const {
  return checkpoint.empty() ? out / "checkpoint.json" : checkpoint;
}

RunConfig run_config_from_json(const json& j) {
  try {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    static const std::set<std::string> kKeys{"seed", "simulator", "head", "train",
                                             "nms",  "eval",      "paths"};
    for (const auto& item : j.items()) {
      if (!kKeys.contains(item.key())) {
        throw ConfigError("config: unknown key '" + item.key() + "'");
      }
    }
    if (!j.contains("seed")) throw ConfigError("config: missing required key 'seed'");
    const json& seed = j.at("seed");
    if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0)) {
      throw ConfigError("config: 'seed' must be a non-negative integer");
    }
    RunConfig c;
    c.seed = j.at("seed").get<std::uint64_t>();
    c.simulator = simulator_config_from_json(section(j, "simulator"));
    c.simulator.seed = c.seed;
    c.head = head_config_from_json(section(j, "head"));
    c.train = train_config_from_json(section(j, "train"));
    c.train.seed = c.seed;
    c.nms = nms_config_from_json(section(j, "nms"));

    json ev = section(j, "eval");
    if (ev.contains("split")) {
      c.eval_split = ev.at("split").get<std::string>();
      ev.erase("split");
    }
    if (ev.contains("top_k")) {
      c.top_k = ev.at("top_k").get<int>();
      ev.erase("top_k");
    }
    c.eval = eval_config_from_json(ev);

    const json paths = section(j, "paths");
    for (const auto& [key, value] : paths.items()) {
      const fs::path p = value.get<std::string>();
      if (key == "data") c.paths.data = p;
      else if (key == "out") c.paths.out = p;
      else if (key == "checkpoint") c.paths.checkpoint = p;
      else if (key == "coco_gt") c.paths.coco_gt = p;
      else if (key == "coco_results") c.paths.coco_results = p;
      else throw ConfigError("paths: unknown key '" + key + "'");
    }

    if (c.head.num_classes != c.simulator.num_classes) {
      throw ConfigError("config: head.num_classes must equal simulator.num_classes");
    }
    if (c.top_k < 1) throw ConfigError("eval: top_k must be >= 1");
    if (c.eval_split != "train" && c.eval_split != "val" && c.eval_split != "test") {
      throw ConfigError("eval: split must be train, val or test");
    }
    c.simulator.validate();
    c.train.validate();
    return c;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

json to_json(const RunConfig& c) {
  json sim = to_json(c.simulator);
  sim.erase("seed");
  json train = to_json(c.train);
  train.erase("seed");
  json ev = to_json(c.eval);
  ev["split"] = c.eval_split;
  ev["top_k"] = c.top_k;
  json paths{{"out", c.paths.out.string()}};
  if (!c.paths.data.empty()) paths["data"] = c.paths.data.string();
  if (!c.paths.checkpoint.empty()) paths["checkpoint"] = c.paths.checkpoint.string();
  if (!c.paths.coco_gt.empty()) paths["coco_gt"] = c.paths.coco_gt.string();
  if (!c.paths.coco_results.empty())
    paths["coco_results"] = c.paths.coco_results.string();
  return {{"seed", c.seed},          {"simulator", sim},
          {"head", to_json(c.head)}, {"train", train},
          {"nms", to_json(c.nms)},   {"eval", ev},
          {"paths", paths}};
}

RunConfig load_run_config(const fs::path& path,
                          std::optional<std::uint64_t> seed_override,
                          std::optional<fs::path> out_override) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  RunConfig c = run_config_from_json(j);
  if (seed_override) {
    c.seed = *seed_override;
    c.simulator.seed = c.seed;
    c.train.seed = c.seed;
  }
  if (out_override) c.paths.out = *out_override;
  return c;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string dataset_hash(const RunConfig& c) {
  json j = to_json(c.simulator);
  j["schema"] = kDatasetSchema;
  return fnv1a_hex(j.dump());
}

// --- gen ----------------------------------------------------------------------

std::vector<SplitSpec> split_layout(const SimulatorConfig& c) {
  return {{"train", 0, c.train_scenes},
          {"val", c.train_scenes, c.val_scenes},
          {"test", c.train_scenes + c.val_scenes, c.test_scenes}};
}

json cmd_gen(const RunConfig& c) {
  fs::create_directories(c.paths.out);
  json splits = json::array();
  for (const auto& s : split_layout(c.simulator)) {
    const fs::path file = c.paths.out / (s.name + ".jsonl");
    {
      std::ofstream out(file, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write " + file.string());
      write_split(out, c.simulator, s.name, s.first_scene, s.num_scenes);
      if (!out) throw std::runtime_error("write failed: " + file.string());
    }
    splits.push_back({{"name", s.name},
                      {"file", file.filename().string()},
                      {"first_scene", s.first_scene},
                      {"num_scenes", s.num_scenes},
                      {"fnv1a", fnv1a_hex(read_file(file))}});
  }
  json manifest{{"schema", kManifestSchema},
                {"config_hash", dataset_hash(c)},
                {"seed", c.seed},
                {"simulator", to_json(c.simulator)},
                {"splits", splits}};
  write_file(c.paths.out / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

// --- train --------------------------------------------------------------------

fs::path split_path(const RunConfig& c, const std::string& split) {
  const fs::path p = c.paths.data_dir() / (split + ".jsonl");
  if (!fs::exists(p)) {
    throw std::runtime_error("dataset split not found: " + p.string() +
                             " (run `maskscore gen` first)");
  }
  return p;
}

std::vector<TrainingSample> load_training_set(const RunConfig& c) {
  std::ifstream in(split_path(c, "train"), std::ios::binary);
  std::vector<TrainingSample> samples;
  const json header = read_split(in, [&](SceneRecord&& rec) {
    append_training_samples(rec, c.head.num_classes,
                            TargetSetting::kTargetInstance, samples);
  });
  if (header.at("simulator").at("num_classes").get<int>() != c.head.num_classes) {
    throw std::runtime_error("train split was generated with a different class count");
  }
  return samples;
}

TrainResult train_head(const RunConfig& c, std::vector<TrainingSample>& samples) {
  retarget(samples, c.head.num_classes, c.train.target_setting);
  return train(samples, c.head, c.train);
}

TrainResult cmd_train(const RunConfig& c) {
  auto samples = load_training_set(c);
  TrainResult r = train_head(c, samples);
  fs::create_directories(c.paths.out);
  json ckpt = r.head.to_json();
  ckpt["train_config"] = to_json(c.train);
  ckpt["num_samples"] = r.num_samples;
  write_file(c.paths.checkpoint_path(), ckpt.dump() + "\n");
  Table t{{"epoch", "loss"}, {}};
  for (std::size_t e = 0; e < r.loss_curve.size(); ++e) {
    t.rows.push_back({std::to_string(e + 1), format_number(r.loss_curve[e], 8)});
  }
  write_table(t, c.paths.out / "loss_curve");
  return r;
}

MaskIoUHead load_checkpoint(const fs::path& path) {
  if (!fs::exists(path)) {
    throw std::runtime_error("checkpoint not found: " + path.string() +
                             " (run `maskscore train` first)");
  }
  return MaskIoUHead::from_json(parse_json_file(path));
}

// --- eval ---------------------------------------------------------------------

std::string to_string(EvalMode m) {
  switch (m) {
    case EvalMode::kBaseline: return "baseline";
    case EvalMode::kCalibrated: return "calibrated";
    case EvalMode::kOracle: return "oracle";
  }
  return "?";
}

EvalMode eval_mode_from_string(const std::string& s) {
  if (s == "baseline") return EvalMode::kBaseline;
  if (s == "calibrated") return EvalMode::kCalibrated;
  if (s == "oracle") return EvalMode::kOracle;
  throw ConfigError("unknown eval mode '" + s +
                    "' (expected baseline, calibrated or oracle)");
}

Evaluator::Evaluator(EvalMode mode, const MaskIoUHead* head, const NmsConfig& nms,
                     int top_k, const EvalConfig& config)
    : mode_(mode),
      head_(mode == EvalMode::kBaseline ? nullptr : head),
      nms_(nms),
      top_k_(top_k),
      config_(config) {
  if (mode == EvalMode::kCalibrated && head == nullptr) {
    throw std::invalid_argument("calibrated evaluation needs a trained head");
  }
}

void Evaluator::add(const SceneRecord& record) {
  const Scene& scene = record.scene;
  sizes_[scene.id] = {scene.width, scene.height};
  for (auto& g : ground_truths(scene)) gts_.push_back(std::move(g));

  auto dets = run_inference(record, head_, nms_, top_k_);
  if (mode_ == EvalMode::kOracle) {
    dets = upper_bound_substitute(std::move(dets), scene.instances);
    std::stable_sort(dets.begin(), dets.end(),
                     [](const Detection& a, const Detection& b) {
                       return a.score() > b.score();
                     });
  }
  for (const auto& d : dets) {
    const BinaryMask mask = binarize(d.soft_mask);
    double iou = 0.0;
    for (const auto& g : scene.instances) {
      if (g.category_id == d.category_id) iou = std::max(iou, mask_iou(mask, g.mask));
    }
    preds_.push_back({scene.id, d.category_id, d.score(), mask, d.box});
    const double ub_iou = iou > 0.0 ? iou : d.s_iou.value_or(1.0);
    upper_.push_back({scene.id, d.category_id, d.s_cls * ub_iou, mask, d.box});
    scored_.push_back({scene.id, d.index, d.category_id, d.s_cls, d.s_iou, iou,
                       d.score()});
  }
  for (auto& r : to_coco_results(scene.id, dets)) results_.push_back(std::move(r));
  for (auto& r : to_score_records(scene.id, dets)) score_records_.push_back(std::move(r));
}

EvalOutputs Evaluator::finish() const {
  if (gts_.empty()) {
    throw std::runtime_error("evaluation: no ground-truth instances in the split");
  }
  EvalOutputs o;
  o.mask_summary = evaluate(preds_, gts_, config_, IouKind::kMask);
  const ApSummary box = evaluate(preds_, gts_, config_, IouKind::kBox);
  const ApSummary upper = evaluate(upper_, gts_, config_, IouKind::kMask);

  EvalReport& r = o.report;
  r.mode = to_string(mode_);
  r.mask = triple(o.mask_summary);
  r.box = triple(box);
  r.upper_bound = triple(upper);
  for (const auto& [cat, cr] : o.mask_summary.per_category) {
    r.mask_per_category[cat] = category_triple(cr, config_);
  }

  std::vector<double> pred, actual, cls_score, cls_iou, ious, scores;
  for (const auto& s : scored_) {
    if (s.s_iou) {
      pred.push_back(*s.s_iou);
      actual.push_back(s.mask_iou);
    }
    if (s.mask_iou > 0.5 && s.s_cls > 0.5) {
      cls_score.push_back(s.s_cls);
      cls_iou.push_back(s.mask_iou);
    }
    ious.push_back(s.mask_iou);
    scores.push_back(s.score);
  }
  try {
    if (pred.size() >= 2) r.pearson_r = pearson_correlation(pred, actual);
  } catch (const std::invalid_argument&) {
  }
  try {
    if (cls_score.size() >= 2) r.pearson_r_cls = pearson_correlation(cls_score, cls_iou);
  } catch (const std::invalid_argument&) {
  }
  r.histogram = score_quality_histogram(ious, scores, config_.histogram_bin_width);
  r.num_images = static_cast<int>(sizes_.size());
  r.num_predictions = static_cast<int>(preds_.size());
  r.num_gt = static_cast<int>(gts_.size());

  o.scatter = scored_;
  o.coco_results = results_;
  o.score_records = score_records_;
  o.coco_gt = to_coco_gt(gts_, sizes_);
  return o;
}

std::vector<EvalOutputs> evaluate_split(const RunConfig& c, const std::string& split,
                                        const std::vector<EvalMode>& modes,
                                        const MaskIoUHead* head) {
  std::vector<Evaluator> evals;
  for (EvalMode m : modes) evals.emplace_back(m, head, c.nms, c.top_k, c.eval);
  std::ifstream in(split_path(c, split), std::ios::binary);
  read_split(in, [&](SceneRecord&& rec) {
    for (auto& e : evals) e.add(rec);
  });
  std::vector<EvalOutputs> out;
  for (const auto& e : evals) out.push_back(e.finish());
  return out;
}

void write_eval_outputs(const EvalOutputs& o, const EvalConfig& config,
                        const fs::path& dir) {
  fs::create_directories(dir);
  write_file(dir / "report.json", to_json(o.report).dump(2) + "\n");

  Table pr{{"category_id", "iou_threshold", "recall", "precision"}, {}};
  for (const auto& [cat, cr] : o.mask_summary.per_category) {
    for (std::size_t t = 0; t < cr.curves.size(); ++t) {
      const auto& curve = cr.curves[t];
      for (std::size_t i = 0; i < curve.recall.size(); ++i) {
        pr.rows.push_back({std::to_string(cat), format_number(config.iou_thresholds[t], 2),
                           format_number(curve.recall[i], 2),
                           format_number(curve.precision[i], 6)});
      }
    }
  }
  write_table(pr, dir / "pr_curve");

  Table sc{{"image_id", "index", "category_id", "s_cls", "s_iou", "mask_iou", "score"},
           {}};
  for (const auto& s : o.scatter) {
    sc.rows.push_back({std::to_string(s.image_id), std::to_string(s.index),
                       std::to_string(s.category_id), format_number(s.s_cls),
                       s.s_iou ? format_number(*s.s_iou) : "",
                       format_number(s.mask_iou), format_number(s.score)});
  }
  write_table(sc, dir / "correlation_scatter");

  Table hist{{"lo", "hi", "center", "count", "mean_score"}, {}};
  for (const auto& b : o.report.histogram) {
    hist.rows.push_back({format_number(b.lo, 3), format_number(b.hi, 3),
                         format_number(0.5 * (b.lo + b.hi), 3), std::to_string(b.count),
                         b.mean_score ? format_number(*b.mean_score) : ""});
  }
  write_table(hist, dir / "score_hist");

  write_file(dir / "results.json", o.coco_results.dump() + "\n");
  write_file(dir / "results_scores.json", o.score_records.dump() + "\n");
  write_file(dir / "gt.json", o.coco_gt.dump() + "\n");
}

EvalReport cmd_eval(const RunConfig& c, EvalMode mode) {
  const bool has_gt = !c.paths.coco_gt.empty();
  const bool has_results = !c.paths.coco_results.empty();
  if (has_gt != has_results) {
    throw ConfigError("paths: coco_gt and coco_results must be given together");
  }
  if (has_gt) {
    const auto gts = coco_gt_from_json(parse_json_file(c.paths.coco_gt));
    const auto preds = coco_results_from_json(parse_json_file(c.paths.coco_results));
    EvalOutputs o;
    o.mask_summary = evaluate(preds, gts, c.eval, IouKind::kMask);
    EvalReport& r = o.report;
    r.mode = "coco";
    r.mask = triple(o.mask_summary);
    r.box = triple(evaluate(preds, gts, c.eval, IouKind::kBox));
    for (const auto& [cat, cr] : o.mask_summary.per_category) {
      r.mask_per_category[cat] = category_triple(cr, c.eval);
    }
    std::set<int> images;
    for (const auto& g : gts) images.insert(g.image_id);
    r.num_images = static_cast<int>(images.size());
    r.num_predictions = static_cast<int>(preds.size());
    r.num_gt = static_cast<int>(gts.size());
    const fs::path dir = c.paths.out / "coco";
    fs::create_directories(dir);
    write_file(dir / "report.json", to_json(r).dump(2) + "\n");
    return r;
  }

  std::optional<MaskIoUHead> head;
  if (mode == EvalMode::kCalibrated ||
      (mode == EvalMode::kOracle && fs::exists(c.paths.checkpoint_path()))) {
    head = load_checkpoint(c.paths.checkpoint_path());
  }
  auto outs = evaluate_split(c, c.eval_split, {mode}, head ? &*head : nullptr);
  write_eval_outputs(outs.front(), c.eval, c.paths.out / to_string(mode));
  return outs.front().report;
}

// --- ablate -------------------------------------------------------------------

std::string to_string(AblationKind k) {
  switch (k) {
    case AblationKind::kFusion: return "fusion";
    case AblationKind::kTarget: return "target";
    case AblationKind::kTau: return "tau";
  }
  return "?";
}

AblationKind ablation_kind_from_string(const std::string& s) {
  if (s == "fusion") return AblationKind::kFusion;
  if (s == "target") return AblationKind::kTarget;
  if (s == "tau") return AblationKind::kTau;
  throw ConfigError("unknown ablation '" + s + "' (expected fusion, target or tau)");
}

std::vector<std::pair<std::string, RunConfig>> ablation_variants(const RunConfig& base,
                                                                 AblationKind kind) {
  std::vector<std::pair<std::string, RunConfig>> out;
  switch (kind) {
    case AblationKind::kFusion:
      for (auto v : {FusionVariant::kA, FusionVariant::kB, FusionVariant::kC,
                     FusionVariant::kD}) {
        RunConfig c = base;
        c.head.fusion_variant = v;
        out.emplace_back("fusion " + to_string(v), c);
      }
      break;
    case AblationKind::kTarget:
      for (int s = 1; s <= 3; ++s) {
        RunConfig c = base;
        c.train.target_setting = static_cast<TargetSetting>(s);
        out.emplace_back("setting #" + std::to_string(s), c);
      }
      break;
    case AblationKind::kTau:
      for (double tau : {0.0, 0.3, 0.5, 0.7}) {
        RunConfig c = base;
        c.train.tau = tau;
        out.emplace_back("tau " + format_number(tau, 1), c);
      }
      break;
  }
  return out;
}

std::vector<AblationRow> cmd_ablate(const RunConfig& c, AblationKind kind) {
  auto samples = load_training_set(c);
  std::vector<AblationRow> rows;
  for (const auto& [label, variant] : ablation_variants(c, kind)) {
    TrainResult tr = train_head(variant, samples);
    auto outs = evaluate_split(variant, variant.eval_split, {EvalMode::kCalibrated},
                               &tr.head);
    rows.push_back({label, outs.front().report.mask, tr.num_samples});
  }
  Table csv{{"variant", "ap", "ap50", "ap75", "train_samples"}, {}};
  Table txt{{"variant", "AP", "AP@0.5", "AP@0.75", "train_samples"}, {}};
  for (const auto& r : rows) {
    csv.rows.push_back({r.label, format_number(r.mask.ap), format_number(r.mask.ap50),
                        format_number(r.mask.ap75), std::to_string(r.train_samples)});
    txt.rows.push_back({r.label, pct(r.mask.ap), pct(r.mask.ap50), pct(r.mask.ap75),
                        std::to_string(r.train_samples)});
  }
  const fs::path stem = c.paths.out / ("ablation_" + to_string(kind));
  write_file(stem.string() + ".csv", to_csv(csv));
  write_file(stem.string() + ".txt", to_aligned_text(txt));
  return rows;
}

// --- report -------------------------------------------------------------------

std::string cmd_report(const RunConfig& c) {
  struct Entry {
    std::string mode;
    EvalReport report;
  };
  std::vector<Entry> entries;
  for (const char* mode : {"baseline", "calibrated", "oracle"}) {
    const fs::path p = c.paths.out / mode / "report.json";
    if (std::string(mode) == "oracle" && !fs::exists(p)) continue;
    entries.push_back({mode, eval_report_from_json(parse_json_file(p))});
  }
  const EvalReport& base = entries.front().report;

  std::ostringstream md;
  md << "# maskscore report\n\n";
  md << "Split evaluated: " << base.num_images << " images, " << base.num_gt
     << " instances.\n\n";
  md << "## Average precision (x100)\n\n";
  md << "| mode | AP_m | AP_m@0.5 | AP_m@0.75 | AP_b | dAP_m vs baseline |\n";
  md << "|---|---|---|---|---|---|\n";
  Table summary{{"mode", "ap_mask", "ap50_mask", "ap75_mask", "ap_box", "delta_ap_mask",
                 "pearson_r"},
                {}};
  for (const auto& e : entries) {
    const auto& r = e.report;
    md << "| " << e.mode << " | " << pct(r.mask.ap) << " | " << pct(r.mask.ap50) << " | "
       << pct(r.mask.ap75) << " | " << pct(r.box.ap) << " | "
       << pct(r.mask.ap - base.mask.ap) << " |\n";
    summary.rows.push_back({e.mode, format_number(r.mask.ap), format_number(r.mask.ap50),
                            format_number(r.mask.ap75), format_number(r.box.ap),
                            format_number(r.mask.ap - base.mask.ap),
                            r.pearson_r ? format_number(*r.pearson_r, 3) : ""});
  }

  md << "\n## MaskIoU prediction\n\n";
  for (const auto& e : entries) {
    if (e.mode != "calibrated") continue;
    md << "Pearson r between predicted and actual MaskIoU: "
       << (e.report.pearson_r ? format_number(*e.report.pearson_r, 3) : "n/a") << "\n\n";
    // Binned scatter: mean predicted MaskIoU per actual-MaskIoU decile.
    const std::string text = read_file(c.paths.out / "calibrated" /
                                       "correlation_scatter.csv");
    std::istringstream is(text);
    std::string line;
    std::getline(is, line);
    std::vector<double> sum(10, 0.0), sq(10, 0.0);
    std::vector<int> count(10, 0);
    while (std::getline(is, line)) {
      const auto cells = split_csv_line(line);
      if (cells.size() < 7 || cells[4].empty()) continue;
      const double pred = std::stod(cells[4]);
      const double actual = std::stod(cells[5]);
      const int b = std::min(9, static_cast<int>(actual * 10.0));
      sum[b] += pred;
      sq[b] += pred * pred;
      ++count[b];
    }
    md << "| actual MaskIoU | n | mean predicted | std |\n|---|---|---|---|\n";
    for (int b = 0; b < 10; ++b) {
      md << "| " << format_number(b / 10.0, 1) << "-" << format_number((b + 1) / 10.0, 1)
         << " | " << count[b] << " | ";
      if (count[b] > 0) {
        const double m = sum[b] / count[b];
        const double var = std::max(0.0, sq[b] / count[b] - m * m);
        md << format_number(m, 3) << " | " << format_number(std::sqrt(var), 3) << " |\n";
      } else {
        md << "- | - |\n";
      }
    }
  }
  if (base.pearson_r_cls) {
    md << "\nBaseline corr(s_cls, MaskIoU) over detections with both above 0.5: "
       << format_number(*base.pearson_r_cls, 3) << "\n";
  }

  md << "\n## Mean score per MaskIoU bin\n\n| bin |";
  for (const auto& e : entries) md << " " << e.mode << " |";
  md << "\n|---|";
  for (std::size_t i = 0; i < entries.size(); ++i) md << "---|";
  md << "\n";
  for (std::size_t b = 0; b < base.histogram.size(); ++b) {
    md << "| (" << format_number(base.histogram[b].lo, 2) << ", "
       << format_number(base.histogram[b].hi, 2) << "] |";
    for (const auto& e : entries) {
      const auto& bin = e.report.histogram.at(b);
      md << " " << (bin.mean_score ? format_number(*bin.mean_score, 3) : "-") << " (n="
         << bin.count << ") |";
    }
    md << "\n";
  }

  const std::string text = md.str();
  write_file(c.paths.out / "report.md", text);
  write_table(summary, c.paths.out / "summary");
  return text;
}

// --- tables -------------------------------------------------------------------

std::string format_number(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  std::string s = buf;
  if (s == "-0" || s.find_first_not_of("-0.") == std::string::npos) {
    if (!s.empty() && s.front() == '-') s.erase(0, 1);
  }
  return s;
}

std::string to_csv(const Table& t) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  return out;
}

std::string to_aligned_text(const Table& t) {
  std::vector<std::size_t> width(t.header.size(), 0);
  auto measure = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size() && i < width.size(); ++i)
      width[i] = std::max(width[i], cells[i].size());
  };
  measure(t.header);
  for (const auto& r : t.rows) measure(r);
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    std::string l;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) l += "  ";
      const std::size_t w = i < width.size() ? width[i] : cells[i].size();
      l += cells[i] + std::string(w - std::min(w, cells[i].size()), ' ');
    }
    while (!l.empty() && l.back() == ' ') l.pop_back();
    out += l + '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  return out;
}

void write_table(const Table& t, const fs::path& stem) {
  write_file(stem.string() + ".csv", to_csv(t));
  write_file(stem.string() + ".txt", to_aligned_text(t));
}

}  // namespace maskscore
