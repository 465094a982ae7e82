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
#include "maskscore/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <set>
#include <stdexcept>

namespace maskscore {

namespace {

using json = nlohmann::json;

constexpr double kMaxMatchIou = 1.0 - 1e-10;

int find_threshold(const std::vector<double>& thresholds, double t) {
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (std::abs(thresholds[i] - t) < 1e-9) return static_cast<int>(i);
  }
  return -1;
}

json ap_to_json(const ApTriple& a) {
  return {{"ap", a.ap}, {"ap50", a.ap50}, {"ap75", a.ap75}};
}

ApTriple ap_from_json(const json& j) {
  return {j.at("ap").get<double>(), j.at("ap50").get<double>(),
          j.at("ap75").get<double>()};
}

}  // namespace

EvalConfig::EvalConfig() {
  for (int i = 0; i < 10; ++i) iou_thresholds.push_back(0.5 + 0.05 * i);
}

void EvalConfig::validate() const {
  if (iou_thresholds.empty()) {
    throw std::invalid_argument("eval: iou_thresholds must not be empty");
  }
  for (std::size_t i = 0; i < iou_thresholds.size(); ++i) {
    const double t = iou_thresholds[i];
    if (!(t >= 0.0 && t <= 1.0)) {
      throw std::invalid_argument("eval: iou thresholds must lie in [0,1]");
    }
    if (i > 0 && !(t > iou_thresholds[i - 1])) {
      throw std::invalid_argument("eval: iou thresholds must be increasing");
    }
  }
  if (recall_points < 2) throw std::invalid_argument("eval: recall_points < 2");
  if (max_dets < 1) throw std::invalid_argument("eval: max_dets < 1");
  if (!(histogram_bin_width > 0.0 && histogram_bin_width <= 0.5)) {
    throw std::invalid_argument("eval: histogram_bin_width must be in (0,0.5]");
  }
}

std::vector<double> EvalConfig::recall_grid() const {
  std::vector<double> grid(recall_points);
  for (int i = 0; i < recall_points; ++i) {
    grid[i] = static_cast<double>(i) / (recall_points - 1);
  }
  return grid;
}

json to_json(const EvalConfig& c) {
  return {{"iou_thresholds", c.iou_thresholds},
          {"recall_points", c.recall_points},
          {"max_dets", c.max_dets},
          {"histogram_bin_width", c.histogram_bin_width}};
}

EvalConfig eval_config_from_json(const json& j) {
  EvalConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "iou_thresholds") c.iou_thresholds = value.get<std::vector<double>>();
    else if (key == "recall_points") c.recall_points = value.get<int>();
    else if (key == "max_dets") c.max_dets = value.get<int>();
    else if (key == "histogram_bin_width") c.histogram_bin_width = value.get<double>();
    else throw std::invalid_argument("eval: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

double pair_iou(const Prediction& p, const GroundTruth& g, IouKind kind) {
  return kind == IouKind::kMask ? mask_iou(p.mask, g.mask) : box_iou(p.box, g.box);
}

std::vector<bool> match_ious(const std::vector<std::vector<double>>& ious,
                             double iou_threshold) {
  std::vector<bool> flags(ious.size(), false);
  if (ious.empty()) return flags;
  const std::size_t ng = ious.front().size();
  std::vector<bool> taken(ng, false);
  for (std::size_t d = 0; d < ious.size(); ++d) {
    double best = std::min(iou_threshold, kMaxMatchIou);
    int m = -1;
    for (std::size_t g = 0; g < ng; ++g) {
      if (taken[g] || ious[d][g] < best) continue;
      best = ious[d][g];
      m = static_cast<int>(g);
    }
    if (m >= 0) {
      taken[m] = true;
      flags[d] = true;
    }
  }
  return flags;
}

std::vector<bool> match_and_score(std::span<const Prediction> preds,
                                  std::span<const GroundTruth> gts,
                                  double iou_threshold, IouKind kind) {
  std::vector<std::vector<double>> ious(preds.size(),
                                        std::vector<double>(gts.size()));
  for (std::size_t d = 0; d < preds.size(); ++d)
    for (std::size_t g = 0; g < gts.size(); ++g)
      ious[d][g] = pair_iou(preds[d], gts[g], kind);
  return match_ious(ious, iou_threshold);
}

PrCurve precision_recall(std::span<const bool> flags, int num_gt,
                         std::span<const double> recall_grid) {
  PrCurve curve;
  curve.recall.assign(recall_grid.begin(), recall_grid.end());
  curve.precision.assign(recall_grid.size(), 0.0);
  if (num_gt <= 0) return curve;
  const std::size_t n = flags.size();
  std::vector<double> rc(n), pr(n);
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    (flags[i] ? tp : fp) += 1.0;
    rc[i] = tp / num_gt;
    pr[i] = tp / (tp + fp);
  }
  for (std::size_t i = n; i-- > 1;) pr[i - 1] = std::max(pr[i - 1], pr[i]);
  for (std::size_t r = 0; r < recall_grid.size(); ++r) {
    const auto it = std::lower_bound(rc.begin(), rc.end(), recall_grid[r]);
    if (it != rc.end()) curve.precision[r] = pr[it - rc.begin()];
  }
  return curve;
}

double average_precision(std::span<const bool> flags, int num_gt,
                         std::span<const double> recall_grid) {
  const PrCurve c = precision_recall(flags, num_gt, recall_grid);
  if (c.precision.empty()) return 0.0;
  return std::accumulate(c.precision.begin(), c.precision.end(), 0.0) /
         static_cast<double>(c.precision.size());
}

ApSummary evaluate(std::span<const Prediction> preds,
                   std::span<const GroundTruth> gts, const EvalConfig& config,
                   IouKind kind) {
  config.validate();
  if (gts.empty()) {
    throw std::invalid_argument("evaluate: the ground-truth set is empty");
  }
  using Key = std::pair<int, int>;  // (category, image)
  std::map<Key, std::vector<const GroundTruth*>> gt_groups;
  std::map<Key, std::vector<const Prediction*>> dt_groups;
  std::map<int, std::set<int>> images_per_cat;
  for (const auto& g : gts) {
    gt_groups[{g.category_id, g.image_id}].push_back(&g);
    images_per_cat[g.category_id].insert(g.image_id);
  }
  for (const auto& p : preds) {
    dt_groups[{p.category_id, p.image_id}].push_back(&p);
    if (images_per_cat.contains(p.category_id)) {
      images_per_cat[p.category_id].insert(p.image_id);
    }
  }

  const auto grid = config.recall_grid();
  const std::size_t nt = config.iou_thresholds.size();
  ApSummary summary;
  for (const auto& [cat, images] : images_per_cat) {
    CategoryResult cr;
    // (score, flag) per threshold, images in ascending id order.
    std::vector<double> scores;
    std::vector<std::vector<bool>> flags(nt);
    for (int img : images) {
      std::vector<const GroundTruth*> g;
      if (auto it = gt_groups.find({cat, img}); it != gt_groups.end()) g = it->second;
      std::vector<const Prediction*> d;
      if (auto it = dt_groups.find({cat, img}); it != dt_groups.end()) d = it->second;
      cr.num_gt += static_cast<int>(g.size());
      std::stable_sort(d.begin(), d.end(), [](const Prediction* a, const Prediction* b) {
        return a->score > b->score;
      });
      if (d.size() > static_cast<std::size_t>(config.max_dets)) d.resize(config.max_dets);
      std::vector<std::vector<double>> ious(d.size(), std::vector<double>(g.size()));
      for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t k = 0; k < g.size(); ++k)
          ious[i][k] = pair_iou(*d[i], *g[k], kind);
      for (const auto* p : d) scores.push_back(p->score);
      for (std::size_t t = 0; t < nt; ++t) {
        const auto f = match_ious(ious, config.iou_thresholds[t]);
        flags[t].insert(flags[t].end(), f.begin(), f.end());
      }
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return scores[a] > scores[b];
    });
    for (std::size_t t = 0; t < nt; ++t) {
      auto sorted_flags = std::make_unique<bool[]>(order.size());
      for (std::size_t i = 0; i < order.size(); ++i) sorted_flags[i] = flags[t][order[i]];
      PrCurve curve = precision_recall(
          std::span<const bool>(sorted_flags.get(), order.size()), cr.num_gt, grid);
      cr.ap_per_threshold.push_back(
          std::accumulate(curve.precision.begin(), curve.precision.end(), 0.0) /
          static_cast<double>(grid.size()));
      cr.curves.push_back(std::move(curve));
    }
    summary.per_category.emplace(cat, std::move(cr));
  }

  const int i50 = find_threshold(config.iou_thresholds, 0.5);
  const int i75 = find_threshold(config.iou_thresholds, 0.75);
  double total = 0.0, s50 = 0.0, s75 = 0.0;
  for (const auto& [cat, cr] : summary.per_category) {
    total += std::accumulate(cr.ap_per_threshold.begin(), cr.ap_per_threshold.end(), 0.0) /
             static_cast<double>(nt);
    if (i50 >= 0) s50 += cr.ap_per_threshold[i50];
    if (i75 >= 0) s75 += cr.ap_per_threshold[i75];
  }
  const double k = static_cast<double>(summary.per_category.size());
  summary.ap = total / k;
  summary.ap50 = i50 >= 0 ? s50 / k : 0.0;
  summary.ap75 = i75 >= 0 ? s75 / k : 0.0;
  return summary;
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("pearson_correlation: length mismatch");
  }
  if (x.size() < 2) {
    throw std::invalid_argument("pearson_correlation: need at least 2 points");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw std::invalid_argument(
        "pearson_correlation: undefined for a constant input");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<HistogramBin> score_quality_histogram(std::span<const double> mask_ious,
                                                  std::span<const double> scores,
                                                  double bin_width) {
  if (mask_ious.size() != scores.size()) {
    throw std::invalid_argument("score_quality_histogram: length mismatch");
  }
  if (!(bin_width > 0.0 && bin_width <= 0.5)) {
    throw std::invalid_argument("score_quality_histogram: bin width in (0,0.5]");
  }
  const int nbins = static_cast<int>(std::lround(0.5 / bin_width));
  std::vector<HistogramBin> bins(nbins);
  std::vector<double> sums(nbins, 0.0);
  for (int b = 0; b < nbins; ++b) {
    bins[b].lo = 0.5 + b * bin_width;
    bins[b].hi = b == nbins - 1 ? 1.0 : 0.5 + (b + 1) * bin_width;
  }
  for (std::size_t i = 0; i < mask_ious.size(); ++i) {
    const double iou = mask_ious[i];
    if (!(iou > 0.5) || !(scores[i] > 0.5)) continue;
    for (int b = 0; b < nbins; ++b) {
      if (iou > bins[b].lo && iou <= bins[b].hi) {
        ++bins[b].count;
        sums[b] += scores[i];
        break;
      }
    }
  }
  for (int b = 0; b < nbins; ++b) {
    if (bins[b].count > 0) bins[b].mean_score = sums[b] / bins[b].count;
  }
  return bins;
}

double actual_mask_iou(const Detection& det, std::span<const GtInstance> gts) {
  const BinaryMask m = binarize(det.soft_mask);
  double best = 0.0;
  for (const auto& g : gts) {
    if (g.category_id != det.category_id) continue;
    best = std::max(best, mask_iou(m, g.mask));
  }
  return best;
}

std::vector<Detection> upper_bound_substitute(std::vector<Detection> dets,
                                              std::span<const GtInstance> gts) {
  for (auto& d : dets) {
    const double iou = actual_mask_iou(d, gts);
    if (iou > 0.0) {
      d.s_iou = iou;
    } else if (!d.s_iou) {
      d.s_iou = 1.0;
    }
    d.s_mask = d.s_cls * *d.s_iou;
  }
  return dets;
}

std::vector<GroundTruth> ground_truths(const Scene& scene) {
  std::vector<GroundTruth> out;
  for (const auto& g : scene.instances) {
    out.push_back({scene.id, g.category_id, g.mask, g.box});
  }
  return out;
}

std::vector<Prediction> predictions(int image_id,
                                    const std::vector<Detection>& dets) {
  std::vector<Prediction> out;
  for (const auto& d : dets) {
    out.push_back({image_id, d.category_id, d.score(), binarize(d.soft_mask), d.box});
  }
  return out;
}

json to_json(const EvalReport& r) {
  json per_cat = json::object();
  for (const auto& [cat, a] : r.mask_per_category) {
    per_cat[std::to_string(cat)] = ap_to_json(a);
  }
  json hist = json::array();
  for (const auto& b : r.histogram) {
    hist.push_back({{"lo", b.lo},
                    {"hi", b.hi},
                    {"count", b.count},
                    {"mean_score", b.mean_score ? json(*b.mean_score) : json(nullptr)}});
  }
  return {{"schema", "maskscore.report/1"},
          {"mode", r.mode},
          {"mask", ap_to_json(r.mask)},
          {"box", ap_to_json(r.box)},
          {"mask_per_category", per_cat},
          {"upper_bound", r.upper_bound ? ap_to_json(*r.upper_bound) : json(nullptr)},
          {"pearson_r", r.pearson_r ? json(*r.pearson_r) : json(nullptr)},
          {"pearson_r_cls", r.pearson_r_cls ? json(*r.pearson_r_cls) : json(nullptr)},
          {"histogram", hist},
          {"num_images", r.num_images},
          {"num_predictions", r.num_predictions},
          {"num_gt", r.num_gt}};
}

EvalReport eval_report_from_json(const json& j) {
  if (j.value("schema", "") != "maskscore.report/1") {
    throw std::runtime_error("report: expected schema 'maskscore.report/1'");
  }
  EvalReport r;
  r.mode = j.at("mode").get<std::string>();
  r.mask = ap_from_json(j.at("mask"));
  r.box = ap_from_json(j.at("box"));
  for (const auto& [k, v] : j.at("mask_per_category").items()) {
    r.mask_per_category[std::stoi(k)] = ap_from_json(v);
  }
  if (!j.at("upper_bound").is_null()) r.upper_bound = ap_from_json(j.at("upper_bound"));
  if (!j.at("pearson_r").is_null()) r.pearson_r = j.at("pearson_r").get<double>();
  if (!j.at("pearson_r_cls").is_null())
    r.pearson_r_cls = j.at("pearson_r_cls").get<double>();
  for (const auto& b : j.at("histogram")) {
    HistogramBin bin;
    bin.lo = b.at("lo").get<double>();
    bin.hi = b.at("hi").get<double>();
    bin.count = b.at("count").get<int>();
    if (!b.at("mean_score").is_null()) bin.mean_score = b.at("mean_score").get<double>();
    r.histogram.push_back(bin);
  }
  r.num_images = j.at("num_images").get<int>();
  r.num_predictions = j.at("num_predictions").get<int>();
  r.num_gt = j.at("num_gt").get<int>();
  return r;
}

json to_coco_gt(std::span<const GroundTruth> gts,
                const std::map<int, std::pair<int, int>>& image_sizes) {
  json images = json::array();
  for (const auto& [id, size] : image_sizes) {
    images.push_back({{"id", id}, {"width", size.first}, {"height", size.second}});
  }
  json anns = json::array();
  std::set<int> cats;
  int next_id = 1;
  for (const auto& g : gts) {
    cats.insert(g.category_id);
    anns.push_back({{"id", next_id++},
                    {"image_id", g.image_id},
                    {"category_id", g.category_id},
                    {"segmentation", rle_to_json(rle_encode(g.mask))},
                    {"bbox", bbox_to_json(g.box)},
                    {"area", g.mask.area()},
                    {"iscrowd", 0}});
  }
  json categories = json::array();
  for (int c : cats) {
    categories.push_back({{"id", c}, {"name", "class_" + std::to_string(c)}});
  }
  return {{"images", images}, {"annotations", anns}, {"categories", categories}};
}

std::vector<GroundTruth> coco_gt_from_json(const json& j) {
  if (!j.is_object() || !j.contains("annotations")) {
    throw std::invalid_argument("COCO gt: missing \"annotations\"");
  }
  std::vector<GroundTruth> out;
  for (const auto& a : j.at("annotations")) {
    if (a.value("iscrowd", 0) != 0) {
      throw std::invalid_argument("COCO gt: crowd annotations are not supported");
    }
    GroundTruth g;
    g.image_id = a.at("image_id").get<int>();
    g.category_id = a.at("category_id").get<int>();
    g.mask = rle_decode(rle_from_json(a.at("segmentation")));
    if (a.contains("bbox")) {
      g.box = bbox_from_json(a.at("bbox"));
    } else if (auto b = mask_to_bbox(g.mask)) {
      g.box = *b;
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<Prediction> coco_results_from_json(const json& j) {
  if (!j.is_array()) {
    throw std::invalid_argument("COCO results: expected a JSON list");
  }
  std::vector<Prediction> out;
  for (const auto& r : j) {
    Prediction p;
    p.image_id = r.at("image_id").get<int>();
    p.category_id = r.at("category_id").get<int>();
    p.score = r.at("score").get<double>();
    p.mask = rle_decode(rle_from_json(r.at("segmentation")));
    if (r.contains("bbox")) {
      p.box = bbox_from_json(r.at("bbox"));
    } else if (auto b = mask_to_bbox(p.mask)) {
      p.box = *b;
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace maskscore
