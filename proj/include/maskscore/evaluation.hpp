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
// COCO-protocol average precision (101-point interpolated, IoU thresholds
// 0.50:0.05:0.95, greedy matching) plus score-quality diagnostics.
#ifndef MASKSCORE_EVALUATION_HPP_
#define MASKSCORE_EVALUATION_HPP_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "maskscore/detection.hpp"
#include "maskscore/mask.hpp"
#include "maskscore/synth.hpp"

namespace maskscore {

enum class IouKind { kMask, kBox };

struct GroundTruth {
  int image_id = 0;
  int category_id = 0;
  BinaryMask mask;
  BBox box;
};

struct Prediction {
  int image_id = 0;
  int category_id = 0;
  double score = 0.0;
  BinaryMask mask;  // already binarized
  BBox box;
};

struct EvalConfig {
  std::vector<double> iou_thresholds;  // default 0.50, 0.55, ..., 0.95
  int recall_points = 101;
  int max_dets = 100;
  double histogram_bin_width = 0.05;

  EvalConfig();
  void validate() const;
  std::vector<double> recall_grid() const;
};

nlohmann::json to_json(const EvalConfig& c);
EvalConfig eval_config_from_json(const nlohmann::json& j);

double pair_iou(const Prediction& p, const GroundTruth& g, IouKind kind);

// Greedy matching within one image and category. `preds` must already be
// sorted by descending score; each prediction takes the unmatched gt with
// the highest IoU >= threshold. Returns true for matched predictions.
std::vector<bool> match_and_score(std::span<const Prediction> preds,
                                  std::span<const GroundTruth> gts,
                                  double iou_threshold, IouKind kind);

// Same rule on a precomputed IoU matrix ious[pred][gt].
std::vector<bool> match_ious(const std::vector<std::vector<double>>& ious,
                             double iou_threshold);

struct PrCurve {
  std::vector<double> recall;     // the recall grid
  std::vector<double> precision;  // interpolated precision per grid point
};

// Flags in descending score order. Precision is made monotone
// non-increasing and sampled at each grid recall r as the precision at the
// first rank reaching recall >= r (0 when none does).
PrCurve precision_recall(std::span<const bool> flags, int num_gt,
                         std::span<const double> recall_grid);
double average_precision(std::span<const bool> flags, int num_gt,
                         std::span<const double> recall_grid);

struct CategoryResult {
  int num_gt = 0;
  std::vector<double> ap_per_threshold;
  std::vector<PrCurve> curves;  // one per threshold
};

struct ApSummary {
  double ap = 0.0;
  double ap50 = 0.0;
  double ap75 = 0.0;
  std::map<int, CategoryResult> per_category;
};

// Categories without gt are skipped; a gt category that is never predicted
// contributes AP 0. Throws std::invalid_argument on an empty gt set.
ApSummary evaluate(std::span<const Prediction> preds,
                   std::span<const GroundTruth> gts, const EvalConfig& config,
                   IouKind kind);

// Pearson r. Throws std::invalid_argument on length < 2, mismatched length
// or a constant input.
double pearson_correlation(std::span<const double> x, std::span<const double> y);

struct HistogramBin {
  double lo = 0.0;  // exclusive
  double hi = 0.0;  // inclusive
  int count = 0;
  std::optional<double> mean_score;
};

// Detections with MaskIoU > 0.5 and score > 0.5, grouped into MaskIoU bins
// over (0.5, 1.0]; per-bin mean score.
std::vector<HistogramBin> score_quality_histogram(std::span<const double> mask_ious,
                                                  std::span<const double> scores,
                                                  double bin_width = 0.05);

// Ground-truth substitution: s_iou <- actual MaskIoU against the best
// same-class gt when that IoU is positive, else the predicted s_iou (1 when
// absent). s_mask is recomputed as s_cls * s_iou.
std::vector<Detection> upper_bound_substitute(std::vector<Detection> dets,
                                              std::span<const GtInstance> gts);

// Actual MaskIoU of a detection: best IoU of its binarized mask against a
// gt of the same class.
double actual_mask_iou(const Detection& det, std::span<const GtInstance> gts);

// Conversions from simulator output.
std::vector<GroundTruth> ground_truths(const Scene& scene);
std::vector<Prediction> predictions(int image_id, const std::vector<Detection>& dets);

struct ApTriple {
  double ap = 0.0, ap50 = 0.0, ap75 = 0.0;
};

struct EvalReport {
  std::string mode;
  ApTriple mask;
  ApTriple box;
  std::map<int, ApTriple> mask_per_category;
  std::optional<ApTriple> upper_bound;  // mask AP after gt substitution
  std::optional<double> pearson_r;
  std::optional<double> pearson_r_cls;  // s_cls vs actual MaskIoU
  std::vector<HistogramBin> histogram;
  int num_images = 0;
  int num_predictions = 0;
  int num_gt = 0;
};

nlohmann::json to_json(const EvalReport& r);
EvalReport eval_report_from_json(const nlohmann::json& j);

// --- COCO interchange ------------------------------------------------------

// {"images":[...],"annotations":[...],"categories":[...]} with uncompressed
// RLE segmentations.
nlohmann::json to_coco_gt(std::span<const GroundTruth> gts,
                          const std::map<int, std::pair<int, int>>& image_sizes);
std::vector<GroundTruth> coco_gt_from_json(const nlohmann::json& j);
// Results list; segmentations binarized already. Compressed RLE is rejected.
std::vector<Prediction> coco_results_from_json(const nlohmann::json& j);

}  // namespace maskscore

#endif  // MASKSCORE_EVALUATION_HPP_
