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
// Inference-time scoring: per-class Soft-NMS on classification scores, a
// top-k cut, then calibration s_mask = s_cls * s_iou with the MaskIoU head.
#ifndef MASKSCORE_SCORING_HPP_
#define MASKSCORE_SCORING_HPP_

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "maskscore/detection.hpp"
#include "maskscore/head.hpp"
#include "maskscore/synth.hpp"

namespace maskscore {

enum class NmsMethod { kLinear, kGaussian, kHard };

std::string to_string(NmsMethod m);
NmsMethod nms_method_from_string(const std::string& s);

struct NmsConfig {
  NmsMethod method = NmsMethod::kLinear;
  double iou_threshold = 0.5;
  double sigma = 0.5;
  double score_floor = 0.001;

  void validate() const;
};

nlohmann::json to_json(const NmsConfig& c);
NmsConfig nms_config_from_json(const nlohmann::json& j);

// Rescores s_cls per class. Linear: s *= 1 - iou when iou > threshold.
// Gaussian: s *= exp(-iou^2 / sigma). Hard: s = 0 when iou > threshold.
// Detections whose score falls below the floor are dropped. The result is
// in selection order, classes ascending.
std::vector<Detection> soft_nms(std::vector<Detection> dets,
                                const NmsConfig& config);

inline constexpr int kDefaultTopK = 100;

// The k highest by score(); ties keep input order.
std::vector<Detection> top_k(std::vector<Detection> dets, int k = kDefaultTopK);

inline constexpr int kHeadMaskSide = 28;

// Head inputs for one detection on its scene.
double predict_detection_siou(const MaskIoUHead& head, const Scene& scene,
                              const Detection& det);

// Fills s_iou and s_mask. Throws std::invalid_argument without a head.
std::vector<Detection> calibrate(std::vector<Detection> dets,
                                 const MaskIoUHead* head, const Scene& scene);

// Soft-NMS on s_cls, top-k, then calibration when a head is given. The
// result is sorted by final score (s_mask, or s_cls without a head).
std::vector<Detection> run_inference(const SceneRecord& record,
                                     const MaskIoUHead* head,
                                     const NmsConfig& nms, int k = kDefaultTopK);

// COCO results entries: image_id, category_id, segmentation (RLE of the
// mask binarized at 0.5), bbox, score.
nlohmann::json to_coco_results(int image_id, const std::vector<Detection>& dets);
// Parallel per-detection analysis entries: image_id, index, s_cls, s_iou.
nlohmann::json to_score_records(int image_id, const std::vector<Detection>& dets);

}  // namespace maskscore

#endif  // MASKSCORE_SCORING_HPP_
