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
#include "maskscore/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace maskscore {

std::string to_string(NmsMethod m) {
  switch (m) {
    case NmsMethod::kLinear: return "linear";
    case NmsMethod::kGaussian: return "gaussian";
    case NmsMethod::kHard: return "hard";
  }
  return "?";
}

NmsMethod nms_method_from_string(const std::string& s) {
  if (s == "linear") return NmsMethod::kLinear;
  if (s == "gaussian") return NmsMethod::kGaussian;
  if (s == "hard") return NmsMethod::kHard;
  throw std::invalid_argument("unknown NMS method '" + s +
                              "' (expected linear, gaussian or hard)");
}

void NmsConfig::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(iou_threshold) || !unit(score_floor)) {
    throw std::invalid_argument("nms: thresholds must lie in [0,1]");
  }
  if (!(sigma > 0.0)) throw std::invalid_argument("nms: sigma must be > 0");
}

nlohmann::json to_json(const NmsConfig& c) {
  return {{"method", to_string(c.method)},
          {"iou_threshold", c.iou_threshold},
          {"sigma", c.sigma},
          {"score_floor", c.score_floor}};
}

NmsConfig nms_config_from_json(const nlohmann::json& j) {
  NmsConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "method") c.method = nms_method_from_string(value.get<std::string>());
    else if (key == "iou_threshold") c.iou_threshold = value.get<double>();
    else if (key == "sigma") c.sigma = value.get<double>();
    else if (key == "score_floor") c.score_floor = value.get<double>();
    else throw std::invalid_argument("nms: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

std::vector<Detection> soft_nms(std::vector<Detection> dets,
                                const NmsConfig& config) {
  config.validate();
  std::map<int, std::vector<Detection>> by_class;
  for (auto& d : dets) by_class[d.category_id].push_back(std::move(d));

  std::vector<Detection> out;
  for (auto& [cls, pool] : by_class) {
    while (!pool.empty()) {
      // First maximum keeps the earliest detection on ties.
      auto best = std::max_element(
          pool.begin(), pool.end(),
          [](const Detection& a, const Detection& b) { return a.s_cls < b.s_cls; });
      Detection kept = std::move(*best);
      pool.erase(best);
      if (kept.s_cls < config.score_floor) continue;
      for (auto& d : pool) {
        const double iou = box_iou(kept.box, d.box);
        switch (config.method) {
          case NmsMethod::kLinear:
            if (iou > config.iou_threshold) d.s_cls *= 1.0 - iou;
            break;
          case NmsMethod::kGaussian:
            d.s_cls *= std::exp(-iou * iou / config.sigma);
            break;
          case NmsMethod::kHard:
            if (iou > config.iou_threshold) d.s_cls = 0.0;
            break;
        }
      }
      std::erase_if(pool, [&](const Detection& d) {
        return d.s_cls < config.score_floor;
      });
      out.push_back(std::move(kept));
    }
  }
  return out;
}

std::vector<Detection> top_k(std::vector<Detection> dets, int k) {
  if (k < 0) throw std::invalid_argument("top_k: k must be non-negative");
  std::stable_sort(dets.begin(), dets.end(),
                   [](const Detection& a, const Detection& b) {
                     return a.score() > b.score();
                   });
  if (dets.size() > static_cast<std::size_t>(k)) dets.resize(k);
  return dets;
}

double predict_detection_siou(const MaskIoUHead& head, const Scene& scene,
                              const Detection& det) {
  const auto& cfg = head.config();
  const SoftMask crop = crop_soft_mask(det.soft_mask, det.box, kHeadMaskSide);
  const auto masks = class_masks(crop, det.category_id, cfg.num_classes);
  const nn::Tensor feature = extract_roi(scene, det.box, cfg.roi_side());
  return predict_siou(head, masks, feature, det.category_id);
}

std::vector<Detection> calibrate(std::vector<Detection> dets,
                                 const MaskIoUHead* head, const Scene& scene) {
  if (head == nullptr) {
    throw std::invalid_argument("calibrate: a trained MaskIoU head is required");
  }
  for (auto& d : dets) {
    d.s_iou = predict_detection_siou(*head, scene, d);
    d.s_mask = d.s_cls * *d.s_iou;
  }
  return dets;
}

std::vector<Detection> run_inference(const SceneRecord& record,
                                     const MaskIoUHead* head,
                                     const NmsConfig& nms, int k) {
  auto dets = top_k(soft_nms(record.detections, nms), k);
  if (head != nullptr) {
    dets = calibrate(std::move(dets), head, record.scene);
  }
  std::stable_sort(dets.begin(), dets.end(),
                   [](const Detection& a, const Detection& b) {
                     return a.score() > b.score();
                   });
  return dets;
}

nlohmann::json to_coco_results(int image_id,
                               const std::vector<Detection>& dets) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& d : dets) {
    out.push_back(
        {{"image_id", image_id},
         {"category_id", d.category_id},
         {"segmentation", rle_to_json(rle_encode(binarize(d.soft_mask)))},
         {"bbox", bbox_to_json(d.box)},
         {"score", d.score()}});
  }
  return out;
}

nlohmann::json to_score_records(int image_id,
                                const std::vector<Detection>& dets) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& d : dets) {
    nlohmann::json e{{"image_id", image_id}, {"index", d.index},
                     {"s_cls", d.s_cls}};
    e["s_iou"] = d.s_iou ? nlohmann::json(*d.s_iou) : nlohmann::json(nullptr);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace maskscore
