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
// Synthetic instance-segmentation benchmark. Scenes hold geometric shapes
// rendered into four feature planes; a simulated detector emits jittered
// boxes with corrupted soft masks and classification scores that follow box
// quality but not mask quality.
#ifndef MASKSCORE_SYNTH_HPP_
#define MASKSCORE_SYNTH_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "maskscore/detection.hpp"
#include "maskscore/head.hpp"
#include "maskscore/mask.hpp"
#include "maskscore/nn.hpp"

namespace maskscore {

enum FeaturePlane : int { kIntensity = 0, kCoordX = 1, kCoordY = 2, kEdge = 3 };
inline constexpr int kNumFeaturePlanes = 4;

struct GtInstance {
  int category_id = 0;
  BinaryMask mask;  // scene resolution
  BBox box;         // == mask_to_bbox(mask)
};

struct Scene {
  int id = 0;
  int width = 0;
  int height = 0;
  // [kNumFeaturePlanes, height, width] row-major, float32 precision.
  std::vector<float> planes;
  std::vector<GtInstance> instances;

  float plane(int c, int x, int y) const {
    return planes[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
};

struct SceneRecord {
  Scene scene;
  std::vector<Detection> detections;
};

struct SimulatorConfig {
  int num_classes = 4;
  int width = 64;
  int height = 64;
  int min_shapes = 2;
  int max_shapes = 8;
  int min_shape_size = 12;
  int max_shape_size = 30;
  int min_visible_pixels = 24;
  double feature_noise = 0.05;

  // Mask corruption. Every range is scaled by degradation_strength.
  double degradation_strength = 0.6;
  double morph_radius_max = 2.0;
  double truncation_probability = 0.5;
  double truncation_max_fraction = 0.45;
  double shift_max = 2.0;
  int blur_radius = 1;

  double box_jitter = 0.08;  // per-edge, fraction of box side
  double detection_probability = 0.95;
  double duplicate_probability = 0.3;
  double false_positives_mean = 0.15;
  double class_confusion_probability = 0.01;

  // s_cls = sigmoid(score_bias + score_slope * box_iou + N(0, score_noise))
  double score_bias = -10.0;
  double score_slope = 16.0;
  double score_noise = 0.3;

  int train_scenes = 400;
  int val_scenes = 100;
  int test_scenes = 500;
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const SimulatorConfig& c);
// Unknown keys are rejected.
SimulatorConfig simulator_config_from_json(const nlohmann::json& j);

// Independent RNG stream for a scene, derived from (seed, global index).
std::mt19937_64 scene_rng(std::uint64_t seed, std::uint64_t scene_index);

Scene generate_scene(const SimulatorConfig& config, std::mt19937_64& rng);

std::vector<Detection> simulate_detections(const Scene& scene,
                                           const SimulatorConfig& config,
                                           std::mt19937_64& rng);

// Scene `scene_index` (global across splits) with its detections.
SceneRecord generate_record(const SimulatorConfig& config, int scene_index);

// Bilinear resample of the feature planes inside `box` to
// [kNumFeaturePlanes, out_side, out_side]; sample points outside the scene
// clamp to the nearest edge pixel.
nn::Tensor extract_roi(const Scene& scene, const BBox& box, int out_side);

// Nearest-neighbour crop of an image-resolution mask into the box frame;
// samples outside the image read as background.
SoftMask crop_soft_mask(const SoftMask& mask, const BBox& box, int out_side);
BinaryMask crop_binary_mask(const BinaryMask& mask, const BBox& box,
                            int out_side);

// Quality of a detection against the scene ground truth.
struct MatchInfo {
  int gt_index = -1;  // argmax box IoU, class agnostic
  double box_iou = 0.0;
};
MatchInfo best_box_match(const Scene& scene, const BBox& box);

// Best mask IoU of the binarized detection against gt of `category_id`
// (any class when category_id < 0).
double best_mask_iou(const Scene& scene, const BinaryMask& mask,
                     int category_id);

inline constexpr double kTrainingBoxIou = 0.5;

// Training samples from detections whose best box IoU exceeds 0.5.
std::vector<TrainingSample> build_training_set(
    std::span<const SceneRecord> records, int num_classes,
    TargetSetting setting);
void append_training_samples(const SceneRecord& record, int num_classes,
                             TargetSetting setting,
                             std::vector<TrainingSample>& out);

// --- dataset files (JSON lines) --------------------------------------------

inline constexpr const char* kDatasetSchema = "maskscore.dataset/1";

nlohmann::json record_to_json(const SceneRecord& record);
SceneRecord record_from_json(const nlohmann::json& j);

nlohmann::json dataset_header(const SimulatorConfig& config,
                              const std::string& split, int first_scene,
                              int num_scenes);

// Writes the header line and one line per generated scene.
void write_split(std::ostream& os, const SimulatorConfig& config,
                 const std::string& split, int first_scene, int num_scenes);

// Streams a dataset file: returns the header and calls fn for every scene.
nlohmann::json read_split(std::istream& is,
                          const std::function<void(SceneRecord&&)>& fn);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace maskscore

#endif  // MASKSCORE_SYNTH_HPP_
