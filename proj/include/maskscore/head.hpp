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
// MaskIoU regression head: fuses a predicted instance mask with its RoI
// feature and regresses the IoU between the binarized mask and its ground
// truth, one output per class.
#ifndef MASKSCORE_HEAD_HPP_
#define MASKSCORE_HEAD_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "maskscore/mask.hpp"
#include "maskscore/nn.hpp"

namespace maskscore {

// How the predicted mask is combined with the RoI feature.
//   A: target-class mask, max-pooled to 14x14, concatenated as a channel.
//   B: pooled target-class mask multiplied into every feature channel.
//   C: all class masks pooled and concatenated.
//   D: target-class mask concatenated with a 28x28 feature.
enum class FusionVariant { kA, kB, kC, kD };

std::string to_string(FusionVariant v);
FusionVariant fusion_variant_from_string(const std::string& s);

struct HeadConfig {
  FusionVariant fusion_variant = FusionVariant::kA;
  int num_classes = 4;
  int feature_channels = 4;
  int conv_channels = 16;
  int fc_width = 64;
  int mask_side = 28;
  int feature_side = 14;

  void validate() const;
  // Spatial side of the RoI feature the variant consumes.
  int roi_side() const;
  int fused_channels() const;
  int fused_side() const;
};

nlohmann::json to_json(const HeadConfig& c);
HeadConfig head_config_from_json(const nlohmann::json& j);

// Places `mask` in slot `target_class` and empty masks everywhere else.
std::vector<SoftMask> class_masks(const SoftMask& mask, int target_class,
                                  int num_classes);

nn::Tensor fuse_inputs(std::span<const SoftMask> pred_masks,
                       const nn::Tensor& roi_feature, int target_class,
                       FusionVariant variant);

class MaskIoUHead {
 public:
  static constexpr int kNumConv = 4;
  static constexpr int kNumFc = 3;

  struct Cache {
    nn::Tensor input;
    std::vector<nn::Tensor> conv_out;  // post-ReLU
    std::vector<nn::Tensor> fc_out;    // post-ReLU except the last
  };

  MaskIoUHead(HeadConfig config, std::uint64_t seed);

  const HeadConfig& config() const { return config_; }

  // Raw per-class predictions; unbounded.
  std::vector<double> forward(const nn::Tensor& fused) const;
  std::vector<double> forward(const nn::Tensor& fused, Cache& cache) const;
  // Accumulates parameter gradients for d(loss)/d(output) = grad_output.
  void backward(const Cache& cache, std::span<const double> grad_output);

  std::vector<nn::Param*> params();
  std::vector<const nn::Param*> params() const;
  void zero_grad();

  nlohmann::json to_json() const;
  static MaskIoUHead from_json(const nlohmann::json& j);

  bool operator==(const MaskIoUHead& other) const;

 private:
  HeadConfig config_;
  std::vector<nn::Param> conv_w_, conv_b_, fc_w_, fc_b_;
};

// Which class outputs are supervised and how.
//   1: ground-truth class only.
//   2: every class; classes absent from the RoI get target 0.
//   3: every class present in the RoI; the rest are ignored.
enum class TargetSetting { kTargetInstance = 1, kAllClasses = 2, kPositiveClasses = 3 };

struct Targets {
  std::vector<double> values;
  std::vector<std::uint8_t> supervision;
};

// gt_masks maps each class present in the RoI to its ground-truth mask in
// the same frame as pred_mask; gt_masks[gt_class] is the matched instance.
Targets make_target(const SoftMask& pred_mask,
                    const std::map<int, BinaryMask>& gt_masks, int gt_class,
                    int num_classes, TargetSetting setting);

struct TrainingSample {
  nn::Tensor roi_feature;     // [channels,14,14]
  nn::Tensor roi_feature_hr;  // [channels,28,28]
  SoftMask pred_mask;         // 28x28, target class
  int class_label = 0;
  std::map<int, BinaryMask> gt_masks;  // 28x28 RoI frame, per present class
  std::vector<double> targets;
  std::vector<std::uint8_t> supervision;

  // IoU of the binarized prediction against the matched ground truth.
  double target_iou() const;
};

// Recomputes targets/supervision for another setting.
void retarget(std::vector<TrainingSample>& samples, int num_classes,
              TargetSetting setting);

// Keeps samples whose target-class MaskIoU exceeds tau; tau = 0 keeps every
// sample, including those with zero MaskIoU.
std::vector<TrainingSample> select_training_samples(
    std::span<const TrainingSample> samples, double tau);

struct TrainConfig {
  TargetSetting target_setting = TargetSetting::kTargetInstance;
  double tau = 0.0;
  int epochs = 18;
  double lr = 0.01;
  // Empty means 78% and 94% of `epochs`.
  std::vector<int> lr_decay_epochs;
  double lr_decay_factor = 0.1;
  double momentum = nn::kDefaultMomentum;
  int batch_size = 16;
  std::uint64_t seed = 0;

  void validate() const;
  std::vector<int> decay_epochs() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

nn::Tensor fuse_sample(const TrainingSample& s, const HeadConfig& config);

struct TrainResult {
  MaskIoUHead head;
  std::vector<double> loss_curve;  // mean l2 loss per epoch
  std::size_t num_samples = 0;     // after tau selection
};

// Samples must already carry targets for train_config.target_setting.
// Throws std::runtime_error when tau filtering leaves nothing to train on.
TrainResult train(std::span<const TrainingSample> dataset,
                  const HeadConfig& head_config,
                  const TrainConfig& train_config);

// Mean masked l2 loss of the head over samples.
double evaluate_loss(const MaskIoUHead& head,
                     std::span<const TrainingSample> samples);

// Predicted MaskIoU for `predicted_class`, clamped to [0,1].
double predict_siou(const MaskIoUHead& head,
                    std::span<const SoftMask> pred_masks,
                    const nn::Tensor& roi_feature, int predicted_class);

double clamp_unit(double v);

}  // namespace maskscore

#endif  // MASKSCORE_HEAD_HPP_
