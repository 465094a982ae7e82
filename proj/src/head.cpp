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
#include "maskscore/head.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace maskscore {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void reject_unknown_keys(const nlohmann::json& j, const nlohmann::json& known,
                         const std::string& section) {
  require(j.is_object(), section + ": expected an object");
  for (const auto& item : j.items()) {
    require(known.contains(item.key()),
            section + ": unknown key '" + item.key() + "'");
  }
}

nn::Tensor mask_tensor(const SoftMask& m) {
  return nn::Tensor({1, m.height(), m.width()}, m.values());
}

}  // namespace

std::string to_string(FusionVariant v) {
  switch (v) {
    case FusionVariant::kA: return "A";
    case FusionVariant::kB: return "B";
    case FusionVariant::kC: return "C";
    case FusionVariant::kD: return "D";
  }
  return "?";
}

FusionVariant fusion_variant_from_string(const std::string& s) {
  if (s == "A") return FusionVariant::kA;
  if (s == "B") return FusionVariant::kB;
  if (s == "C") return FusionVariant::kC;
  if (s == "D") return FusionVariant::kD;
  throw std::invalid_argument("unknown fusion variant '" + s +
                              "' (expected A, B, C or D)");
}

void HeadConfig::validate() const {
  require(num_classes >= 1, "head: num_classes must be positive");
  require(feature_channels >= 1, "head: feature_channels must be positive");
  require(conv_channels >= 1, "head: conv_channels must be positive");
  require(fc_width >= 1, "head: fc_width must be positive");
  require(mask_side == 2 * feature_side,
          "head: mask_side must be twice feature_side");
}

int HeadConfig::roi_side() const {
  return fusion_variant == FusionVariant::kD ? mask_side : feature_side;
}

int HeadConfig::fused_channels() const {
  switch (fusion_variant) {
    case FusionVariant::kA: return feature_channels + 1;
    case FusionVariant::kB: return feature_channels;
    case FusionVariant::kC: return feature_channels + num_classes;
    case FusionVariant::kD: return feature_channels + 1;
  }
  return 0;
}

int HeadConfig::fused_side() const { return roi_side(); }

nlohmann::json to_json(const HeadConfig& c) {
  return {{"fusion_variant", to_string(c.fusion_variant)},
          {"num_classes", c.num_classes},
          {"feature_channels", c.feature_channels},
          {"conv_channels", c.conv_channels},
          {"fc_width", c.fc_width},
          {"mask_side", c.mask_side},
          {"feature_side", c.feature_side}};
}

HeadConfig head_config_from_json(const nlohmann::json& j) {
  HeadConfig c;
  reject_unknown_keys(j, to_json(c), "head");
  if (j.contains("fusion_variant"))
    c.fusion_variant =
        fusion_variant_from_string(j.at("fusion_variant").get<std::string>());
  if (j.contains("num_classes")) c.num_classes = j.at("num_classes").get<int>();
  if (j.contains("feature_channels"))
    c.feature_channels = j.at("feature_channels").get<int>();
  if (j.contains("conv_channels"))
    c.conv_channels = j.at("conv_channels").get<int>();
  if (j.contains("fc_width")) c.fc_width = j.at("fc_width").get<int>();
  if (j.contains("mask_side")) c.mask_side = j.at("mask_side").get<int>();
  if (j.contains("feature_side"))
    c.feature_side = j.at("feature_side").get<int>();
  c.validate();
  return c;
}

std::vector<SoftMask> class_masks(const SoftMask& mask, int target_class,
                                  int num_classes) {
  require(target_class >= 0 && target_class < num_classes,
          "class_masks: target class out of range");
  std::vector<SoftMask> out;
  out.reserve(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    out.push_back(c == target_class
                      ? mask
                      : SoftMask(mask.width(), mask.height(), 0.0));
  }
  return out;
}

nn::Tensor fuse_inputs(std::span<const SoftMask> pred_masks,
                       const nn::Tensor& roi_feature, int target_class,
                       FusionVariant variant) {
  require(roi_feature.rank() == 3, "fuse_inputs: RoI feature must be [C,H,W]");
  require(target_class >= 0 &&
              target_class < static_cast<int>(pred_masks.size()),
          "fuse_inputs: target class " + std::to_string(target_class) +
              " has no predicted mask");
  const SoftMask& target = pred_masks[target_class];
  const int fc = roi_feature.dim(0);
  const int fh = roi_feature.dim(1);
  const int fw = roi_feature.dim(2);
  for (const auto& m : pred_masks) {
    require(m.width() == target.width() && m.height() == target.height(),
            "fuse_inputs: class masks differ in size");
  }

  if (variant == FusionVariant::kD) {
    require(fh == target.height() && fw == target.width(),
            "fuse_inputs: variant D needs a feature of the mask's size");
    nn::Tensor out({fc + 1, fh, fw});
    auto& d = out.data();
    std::copy(roi_feature.data().begin(), roi_feature.data().end(), d.begin());
    std::copy(target.values().begin(), target.values().end(),
              d.begin() + roi_feature.size());
    return out;
  }

  require(2 * fh == target.height() && 2 * fw == target.width(),
          "fuse_inputs: feature " + roi_feature.shape_string() +
              " must be half the mask size " + std::to_string(target.height()) +
              "x" + std::to_string(target.width()));
  const std::size_t plane = static_cast<std::size_t>(fh) * fw;

  if (variant == FusionVariant::kB) {
    const nn::Tensor pooled = nn::max_pool_2x2(mask_tensor(target));
    nn::Tensor out = roi_feature;
    for (int c = 0; c < fc; ++c) {
      for (std::size_t i = 0; i < plane; ++i) {
        out[c * plane + i] *= pooled[i];
      }
    }
    return out;
  }

  const int extra = variant == FusionVariant::kA
                        ? 1
                        : static_cast<int>(pred_masks.size());
  nn::Tensor out({fc + extra, fh, fw});
  auto& d = out.data();
  std::copy(roi_feature.data().begin(), roi_feature.data().end(), d.begin());
  auto append = [&](const SoftMask& m, int slot) {
    const nn::Tensor pooled = nn::max_pool_2x2(mask_tensor(m));
    std::copy(pooled.data().begin(), pooled.data().end(),
              d.begin() + (fc + slot) * plane);
  };
  if (variant == FusionVariant::kA) {
    append(target, 0);
  } else {
    for (int c = 0; c < extra; ++c) append(pred_masks[c], c);
  }
  return out;
}

MaskIoUHead::MaskIoUHead(HeadConfig config, std::uint64_t seed)
    : config_(config) {
  config_.validate();
  std::mt19937_64 rng(seed);
  int in_ch = config_.fused_channels();
  int side = config_.fused_side();
  for (int i = 0; i < kNumConv; ++i) {
    const std::string n = "conv" + std::to_string(i + 1);
    conv_w_.emplace_back(n + ".weight",
                         std::vector<int>{config_.conv_channels, in_ch, 3, 3});
    conv_b_.emplace_back(n + ".bias", std::vector<int>{config_.conv_channels});
    nn::kaiming_init(conv_w_.back(), conv_b_.back(), in_ch * 9, rng);
    in_ch = config_.conv_channels;
    side = nn::conv_output_side(side, i == kNumConv - 1 ? 2 : 1);
  }
  int in_width = config_.conv_channels * side * side;
  for (int i = 0; i < kNumFc; ++i) {
    const std::string n = "fc" + std::to_string(i + 1);
    const int out_width =
        i == kNumFc - 1 ? config_.num_classes : config_.fc_width;
    fc_w_.emplace_back(n + ".weight", std::vector<int>{out_width, in_width});
    fc_b_.emplace_back(n + ".bias", std::vector<int>{out_width});
    nn::kaiming_init(fc_w_.back(), fc_b_.back(), in_width, rng);
    in_width = out_width;
  }
}

std::vector<double> MaskIoUHead::forward(const nn::Tensor& fused) const {
  Cache cache;
  return forward(fused, cache);
}

std::vector<double> MaskIoUHead::forward(const nn::Tensor& fused,
                                         Cache& cache) const {
  const std::vector<int> expected{config_.fused_channels(),
                                  config_.fused_side(), config_.fused_side()};
  require(fused.shape() == expected,
          "head_forward: fused input " + fused.shape_string() +
              " does not match the configured " +
              nn::Tensor(expected).shape_string());
  cache.input = fused;
  cache.conv_out.clear();
  cache.fc_out.clear();
  const nn::Tensor* x = &cache.input;
  for (int i = 0; i < kNumConv; ++i) {
    const int stride = i == kNumConv - 1 ? 2 : 1;
    cache.conv_out.push_back(nn::relu(
        nn::conv2d(*x, conv_w_[i].value, conv_b_[i].value, stride)));
    x = &cache.conv_out.back();
  }
  for (int i = 0; i < kNumFc; ++i) {
    nn::Tensor y = nn::fully_connected(*x, fc_w_[i].value, fc_b_[i].value);
    cache.fc_out.push_back(i == kNumFc - 1 ? std::move(y) : nn::relu(y));
    x = &cache.fc_out.back();
  }
  return x->data();
}

void MaskIoUHead::backward(const Cache& cache,
                           std::span<const double> grad_output) {
  require(grad_output.size() == static_cast<std::size_t>(config_.num_classes),
          "head backward: gradient length mismatch");
  nn::Tensor g({config_.num_classes},
               std::vector<double>(grad_output.begin(), grad_output.end()));
  for (int i = kNumFc - 1; i >= 0; --i) {
    if (i != kNumFc - 1) g = nn::relu_backward(cache.fc_out[i], g);
    const nn::Tensor& in = i == 0 ? cache.conv_out.back() : cache.fc_out[i - 1];
    g = nn::fully_connected_backward(in, fc_w_[i].value, g, fc_w_[i].grad,
                                     fc_b_[i].grad);
  }
  g = nn::Tensor(cache.conv_out.back().shape(), std::move(g.data()));
  for (int i = kNumConv - 1; i >= 0; --i) {
    g = nn::relu_backward(cache.conv_out[i], g);
    const nn::Tensor& in = i == 0 ? cache.input : cache.conv_out[i - 1];
    const int stride = i == kNumConv - 1 ? 2 : 1;
    g = nn::conv2d_backward(in, conv_w_[i].value, stride, g, conv_w_[i].grad,
                            conv_b_[i].grad);
  }
}

std::vector<nn::Param*> MaskIoUHead::params() {
  std::vector<nn::Param*> out;
  for (int i = 0; i < kNumConv; ++i) {
    out.push_back(&conv_w_[i]);
    out.push_back(&conv_b_[i]);
  }
  for (int i = 0; i < kNumFc; ++i) {
    out.push_back(&fc_w_[i]);
    out.push_back(&fc_b_[i]);
  }
  return out;
}

std::vector<const nn::Param*> MaskIoUHead::params() const {
  auto mut = const_cast<MaskIoUHead*>(this)->params();
  return {mut.begin(), mut.end()};
}

void MaskIoUHead::zero_grad() {
  for (auto* p : params()) p->zero_grad();
}

nlohmann::json MaskIoUHead::to_json() const {
  return {{"schema", nn::kCheckpointSchema},
          {"head_config", maskscore::to_json(config_)},
          {"params", nn::params_to_json(params())}};
}

MaskIoUHead MaskIoUHead::from_json(const nlohmann::json& j) {
  if (!j.contains("schema") ||
      j.at("schema").get<std::string>() != nn::kCheckpointSchema) {
    throw std::runtime_error(std::string("checkpoint: expected schema '") +
                             nn::kCheckpointSchema + "'");
  }
  MaskIoUHead head(head_config_from_json(j.at("head_config")), 0);
  nn::params_from_json(j.at("params"), head.params());
  return head;
}

bool MaskIoUHead::operator==(const MaskIoUHead& other) const {
  const auto a = params();
  const auto b = other.params();
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i]->value == b[i]->value)) return false;
  }
  return true;
}

Targets make_target(const SoftMask& pred_mask,
                    const std::map<int, BinaryMask>& gt_masks, int gt_class,
                    int num_classes, TargetSetting setting) {
  require(gt_class >= 0 && gt_class < num_classes,
          "make_target: gt class out of range");
  if (!gt_masks.contains(gt_class)) {
    throw std::invalid_argument("make_target: no ground-truth mask for class " +
                                std::to_string(gt_class));
  }
  const BinaryMask pred = binarize(pred_mask, kDefaultBinarizeThreshold);
  Targets t;
  t.values.assign(num_classes, 0.0);
  t.supervision.assign(num_classes, 0);
  auto iou_for = [&](int c) { return mask_iou(pred, gt_masks.at(c)); };

  switch (setting) {
    case TargetSetting::kTargetInstance:
      t.values[gt_class] = iou_for(gt_class);
      t.supervision[gt_class] = 1;
      break;
    case TargetSetting::kAllClasses:
      std::fill(t.supervision.begin(), t.supervision.end(), 1);
      for (const auto& [c, m] : gt_masks) {
        if (c >= 0 && c < num_classes) t.values[c] = iou_for(c);
      }
      break;
    case TargetSetting::kPositiveClasses:
      for (const auto& [c, m] : gt_masks) {
        if (c < 0 || c >= num_classes) continue;
        t.values[c] = iou_for(c);
        t.supervision[c] = 1;
      }
      break;
    default:
      throw std::invalid_argument("make_target: unknown target setting");
  }
  return t;
}

double TrainingSample::target_iou() const {
  return mask_iou(binarize(pred_mask), gt_masks.at(class_label));
}

void retarget(std::vector<TrainingSample>& samples, int num_classes,
              TargetSetting setting) {
  for (auto& s : samples) {
    Targets t =
        make_target(s.pred_mask, s.gt_masks, s.class_label, num_classes, setting);
    s.targets = std::move(t.values);
    s.supervision = std::move(t.supervision);
  }
}

std::vector<TrainingSample> select_training_samples(
    std::span<const TrainingSample> samples, double tau) {
  require(tau >= 0.0 && tau <= 1.0, "select_training_samples: tau in [0,1]");
  std::vector<TrainingSample> out;
  for (const auto& s : samples) {
    const double iou = s.target_iou();
    // tau = 1 can only ever keep perfect masks.
    const bool keep = tau == 0.0 || iou > tau || (tau == 1.0 && iou == 1.0);
    if (keep) out.push_back(s);
  }
  return out;
}

void TrainConfig::validate() const {
  require(tau >= 0.0 && tau <= 1.0, "train: tau must lie in [0,1]");
  require(epochs >= 1, "train: epochs must be positive");
  require(lr >= 0.0, "train: lr must be non-negative");
  require(batch_size >= 1, "train: batch_size must be positive");
  require(momentum >= 0.0 && momentum < 1.0, "train: momentum in [0,1)");
  require(lr_decay_factor > 0.0, "train: lr_decay_factor must be positive");
}

std::vector<int> TrainConfig::decay_epochs() const {
  if (!lr_decay_epochs.empty()) return lr_decay_epochs;
  return {static_cast<int>(std::lround(0.78 * epochs)),
          static_cast<int>(std::lround(0.94 * epochs))};
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"target_setting", static_cast<int>(c.target_setting)},
          {"tau", c.tau},
          {"epochs", c.epochs},
          {"lr", c.lr},
          {"lr_decay_epochs", c.decay_epochs()},
          {"lr_decay_factor", c.lr_decay_factor},
          {"momentum", c.momentum},
          {"batch_size", c.batch_size},
          {"seed", c.seed}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  reject_unknown_keys(j, to_json(c), "train");
  if (j.contains("target_setting")) {
    const int s = j.at("target_setting").get<int>();
    require(s >= 1 && s <= 3, "train: target_setting must be 1, 2 or 3");
    c.target_setting = static_cast<TargetSetting>(s);
  }
  if (j.contains("tau")) c.tau = j.at("tau").get<double>();
  if (j.contains("epochs")) c.epochs = j.at("epochs").get<int>();
  if (j.contains("lr")) c.lr = j.at("lr").get<double>();
  if (j.contains("lr_decay_epochs"))
    c.lr_decay_epochs = j.at("lr_decay_epochs").get<std::vector<int>>();
  if (j.contains("lr_decay_factor"))
    c.lr_decay_factor = j.at("lr_decay_factor").get<double>();
  if (j.contains("momentum")) c.momentum = j.at("momentum").get<double>();
  if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

nn::Tensor fuse_sample(const TrainingSample& s, const HeadConfig& config) {
  const auto masks = class_masks(s.pred_mask, s.class_label, config.num_classes);
  const nn::Tensor& feature =
      config.fusion_variant == FusionVariant::kD ? s.roi_feature_hr
                                                 : s.roi_feature;
  return fuse_inputs(masks, feature, s.class_label, config.fusion_variant);
}

TrainResult train(std::span<const TrainingSample> dataset,
                  const HeadConfig& head_config,
                  const TrainConfig& train_config) {
  train_config.validate();
  const auto selected = select_training_samples(dataset, train_config.tau);
  if (selected.empty()) {
    throw std::runtime_error("train: no training samples left after tau=" +
                             std::to_string(train_config.tau) + " selection");
  }
  std::vector<nn::Tensor> fused;
  fused.reserve(selected.size());
  for (const auto& s : selected) {
    require(s.targets.size() == static_cast<std::size_t>(head_config.num_classes),
            "train: sample targets do not match num_classes");
    fused.push_back(fuse_sample(s, head_config));
  }

  TrainResult result{MaskIoUHead(head_config, train_config.seed), {},
                     selected.size()};
  MaskIoUHead& head = result.head;
  const auto params = head.params();
  std::mt19937_64 rng(train_config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(selected.size());
  std::iota(order.begin(), order.end(), 0);
  const auto decay = train_config.decay_epochs();

  double lr = train_config.lr;
  MaskIoUHead::Cache cache;
  for (int epoch = 0; epoch < train_config.epochs; ++epoch) {
    if (std::find(decay.begin(), decay.end(), epoch) != decay.end()) {
      lr *= train_config.lr_decay_factor;
    }
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += train_config.batch_size) {
      const std::size_t end =
          std::min(order.size(), start + train_config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      head.zero_grad();
      for (std::size_t b = start; b < end; ++b) {
        const auto& s = selected[order[b]];
        const auto pred = head.forward(fused[order[b]], cache);
        auto loss = nn::l2_loss(pred, s.targets, s.supervision);
        epoch_loss += loss.loss;
        for (auto& g : loss.grad) g *= scale;
        head.backward(cache, loss.grad);
      }
      nn::sgd_momentum_step(params, lr, train_config.momentum);
    }
    result.loss_curve.push_back(epoch_loss /
                                static_cast<double>(order.size()));
  }
  return result;
}

double evaluate_loss(const MaskIoUHead& head,
                     std::span<const TrainingSample> samples) {
  if (samples.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : samples) {
    const auto pred = head.forward(fuse_sample(s, head.config()));
    total += nn::l2_loss(pred, s.targets, s.supervision).loss;
  }
  return total / static_cast<double>(samples.size());
}

double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

double predict_siou(const MaskIoUHead& head,
                    std::span<const SoftMask> pred_masks,
                    const nn::Tensor& roi_feature, int predicted_class) {
  const auto& cfg = head.config();
  if (predicted_class < 0 || predicted_class >= cfg.num_classes) {
    throw std::out_of_range("predict_siou: class " +
                            std::to_string(predicted_class) +
                            " outside [0," + std::to_string(cfg.num_classes) +
                            ")");
  }
  const auto out = head.forward(fuse_inputs(pred_masks, roi_feature,
                                            predicted_class,
                                            cfg.fusion_variant));
  return clamp_unit(out[predicted_class]);
}

}  // namespace maskscore
