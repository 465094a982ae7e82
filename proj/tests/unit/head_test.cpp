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

#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace maskscore {
namespace {

SoftMask random_soft(int side, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(side) * side);
  for (auto& x : v) x = u(rng);
  return SoftMask(side, side, v);
}

HeadConfig small_config(FusionVariant v, int channels = 4, int classes = 3) {
  HeadConfig c;
  c.fusion_variant = v;
  c.num_classes = classes;
  c.feature_channels = channels;
  c.conv_channels = 3;
  c.fc_width = 5;
  c.mask_side = 8;
  c.feature_side = 4;
  return c;
}

// A square object in the left half of a 28x28 frame; the prediction covers
// `cover` columns of it.
TrainingSample make_sample(int cls, int cover, std::mt19937_64& rng,
                           int num_classes = 4) {
  TrainingSample s;
  s.roi_feature = oracle::random_tensor({4, 14, 14}, rng, 0.0, 1.0);
  s.roi_feature_hr = oracle::random_tensor({4, 28, 28}, rng, 0.0, 1.0);
  BinaryMask gt(28, 28);
  SoftMask pred(28, 28);
  for (int y = 4; y < 20; ++y)
    for (int x = 4; x < 20; ++x) {
      gt.set(x, y, true);
      if (x < 4 + cover) pred.set(x, y, 0.9);
    }
  s.pred_mask = pred;
  s.class_label = cls;
  s.gt_masks[cls] = gt;
  const Targets t = make_target(pred, s.gt_masks, cls, num_classes,
                                TargetSetting::kTargetInstance);
  s.targets = t.values;
  s.supervision = t.supervision;
  return s;
}

TEST(FuseInputsTest, Shapes) {
  std::mt19937_64 rng(1);
  const auto masks = class_masks(random_soft(28, rng), 1, 4);
  const nn::Tensor f14 = oracle::random_tensor({8, 14, 14}, rng);
  const nn::Tensor f28 = oracle::random_tensor({8, 28, 28}, rng);
  EXPECT_EQ(fuse_inputs(masks, f14, 1, FusionVariant::kA).shape(),
            (std::vector<int>{9, 14, 14}));
  EXPECT_EQ(fuse_inputs(masks, f14, 1, FusionVariant::kB).shape(),
            (std::vector<int>{8, 14, 14}));
  EXPECT_EQ(fuse_inputs(masks, f14, 1, FusionVariant::kC).shape(),
            (std::vector<int>{12, 14, 14}));
  EXPECT_EQ(fuse_inputs(masks, f28, 1, FusionVariant::kD).shape(),
            (std::vector<int>{9, 28, 28}));
  EXPECT_THROW(fuse_inputs(masks, f28, 1, FusionVariant::kA), std::invalid_argument);
  EXPECT_THROW(fuse_inputs(masks, f14, 1, FusionVariant::kD), std::invalid_argument);
}

TEST(FuseInputsTest, VariantAPoolsTheTargetMask) {
  std::mt19937_64 rng(2);
  const SoftMask m = random_soft(28, rng);
  const auto masks = class_masks(m, 0, 2);
  const nn::Tensor f = oracle::random_tensor({4, 14, 14}, rng);
  const nn::Tensor out = fuse_inputs(masks, f, 0, FusionVariant::kA);
  for (int y = 0; y < 14; ++y)
    for (int x = 0; x < 14; ++x) {
      EXPECT_EQ(out.at(0, y, x), f.at(0, y, x));
      const double expect = std::max(std::max(m.at(2 * x, 2 * y), m.at(2 * x + 1, 2 * y)),
                                     std::max(m.at(2 * x, 2 * y + 1), m.at(2 * x + 1, 2 * y + 1)));
      EXPECT_EQ(out.at(4, y, x), expect);
    }
}

TEST(FuseInputsTest, VariantBAllOnesLeavesFeature) {
  std::mt19937_64 rng(3);
  const auto masks = class_masks(SoftMask(28, 28, 1.0), 2, 3);
  const nn::Tensor f = oracle::random_tensor({4, 14, 14}, rng);
  EXPECT_EQ(fuse_inputs(masks, f, 2, FusionVariant::kB), f);
}

TEST(MaskIoUHeadTest, OutputLengthIsNumClasses) {
  std::mt19937_64 rng(4);
  for (auto v : {FusionVariant::kA, FusionVariant::kB, FusionVariant::kC, FusionVariant::kD}) {
    for (int classes : {1, 3, 5}) {
      const HeadConfig cfg = small_config(v, 2, classes);
      const MaskIoUHead head(cfg, 9);
      const auto masks = class_masks(random_soft(8, rng), 0, classes);
      const nn::Tensor f = oracle::random_tensor({2, cfg.roi_side(), cfg.roi_side()}, rng);
      EXPECT_EQ(head.forward(fuse_inputs(masks, f, 0, v)).size(),
                static_cast<std::size_t>(classes));
    }
  }
}

TEST(MaskIoUHeadTest, DefaultConfigShapes) {
  std::mt19937_64 rng(5);
  const MaskIoUHead head(HeadConfig{}, 1);
  const auto masks = class_masks(random_soft(28, rng), 3, 4);
  const nn::Tensor f = oracle::random_tensor({4, 14, 14}, rng);
  EXPECT_EQ(head.forward(fuse_inputs(masks, f, 3, FusionVariant::kA)).size(), 4u);
  EXPECT_THROW(head.forward(nn::Tensor({3, 14, 14})), std::invalid_argument);
}

TEST(MaskIoUHeadTest, ZeroWeightsGiveBias) {
  std::mt19937_64 rng(6);
  const HeadConfig cfg = small_config(FusionVariant::kA);
  MaskIoUHead head(cfg, 1);
  for (auto* p : head.params()) p->value.fill(0.0);
  auto ps = head.params();
  ps.back()->value.data() = {0.1, 0.2, 0.3};
  const auto masks = class_masks(random_soft(8, rng), 1, 3);
  const auto out = head.forward(
      fuse_inputs(masks, oracle::random_tensor({4, 4, 4}, rng), 1, FusionVariant::kA));
  EXPECT_EQ(out, (std::vector<double>{0.1, 0.2, 0.3}));
}

TEST(MaskIoUHeadTest, DeterministicForward) {
  std::mt19937_64 rng(7);
  const HeadConfig cfg = small_config(FusionVariant::kC);
  const MaskIoUHead a(cfg, 42), b(cfg, 42), c(cfg, 43);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == c);
  const auto masks = class_masks(random_soft(8, rng), 2, 3);
  const auto in = fuse_inputs(masks, oracle::random_tensor({4, 4, 4}, rng), 2,
                              FusionVariant::kC);
  EXPECT_EQ(a.forward(in), b.forward(in));
}

TEST(MaskIoUHeadTest, CheckpointRoundTrip) {
  const MaskIoUHead head(small_config(FusionVariant::kD), 3);
  const MaskIoUHead back = MaskIoUHead::from_json(head.to_json());
  EXPECT_TRUE(back == head);
  EXPECT_EQ(back.config().fusion_variant, FusionVariant::kD);
}

// fuse -> head -> masked l2, every parameter checked by central differences.
double full_grad_check(FusionVariant v, bool corrupt) {
  std::mt19937_64 rng(100 + static_cast<int>(v));
  const HeadConfig cfg = small_config(v);
  MaskIoUHead head(cfg, 5);
  const auto masks = class_masks(random_soft(8, rng), 1, 3);
  const nn::Tensor fused = fuse_inputs(
      masks, oracle::random_tensor({4, cfg.roi_side(), cfg.roi_side()}, rng), 1, v);
  const std::vector<double> target{0.2, 0.7, 0.4};
  const std::vector<std::uint8_t> sup{1, 1, 0};
  auto loss = [&](bool with_grad) {
    MaskIoUHead::Cache cache;
    const auto out = head.forward(fused, cache);
    const auto l = nn::l2_loss(out, target, sup);
    if (with_grad) {
      head.zero_grad();
      head.backward(cache, l.grad);
      if (corrupt) head.params()[2]->grad[0] *= 1.5;
    }
    return l.loss;
  };
  return nn::grad_check(head.params(), loss).max_relative_error;
}

TEST(MaskIoUHeadTest, FullGradientCheckAllVariants) {
  for (auto v : {FusionVariant::kA, FusionVariant::kB, FusionVariant::kC, FusionVariant::kD}) {
    EXPECT_LT(full_grad_check(v, false), 1e-4) << to_string(v);
  }
}

TEST(MaskIoUHeadTest, CorruptedBackwardIsCaught) {
  EXPECT_GT(full_grad_check(FusionVariant::kA, true), 1e-2);
}

TEST(MakeTargetTest, SettingOneExactPrediction) {
  BinaryMask gt(28, 28);
  for (int x = 3; x < 10; ++x) gt.set(x, 5, true);
  const std::map<int, BinaryMask> gts{{2, gt}};
  const Targets t = make_target(to_soft(gt), gts, 2, 4, TargetSetting::kTargetInstance);
  EXPECT_EQ(t.values, (std::vector<double>{0, 0, 1.0, 0}));
  EXPECT_EQ(t.supervision, (std::vector<std::uint8_t>{0, 0, 1, 0}));
}

TEST(MakeTargetTest, SettingTwoSupervisesAbsentClassesAtZero) {
  BinaryMask gt(28, 28);
  gt.set(1, 1, true);
  gt.set(2, 1, true);
  SoftMask pred(28, 28);
  pred.set(1, 1, 0.8);
  const Targets t = make_target(pred, {{0, gt}}, 0, 3, TargetSetting::kAllClasses);
  EXPECT_EQ(t.supervision, (std::vector<std::uint8_t>{1, 1, 1}));
  EXPECT_EQ(t.values, (std::vector<double>{0.5, 0.0, 0.0}));
}

TEST(MakeTargetTest, SettingThreeOnlyPresentClasses) {
  BinaryMask a(28, 28), b(28, 28);
  for (int x = 0; x < 4; ++x) a.set(x, 0, true);
  for (int x = 2; x < 6; ++x) b.set(x, 0, true);
  const Targets t = make_target(to_soft(a), {{0, a}, {2, b}}, 0, 4,
                                TargetSetting::kPositiveClasses);
  EXPECT_EQ(t.supervision, (std::vector<std::uint8_t>{1, 0, 1, 0}));
  EXPECT_DOUBLE_EQ(t.values[0], 1.0);
  EXPECT_DOUBLE_EQ(t.values[2], 2.0 / 6.0);
}

TEST(MakeTargetTest, HalfCoverageGivesHalf) {
  std::mt19937_64 rng(8);
  const TrainingSample s = make_sample(1, 8, rng);
  EXPECT_DOUBLE_EQ(s.targets[1], 0.5);
  EXPECT_DOUBLE_EQ(s.target_iou(), 0.5);
}

TEST(MakeTargetTest, MatchesMaskIouOracle) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const BinaryMask gt = oracle::random_mask(28, 28, 0.5, rng);
    const SoftMask pred = random_soft(28, rng);
    const Targets t = make_target(pred, {{3, gt}}, 3, 4, TargetSetting::kTargetInstance);
    EXPECT_DOUBLE_EQ(t.values[3], oracle::pixel_iou(binarize(pred), gt));
  }
}

TEST(MakeTargetTest, MissingGtClassThrows) {
  EXPECT_THROW(make_target(SoftMask(28, 28), {{1, BinaryMask(28, 28)}}, 0, 4,
                           TargetSetting::kTargetInstance),
               std::invalid_argument);
}

TEST(SelectTrainingSamplesTest, TauRule) {
  std::mt19937_64 rng(10);
  std::vector<TrainingSample> samples;
  for (int cover : {0, 16}) samples.push_back(make_sample(0, cover, rng));
  // IoUs 0.2, 0.4, 0.6, 0.8 via cover = 16 * iou columns.
  std::vector<TrainingSample> mixed;
  for (double iou : {0.2, 0.4, 0.6, 0.8}) {
    mixed.push_back(make_sample(0, static_cast<int>(std::lround(16 * iou)), rng));
  }
  const auto kept = select_training_samples(mixed, 0.5);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_DOUBLE_EQ(kept[0].target_iou(), 10.0 / 16.0);
  EXPECT_DOUBLE_EQ(kept[1].target_iou(), 13.0 / 16.0);
  EXPECT_EQ(select_training_samples(samples, 0.0).size(), 2u);
  const auto perfect = select_training_samples(samples, 1.0);
  ASSERT_EQ(perfect.size(), 1u);
  EXPECT_DOUBLE_EQ(perfect[0].target_iou(), 1.0);
}

TrainConfig quick_train(int epochs, double lr) {
  TrainConfig t;
  t.epochs = epochs;
  t.lr = lr;
  t.batch_size = 4;
  t.seed = 5;
  return t;
}

TEST(TrainTest, ZeroLearningRateKeepsParameters) {
  std::mt19937_64 rng(11);
  std::vector<TrainingSample> data;
  for (int i = 0; i < 6; ++i) data.push_back(make_sample(i % 4, 4 + i, rng));
  const TrainResult r = train(data, HeadConfig{}, quick_train(3, 0.0));
  EXPECT_TRUE(r.head == MaskIoUHead(HeadConfig{}, 5));
  ASSERT_EQ(r.loss_curve.size(), 3u);
  // Same parameters; only the shuffled summation order differs.
  EXPECT_NEAR(r.loss_curve[0], r.loss_curve[1], 1e-12);
  EXPECT_NEAR(r.loss_curve[1], r.loss_curve[2], 1e-12);
}

TEST(TrainTest, MemorizesSingleSample) {
  std::mt19937_64 rng(12);
  const std::vector<TrainingSample> data{make_sample(2, 11, rng)};
  TrainConfig t = quick_train(300, 0.001);
  t.batch_size = 1;
  const TrainResult r = train(data, HeadConfig{}, t);
  EXPECT_LT(r.loss_curve.back(), 1e-3);
  EXPECT_LT(r.loss_curve.back(), r.loss_curve.front());
  const auto masks = class_masks(data[0].pred_mask, 2, 4);
  EXPECT_NEAR(predict_siou(r.head, masks, data[0].roi_feature, 2), data[0].targets[2], 0.05);
}

TEST(TrainTest, UnsupervisedTargetsGetNoGradient) {
  std::mt19937_64 rng(13);
  std::vector<TrainingSample> data;
  for (int i = 0; i < 5; ++i) data.push_back(make_sample(i % 4, 5 + i, rng));
  auto perturbed = data;
  for (auto& s : perturbed)
    for (std::size_t c = 0; c < s.targets.size(); ++c)
      if (!s.supervision[c]) s.targets[c] = 0.77;
  const auto t = quick_train(2, 0.01);
  EXPECT_TRUE(train(data, HeadConfig{}, t).head == train(perturbed, HeadConfig{}, t).head);
}

TEST(TrainTest, DeterministicAndEmptySelectionThrows) {
  std::mt19937_64 rng(14);
  std::vector<TrainingSample> data;
  for (int i = 0; i < 5; ++i) data.push_back(make_sample(i % 4, 3 + i, rng));
  const auto t = quick_train(2, 0.01);
  const TrainResult a = train(data, HeadConfig{}, t), b = train(data, HeadConfig{}, t);
  EXPECT_TRUE(a.head == b.head);
  EXPECT_EQ(a.loss_curve, b.loss_curve);
  auto strict = t;
  strict.tau = 0.95;
  EXPECT_THROW(train(data, HeadConfig{}, strict), std::runtime_error);
}

TEST(TrainConfigTest, DecayEpochsScaleWithSchedule) {
  TrainConfig t;
  t.epochs = 18;
  EXPECT_EQ(t.decay_epochs(), (std::vector<int>{14, 17}));
  EXPECT_THROW(train_config_from_json({{"tau", 1.5}}), std::invalid_argument);
  EXPECT_THROW(train_config_from_json({{"bogus", 1}}), std::invalid_argument);
}

TEST(PredictSiouTest, ClampsRawOutput) {
  std::mt19937_64 rng(15);
  MaskIoUHead head(HeadConfig{}, 1);
  for (auto* p : head.params()) p->value.fill(0.0);
  head.params().back()->value.data() = {1.3, -0.2, 0.4, 0.0};
  const auto masks = class_masks(random_soft(28, rng), 0, 4);
  const nn::Tensor f = oracle::random_tensor({4, 14, 14}, rng);
  EXPECT_EQ(predict_siou(head, masks, f, 0), 1.0);
  EXPECT_EQ(predict_siou(head, masks, f, 1), 0.0);
  EXPECT_DOUBLE_EQ(predict_siou(head, masks, f, 2), 0.4);
  EXPECT_THROW(predict_siou(head, masks, f, 4), std::out_of_range);
}

}  // namespace
}  // namespace maskscore
