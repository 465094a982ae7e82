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

#include <cmath>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace maskscore {
namespace {

std::vector<double> grid() { return EvalConfig().recall_grid(); }

double ap_of(const std::vector<bool>& flags, int num_gt) {
  const auto g = grid();
  std::unique_ptr<bool[]> buf(new bool[flags.size() + 1]);
  for (std::size_t i = 0; i < flags.size(); ++i) buf[i] = flags[i];
  return average_precision(std::span<const bool>(buf.get(), flags.size()), num_gt, g);
}

GroundTruth gt_box(int image, int cat, BBox b) {
  return {image, cat, rasterize_box(b, 20, 20), b};
}

Prediction pred_box(int image, int cat, double score, BBox b) {
  return {image, cat, score, rasterize_box(b, 20, 20), b};
}

TEST(MatchTest, PerfectPredictionsAllTp) {
  const std::vector<GroundTruth> gts{gt_box(1, 0, {0, 0, 5, 5}), gt_box(1, 0, {8, 8, 4, 4})};
  const std::vector<Prediction> preds{pred_box(1, 0, 0.9, {8, 8, 4, 4}),
                                      pred_box(1, 0, 0.8, {0, 0, 5, 5})};
  for (double t : {0.5, 0.75, 0.95}) {
    EXPECT_EQ(match_and_score(preds, gts, t, IouKind::kMask), (std::vector<bool>{true, true}));
  }
}

TEST(MatchTest, DuplicateIsOneTpOneFp) {
  const std::vector<GroundTruth> gts{gt_box(1, 0, {0, 0, 5, 5})};
  const std::vector<Prediction> preds{pred_box(1, 0, 0.9, {0, 0, 5, 5}),
                                      pred_box(1, 0, 0.8, {0, 0, 5, 5})};
  EXPECT_EQ(match_and_score(preds, gts, 0.5, IouKind::kBox), (std::vector<bool>{true, false}));
}

// Every injective partial assignment, choosing the one whose matched IoUs
// in score order are lexicographically largest.
std::vector<bool> exhaustive_match(const std::vector<std::vector<double>>& ious, double thr) {
  const std::size_t nd = ious.size(), ng = ious[0].size();
  std::vector<int> assign(nd, -1), best_assign;
  std::vector<double> best_key;
  std::vector<bool> used(ng, false);
  std::function<void(std::size_t)> rec = [&](std::size_t d) {
    if (d == nd) {
      std::vector<double> key;
      for (std::size_t i = 0; i < nd; ++i) key.push_back(assign[i] < 0 ? -1.0 : ious[i][assign[i]]);
      if (best_assign.empty() || key > best_key) {
        best_key = key;
        best_assign = assign;
      }
      return;
    }
    assign[d] = -1;
    rec(d + 1);
    for (std::size_t g = 0; g < ng; ++g) {
      if (used[g] || ious[d][g] < thr) continue;
      used[g] = true;
      assign[d] = static_cast<int>(g);
      rec(d + 1);
      used[g] = false;
      assign[d] = -1;
    }
  };
  rec(0);
  std::vector<bool> flags;
  for (int a : best_assign) flags.push_back(a >= 0);
  return flags;
}

TEST(MatchTest, ThreePredsTwoGtsMatchExhaustiveOracle) {
  const std::vector<std::vector<double>> ious{{0.6, 0.7}, {0.8, 0.55}, {0.3, 0.9}};
  EXPECT_EQ(match_ious(ious, 0.5), (std::vector<bool>{true, true, false}));
  EXPECT_EQ(match_ious(ious, 0.5), exhaustive_match(ious, 0.5));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::vector<double>> m(3, std::vector<double>(2));
    for (auto& row : m)
      for (auto& v : row) v = u(rng);
    for (double t : {0.3, 0.5, 0.75}) {
      const auto flags = match_ious(m, t);
      EXPECT_EQ(flags, exhaustive_match(m, t));
      EXPECT_LE(std::count(flags.begin(), flags.end(), true), 2);
    }
  }
}

TEST(MatchTest, LaterGtWinsExactTie) {
  const std::vector<std::vector<double>> ious{{0.6, 0.6}, {0.6, 0.0}};
  EXPECT_EQ(match_ious(ious, 0.5), (std::vector<bool>{true, true}));
}

TEST(AveragePrecisionTest, Examples) {
  EXPECT_DOUBLE_EQ(ap_of({true, true}, 2), 1.0);
  EXPECT_DOUBLE_EQ(ap_of({}, 3), 0.0);
  // Recall 0.5 at precision 1, recall 1 at precision 2/3: 51 grid points at
  // 1 and 50 at 2/3.
  EXPECT_NEAR(ap_of({true, false, true}, 2), (51.0 + 50.0 * 2.0 / 3.0) / 101.0, 1e-12);
  EXPECT_NEAR(ap_of({true, false, true}, 2), oracle::ranked_ap({true, false, true}, 2), 1e-12);
}

TEST(AveragePrecisionTest, MatchesRankedOracleAndMetamorphicRules) {
  std::mt19937_64 rng(2);
  std::bernoulli_distribution coin(0.6);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<bool> flags(1 + rng() % 25);
    for (std::size_t i = 0; i < flags.size(); ++i) flags[i] = coin(rng);
    const int tp = static_cast<int>(std::count(flags.begin(), flags.end(), true));
    const int num_gt = tp + static_cast<int>(rng() % 4);
    if (num_gt == 0) continue;
    const double ap = ap_of(flags, num_gt);
    EXPECT_NEAR(ap, oracle::ranked_ap(flags, num_gt), 1e-12);
    EXPECT_GE(ap, 0.0);
    EXPECT_LE(ap, 1.0);
    for (std::size_t i = 0; i < flags.size(); ++i) {
      auto other = flags;
      if (flags[i]) {
        other[i] = false;
        EXPECT_LE(ap_of(other, num_gt), ap + 1e-12);
      } else {
        other.erase(other.begin() + static_cast<long>(i));
        EXPECT_GE(ap_of(other, num_gt), ap - 1e-12);
      }
    }
  }
}

TEST(EvaluateTest, PerfectPredictionsGiveOne) {
  const auto corpus = oracle::make_toy_corpus(3, 5, 4);
  std::vector<Prediction> preds;
  for (const auto& g : corpus.gts) preds.push_back({g.image_id, g.category_id, 1.0, g.mask, g.box});
  for (auto kind : {IouKind::kMask, IouKind::kBox}) {
    const ApSummary s = evaluate(preds, corpus.gts, EvalConfig(), kind);
    EXPECT_DOUBLE_EQ(s.ap, 1.0);
    EXPECT_DOUBLE_EQ(s.ap50, 1.0);
    EXPECT_DOUBLE_EQ(s.ap75, 1.0);
  }
}

TEST(EvaluateTest, ToyCorpusMatchesBruteForce) {
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    const auto c = oracle::make_toy_corpus(seed, 5, 6);
    for (auto kind : {IouKind::kMask, IouKind::kBox}) {
      const ApSummary s = evaluate(c.preds, c.gts, EvalConfig(), kind);
      const auto ref = oracle::brute_force_evaluate(c.preds, c.gts, kind);
      EXPECT_NEAR(s.ap, ref.ap, 1e-12);
      EXPECT_NEAR(s.ap50, ref.ap50, 1e-12);
      EXPECT_NEAR(s.ap75, ref.ap75, 1e-12);
    }
  }
}

TEST(EvaluateTest, InvariantUnderMonotoneRescaling) {
  const auto c = oracle::make_toy_corpus(30, 8, 6);
  auto rescaled = c.preds;
  for (auto& p : rescaled) p.score = std::exp(3.0 * p.score) - 7.0;
  for (auto kind : {IouKind::kMask, IouKind::kBox}) {
    const ApSummary a = evaluate(c.preds, c.gts, EvalConfig(), kind);
    const ApSummary b = evaluate(rescaled, c.gts, EvalConfig(), kind);
    EXPECT_EQ(a.ap, b.ap);
    EXPECT_EQ(a.ap50, b.ap50);
    EXPECT_EQ(a.ap75, b.ap75);
  }
}

TEST(EvaluateTest, CategoryRules) {
  const std::vector<GroundTruth> gts{gt_box(1, 0, {0, 0, 5, 5}), gt_box(1, 1, {8, 8, 4, 4})};
  // Class 1 never predicted, class 2 has no gt.
  const std::vector<Prediction> preds{pred_box(1, 0, 0.9, {0, 0, 5, 5}),
                                      pred_box(1, 2, 0.9, {8, 8, 4, 4})};
  const ApSummary s = evaluate(preds, gts, EvalConfig(), IouKind::kMask);
  EXPECT_EQ(s.per_category.size(), 2u);
  EXPECT_DOUBLE_EQ(s.ap, 0.5);
  EXPECT_THROW(evaluate(preds, {}, EvalConfig(), IouKind::kMask), std::invalid_argument);
}

TEST(EvalConfigTest, Validation) {
  EvalConfig c;
  EXPECT_EQ(c.iou_thresholds.size(), 10u);
  EXPECT_NEAR(c.iou_thresholds.back(), 0.95, 1e-12);
  EXPECT_EQ(c.recall_grid().size(), 101u);
  EXPECT_THROW(eval_config_from_json({{"iou_thresholds", {0.5, 0.5}}}), std::invalid_argument);
  EXPECT_THROW(eval_config_from_json({{"iou_thresholds", {0.5, 1.2}}}), std::invalid_argument);
  EXPECT_THROW(eval_config_from_json({{"bogus", 1}}), std::invalid_argument);
}

TEST(PearsonTest, Examples) {
  const std::vector<double> x{1, 2, 3}, neg{-1, -2, -3}, y{1, 2, 4};
  EXPECT_DOUBLE_EQ(pearson_correlation(x, x), 1.0);
  EXPECT_DOUBLE_EQ(pearson_correlation(x, neg), -1.0);
  EXPECT_NEAR(pearson_correlation(x, y), 3.0 / std::sqrt(28.0 / 3.0), 1e-15);
  const std::vector<double> flat{2, 2, 2}, one{1};
  EXPECT_THROW(pearson_correlation(x, flat), std::invalid_argument);
  EXPECT_THROW(pearson_correlation(one, one), std::invalid_argument);
}

TEST(PearsonTest, AffineInvariance) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> x(50), y(50), z(50);
  for (int i = 0; i < 50; ++i) {
    x[i] = n(rng);
    y[i] = x[i] + n(rng);
    z[i] = 3.5 * y[i] - 2.0;
  }
  EXPECT_NEAR(pearson_correlation(x, y), pearson_correlation(x, z), 1e-12);
}

TEST(HistogramTest, SingleBinAndCalibratedScores) {
  const std::vector<double> ious{0.61, 0.62, 0.64}, scores{0.6, 0.8, 0.9};
  const auto bins = score_quality_histogram(ious, scores, 0.05);
  ASSERT_EQ(bins.size(), 10u);
  EXPECT_EQ(bins[2].count, 3);
  EXPECT_NEAR(*bins[2].mean_score, (0.6 + 0.8 + 0.9) / 3.0, 1e-12);
  EXPECT_FALSE(bins[0].mean_score.has_value());
  std::vector<double> q, s;
  for (int i = 0; i < 500; ++i) {
    q.push_back(0.5005 + 0.499 * i / 499.0);
    s.push_back(q.back());
  }
  for (const auto& b : score_quality_histogram(q, s, 0.05)) {
    EXPECT_NEAR(*b.mean_score, 0.5 * (b.lo + b.hi), 0.01);
  }
}

TEST(HistogramTest, MatchesGroupByOracle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> ious(2000), scores(2000);
  for (int i = 0; i < 2000; ++i) {
    ious[i] = std::round(u(rng) * 100.0) / 100.0;  // hits bin edges
    scores[i] = u(rng);
  }
  const auto bins = score_quality_histogram(ious, scores, 0.05);
  std::map<int, std::vector<double>> groups;
  for (int i = 0; i < 2000; ++i) {
    if (ious[i] <= 0.5 || scores[i] <= 0.5) continue;
    // Bin k covers (0.5 + 0.05k, 0.5 + 0.05(k+1)] in hundredths.
    const int hundredths = static_cast<int>(std::lround(ious[i] * 100.0));
    groups[(hundredths - 51) / 5].push_back(scores[i]);
  }
  for (int k = 0; k < 10; ++k) {
    const auto& g = groups[k];
    ASSERT_EQ(bins[k].count, static_cast<int>(g.size())) << k;
    if (g.empty()) continue;
    double sum = 0.0;
    for (double v : g) sum += v;
    EXPECT_NEAR(*bins[k].mean_score, sum / g.size(), 1e-12);
    EXPECT_GE(*bins[k].mean_score, *std::min_element(g.begin(), g.end()));
    EXPECT_LE(*bins[k].mean_score, *std::max_element(g.begin(), g.end()));
  }
}

TEST(UpperBoundTest, SubstitutionRule) {
  GtInstance g;
  g.category_id = 0;
  g.mask = rasterize_box({0, 0, 10, 10}, 20, 20);
  g.box = {0, 0, 10, 10};
  Detection hit;
  hit.category_id = 0;
  hit.s_cls = 0.8;
  hit.s_iou = 0.3;
  // 90 of the 100 gt pixels.
  hit.soft_mask = to_soft(rasterize_box({0, 0, 10, 9}, 20, 20));
  Detection miss = hit;
  miss.soft_mask = to_soft(rasterize_box({12, 12, 5, 5}, 20, 20));
  Detection absent = miss;
  absent.s_iou.reset();
  const std::vector<GtInstance> gts{g};
  const auto out = upper_bound_substitute({hit, miss, absent}, gts);
  EXPECT_DOUBLE_EQ(*out[0].s_iou, 0.9);
  EXPECT_DOUBLE_EQ(*out[0].s_mask, 0.72);
  EXPECT_DOUBLE_EQ(*out[1].s_iou, 0.3);
  EXPECT_DOUBLE_EQ(*out[1].s_mask, 0.8 * 0.3);
  EXPECT_DOUBLE_EQ(*out[2].s_iou, 1.0);
  EXPECT_DOUBLE_EQ(actual_mask_iou(hit, gts), 0.9);
  Detection other_class = hit;
  other_class.category_id = 1;
  EXPECT_DOUBLE_EQ(actual_mask_iou(other_class, gts), 0.0);
}

TEST(CocoIoTest, RoundTrip) {
  const auto c = oracle::make_toy_corpus(40, 4, 5);
  std::map<int, std::pair<int, int>> sizes;
  for (const auto& g : c.gts) sizes[g.image_id] = {24, 24};
  const auto gts = coco_gt_from_json(to_coco_gt(c.gts, sizes));
  ASSERT_EQ(gts.size(), c.gts.size());
  for (std::size_t i = 0; i < gts.size(); ++i) {
    EXPECT_EQ(gts[i].mask, c.gts[i].mask);
    EXPECT_EQ(gts[i].box, c.gts[i].box);
  }
  nlohmann::json results = nlohmann::json::array();
  for (const auto& p : c.preds)
    results.push_back({{"image_id", p.image_id}, {"category_id", p.category_id},
                       {"segmentation", rle_to_json(rle_encode(p.mask))},
                       {"score", p.score}});
  const auto preds = coco_results_from_json(results);
  EXPECT_EQ(evaluate(preds, gts, EvalConfig(), IouKind::kMask).ap,
            evaluate(c.preds, c.gts, EvalConfig(), IouKind::kMask).ap);
  results[0]["segmentation"]["counts"] = "abc";
  EXPECT_THROW(coco_results_from_json(results), std::invalid_argument);
}

TEST(EvalReportTest, JsonRoundTrip) {
  EvalReport r;
  r.mode = "calibrated";
  r.mask = {0.3, 0.6, 0.25};
  r.box = {0.4, 0.7, 0.35};
  r.mask_per_category[2] = {0.1, 0.2, 0.3};
  r.upper_bound = ApTriple{0.5, 0.8, 0.4};
  r.pearson_r = 0.74;
  r.histogram = score_quality_histogram(std::vector<double>{0.7}, std::vector<double>{0.9});
  r.num_images = 3;
  const EvalReport back = eval_report_from_json(to_json(r));
  EXPECT_EQ(to_json(back), to_json(r));
}

}  // namespace
}  // namespace maskscore
