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
// Deliberately naive reference implementations used by the tests. Nothing
// here calls into the library's own algorithms.
#ifndef MASKSCORE_TESTS_ORACLES_HPP_
#define MASKSCORE_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "maskscore/evaluation.hpp"
#include "maskscore/mask.hpp"
#include "maskscore/nn.hpp"

namespace maskscore::oracle {

inline double pixel_iou(const BinaryMask& a, const BinaryMask& b) {
  int inter = 0, uni = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      const bool p = a.at(x, y), q = b.at(x, y);
      if (p && q) ++inter;
      if (p || q) ++uni;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / uni;
}

inline double rect_iou(const BBox& a, const BBox& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.w * a.h + b.w * b.h - inter;
  return uni <= 0.0 ? 0.0 : inter / uni;
}

// 101-point AP of a ranked TP/FP list: for each recall point, the best
// precision at any rank whose recall reaches it.
inline double ranked_ap(const std::vector<bool>& tp, int num_gt, int points = 101) {
  double sum = 0.0;
  for (int i = 0; i < points; ++i) {
    const double r = static_cast<double>(i) / (points - 1);
    double best = 0.0;
    int hits = 0;
    for (std::size_t k = 0; k < tp.size(); ++k) {
      if (tp[k]) ++hits;
      const double recall = static_cast<double>(hits) / num_gt;
      const double precision = static_cast<double>(hits) / (k + 1);
      if (recall >= r) best = std::max(best, precision);
    }
    sum += best;
  }
  return sum / points;
}

struct BruteForceResult {
  double ap = 0.0, ap50 = 0.0, ap75 = 0.0;
};

// Straightforward COCO-style evaluation: per category and threshold, every
// image is matched greedily in score order (top 100), the later gt wins an
// IoU tie, and all detections are ranked together.
inline BruteForceResult brute_force_evaluate(const std::vector<Prediction>& preds,
                                             const std::vector<GroundTruth>& gts,
                                             IouKind kind) {
  std::set<int> cats, images;
  for (const auto& g : gts) {
    cats.insert(g.category_id);
    images.insert(g.image_id);
  }
  for (const auto& p : preds) images.insert(p.image_id);
  auto iou = [&](const Prediction& p, const GroundTruth& g) {
    return kind == IouKind::kMask ? pixel_iou(p.mask, g.mask) : rect_iou(p.box, g.box);
  };
  BruteForceResult out;
  double total = 0.0;
  for (int cat : cats) {
    int num_gt = 0;
    for (const auto& g : gts) num_gt += g.category_id == cat;
    double cat_sum = 0.0;
    for (int t = 0; t < 10; ++t) {
      const double thr = 0.5 + 0.05 * t;
      struct Entry {
        double score;
        bool tp;
      };
      std::vector<Entry> entries;
      for (int img : images) {
        std::vector<std::size_t> d;
        for (std::size_t i = 0; i < preds.size(); ++i)
          if (preds[i].image_id == img && preds[i].category_id == cat) d.push_back(i);
        // Insertion sort keeps equal scores in input order.
        for (std::size_t i = 1; i < d.size(); ++i)
          for (std::size_t j = i; j > 0 && preds[d[j]].score > preds[d[j - 1]].score; --j)
            std::swap(d[j], d[j - 1]);
        if (d.size() > 100) d.resize(100);
        std::vector<std::size_t> g;
        for (std::size_t i = 0; i < gts.size(); ++i)
          if (gts[i].image_id == img && gts[i].category_id == cat) g.push_back(i);
        std::vector<bool> used(g.size(), false);
        for (std::size_t di : d) {
          double best = std::min(thr, 1.0 - 1e-10);
          int match = -1;
          for (std::size_t k = 0; k < g.size(); ++k) {
            if (used[k]) continue;
            const double v = iou(preds[di], gts[g[k]]);
            if (v >= best) {
              best = v;
              match = static_cast<int>(k);
            }
          }
          if (match >= 0) used[match] = true;
          entries.push_back({preds[di].score, match >= 0});
        }
      }
      std::stable_sort(entries.begin(), entries.end(),
                       [](const Entry& a, const Entry& b) { return a.score > b.score; });
      std::vector<bool> tp;
      for (const auto& e : entries) tp.push_back(e.tp);
      const double ap = ranked_ap(tp, num_gt);
      cat_sum += ap;
      if (t == 0) out.ap50 += ap;
      if (t == 5) out.ap75 += ap;
    }
    total += cat_sum / 10.0;
  }
  const double n = static_cast<double>(cats.size());
  out.ap = total / n;
  out.ap50 /= n;
  out.ap75 /= n;
  return out;
}

// Zero-padded nested-loop 3x3 convolution.
inline nn::Tensor naive_conv(const nn::Tensor& in, const nn::Tensor& w,
                             const nn::Tensor& b, int stride) {
  const int cin = in.dim(0), h = in.dim(1), wd = in.dim(2), cout = w.dim(0);
  const int oh = (h - 1) / stride + 1, ow = (wd - 1) / stride + 1;
  nn::Tensor out({cout, oh, ow});
  for (int co = 0; co < cout; ++co)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        double s = b[co];
        for (int ci = 0; ci < cin; ++ci)
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const int y = oy * stride + ky - 1, x = ox * stride + kx - 1;
              if (y < 0 || y >= h || x < 0 || x >= wd) continue;
              s += w[((co * cin + ci) * 3 + ky) * 3 + kx] * in.at(ci, y, x);
            }
        out.at(co, oy, ox) = s;
      }
  return out;
}

inline nn::Tensor random_tensor(std::vector<int> shape, std::mt19937_64& rng,
                                double lo = -1.0, double hi = 1.0) {
  nn::Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

inline BinaryMask random_mask(int w, int h, double p, std::mt19937_64& rng) {
  BinaryMask m(w, h);
  std::bernoulli_distribution coin(p);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.set(x, y, coin(rng));
  return m;
}

struct ToyCorpus {
  std::vector<GroundTruth> gts;
  std::vector<Prediction> preds;
};

// Rectangles on a small grid with shifted copies as predictions, a few false
// positives and scores rounded to one decimal so that ties occur.
inline ToyCorpus make_toy_corpus(std::uint64_t seed, int images, int max_instances,
                                 int side = 24, int num_classes = 3) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> count(1, max_instances), cls(0, num_classes - 1);
  std::uniform_int_distribution<int> pos(0, side - 6), ext(3, 10), jitter(-2, 2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto rect = [&](int x, int y, int w, int h) {
    BBox b{static_cast<double>(std::clamp(x, 0, side - 1)),
           static_cast<double>(std::clamp(y, 0, side - 1)), 0, 0};
    b.w = std::min<double>(w, side - b.x);
    b.h = std::min<double>(h, side - b.y);
    BinaryMask m(side, side);
    for (int yy = static_cast<int>(b.y); yy < b.y + b.h; ++yy)
      for (int xx = static_cast<int>(b.x); xx < b.x + b.w; ++xx) m.set(xx, yy, true);
    return std::make_pair(m, b);
  };
  ToyCorpus c;
  for (int img = 0; img < images; ++img) {
    const int id = 3 * img + 1;  // sparse, ascending ids
    const int n = count(rng);
    for (int k = 0; k < n; ++k) {
      const int x = pos(rng), y = pos(rng), w = ext(rng), h = ext(rng);
      const int cat = cls(rng);
      auto [m, b] = rect(x, y, w, h);
      c.gts.push_back({id, cat, m, b});
      const int copies = u(rng) < 0.15 ? 0 : (u(rng) < 0.3 ? 2 : 1);
      for (int j = 0; j < copies; ++j) {
        auto [pm, pb] = rect(x + jitter(rng), y + jitter(rng), w + jitter(rng), h + jitter(rng));
        const int pc = u(rng) < 0.1 ? cls(rng) : cat;
        c.preds.push_back({id, pc, std::round(u(rng) * 10.0) / 10.0, pm, pb});
      }
    }
    const int fps = static_cast<int>(u(rng) * 3);
    for (int k = 0; k < fps; ++k) {
      auto [m, b] = rect(pos(rng), pos(rng), ext(rng), ext(rng));
      c.preds.push_back({id, cls(rng), std::round(u(rng) * 10.0) / 10.0, m, b});
    }
  }
  return c;
}

}  // namespace maskscore::oracle

#endif  // MASKSCORE_TESTS_ORACLES_HPP_
