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
#include "maskscore/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace maskscore {

namespace {

using json = nlohmann::json;

enum class ShapeKind { kEllipse, kRectangle, kTriangle, kDiamond };

ShapeKind shape_for_class(int category_id) {
  return static_cast<ShapeKind>(category_id % 4);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

bool bernoulli(std::mt19937_64& rng, double p) {
  return std::bernoulli_distribution(std::clamp(p, 0.0, 1.0))(rng);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Shape membership in unit box coordinates (u, v in [0,1]).
bool inside_shape(ShapeKind kind, int orientation, double u, double v) {
  switch (orientation) {
    case 1: v = 1.0 - v; break;
    case 2: std::swap(u, v); break;
    case 3: std::swap(u, v); v = 1.0 - v; break;
    default: break;
  }
  const double a = 2.0 * u - 1.0;
  const double b = 2.0 * v - 1.0;
  switch (kind) {
    case ShapeKind::kEllipse: return a * a + b * b <= 1.0;
    case ShapeKind::kRectangle: return u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0;
    case ShapeKind::kTriangle: return v >= std::abs(a) && v <= 1.0;
    case ShapeKind::kDiamond: return std::abs(a) + std::abs(b) <= 1.0;
  }
  return false;
}

// Chebyshev-radius erosion (radius < 0) or dilation (radius > 0).
BinaryMask morph(const BinaryMask& m, int radius) {
  if (radius == 0) return m;
  const bool dilate = radius > 0;
  const int r = std::abs(radius);
  const int w = m.width(), h = m.height();
  auto pass = [&](const BinaryMask& src, bool horizontal) {
    BinaryMask dst(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        bool acc = !dilate;
        for (int d = -r; d <= r; ++d) {
          const int xx = horizontal ? x + d : x;
          const int yy = horizontal ? y : y + d;
          const bool in = xx >= 0 && xx < w && yy >= 0 && yy < h;
          const bool v = in && src.at(xx, yy);
          acc = dilate ? (acc || v) : (acc && v);
        }
        dst.set(x, y, acc);
      }
    }
    return dst;
  };
  return pass(pass(m, true), false);
}

// Removes the part of the mask beyond a random line that cuts off `fraction`
// of its pixels.
BinaryMask truncate(const BinaryMask& m, double fraction, double angle) {
  std::vector<double> proj;
  const double c = std::cos(angle), s = std::sin(angle);
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m.at(x, y)) proj.push_back(x * c + y * s);
  const auto removed = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(proj.size())));
  if (removed == 0) return m;
  const std::size_t k = proj.size() - removed;
  std::nth_element(proj.begin(), proj.begin() + k, proj.end());
  const double cut = proj[k];
  BinaryMask out = m;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m.at(x, y) && x * c + y * s >= cut) out.set(x, y, false);
  return out;
}

BinaryMask shift(const BinaryMask& m, int dx, int dy) {
  BinaryMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      const int sx = x - dx, sy = y - dy;
      if (sx >= 0 && sx < m.width() && sy >= 0 && sy < m.height() &&
          m.at(sx, sy)) {
        out.set(x, y, true);
      }
    }
  }
  return out;
}

bool pixel_in_box(const BBox& b, int x, int y) {
  const double cx = x + 0.5, cy = y + 0.5;
  return cx >= b.x && cx <= b.x + b.w && cy >= b.y && cy <= b.y + b.h;
}

// Box blur, clip to the detection box, quantize to 8 bits.
SoftMask soften(const BinaryMask& m, int radius, const BBox& box) {
  const int w = m.width(), h = m.height();
  std::vector<double> v(static_cast<std::size_t>(w) * h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!pixel_in_box(box, x, y)) continue;
      double p;
      if (radius <= 0) {
        p = m.at(x, y) ? 1.0 : 0.0;
      } else {
        int on = 0, n = 0;
        for (int dy = -radius; dy <= radius; ++dy) {
          for (int dx = -radius; dx <= radius; ++dx) {
            const int xx = x + dx, yy = y + dy;
            ++n;
            if (xx >= 0 && xx < w && yy >= 0 && yy < h && m.at(xx, yy)) ++on;
          }
        }
        p = static_cast<double>(on) / n;
      }
      v[static_cast<std::size_t>(y) * w + x] = std::round(p * 255.0) / 255.0;
    }
  }
  return SoftMask(w, h, std::move(v));
}

BBox clamp_box(BBox b, int width, int height) {
  const double x0 = std::clamp(b.x, 0.0, width - 1.0);
  const double y0 = std::clamp(b.y, 0.0, height - 1.0);
  const double x1 = std::clamp(b.x + b.w, x0 + 1.0, static_cast<double>(width));
  const double y1 = std::clamp(b.y + b.h, y0 + 1.0, static_cast<double>(height));
  return BBox{x0, y0, x1 - x0, y1 - y0};
}

BBox jitter_box(const BBox& b, double jitter, int width, int height,
                std::mt19937_64& rng) {
  double x0 = b.x + uniform(rng, -jitter, jitter) * b.w;
  double x1 = b.x + b.w + uniform(rng, -jitter, jitter) * b.w;
  double y0 = b.y + uniform(rng, -jitter, jitter) * b.h;
  double y1 = b.y + b.h + uniform(rng, -jitter, jitter) * b.h;
  if (x1 - x0 < 2.0) x1 = x0 + 2.0;
  if (y1 - y0 < 2.0) y1 = y0 + 2.0;
  return clamp_box(BBox{x0, y0, x1 - x0, y1 - y0}, width, height);
}

void check_prob(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument(std::string("simulator: ") + name +
                                " must lie in [0,1]");
  }
}

}  // namespace

void SimulatorConfig::validate() const {
  if (num_classes < 1) throw std::invalid_argument("simulator: num_classes < 1");
  if (width < 8 || height < 8)
    throw std::invalid_argument("simulator: scene must be at least 8x8");
  if (min_shapes < 0 || max_shapes < min_shapes)
    throw std::invalid_argument("simulator: invalid shape count range");
  if (min_shape_size < 2 || max_shape_size < min_shape_size ||
      max_shape_size > std::min(width, height))
    throw std::invalid_argument("simulator: invalid shape size range");
  if (degradation_strength < 0.0 || morph_radius_max < 0.0 || shift_max < 0.0 ||
      blur_radius < 0 || box_jitter < 0.0 || false_positives_mean < 0.0 ||
      score_noise < 0.0 || feature_noise < 0.0)
    throw std::invalid_argument("simulator: negative magnitude parameter");
  check_prob(truncation_probability, "truncation_probability");
  check_prob(truncation_max_fraction, "truncation_max_fraction");
  check_prob(detection_probability, "detection_probability");
  check_prob(duplicate_probability, "duplicate_probability");
  check_prob(class_confusion_probability, "class_confusion_probability");
  if (train_scenes < 0 || val_scenes < 0 || test_scenes < 0)
    throw std::invalid_argument("simulator: negative split size");
}

json to_json(const SimulatorConfig& c) {
  return {{"num_classes", c.num_classes},
          {"width", c.width},
          {"height", c.height},
          {"min_shapes", c.min_shapes},
          {"max_shapes", c.max_shapes},
          {"min_shape_size", c.min_shape_size},
          {"max_shape_size", c.max_shape_size},
          {"min_visible_pixels", c.min_visible_pixels},
          {"feature_noise", c.feature_noise},
          {"degradation_strength", c.degradation_strength},
          {"morph_radius_max", c.morph_radius_max},
          {"truncation_probability", c.truncation_probability},
          {"truncation_max_fraction", c.truncation_max_fraction},
          {"shift_max", c.shift_max},
          {"blur_radius", c.blur_radius},
          {"box_jitter", c.box_jitter},
          {"detection_probability", c.detection_probability},
          {"duplicate_probability", c.duplicate_probability},
          {"false_positives_mean", c.false_positives_mean},
          {"class_confusion_probability", c.class_confusion_probability},
          {"score_bias", c.score_bias},
          {"score_slope", c.score_slope},
          {"score_noise", c.score_noise},
          {"train_scenes", c.train_scenes},
          {"val_scenes", c.val_scenes},
          {"test_scenes", c.test_scenes},
          {"seed", c.seed}};
}

SimulatorConfig simulator_config_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("simulator: expected object");
  SimulatorConfig c;
  const json defaults = to_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) {
      throw std::invalid_argument("simulator: unknown key '" + key + "'");
    }
    if (value.is_number() != defaults.at(key).is_number()) {
      throw std::invalid_argument("simulator: '" + key + "' must be a number");
    }
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("num_classes", c.num_classes);
  get("width", c.width);
  get("height", c.height);
  get("min_shapes", c.min_shapes);
  get("max_shapes", c.max_shapes);
  get("min_shape_size", c.min_shape_size);
  get("max_shape_size", c.max_shape_size);
  get("min_visible_pixels", c.min_visible_pixels);
  get("feature_noise", c.feature_noise);
  get("degradation_strength", c.degradation_strength);
  get("morph_radius_max", c.morph_radius_max);
  get("truncation_probability", c.truncation_probability);
  get("truncation_max_fraction", c.truncation_max_fraction);
  get("shift_max", c.shift_max);
  get("blur_radius", c.blur_radius);
  get("box_jitter", c.box_jitter);
  get("detection_probability", c.detection_probability);
  get("duplicate_probability", c.duplicate_probability);
  get("false_positives_mean", c.false_positives_mean);
  get("class_confusion_probability", c.class_confusion_probability);
  get("score_bias", c.score_bias);
  get("score_slope", c.score_slope);
  get("score_noise", c.score_noise);
  get("train_scenes", c.train_scenes);
  get("val_scenes", c.val_scenes);
  get("test_scenes", c.test_scenes);
  get("seed", c.seed);
  c.validate();
  return c;
}

std::mt19937_64 scene_rng(std::uint64_t seed, std::uint64_t scene_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(scene_index),
                    static_cast<std::uint32_t>(scene_index >> 32)};
  return std::mt19937_64(seq);
}

Scene generate_scene(const SimulatorConfig& config, std::mt19937_64& rng) {
  config.validate();
  const int w = config.width, h = config.height;
  Scene scene;
  scene.width = w;
  scene.height = h;

  const int n = uniform_int(rng, config.min_shapes, config.max_shapes);
  std::vector<int> label(static_cast<std::size_t>(w) * h, -1);
  std::vector<int> classes(n);
  std::vector<double> intensity(n);
  for (int i = 0; i < n; ++i) {
    classes[i] = uniform_int(rng, 0, config.num_classes - 1);
    intensity[i] = uniform(rng, 0.4, 1.0);
    const int orientation = uniform_int(rng, 0, 3);
    const int sw = uniform_int(rng, config.min_shape_size, config.max_shape_size);
    const int sh = uniform_int(rng, config.min_shape_size, config.max_shape_size);
    const int x0 = uniform_int(rng, 0, w - sw);
    const int y0 = uniform_int(rng, 0, h - sh);
    const ShapeKind kind = shape_for_class(classes[i]);
    for (int y = y0; y < y0 + sh; ++y) {
      for (int x = x0; x < x0 + sw; ++x) {
        const double u = (x + 0.5 - x0) / sw;
        const double v = (y + 0.5 - y0) / sh;
        if (inside_shape(kind, orientation, u, v)) {
          label[static_cast<std::size_t>(y) * w + x] = i;
        }
      }
    }
  }

  // Later shapes occlude earlier ones; barely visible instances are erased.
  std::vector<int> remap(n, -1);
  for (int i = 0; i < n; ++i) {
    BinaryMask m(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (label[static_cast<std::size_t>(y) * w + x] == i) m.set(x, y, true);
    if (m.area() < config.min_visible_pixels) {
      for (auto& l : label) if (l == i) l = -1;
      continue;
    }
    remap[i] = static_cast<int>(scene.instances.size());
    const BBox box = *mask_to_bbox(m);
    scene.instances.push_back(GtInstance{classes[i], std::move(m), box});
  }

  std::normal_distribution<double> noise(0.0, config.feature_noise);
  auto draw_noise = [&]() {
    return config.feature_noise > 0.0 ? noise(rng) : 0.0;
  };
  scene.planes.assign(static_cast<std::size_t>(kNumFeaturePlanes) * w * h, 0.f);
  auto at = [&](int c, int x, int y) -> float& {
    return scene.planes[(static_cast<std::size_t>(c) * h + y) * w + x];
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int l = label[static_cast<std::size_t>(y) * w + x];
      const double base = l >= 0 ? intensity[l] : 0.1;
      bool edge = false;
      const int dx[4] = {1, -1, 0, 0};
      const int dy[4] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        const int xx = x + dx[k], yy = y + dy[k];
        const int ll = (xx >= 0 && xx < w && yy >= 0 && yy < h)
                           ? label[static_cast<std::size_t>(yy) * w + xx]
                           : -1;
        if (ll != l) edge = true;
      }
      at(kIntensity, x, y) = static_cast<float>(base + draw_noise());
      at(kCoordX, x, y) = static_cast<float>(w > 1 ? x / (w - 1.0) : 0.0);
      at(kCoordY, x, y) = static_cast<float>(h > 1 ? y / (h - 1.0) : 0.0);
      at(kEdge, x, y) = static_cast<float>((edge ? 1.0 : 0.0) + draw_noise());
    }
  }
  return scene;
}

std::vector<Detection> simulate_detections(const Scene& scene,
                                           const SimulatorConfig& config,
                                           std::mt19937_64& rng) {
  const double s = config.degradation_strength;
  std::normal_distribution<double> score_noise(0.0, 1.0);
  std::vector<Detection> dets;

  auto score_for = [&](double iou) {
    const double z = config.score_noise > 0.0 ? score_noise(rng) : 0.0;
    return sigmoid(config.score_bias + config.score_slope * iou +
                   config.score_noise * z);
  };
  auto confuse = [&](int category) {
    if (config.num_classes < 2 ||
        !bernoulli(rng, config.class_confusion_probability)) {
      return category;
    }
    const int other = uniform_int(rng, 0, config.num_classes - 2);
    return other >= category ? other + 1 : category;
  };
  auto degrade = [&](const BinaryMask& gt) {
    BinaryMask m = gt;
    const double r = uniform(rng, 0.0, config.morph_radius_max * s);
    const int radius = static_cast<int>(std::lround(r));
    m = morph(m, bernoulli(rng, 0.5) ? radius : -radius);
    if (bernoulli(rng, std::min(1.0, config.truncation_probability * s))) {
      const double f =
          uniform(rng, 0.0, std::min(1.0, config.truncation_max_fraction * s));
      m = truncate(m, f, uniform(rng, 0.0, 2.0 * std::numbers::pi));
    }
    const double sm = config.shift_max * s;
    const int dx = static_cast<int>(std::lround(uniform(rng, -sm, sm + 1e-12)));
    const int dy = static_cast<int>(std::lround(uniform(rng, -sm, sm + 1e-12)));
    return shift(m, dx, dy);
  };

  auto emit = [&](const GtInstance& gt) {
    Detection d;
    d.box = jitter_box(gt.box, config.box_jitter, scene.width, scene.height, rng);
    d.category_id = confuse(gt.category_id);
    d.soft_mask = soften(degrade(gt.mask), config.blur_radius, d.box);
    d.s_cls = score_for(box_iou(d.box, gt.box));
    dets.push_back(std::move(d));
  };

  for (const auto& gt : scene.instances) {
    if (bernoulli(rng, config.detection_probability)) emit(gt);
    if (bernoulli(rng, config.duplicate_probability)) emit(gt);
  }

  if (config.false_positives_mean > 0.0) {
    const int nfp =
        std::poisson_distribution<int>(config.false_positives_mean)(rng);
    for (int i = 0; i < nfp; ++i) {
      const int bw = uniform_int(rng, config.min_shape_size, config.max_shape_size);
      const int bh = uniform_int(rng, config.min_shape_size, config.max_shape_size);
      const BBox box = clamp_box(
          BBox{static_cast<double>(uniform_int(rng, 0, scene.width - bw)),
               static_cast<double>(uniform_int(rng, 0, scene.height - bh)),
               static_cast<double>(bw), static_cast<double>(bh)},
          scene.width, scene.height);
      BinaryMask blob(scene.width, scene.height);
      for (int y = 0; y < scene.height; ++y) {
        for (int x = 0; x < scene.width; ++x) {
          const double u = (x + 0.5 - box.x) / box.w;
          const double v = (y + 0.5 - box.y) / box.h;
          if (inside_shape(ShapeKind::kEllipse, 0, u, v)) blob.set(x, y, true);
        }
      }
      Detection d;
      d.box = box;
      d.category_id = uniform_int(rng, 0, config.num_classes - 1);
      d.soft_mask = soften(degrade(blob), config.blur_radius, box);
      d.s_cls = score_for(best_box_match(scene, box).box_iou);
      dets.push_back(std::move(d));
    }
  }
  for (std::size_t i = 0; i < dets.size(); ++i) {
    dets[i].index = static_cast<int>(i);
  }
  return dets;
}

SceneRecord generate_record(const SimulatorConfig& config, int scene_index) {
  auto rng = scene_rng(config.seed, static_cast<std::uint64_t>(scene_index));
  SceneRecord rec;
  rec.scene = generate_scene(config, rng);
  rec.scene.id = scene_index;
  rec.detections = simulate_detections(rec.scene, config, rng);
  return rec;
}

nn::Tensor extract_roi(const Scene& scene, const BBox& box, int out_side) {
  if (!box.valid()) {
    throw std::invalid_argument("extract_roi: degenerate box");
  }
  if (out_side < 1) throw std::invalid_argument("extract_roi: out_side < 1");
  nn::Tensor out({kNumFeaturePlanes, out_side, out_side});
  const int w = scene.width, h = scene.height;
  for (int j = 0; j < out_side; ++j) {
    const double sy = std::clamp(box.y + (j + 0.5) * box.h / out_side - 0.5,
                                 0.0, h - 1.0);
    const int y0 = static_cast<int>(std::floor(sy));
    const int y1 = std::min(y0 + 1, h - 1);
    const double fy = sy - y0;
    for (int i = 0; i < out_side; ++i) {
      const double sx = std::clamp(box.x + (i + 0.5) * box.w / out_side - 0.5,
                                   0.0, w - 1.0);
      const int x0 = static_cast<int>(std::floor(sx));
      const int x1 = std::min(x0 + 1, w - 1);
      const double fx = sx - x0;
      for (int c = 0; c < kNumFeaturePlanes; ++c) {
        const double v00 = scene.plane(c, x0, y0), v10 = scene.plane(c, x1, y0);
        const double v01 = scene.plane(c, x0, y1), v11 = scene.plane(c, x1, y1);
        out.at(c, j, i) = (1 - fy) * ((1 - fx) * v00 + fx * v10) +
                          fy * ((1 - fx) * v01 + fx * v11);
      }
    }
  }
  return out;
}

namespace {

template <typename Get>
void crop_points(const BBox& box, int out_side, int w, int h, Get&& get) {
  for (int j = 0; j < out_side; ++j) {
    const double sy = box.y + (j + 0.5) * box.h / out_side;
    const int py = static_cast<int>(std::floor(sy));
    for (int i = 0; i < out_side; ++i) {
      const double sx = box.x + (i + 0.5) * box.w / out_side;
      const int px = static_cast<int>(std::floor(sx));
      const bool in = px >= 0 && px < w && py >= 0 && py < h;
      get(i, j, in, px, py);
    }
  }
}

}  // namespace

SoftMask crop_soft_mask(const SoftMask& mask, const BBox& box, int out_side) {
  SoftMask out(out_side, out_side, 0.0);
  crop_points(box, out_side, mask.width(), mask.height(),
              [&](int i, int j, bool in, int px, int py) {
                if (in) out.set(i, j, mask.at(px, py));
              });
  return out;
}

BinaryMask crop_binary_mask(const BinaryMask& mask, const BBox& box,
                            int out_side) {
  BinaryMask out(out_side, out_side);
  crop_points(box, out_side, mask.width(), mask.height(),
              [&](int i, int j, bool in, int px, int py) {
                if (in && mask.at(px, py)) out.set(i, j, true);
              });
  return out;
}

MatchInfo best_box_match(const Scene& scene, const BBox& box) {
  MatchInfo best;
  for (std::size_t g = 0; g < scene.instances.size(); ++g) {
    const double iou = box_iou(box, scene.instances[g].box);
    if (iou > best.box_iou) {
      best.box_iou = iou;
      best.gt_index = static_cast<int>(g);
    }
  }
  return best;
}

double best_mask_iou(const Scene& scene, const BinaryMask& mask,
                     int category_id) {
  double best = 0.0;
  for (const auto& gt : scene.instances) {
    if (category_id >= 0 && gt.category_id != category_id) continue;
    best = std::max(best, mask_iou(mask, gt.mask));
  }
  return best;
}

void append_training_samples(const SceneRecord& record, int num_classes,
                             TargetSetting setting,
                             std::vector<TrainingSample>& out) {
  constexpr int kMaskSide = 28;
  constexpr int kFeatureSide = 14;
  const Scene& scene = record.scene;
  for (const auto& det : record.detections) {
    const MatchInfo match = best_box_match(scene, det.box);
    if (match.gt_index < 0 || !(match.box_iou > kTrainingBoxIou)) continue;
    const GtInstance& gt = scene.instances[match.gt_index];
    TrainingSample s;
    s.roi_feature = extract_roi(scene, det.box, kFeatureSide);
    s.roi_feature_hr = extract_roi(scene, det.box, kMaskSide);
    s.pred_mask = crop_soft_mask(det.soft_mask, det.box, kMaskSide);
    s.class_label = gt.category_id;
    s.gt_masks.emplace(gt.category_id,
                       crop_binary_mask(gt.mask, det.box, kMaskSide));
    // Other classes in the RoI: keep their largest visible instance.
    std::map<int, std::int64_t> best_area;
    for (std::size_t g = 0; g < scene.instances.size(); ++g) {
      const auto& other = scene.instances[g];
      if (static_cast<int>(g) == match.gt_index ||
          other.category_id == gt.category_id) {
        continue;
      }
      BinaryMask crop = crop_binary_mask(other.mask, det.box, kMaskSide);
      const auto area = crop.area();
      if (area == 0) continue;
      auto it = best_area.find(other.category_id);
      if (it == best_area.end() || area > it->second) {
        best_area[other.category_id] = area;
        s.gt_masks.insert_or_assign(other.category_id, std::move(crop));
      }
    }
    Targets t = make_target(s.pred_mask, s.gt_masks, s.class_label,
                            num_classes, setting);
    s.targets = std::move(t.values);
    s.supervision = std::move(t.supervision);
    out.push_back(std::move(s));
  }
}

std::vector<TrainingSample> build_training_set(
    std::span<const SceneRecord> records, int num_classes,
    TargetSetting setting) {
  std::vector<TrainingSample> out;
  for (const auto& r : records) {
    append_training_samples(r, num_classes, setting, out);
  }
  return out;
}

}  // namespace maskscore
