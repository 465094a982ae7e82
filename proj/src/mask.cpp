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
#include "maskscore/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace maskscore {

namespace {

void check_dims(int width, int height) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("mask dimensions must be positive, got " +
                                std::to_string(width) + "x" +
                                std::to_string(height));
  }
}

std::size_t pixel_count(int width, int height) {
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
}

}  // namespace

SoftMask::SoftMask(int width, int height, double fill)
    : width_(width), height_(height) {
  check_dims(width, height);
  if (fill < 0.0 || fill > 1.0) {
    throw std::invalid_argument("soft mask fill must lie in [0,1]");
  }
  values_.assign(pixel_count(width, height), fill);
}

SoftMask::SoftMask(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  check_dims(width, height);
  if (values_.size() != pixel_count(width, height)) {
    throw std::invalid_argument("soft mask value count does not match size");
  }
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("soft mask values must lie in [0,1]");
    }
  }
}

void SoftMask::set(int x, int y, double v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument("soft mask values must lie in [0,1]");
  }
  values_[index(x, y)] = v;
}

BinaryMask::BinaryMask(int width, int height, bool fill)
    : width_(width), height_(height) {
  check_dims(width, height);
  bits_.assign(pixel_count(width, height), fill ? 1 : 0);
}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  check_dims(width, height);
  if (bits_.size() != pixel_count(width, height)) {
    throw std::invalid_argument("binary mask bit count does not match size");
  }
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::int64_t BinaryMask::area() const {
  return std::count(bits_.begin(), bits_.end(), std::uint8_t{1});
}

BinaryMask binarize(const SoftMask& mask, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("binarize threshold must lie in [0,1]");
  }
  const auto& v = mask.values();
  std::vector<std::uint8_t> bits(v.size());
  std::transform(v.begin(), v.end(), bits.begin(),
                 [threshold](double p) { return p >= threshold ? 1 : 0; });
  return BinaryMask(mask.width(), mask.height(), std::move(bits));
}

SoftMask to_soft(const BinaryMask& mask) {
  const auto& b = mask.bits();
  std::vector<double> v(b.begin(), b.end());
  return SoftMask(mask.width(), mask.height(), std::move(v));
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw std::invalid_argument("mask_iou: size mismatch " +
                                std::to_string(a.width()) + "x" +
                                std::to_string(a.height()) + " vs " +
                                std::to_string(b.width()) + "x" +
                                std::to_string(b.height()));
  }
  std::int64_t inter = 0;
  std::int64_t uni = 0;
  const auto& ab = a.bits();
  const auto& bb = b.bits();
  for (std::size_t i = 0; i < ab.size(); ++i) {
    inter += ab[i] & bb[i];
    uni += ab[i] | bb[i];
  }
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double box_iou(const BBox& a, const BBox& b) {
  const double iw =
      std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double ih =
      std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

RleMask rle_encode(const BinaryMask& mask) {
  RleMask rle{mask.width(), mask.height(), {}};
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (int x = 0; x < mask.width(); ++x) {
    for (int y = 0; y < mask.height(); ++y) {
      const std::uint8_t bit = mask.at(x, y) ? 1 : 0;
      if (bit != current) {
        rle.counts.push_back(run);
        run = 0;
        current = bit;
      }
      ++run;
    }
  }
  rle.counts.push_back(run);
  return rle;
}

BinaryMask rle_decode(const RleMask& rle) {
  check_dims(rle.width, rle.height);
  const std::uint64_t total = std::accumulate(
      rle.counts.begin(), rle.counts.end(), std::uint64_t{0});
  if (total != pixel_count(rle.width, rle.height)) {
    throw std::invalid_argument(
        "rle_decode: run lengths sum to " + std::to_string(total) +
        ", expected " + std::to_string(pixel_count(rle.width, rle.height)));
  }
  BinaryMask mask(rle.width, rle.height);
  std::size_t pos = 0;
  bool fg = false;
  for (std::uint32_t run : rle.counts) {
    for (std::uint32_t i = 0; i < run; ++i, ++pos) {
      if (fg) {
        const int x = static_cast<int>(pos / rle.height);
        const int y = static_cast<int>(pos % rle.height);
        mask.set(x, y, true);
      }
    }
    fg = !fg;
  }
  return mask;
}

std::optional<BBox> mask_to_bbox(const BinaryMask& mask) {
  int x0 = mask.width(), y0 = mask.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) return std::nullopt;
  return BBox{static_cast<double>(x0), static_cast<double>(y0),
              static_cast<double>(x1 - x0 + 1),
              static_cast<double>(y1 - y0 + 1)};
}

BinaryMask rasterize_box(const BBox& box, int width, int height) {
  BinaryMask mask(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const bool inside = x >= box.x && x + 1 <= box.x + box.w && y >= box.y &&
                          y + 1 <= box.y + box.h;
      if (inside) mask.set(x, y, true);
    }
  }
  return mask;
}

nlohmann::json rle_to_json(const RleMask& rle) {
  return {{"size", {rle.height, rle.width}}, {"counts", rle.counts}};
}

RleMask rle_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("size") || !j.contains("counts")) {
    throw std::invalid_argument(
        "RLE object must have \"size\" and \"counts\" fields");
  }
  if (j.at("counts").is_string()) {
    throw std::invalid_argument(
        "compressed RLE (string counts) is not supported; export masks with "
        "uncompressed integer counts");
  }
  const auto& size = j.at("size");
  if (!size.is_array() || size.size() != 2) {
    throw std::invalid_argument("RLE \"size\" must be [height, width]");
  }
  RleMask rle;
  rle.height = size[0].get<int>();
  rle.width = size[1].get<int>();
  rle.counts = j.at("counts").get<std::vector<std::uint32_t>>();
  return rle;
}

nlohmann::json bbox_to_json(const BBox& box) {
  return nlohmann::json::array({box.x, box.y, box.w, box.h});
}

BBox bbox_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) {
    throw std::invalid_argument("bbox must be [x, y, w, h]");
  }
  return BBox{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
              j[3].get<double>()};
}

}  // namespace maskscore
