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
#ifndef MASKSCORE_MASK_HPP_
#define MASKSCORE_MASK_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

namespace maskscore {

// Per-pixel foreground probabilities, row-major, values in [0,1].
class SoftMask {
 public:
  SoftMask() = default;
  SoftMask(int width, int height, double fill = 0.0);
  SoftMask(int width, int height, std::vector<double> values);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return values_.empty(); }
  const std::vector<double>& values() const { return values_; }

  double at(int x, int y) const { return values_[index(x, y)]; }
  void set(int x, int y, double v);

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

// Thresholded bitmap, row-major.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool fill = false);
  BinaryMask(int width, int height, std::vector<std::uint8_t> bits);

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  bool at(int x, int y) const {
    return bits_[static_cast<std::size_t>(y) * width_ + x] != 0;
  }
  void set(int x, int y, bool v) {
    bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0;
  }
  std::int64_t area() const;

  bool operator==(const BinaryMask& other) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

// COCO uncompressed run-length encoding: column-major runs that start with
// a (possibly empty) background run.
struct RleMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint32_t> counts;

  bool operator==(const RleMask& other) const = default;
};

// Axis-aligned box in pixel units; (x, y) is the top-left corner.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  bool valid() const { return w > 0.0 && h > 0.0; }
  bool operator==(const BBox& other) const = default;
};

inline constexpr double kDefaultBinarizeThreshold = 0.5;

// Foreground iff value >= threshold.
BinaryMask binarize(const SoftMask& mask,
                    double threshold = kDefaultBinarizeThreshold);

// Lifts a bitmap to a {0,1} soft mask.
SoftMask to_soft(const BinaryMask& mask);

// |a & b| / |a | b|; 0 when both masks are empty. Throws
// std::invalid_argument on a size mismatch.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

double box_iou(const BBox& a, const BBox& b);

RleMask rle_encode(const BinaryMask& mask);
BinaryMask rle_decode(const RleMask& rle);

std::optional<BBox> mask_to_bbox(const BinaryMask& mask);

// Rasterizes a box onto a grid; pixel (x, y) is set when its unit cell lies
// inside the box. Exact for integer-aligned boxes.
BinaryMask rasterize_box(const BBox& box, int width, int height);

// {"size":[height,width],"counts":[...]}
nlohmann::json rle_to_json(const RleMask& rle);
// Rejects compressed (string) counts.
RleMask rle_from_json(const nlohmann::json& j);

nlohmann::json bbox_to_json(const BBox& box);
BBox bbox_from_json(const nlohmann::json& j);

}  // namespace maskscore

#endif  // MASKSCORE_MASK_HPP_
