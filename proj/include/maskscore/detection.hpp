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
#ifndef MASKSCORE_DETECTION_HPP_
#define MASKSCORE_DETECTION_HPP_

#include <optional>

#include "maskscore/mask.hpp"

namespace maskscore {

// One instance hypothesis. When s_mask is set, s_iou is set too and
// s_mask == s_cls * s_iou.
struct Detection {
  int index = 0;  // stable identity within its image
  BBox box;
  int category_id = 0;
  double s_cls = 0.0;
  SoftMask soft_mask;  // image resolution
  std::optional<double> s_iou;
  std::optional<double> s_mask;

  // s_mask when calibrated, s_cls otherwise.
  double score() const { return s_mask.value_or(s_cls); }
};

}  // namespace maskscore

#endif  // MASKSCORE_DETECTION_HPP_
