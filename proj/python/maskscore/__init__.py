# Copyright 2026 The maskscore Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
# ==============================================================================
"""Python access to the maskscore C++ core.

Masks are 2-D numpy arrays indexed (row, column); boxes are (x, y, w, h).
"""
import json

from maskscore import _maskscore as _core
from maskscore._maskscore import ConfigError, binarize, box_iou, mask_iou, pearson

__all__ = [
    "ConfigError", "ablate", "binarize", "box_iou", "evaluate", "evaluate_coco", "gen",
    "load_config", "mask_iou", "pearson", "report", "rle_decode", "rle_encode", "train",
]


def rle_encode(mask):
  """Uncompressed COCO RLE as a dict {"size": [h, w], "counts": [...]}."""
  return json.loads(_core.rle_encode(mask))


def rle_decode(rle):
  return _core.rle_decode(json.dumps(rle))


def evaluate_coco(gt, results, kind="mask"):
  """COCO-style AP for a gt document and a results list (dicts or JSON text)."""
  as_text = lambda d: d if isinstance(d, str) else json.dumps(d)
  return json.loads(_core.evaluate_coco(as_text(gt), as_text(results), kind))


def load_config(config, seed=None, out=None):
  return json.loads(_core.load_config(str(config), seed, _path(out)))


def gen(config, seed=None, out=None):
  """Writes the dataset splits; returns the manifest."""
  return json.loads(_core.gen(str(config), seed, _path(out)))


def train(config, seed=None, out=None):
  return json.loads(_core.train(str(config), seed, _path(out)))


def evaluate(config, mode="calibrated", seed=None, out=None):
  """Runs one eval mode and returns the report dict."""
  return json.loads(_core.evaluate(str(config), mode, seed, _path(out)))


def ablate(config, which="target", seed=None, out=None):
  return json.loads(_core.ablate(str(config), which, seed, _path(out)))


def report(config, seed=None, out=None):
  """Returns the markdown summary."""
  return _core.report(str(config), seed, _path(out))


def _path(p):
  return None if p is None else str(p)
