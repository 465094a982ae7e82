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
"""Smoke tests for the Python module: codecs, AP, and a tiny pipeline run."""
import json
import os
import pathlib

import jsonschema
import numpy as np
import pytest

import maskscore

REPO = pathlib.Path(os.environ.get("MASKSCORE_REPO", pathlib.Path(__file__).parents[2]))


def schema(name):
  return json.loads((REPO / "schemas" / f"{name}.schema.json").read_text())


def test_mask_iou_and_rle():
  a = np.array([[1, 1], [0, 0]], dtype=bool)
  b = np.array([[1, 0], [1, 0]], dtype=bool)
  assert maskscore.mask_iou(a, b) == pytest.approx(1 / 3)
  assert maskscore.box_iou((0, 0, 4, 4), (0, 1, 4, 4)) == pytest.approx(0.6)
  # column-major with a leading background run
  assert maskscore.rle_encode(a) == {"size": [2, 2], "counts": [0, 1, 1, 1, 1]}
  rng = np.random.default_rng(0)
  for _ in range(50):
    m = rng.random((int(rng.integers(1, 20)), int(rng.integers(1, 20)))) < 0.4
    np.testing.assert_array_equal(maskscore.rle_decode(maskscore.rle_encode(m)), m)


def test_binarize_is_inclusive():
  soft = np.array([[0.49, 0.5], [0.51, 0.0]])
  np.testing.assert_array_equal(maskscore.binarize(soft), [[0, 1], [1, 0]])


def test_pearson():
  assert maskscore.pearson([1, 2, 3], [1, 2, 4]) == pytest.approx(3 / np.sqrt(28 / 3))
  with pytest.raises(ValueError):
    maskscore.pearson([1, 2, 3], [2, 2, 2])


def test_evaluate_coco_perfect_and_duplicate():
  mask = np.zeros((8, 8), dtype=bool)
  mask[2:6, 1:5] = True
  rle = maskscore.rle_encode(mask)
  gt = {
      "images": [{"id": 1, "width": 8, "height": 8}],
      "annotations": [{"id": 1, "image_id": 1, "category_id": 0, "segmentation": rle,
                       "iscrowd": 0}],
      "categories": [{"id": 0, "name": "class_0"}],
  }
  hit = {"image_id": 1, "category_id": 0, "segmentation": rle, "score": 0.9}
  assert maskscore.evaluate_coco(gt, [hit])["ap"] == pytest.approx(1.0)
  # A higher-scored duplicate ahead of nothing changes nothing; one ahead of
  # the hit with an empty mask halves precision at full recall.
  empty = dict(hit, segmentation=maskscore.rle_encode(np.zeros((8, 8), bool)), score=0.95)
  assert maskscore.evaluate_coco(gt, [hit, empty])["ap50"] == pytest.approx(0.5)


def test_config_errors(tmp_path):
  cfg = tmp_path / "cfg.json"
  cfg.write_text(json.dumps({"simulator": {}}))
  with pytest.raises(maskscore.ConfigError):
    maskscore.load_config(cfg)
  cfg.write_text(json.dumps({"seed": 1, "simulator": {"colour": 2}}))
  with pytest.raises(maskscore.ConfigError):
    maskscore.load_config(cfg)


def test_shipped_configs_validate():
  for name in ("default", "smoke"):
    path = REPO / "configs" / f"{name}.json"
    jsonschema.validate(json.loads(path.read_text()), schema("run_config"))
    jsonschema.validate(maskscore.load_config(path), schema("run_config"))


def test_tiny_pipeline(tmp_path):
  cfg = tmp_path / "cfg.json"
  cfg.write_text(json.dumps({
      "seed": 5,
      "simulator": {"train_scenes": 20, "val_scenes": 2, "test_scenes": 10},
      "head": {"conv_channels": 4, "fc_width": 8},
      "train": {"epochs": 2},
      "paths": {"out": str(tmp_path / "out")},
  }))
  out = tmp_path / "out"
  manifest = maskscore.gen(cfg)
  jsonschema.validate(manifest, schema("manifest"))
  header = json.loads((out / "train.jsonl").read_text().splitlines()[0])
  jsonschema.validate(header, schema("dataset_header"))
  assert maskscore.gen(cfg)["config_hash"] == manifest["config_hash"]

  trained = maskscore.train(cfg)
  assert len(trained["loss_curve"]) == 2
  jsonschema.validate(json.loads((out / "checkpoint.json").read_text()), schema("checkpoint"))

  for mode in ("baseline", "calibrated", "oracle"):
    report = maskscore.evaluate(cfg, mode)
    jsonschema.validate(report, schema("report"))
    on_disk = json.loads((out / mode / "report.json").read_text())
    assert on_disk == report
  assert "Pearson r" in maskscore.report(cfg)

  # The exported COCO files round-trip through the standalone evaluator.
  gt = (out / "calibrated" / "gt.json").read_text()
  results = (out / "calibrated" / "results.json").read_text()
  assert maskscore.evaluate_coco(gt, results)["ap"] == pytest.approx(report_ap(out, "calibrated"))

  with pytest.raises(maskscore.ConfigError):
    maskscore.evaluate(cfg, "best")


def report_ap(out, mode):
  return json.loads((out / mode / "report.json").read_text())["mask"]["ap"]
