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
// Python module `maskscore._maskscore`. JSON documents cross the boundary as
// strings; the package __init__ turns them into dicts.
#include <array>
#include <optional>
#include <string>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "maskscore/harness.hpp"

namespace py = pybind11;
using namespace maskscore;

namespace {

using MaskArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using SoftArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

BinaryMask to_mask(const MaskArray& a) {
  if (a.ndim() != 2) throw std::invalid_argument("mask must be 2-D (height, width)");
  const auto h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  std::vector<std::uint8_t> bits(a.data(), a.data() + a.size());
  for (auto& b : bits) b = b != 0;
  return BinaryMask(w, h, std::move(bits));
}

MaskArray from_mask(const BinaryMask& m) {
  MaskArray out({m.height(), m.width()});
  std::copy(m.bits().begin(), m.bits().end(), out.mutable_data());
  return out;
}

BBox to_box(const std::array<double, 4>& b) { return {b[0], b[1], b[2], b[3]}; }

RunConfig load(const std::string& config, std::optional<std::uint64_t> seed,
               std::optional<std::string> out) {
  std::optional<std::filesystem::path> o;
  if (out) o = *out;
  return load_run_config(config, seed, o);
}

IouKind iou_kind(const std::string& s) {
  if (s == "mask" || s == "segm") return IouKind::kMask;
  if (s == "box" || s == "bbox") return IouKind::kBox;
  throw std::invalid_argument("kind must be 'mask' or 'box'");
}

}  // namespace

PYBIND11_MODULE(_maskscore, m) {
  m.doc() = "Mask scoring core: mask codecs, COCO-style AP, MaskIoU head pipeline";
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("mask_iou", [](const MaskArray& a, const MaskArray& b) {
    return mask_iou(to_mask(a), to_mask(b));
  }, py::arg("a"), py::arg("b"));
  m.def("box_iou", [](const std::array<double, 4>& a, const std::array<double, 4>& b) {
    return box_iou(to_box(a), to_box(b));
  }, py::arg("a"), py::arg("b"), "Boxes as (x, y, w, h).");
  m.def("binarize", [](const SoftArray& a, double threshold) {
    if (a.ndim() != 2) throw std::invalid_argument("soft mask must be 2-D");
    SoftMask s(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)),
               std::vector<double>(a.data(), a.data() + a.size()));
    return from_mask(binarize(s, threshold));
  }, py::arg("soft"), py::arg("threshold") = kDefaultBinarizeThreshold);
  m.def("rle_encode", [](const MaskArray& a) {
    return rle_to_json(rle_encode(to_mask(a))).dump();
  }, py::arg("mask"));
  m.def("rle_decode", [](const std::string& rle) {
    return from_mask(rle_decode(rle_from_json(nlohmann::json::parse(rle))));
  }, py::arg("rle_json"));
  m.def("pearson", [](const std::vector<double>& x, const std::vector<double>& y) {
    return pearson_correlation(x, y);
  }, py::arg("x"), py::arg("y"));
  m.def("evaluate_coco", [](const std::string& gt, const std::string& results,
                            const std::string& kind) {
    const auto gts = coco_gt_from_json(nlohmann::json::parse(gt));
    const auto preds = coco_results_from_json(nlohmann::json::parse(results));
    const ApSummary s = evaluate(preds, gts, EvalConfig(), iou_kind(kind));
    nlohmann::json per = nlohmann::json::object();
    for (const auto& [cat, r] : s.per_category) {
      double sum = 0.0;
      for (double v : r.ap_per_threshold) sum += v;
      per[std::to_string(cat)] = sum / static_cast<double>(r.ap_per_threshold.size());
    }
    return nlohmann::json{{"ap", s.ap}, {"ap50", s.ap50}, {"ap75", s.ap75},
                          {"per_category", per}}.dump();
  }, py::arg("gt_json"), py::arg("results_json"), py::arg("kind") = "mask");

  // Commands; each takes the config path plus the CLI overrides.
  m.def("load_config", [](const std::string& config, std::optional<std::uint64_t> seed,
                          std::optional<std::string> out) {
    return to_json(load(config, seed, out)).dump();
  }, py::arg("config"), py::arg("seed") = py::none(), py::arg("out") = py::none());
  m.def("gen", [](const std::string& config, std::optional<std::uint64_t> seed,
                  std::optional<std::string> out) {
    return cmd_gen(load(config, seed, out)).dump();
  }, py::arg("config"), py::arg("seed") = py::none(), py::arg("out") = py::none());
  m.def("train", [](const std::string& config, std::optional<std::uint64_t> seed,
                    std::optional<std::string> out) {
    const TrainResult r = cmd_train(load(config, seed, out));
    return nlohmann::json{{"num_samples", r.num_samples}, {"loss_curve", r.loss_curve}}.dump();
  }, py::arg("config"), py::arg("seed") = py::none(), py::arg("out") = py::none());
  m.def("evaluate", [](const std::string& config, const std::string& mode,
                       std::optional<std::uint64_t> seed, std::optional<std::string> out) {
    return to_json(cmd_eval(load(config, seed, out), eval_mode_from_string(mode))).dump();
  }, py::arg("config"), py::arg("mode") = "calibrated", py::arg("seed") = py::none(),
     py::arg("out") = py::none());
  m.def("ablate", [](const std::string& config, const std::string& which,
                     std::optional<std::uint64_t> seed, std::optional<std::string> out) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : cmd_ablate(load(config, seed, out), ablation_kind_from_string(which)))
      rows.push_back({{"label", r.label}, {"ap", r.mask.ap}, {"ap50", r.mask.ap50},
                      {"ap75", r.mask.ap75}, {"train_samples", r.train_samples}});
    return rows.dump();
  }, py::arg("config"), py::arg("which") = "target", py::arg("seed") = py::none(),
     py::arg("out") = py::none());
  m.def("report", [](const std::string& config, std::optional<std::uint64_t> seed,
                     std::optional<std::string> out) {
    return cmd_report(load(config, seed, out));
  }, py::arg("config"), py::arg("seed") = py::none(), py::arg("out") = py::none());
}
