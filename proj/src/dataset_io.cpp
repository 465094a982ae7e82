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
// JSON-lines dataset files. Line one is a header carrying the simulator
// config; every further line is one scene with its ground truth, simulated
// detections and feature planes.
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "maskscore/synth.hpp"

namespace maskscore {

namespace {

using json = nlohmann::json;

constexpr char kAlphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
constexpr int kMaskBits = 8;

static_assert(std::endian::native == std::endian::little,
              "feature planes are serialized as little-endian float32");

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

// Soft masks are stored as 8 bit-planes of round(255 * p), each RLE coded.
json soft_mask_to_json(const SoftMask& m) {
  json planes = json::array();
  std::vector<int> q(m.values().size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    q[i] = static_cast<int>(std::lround(m.values()[i] * 255.0));
  }
  for (int b = 0; b < kMaskBits; ++b) {
    BinaryMask plane(m.width(), m.height());
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x)
        if ((q[static_cast<std::size_t>(y) * m.width() + x] >> b) & 1)
          plane.set(x, y, true);
    planes.push_back(rle_to_json(rle_encode(plane)));
  }
  return planes;
}

SoftMask soft_mask_from_json(const json& planes) {
  if (!planes.is_array() || planes.size() != kMaskBits) {
    throw std::runtime_error("dataset: mask_planes must hold 8 RLE planes");
  }
  std::vector<int> q;
  int w = 0, h = 0;
  for (int b = 0; b < kMaskBits; ++b) {
    const BinaryMask plane = rle_decode(rle_from_json(planes[b]));
    if (b == 0) {
      w = plane.width();
      h = plane.height();
      q.assign(static_cast<std::size_t>(w) * h, 0);
    } else if (plane.width() != w || plane.height() != h) {
      throw std::runtime_error("dataset: mask planes differ in size");
    }
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (plane.bits()[i]) q[i] |= 1 << b;
    }
  }
  std::vector<double> v(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] > 255) throw std::runtime_error("dataset: mask value > 255");
    v[i] = q[i] / 255.0;
  }
  return SoftMask(w, h, std::move(v));
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t v = bytes[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) {
    throw std::invalid_argument("base64: length is not a multiple of 4");
  }
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int vals[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=') {
        if (i + 4 != text.size() || k < 2) {
          throw std::invalid_argument("base64: misplaced padding");
        }
        vals[k] = 0;
        ++pad;
      } else {
        if (pad) throw std::invalid_argument("base64: misplaced padding");
        vals[k] = decode_char(c);
        if (vals[k] < 0) throw std::invalid_argument("base64: bad character");
      }
    }
    const std::uint32_t v =
        (vals[0] << 18) | (vals[1] << 12) | (vals[2] << 6) | vals[3];
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

json record_to_json(const SceneRecord& record) {
  const Scene& s = record.scene;
  const std::size_t plane = static_cast<std::size_t>(s.width) * s.height;
  json planes = json::array();
  for (int c = 0; c < kNumFeaturePlanes; ++c) {
    std::vector<std::uint8_t> bytes(plane * sizeof(float));
    std::memcpy(bytes.data(), s.planes.data() + c * plane, bytes.size());
    planes.push_back(base64_encode(bytes));
  }
  json instances = json::array();
  for (const auto& gt : s.instances) {
    instances.push_back({{"category_id", gt.category_id},
                         {"bbox", bbox_to_json(gt.box)},
                         {"segmentation", rle_to_json(rle_encode(gt.mask))}});
  }
  json dets = json::array();
  for (const auto& d : record.detections) {
    dets.push_back({{"index", d.index},
                    {"category_id", d.category_id},
                    {"bbox", bbox_to_json(d.box)},
                    {"score", d.s_cls},
                    {"mask_planes", soft_mask_to_json(d.soft_mask)}});
  }
  return {{"scene_id", s.id},
          {"width", s.width},
          {"height", s.height},
          {"features",
           {{"channels", kNumFeaturePlanes},
            {"dtype", "float32le"},
            {"encoding", "base64"},
            {"planes", planes}}},
          {"instances", instances},
          {"detections", dets}};
}

SceneRecord record_from_json(const json& j) {
  SceneRecord rec;
  Scene& s = rec.scene;
  s.id = j.at("scene_id").get<int>();
  s.width = j.at("width").get<int>();
  s.height = j.at("height").get<int>();
  const auto& f = j.at("features");
  if (f.at("channels").get<int>() != kNumFeaturePlanes ||
      f.at("dtype").get<std::string>() != "float32le") {
    throw std::runtime_error("dataset: unsupported feature plane layout");
  }
  const std::size_t plane = static_cast<std::size_t>(s.width) * s.height;
  s.planes.resize(plane * kNumFeaturePlanes);
  for (int c = 0; c < kNumFeaturePlanes; ++c) {
    const auto bytes = base64_decode(f.at("planes").at(c).get<std::string>());
    if (bytes.size() != plane * sizeof(float)) {
      throw std::runtime_error("dataset: feature plane has wrong size");
    }
    std::memcpy(s.planes.data() + c * plane, bytes.data(), bytes.size());
  }
  for (const auto& g : j.at("instances")) {
    GtInstance gt;
    gt.category_id = g.at("category_id").get<int>();
    gt.box = bbox_from_json(g.at("bbox"));
    gt.mask = rle_decode(rle_from_json(g.at("segmentation")));
    s.instances.push_back(std::move(gt));
  }
  for (const auto& e : j.at("detections")) {
    Detection d;
    d.index = e.at("index").get<int>();
    d.category_id = e.at("category_id").get<int>();
    d.box = bbox_from_json(e.at("bbox"));
    d.s_cls = e.at("score").get<double>();
    d.soft_mask = soft_mask_from_json(e.at("mask_planes"));
    rec.detections.push_back(std::move(d));
  }
  return rec;
}

json dataset_header(const SimulatorConfig& config, const std::string& split,
                    int first_scene, int num_scenes) {
  return {{"schema", kDatasetSchema},
          {"split", split},
          {"first_scene", first_scene},
          {"num_scenes", num_scenes},
          {"simulator", to_json(config)}};
}

void write_split(std::ostream& os, const SimulatorConfig& config,
                 const std::string& split, int first_scene, int num_scenes) {
  os << dataset_header(config, split, first_scene, num_scenes).dump() << '\n';
  for (int i = 0; i < num_scenes; ++i) {
    os << record_to_json(generate_record(config, first_scene + i)).dump()
       << '\n';
  }
}

json read_split(std::istream& is,
                const std::function<void(SceneRecord&&)>& fn) {
  std::string line;
  if (!std::getline(is, line)) {
    throw std::runtime_error("dataset: empty file");
  }
  json header = json::parse(line);
  if (!header.contains("schema") ||
      header.at("schema").get<std::string>() != kDatasetSchema) {
    throw std::runtime_error(std::string("dataset: expected schema '") +
                             kDatasetSchema + "'");
  }
  int count = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    fn(record_from_json(json::parse(line)));
    ++count;
  }
  if (count != header.at("num_scenes").get<int>()) {
    throw std::runtime_error("dataset: header announces " +
                             std::to_string(header.at("num_scenes").get<int>()) +
                             " scenes, file holds " + std::to_string(count));
  }
  return header;
}

}  // namespace maskscore
