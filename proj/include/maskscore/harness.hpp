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
// Orchestration behind the maskscore command line: config loading and the
// gen / train / eval / ablate / report commands.
#ifndef MASKSCORE_HARNESS_HPP_
#define MASKSCORE_HARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "maskscore/evaluation.hpp"
#include "maskscore/head.hpp"
#include "maskscore/scoring.hpp"
#include "maskscore/synth.hpp"

namespace maskscore {

// Bad or inconsistent configuration; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntimeError = 1;
inline constexpr int kExitConfigError = 2;

struct Paths {
  std::filesystem::path data;         // split files; empty: <out>
  std::filesystem::path out = "out";  // everything a command writes
  std::filesystem::path checkpoint;     // empty: <out>/checkpoint.json
  std::filesystem::path coco_gt;        // optional COCO import
  std::filesystem::path coco_results;

  std::filesystem::path data_dir() const;
  std::filesystem::path checkpoint_path() const;
};

struct RunConfig {
  std::uint64_t seed = 0;
  SimulatorConfig simulator;
  HeadConfig head;
  TrainConfig train;
  NmsConfig nms;
  EvalConfig eval;
  std::string eval_split = "test";
  int top_k = kDefaultTopK;
  Paths paths;
};

// Throws ConfigError for unknown keys, a missing seed or invalid values.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);
RunConfig load_run_config(const std::filesystem::path& path,
                          std::optional<std::uint64_t> seed_override = {},
                          std::optional<std::filesystem::path> out_override = {});

// 64-bit FNV-1a of the bytes, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);
// Hash of everything that determines the generated data.
std::string dataset_hash(const RunConfig& c);

// --- gen ------------------------------------------------------------------

struct SplitSpec {
  std::string name;
  int first_scene = 0;
  int num_scenes = 0;
};
std::vector<SplitSpec> split_layout(const SimulatorConfig& c);

// Writes <out>/{train,val,test}.jsonl and <out>/manifest.json.
nlohmann::json cmd_gen(const RunConfig& c);

// --- train ----------------------------------------------------------------

std::filesystem::path split_path(const RunConfig& c, const std::string& split);

// Training samples (setting #1 targets) from <data>/train.jsonl.
std::vector<TrainingSample> load_training_set(const RunConfig& c);

// Retargets the samples to c.train.target_setting, then trains.
TrainResult train_head(const RunConfig& c, std::vector<TrainingSample>& samples);

// Writes <out>/checkpoint.json and <out>/loss_curve.{csv,txt}.
TrainResult cmd_train(const RunConfig& c);

MaskIoUHead load_checkpoint(const std::filesystem::path& path);

// --- eval -----------------------------------------------------------------

enum class EvalMode { kBaseline, kCalibrated, kOracle };
std::string to_string(EvalMode m);
EvalMode eval_mode_from_string(const std::string& s);

// One final detection with its diagnostics.
struct ScoredDetection {
  int image_id = 0;
  int index = 0;
  int category_id = 0;
  double s_cls = 0.0;
  std::optional<double> s_iou;
  double mask_iou = 0.0;  // actual, best same-class gt
  double score = 0.0;
};

struct EvalOutputs {
  EvalReport report;
  ApSummary mask_summary;
  std::vector<ScoredDetection> scatter;
  nlohmann::json coco_results = nlohmann::json::array();
  nlohmann::json score_records = nlohmann::json::array();
  nlohmann::json coco_gt;
};

// Accumulates scenes for one mode. Calibrated mode needs a head; oracle
// mode uses it when given and treats a missing prediction as 1.
class Evaluator {
 public:
  Evaluator(EvalMode mode, const MaskIoUHead* head, const NmsConfig& nms,
            int top_k, const EvalConfig& config);
  void add(const SceneRecord& record);
  EvalOutputs finish() const;

 private:
  EvalMode mode_;
  const MaskIoUHead* head_;
  NmsConfig nms_;
  int top_k_;
  EvalConfig config_;
  std::vector<GroundTruth> gts_;
  std::vector<Prediction> preds_;
  std::vector<Prediction> upper_;
  std::vector<ScoredDetection> scored_;
  std::map<int, std::pair<int, int>> sizes_;
  nlohmann::json results_ = nlohmann::json::array();
  nlohmann::json score_records_ = nlohmann::json::array();
};

// Streams <data>/<split>.jsonl through one evaluator per mode.
std::vector<EvalOutputs> evaluate_split(const RunConfig& c,
                                        const std::string& split,
                                        const std::vector<EvalMode>& modes,
                                        const MaskIoUHead* head);

// Writes report.json, pr_curve, correlation_scatter, score_hist tables and
// the COCO files under `dir`.
void write_eval_outputs(const EvalOutputs& o, const EvalConfig& config,
                        const std::filesystem::path& dir);

// Evaluates the configured split into <out>/<mode>/. With paths.coco_gt and
// paths.coco_results set it evaluates those files instead into <out>/coco/.
EvalReport cmd_eval(const RunConfig& c, EvalMode mode);

// --- ablate ---------------------------------------------------------------

enum class AblationKind { kFusion, kTarget, kTau };
std::string to_string(AblationKind k);
AblationKind ablation_kind_from_string(const std::string& s);

struct AblationRow {
  std::string label;
  ApTriple mask;
  std::size_t train_samples = 0;
};

// Variants of the base config for one sweep, with their labels.
std::vector<std::pair<std::string, RunConfig>> ablation_variants(
    const RunConfig& base, AblationKind kind);

// Trains and evaluates (calibrated) each variant with the shared seed;
// writes <out>/ablation_<kind>.{csv,txt}.
std::vector<AblationRow> cmd_ablate(const RunConfig& c, AblationKind kind);

// --- report ---------------------------------------------------------------

// Reads <out>/{baseline,calibrated}/ (oracle optional) and writes
// <out>/report.md and <out>/summary.{csv,txt}. Returns the markdown.
std::string cmd_report(const RunConfig& c);

// --- tables ---------------------------------------------------------------

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
std::string format_number(double v, int precision = 6);
std::string to_csv(const Table& t);
std::string to_aligned_text(const Table& t);
// <stem>.csv and <stem>.txt
void write_table(const Table& t, const std::filesystem::path& stem);

}  // namespace maskscore

#endif  // MASKSCORE_HARNESS_HPP_
