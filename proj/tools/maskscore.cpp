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
// maskscore gen|train|eval|ablate|report --config <path> [--seed N] [--out DIR]
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "maskscore/harness.hpp"

namespace {

using maskscore::RunConfig;

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "Run config (JSON)")->required();
  cmd->add_option("--seed", args.seed, "Override the config seed");
  cmd->add_option("--out", args.out, "Override the output directory");
}

RunConfig load(const CommonArgs& args) {
  std::optional<std::filesystem::path> out;
  if (args.out) out = *args.out;
  return maskscore::load_run_config(args.config, args.seed, out);
}

std::string pct(double v) { return maskscore::format_number(100.0 * v, 2); }

void print_report(const maskscore::EvalReport& r) {
  std::cout << r.mode << ": AP_m " << pct(r.mask.ap) << "  AP_m@0.5 " << pct(r.mask.ap50)
            << "  AP_m@0.75 " << pct(r.mask.ap75) << "  AP_b " << pct(r.box.ap);
  if (r.pearson_r) std::cout << "  r " << maskscore::format_number(*r.pearson_r, 3);
  std::cout << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mask scoring: synthetic benchmark, MaskIoU head, evaluation"};
  app.require_subcommand(1);

  CommonArgs gen_args, train_args, eval_args, ablate_args, report_args;
  std::string mode = "calibrated";
  std::string which = "target";

  auto* gen = app.add_subcommand("gen", "Generate the train/val/test splits");
  add_common(gen, gen_args);
  auto* train = app.add_subcommand("train", "Train the MaskIoU head");
  add_common(train, train_args);
  auto* eval = app.add_subcommand("eval", "Evaluate a split");
  add_common(eval, eval_args);
  eval->add_option("--mode", mode, "baseline, calibrated or oracle");
  auto* ablate = app.add_subcommand("ablate", "Run one ablation sweep");
  add_common(ablate, ablate_args);
  ablate->add_option("--which", which, "fusion, target or tau");
  auto* report = app.add_subcommand("report", "Consolidate eval outputs");
  add_common(report, report_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return maskscore::kExitConfigError;
  }

  try {
    if (gen->parsed()) {
      const RunConfig c = load(gen_args);
      const auto manifest = maskscore::cmd_gen(c);
      std::cout << "wrote splits to " << c.paths.out.string() << " (config hash "
                << manifest.at("config_hash").get<std::string>() << ")\n";
    } else if (train->parsed()) {
      const RunConfig c = load(train_args);
      const auto r = maskscore::cmd_train(c);
      std::cout << "trained on " << r.num_samples << " samples, final loss "
                << maskscore::format_number(r.loss_curve.back(), 6) << "\n";
    } else if (eval->parsed()) {
      const RunConfig c = load(eval_args);
      print_report(maskscore::cmd_eval(c, maskscore::eval_mode_from_string(mode)));
    } else if (ablate->parsed()) {
      const RunConfig c = load(ablate_args);
      const auto rows =
          maskscore::cmd_ablate(c, maskscore::ablation_kind_from_string(which));
      for (const auto& r : rows) {
        std::cout << r.label << ": AP " << pct(r.mask.ap) << "  AP@0.5 "
                  << pct(r.mask.ap50) << "  AP@0.75 " << pct(r.mask.ap75) << "\n";
      }
    } else if (report->parsed()) {
      std::cout << maskscore::cmd_report(load(report_args));
    }
  } catch (const maskscore::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return maskscore::kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return maskscore::kExitRuntimeError;
  }
  return maskscore::kExitOk;
}
