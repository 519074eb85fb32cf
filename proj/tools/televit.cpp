/*
 * Copyright 2026 The TeleViT-cpp Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// televit: synth | train | evaluate | predict | inspect
//
// Exit codes: 0 ok, 1 unexpected, 2 config, 3 io, 4 input domain,
// 5 numeric, 6 contract, 7 undefined metric, 8 sample unavailable.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "televit/commands.hpp"

namespace {

int ExitCode(televit::ErrorCategory c) {
  using televit::ErrorCategory;
  switch (c) {
    case ErrorCategory::kConfig: return 2;
    case ErrorCategory::kIo: return 3;
    case ErrorCategory::kInputDomain: return 4;
    case ErrorCategory::kNumeric: return 5;
    case ErrorCategory::kContract: return 6;
    case ErrorCategory::kUndefinedMetric: return 7;
    case ErrorCategory::kSampleUnavailable: return 8;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Seasonal wildfire forecasting with teleconnection-aware vision transformers"};
  app.require_subcommand(1);

  std::optional<std::string> config_file;
  std::vector<std::string> overrides;
  std::optional<std::size_t> jobs;
  app.add_option("-c,--config", config_file, "JSON run configuration");
  app.add_option("--set", overrides, "Override a config key, e.g. --set train.lr=3e-4")->take_all();
  app.add_option("--jobs", jobs, "Horizons trained in parallel");

  std::optional<std::string> synth_out;
  auto* synth = app.add_subcommand("synth", "Write a synthetic cube");
  synth->add_option("--out", synth_out, "Cube directory (default: cube.path)");

  televit::TrainOptions train_opts;
  auto* train = app.add_subcommand("train", "Train one model per horizon");
  train->add_flag("--resume", train_opts.resume, "Continue from last.ckpt where present");
  train->add_option("--stop-after-epoch", train_opts.stop_after_epoch,
                    "Pause after this epoch (resumable)");

  std::optional<std::string> eval_ckpt;
  televit::EvaluateOptions eval_opts;
  auto* evaluate = app.add_subcommand("evaluate", "AUPRC report for model and climatology");
  evaluate->add_option("--checkpoints", eval_ckpt, "Run directory holding h<h>/best.ckpt");
  evaluate->add_flag("--climatology-only", eval_opts.climatology_only, "Skip the model");

  std::optional<std::string> pred_ckpt;
  televit::PredictOptions pred_opts;
  auto* predict = app.add_subcommand("predict", "Whole-grid forecast for one date");
  predict->add_option("--checkpoints", pred_ckpt, "Run directory holding h<h>/best.ckpt");
  predict->add_option("--date", pred_opts.date, "Input date YYYY-MM-DD");
  predict->add_option("--t", pred_opts.t, "Input time step");
  predict->add_option("--horizon", pred_opts.horizon, "Lead time in 8-day steps");
  predict->add_option("--mask-below", pred_opts.mask_below,
                      "Also write scores_masked.npy with scores below this value as NaN");

  std::optional<std::string> insp_ckpt;
  std::vector<std::string> insp_samples;
  auto* inspect = app.add_subcommand("inspect", "Attention roll-out and integrated gradients");
  inspect->add_option("--checkpoints", insp_ckpt, "Run directory holding h<h>/best.ckpt");
  inspect->add_option("--sample", insp_samples, "<date|t>:<row>:<col>, repeatable");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    std::optional<std::filesystem::path> file;
    if (config_file) file = *config_file;
    if (jobs) overrides.push_back("jobs=" + std::to_string(*jobs));
    const televit::RunConfig run = televit::LoadRunConfig(file, overrides);

    if (synth->parsed()) {
      televit::SynthOptions o;
      if (synth_out) o.out = *synth_out;
      televit::CmdSynth(run, o, std::cout);
    } else if (train->parsed()) {
      televit::CmdTrain(run, train_opts, std::cout);
    } else if (evaluate->parsed()) {
      if (eval_ckpt) eval_opts.checkpoint_dir = *eval_ckpt;
      televit::CmdEvaluate(run, eval_opts, std::cout);
    } else if (predict->parsed()) {
      if (pred_ckpt) pred_opts.checkpoint_dir = *pred_ckpt;
      televit::CmdPredict(run, pred_opts, std::cout);
    } else if (inspect->parsed()) {
      televit::InspectOptions o;
      if (insp_ckpt) o.checkpoint_dir = *insp_ckpt;
      for (const auto& s : insp_samples) o.extra_samples.push_back(televit::ParseSelectorString(s));
      televit::CmdInspect(run, o, std::cout);
    }
  } catch (const televit::Error& e) {
    std::cerr << "error [" << televit::CategoryName(e.category()) << "]: " << e.what() << "\n";
    return ExitCode(e.category());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error [io]: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error [internal]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
