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

#include "televit/commands.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "televit/checkpoint.hpp"
#include "televit/evaluation.hpp"
#include "televit/inspection.hpp"
#include "televit/npy.hpp"
#include "televit/synthetic.hpp"
#include "televit/training.hpp"
#include "televit/zarr.hpp"

namespace televit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

fs::path HorizonDir(const fs::path& root, std::size_t h) { return root / ("h" + std::to_string(h)); }

void WriteText(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("short write to " + path.string());
  }
  fs::rename(tmp, path);
}

void WriteManifest(const fs::path& dir, const std::string& command, const RunConfig& run,
                   json body) {
  body["command"] = command;
  body["tool_version"] = kToolVersion;
  body["seed"] = run.seed;
  body["config"] = run.resolved;
  WriteText(dir / "manifest.json", body.dump(2) + "\n");
}

CubeStore OpenCube(const RunConfig& run) {
  if (run.cube_path.empty()) throw ConfigError("'cube.path' must be set");
  if (!fs::exists(run.cube_path)) throw IoError("cube " + run.cube_path.string() + " does not exist");
  return OpenZarrCube(run.cube_path, run.schema);
}

// Deterministic subset of at most `limit` samples, kept in enumeration order.
std::vector<SampleIndex> Subsample(std::vector<SampleIndex> samples, std::size_t limit,
                                   std::uint64_t seed) {
  if (limit == 0 || samples.size() <= limit) return samples;
  std::vector<std::size_t> order(samples.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(limit);
  std::sort(order.begin(), order.end());
  std::vector<SampleIndex> out;
  out.reserve(limit);
  for (auto k : order) out.push_back(samples[k]);
  return out;
}

std::vector<SampleIndex> SplitSamples(const CubeStore& cube, const RunConfig& run, Split split,
                                      std::size_t h, std::size_t limit) {
  auto e = EnumerateSamples(cube, run.splits, split, h, run.sample);
  return Subsample(std::move(e.samples), limit, HorizonSeed(run.seed, h) ^ static_cast<std::uint64_t>(split));
}

json SampleJson(const SampleIndex& idx, int start_year) {
  return {{"t", idx.t},
          {"date", StepToDate(idx.t, start_year)},
          {"patch_row", idx.patch_row},
          {"patch_col", idx.patch_col},
          {"horizon", idx.horizon}};
}

struct LoadedModel {
  std::unique_ptr<TeleViT> model;
  NormalizationStats stats;
  std::string id;
};

LoadedModel LoadModel(const fs::path& dir, std::size_t h, const CubeStore& cube) {
  const fs::path path = HorizonDir(dir, h) / "best.ckpt";
  if (!fs::exists(path)) {
    throw IoError("no checkpoint for horizon " + std::to_string(h) + " at " + path.string());
  }
  const Checkpoint ck = LoadCheckpoint(path);
  if (!ck.data_fingerprint.empty() && ck.data_fingerprint != cube.fingerprint()) {
    throw ContractViolation("checkpoint " + path.string() + " was trained on a different cube (" +
                            ck.data_fingerprint + " vs " + cube.fingerprint() + ")");
  }
  LoadedModel m;
  m.model = std::make_unique<TeleViT>(ModelFromCheckpoint(ck));
  m.stats = StatsFromJson(ck.metadata.at("stats"));
  m.id = path.string() + "@epoch" + std::to_string(ck.epoch);
  return m;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first error.
template <typename Fn>
void RunJobs(std::size_t n, std::size_t jobs, Fn fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr first;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(jobs, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!first) first = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

// Drops log records past a resume point so the file matches an uninterrupted run.
void TruncateLog(const fs::path& path, std::size_t step, std::size_t epochs_done) {
  if (!fs::exists(path)) return;
  std::ifstream in(path);
  std::string line, kept;
  while (std::getline(in, line)) {
    const json r = json::parse(line, nullptr, false);
    if (r.is_discarded()) continue;
    const bool keep = r.value("type", "") == "step" ? r.value("step", std::size_t{0}) < step
                                                    : r.value("epoch", std::size_t{0}) <= epochs_done;
    if (keep) kept += line + "\n";
  }
  in.close();
  WriteText(path, kept);
}

}  // namespace

std::string VariantName(bool use_global, bool use_indices) {
  if (use_global && use_indices) return "televit_ig";
  if (use_global) return "televit_g";
  if (use_indices) return "televit_i";
  return "vit";
}

SampleSelector ParseSelectorString(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() != 3) throw ConfigError("sample selector '" + text + "' is not <date|t>:<row>:<col>");
  SampleSelector s;
  try {
    if (parts[0].find('-') != std::string::npos) {
      s.date = parts[0];
    } else {
      s.t = std::stoull(parts[0]);
    }
    s.patch_row = std::stoull(parts[1]);
    s.patch_col = std::stoull(parts[2]);
  } catch (const std::logic_error&) {
    throw ConfigError("sample selector '" + text + "' has a non-numeric field");
  }
  return s;
}

SampleIndex ResolveSelector(const SampleSelector& selector, const CubeStore& cube,
                            std::size_t horizon) {
  SampleIndex idx;
  idx.t = selector.date ? DateToStep(*selector.date, cube.start_year(), cube.n_time())
                        : selector.t.value_or(0);
  if (!selector.date && !selector.t) throw ConfigError("sample selector names no time");
  if (idx.t >= cube.n_time()) throw InputDomainError("time step " + std::to_string(idx.t) + " outside the cube");
  idx.patch_row = selector.patch_row;
  idx.patch_col = selector.patch_col;
  idx.horizon = horizon;
  return idx;
}

fs::path CmdSynth(const RunConfig& run, const SynthOptions& options, std::ostream& out) {
  const fs::path target = options.out    ? *options.out
                          : !run.cube_path.empty() ? run.cube_path
                                                   : run.output / "cube.zarr";
  SyntheticConfig sc = run.synth;
  sc.materialize = false;  // planes are produced one at a time while writing
  const CubeStore cube = MakeSyntheticCube(sc);
  if (fs::exists(target)) fs::remove_all(target);
  WriteZarrCube(cube, target, run.synth_compressor == "none" ? "" : run.synth_compressor);
  // Round trip through the loader before declaring success.
  CubeSchema schema;
  const CubeStore reopened = OpenZarrCube(target, schema);
  if (reopened.fingerprint() != cube.fingerprint()) {
    throw ContractViolation("written cube does not reload identically");
  }
  const std::string checksum = DirectoryChecksum(target);
  fs::create_directories(run.output);
  WriteManifest(run.output / "synth", "synth", run,
                {{"cube", fs::absolute(target).string()},
                 {"checksum", checksum},
                 {"fingerprint", cube.fingerprint()},
                 {"fire_threshold", SyntheticFireThreshold(sc)},
                 {"shape", {cube.n_time(), cube.n_lat(), cube.n_lon()}}});
  out << "synth: wrote " << target.string() << " (checksum " << checksum << ")\n";
  return target;
}

void CmdTrain(const RunConfig& run, const TrainOptions& options, std::ostream& out) {
  const CubeStore cube = OpenCube(run);
  const ModelConfig model_config = MakeModelConfig(run, cube);

  // Validate every horizon before any work starts.
  std::vector<std::vector<SampleIndex>> train_sets, val_sets;
  for (std::size_t h : run.horizons) {
    train_sets.push_back(SplitSamples(cube, run, Split::kTrain, h, run.max_train_samples));
    val_sets.push_back(SplitSamples(cube, run, Split::kVal, h, run.max_val_samples));
    if (train_sets.back().empty() || val_sets.back().empty()) {
      throw ConfigError("horizon " + std::to_string(h) + " has no " +
                        (train_sets.back().empty() ? "training" : "validation") +
                        " samples in the configured split years");
    }
  }

  const NormalizationStats stats = ComputeStats(cube, run.splits.train, run.sample);
  fs::create_directories(run.output);
  WriteText(run.output / "stats.json", StatsToJson(stats).dump(2) + "\n");
  const std::string variant = VariantName(run.use_global, run.use_indices);
  std::mutex out_mu;

  RunJobs(run.horizons.size(), run.jobs, [&](std::size_t job) {
    const std::size_t h = run.horizons[job];
    const fs::path dir = HorizonDir(run.output, h);
    fs::create_directories(dir);
    const SampleExtractor extractor(cube, stats, run.sample);
    const ExtractorSampleSource train_src(extractor, train_sets[job]);
    const ExtractorSampleSource val_src(extractor, val_sets[job]);

    TrainConfig tc = run.train;
    tc.seed = HorizonSeed(run.seed, h);
    tc.horizon = h;
    tc.stop_after_epoch = options.stop_after_epoch;
    TeleViT model(model_config, tc.seed);

    const auto decorate = [&](Checkpoint& ck) {
      ck.config["run"] = run.resolved;
      ck.data_fingerprint = cube.fingerprint();
      ck.stats_fingerprint = stats.fingerprint();
      ck.metadata["stats"] = StatsToJson(stats);
      ck.metadata["horizon"] = h;
      ck.metadata["seed"] = tc.seed;
      ck.metadata["root_seed"] = run.seed;
      ck.metadata["variant"] = variant;
    };

    std::optional<TrainResult> resume;
    const fs::path log_path = dir / "train_log.jsonl";
    if (options.resume && fs::exists(dir / "last.ckpt")) {
      const Checkpoint last = LoadCheckpoint(dir / "last.ckpt");
      if (last.metadata.value("finished", false)) {
        std::lock_guard lock(out_mu);
        out << "train: horizon " << h << " already complete\n";
        return;
      }
      const Checkpoint best = LoadCheckpoint(dir / "best.ckpt");
      resume = ResumeState(last, best);
      TruncateLog(log_path, last.metadata.at("step"), last.metadata.at("epochs_done"));
    }
    std::ofstream log(log_path, resume ? std::ios::app : std::ios::trunc);
    if (!log) throw IoError("cannot write " + log_path.string());

    const auto save = [&](const TrainResult& r) {
      Checkpoint best = r.best, last = r.last;
      decorate(best);
      decorate(last);
      SaveCheckpoint(best, dir / "best.ckpt");
      SaveCheckpoint(last, dir / "last.ckpt");
    };
    const TrainResult result =
        Train(model, train_src, val_src, tc, &log, resume ? &*resume : nullptr, save);
    save(result);

    json epochs = json::array();
    for (const auto& e : result.epochs) {
      epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}});
    }
    WriteManifest(dir, "train", run,
                  {{"horizon", h},
                   {"horizon_seed", tc.seed},
                   {"variant", variant},
                   {"parameters", model.parameter_count()},
                   {"train_samples", train_sets[job].size()},
                   {"val_samples", val_sets[job].size()},
                   {"best_epoch", result.best_epoch},
                   {"finished", result.finished},
                   {"epochs", epochs},
                   {"data_fingerprint", cube.fingerprint()},
                   {"stats_fingerprint", stats.fingerprint()},
                   {"outputs", {"best.ckpt", "last.ckpt", "train_log.jsonl"}}});
    std::lock_guard lock(out_mu);
    out << "train: horizon " << h << " " << (result.finished ? "done" : "paused") << ", best epoch "
        << result.best_epoch << " (val loss " << result.epochs.at(result.best_epoch - 1).val_loss
        << ")\n";
  });
}

void CmdEvaluate(const RunConfig& run, const EvaluateOptions& options, std::ostream& out) {
  const CubeStore cube = OpenCube(run);
  const ClimatologyTable table = BuildClimatology(cube, run.splits.train);
  const fs::path ckpt_dir = options.checkpoint_dir.value_or(run.output);
  const fs::path eval_dir = run.output / "eval";
  fs::create_directories(eval_dir);
  const std::size_t p = run.sample.local_patch;
  const std::size_t n_lon = cube.n_lon();
  const auto& regions = cube.region_mask();

  std::ostringstream report;
  report << "model\thorizon\tregion\tauprc\tn_pos\tn_total\n";
  json summary = json::array();
  const auto emit = [&](const std::string& model, std::size_t h, const std::vector<double>& scores,
                        const std::vector<std::uint8_t>& labels,
                        const std::vector<std::int32_t>& region_ids) {
    const RegionalReport r = MakeRegionalReport(scores, labels, region_ids);
    const auto row = [&](const RegionScore& s) {
      report << model << '\t' << h << '\t' << s.name << '\t';
      if (s.auprc) {
        report << *s.auprc;
      } else {
        report << "null";
      }
      report << '\t' << s.n_pos << '\t' << s.n_total << '\n';
    };
    row(r.global);
    for (const auto& s : r.regions) row(s);
    summary.push_back({{"model", model},
                       {"horizon", h},
                       {"auprc", r.global.auprc ? json(*r.global.auprc) : json(nullptr)},
                       {"n_pos", r.global.n_pos},
                       {"n_total", r.global.n_total}});
    const std::string stem = model + "_h" + std::to_string(h);
    if (r.global.n_pos > 0) {
      const PRCurve curve = PrecisionRecallCurve(scores, labels);
      std::ostringstream pr;
      pr << "recall\tprecision\n";
      for (const auto& pt : curve.points) pr << pt.recall << '\t' << pt.precision << '\n';
      WriteText(eval_dir / ("pr_" + stem + ".tsv"), pr.str());
    }
    const Histogram hist = ScoreHistogram(scores, run.histogram_bins);
    std::ostringstream hs;
    hs << "lower\tupper\tcount\n";
    for (std::size_t b = 0; b < hist.counts.size(); ++b) {
      hs << hist.edges[b] << '\t' << hist.edges[b + 1] << '\t' << hist.counts[b] << '\n';
    }
    WriteText(eval_dir / ("hist_" + stem + ".tsv"), hs.str());
    out << "evaluate: " << model << " h=" << h << " AUPRC "
        << (r.global.auprc ? std::to_string(*r.global.auprc) : std::string("null")) << " ("
        << r.global.n_pos << "/" << r.global.n_total << " positive)\n";
  };

  json models = json::array();
  for (std::size_t h : run.horizons) {
    const auto samples = SplitSamples(cube, run, Split::kTest, h, run.max_test_samples);
    if (samples.empty()) throw ConfigError("horizon " + std::to_string(h) + " has no test samples");
    std::optional<LoadedModel> loaded;
    std::optional<SampleExtractor> extractor;
    std::string model_name;
    if (!options.climatology_only) {
      loaded = LoadModel(ckpt_dir, h, cube);
      extractor.emplace(cube, loaded->stats, run.sample);
      model_name = VariantName(loaded->model->config().use_global, loaded->model->config().use_indices);
      models.push_back({{"horizon", h}, {"model", model_name}, {"checkpoint", loaded->id}});
    }
    std::vector<double> clim, model_scores;
    std::vector<std::uint8_t> labels;
    std::vector<std::int32_t> region_ids;
    for (const auto& idx : samples) {
      const PlaneView target = cube.burned_area().plane(idx.t + idx.horizon);
      const std::size_t week = cube.week_of_year(idx.t + idx.horizon);
      std::optional<PredictionMap> map;
      if (loaded) {
        const Sample s = extractor->extract(idx);
        map = MakePredictionMap(loaded->model->forward(s).logits, s.land);
      }
      for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
          const std::size_t row = idx.patch_row * p + i, col = idx.patch_col * p + j;
          if (!cube.is_land(row, col)) continue;
          const std::size_t g = row * n_lon + col;
          clim.push_back(table.at(row, col, week));
          labels.push_back(target.values[g] > 0.0f ? 1 : 0);
          region_ids.push_back(regions.empty() ? 0 : regions[g]);
          if (map) model_scores.push_back(map->score(i, j));
        }
      }
    }
    emit("climatology", h, clim, labels, region_ids);
    if (loaded) emit(model_name, h, model_scores, labels, region_ids);
  }
  WriteText(eval_dir / "report.tsv", report.str());
  WriteManifest(eval_dir, "evaluate", run,
                {{"climatology_only", options.climatology_only},
                 {"checkpoints", models},
                 {"summary", summary},
                 {"data_fingerprint", cube.fingerprint()},
                 {"outputs", {"report.tsv"}}});
}

void CmdPredict(const RunConfig& run, const PredictOptions& options, std::ostream& out) {
  if (options.date.has_value() == options.t.has_value()) {
    throw ConfigError("predict needs exactly one of --date or --t");
  }
  const CubeStore cube = OpenCube(run);
  const std::size_t t = options.date ? DateToStep(*options.date, cube.start_year(), cube.n_time())
                                     : *options.t;
  if (t >= cube.n_time()) throw InputDomainError("time step " + std::to_string(t) + " outside the cube");
  const std::size_t h = options.horizon;
  const LoadedModel loaded = LoadModel(options.checkpoint_dir.value_or(run.output), h, cube);
  const SampleExtractor extractor(cube, loaded.stats, run.sample);
  const std::size_t rows = PatchRows(cube, run.sample), cols = PatchCols(cube, run.sample);
  std::vector<PatchPrediction> patches;
  json skipped = json::array();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      // Inputs do not depend on the horizon; the checkpoint does. Using h=0
      // here lets the forecast target lie beyond the end of the cube.
      const SampleIndex idx{t, r, c, 0};
      if (auto reason = extractor.unavailable_reason(idx)) {
        skipped.push_back({{"patch_row", r}, {"patch_col", c}, {"reason", *reason}});
        continue;
      }
      bool any_land = false;
      for (std::size_t i = 0; i < run.sample.local_patch && !any_land; ++i) {
        for (std::size_t j = 0; j < run.sample.local_patch && !any_land; ++j) {
          any_land = cube.is_land(r * run.sample.local_patch + i, c * run.sample.local_patch + j);
        }
      }
      if (!any_land) continue;
      const Sample s = extractor.extract(idx);
      patches.push_back({r, c, MakePredictionMap(loaded.model->forward(s).logits, s.land)});
    }
  }
  const PredictionMap globe = AssembleGlobe(patches, rows, cols, run.sample.local_patch);
  const std::string date = StepToDate(t, cube.start_year());
  const fs::path dir = run.output / "predict" / ("h" + std::to_string(h) + "_" + date);
  WriteNpy(dir / "scores.npy", std::span<const double>(globe.scores), {globe.rows, globe.cols});
  WriteNpy(dir / "valid.npy", std::span<const std::uint8_t>(globe.valid), {globe.rows, globe.cols});
  json outputs = {"scores.npy", "valid.npy"};
  json extra = {{"t", t},
                {"date", date},
                {"horizon", h},
                {"target_t", t + h},
                {"model", loaded.id},
                {"patches", patches.size()},
                {"skipped", skipped}};
  if (options.mask_below) {
    // Display copy: low scores and invalid cells become NaN.
    std::vector<double> masked(globe.scores);
    for (std::size_t k = 0; k < masked.size(); ++k) {
      if (!globe.valid[k] || masked[k] < *options.mask_below) {
        masked[k] = std::numeric_limits<double>::quiet_NaN();
      }
    }
    WriteNpy(dir / "scores_masked.npy", std::span<const double>(masked), {globe.rows, globe.cols});
    outputs.push_back("scores_masked.npy");
    extra["mask_below"] = *options.mask_below;
  }
  extra["outputs"] = outputs;
  WriteManifest(dir, "predict", run, extra);
  out << "predict: " << patches.size() << " patches at " << date << " (h=" << h << ") -> "
      << dir.string() << "\n";
}

void CmdInspect(const RunConfig& run, const InspectOptions& options, std::ostream& out) {
  std::vector<SampleSelector> selectors = run.inspect_samples;
  selectors.insert(selectors.end(), options.extra_samples.begin(), options.extra_samples.end());
  if (selectors.empty()) throw ConfigError("inspect needs at least one sample selector");
  const CubeStore cube = OpenCube(run);
  const fs::path ckpt_dir = options.checkpoint_dir.value_or(run.output);
  const fs::path root = run.output / "inspect";
  json summary = json::array();

  for (std::size_t h : run.horizons) {
    LoadedModel loaded = LoadModel(ckpt_dir, h, cube);
    const SampleExtractor extractor(cube, loaded.stats, run.sample);
    const ModelConfig& mc = loaded.model->config();
    TokenTypeAccumulator pooled;
    for (const auto& sel : selectors) {
      const SampleIndex idx = ResolveSelector(sel, cube, h);
      const Sample s = extractor.extract(idx);  // SampleUnavailable carries the reason
      const auto fwd = loaded.model->forward(s, nullptr, true);
      const RolloutMatrix a = run.raw_last_layer ? LastLayerAttention(*fwd.attention)
                                                 : Rollout(*fwd.attention);
      const TokenTypeStats stats = ComputeTokenTypeStats(a.matrix, a.counts);
      pooled.add(a.matrix, a.counts);
      const AttributionMap ig = ModelIntegratedGradients(*loaded.model, s, run.ig_steps);
      const VariableMap var_local =
          MostImportantVariable(ig.local, mc.tokens.local_patch, mc.tokens.local_patch, run.aggregation);

      const fs::path dir = root / ("h" + std::to_string(h) + "_t" + std::to_string(idx.t) + "_r" +
                                   std::to_string(idx.patch_row) + "_c" +
                                   std::to_string(idx.patch_col));
      WriteNpy(dir / "rollout.npy", a.matrix);
      const BlockPartition blocks = PartitionBlocks(a.matrix, a.counts);
      WriteNpy(dir / "block_ll.npy", blocks.at(Segment::kLocal, Segment::kLocal));
      WriteNpy(dir / "block_lg.npy", blocks.at(Segment::kLocal, Segment::kGlobal));
      WriteNpy(dir / "block_li.npy", blocks.at(Segment::kLocal, Segment::kIndices));
      WriteNpy(dir / "ig_local.npy", ig.local);
      WriteNpy(dir / "ig_global.npy", ig.global);
      WriteNpy(dir / "ig_indices.npy", ig.indices);
      const auto to_i64 = [](const VariableMap& v) {
        return std::vector<std::int64_t>(v.channel.begin(), v.channel.end());
      };
      const auto vl = to_i64(var_local);
      WriteNpy(dir / "var_local.npy", std::span<const std::int64_t>(vl), {var_local.grid_rows, var_local.grid_cols});
      json outputs = {"rollout.npy", "block_ll.npy", "block_lg.npy", "block_li.npy",
                      "ig_local.npy", "ig_global.npy", "ig_indices.npy", "var_local.npy"};
      json var_global_shape = nullptr;
      if (mc.use_global) {
        const VariableMap var_global = MostImportantVariable(ig.global, mc.tokens.global_patch,
                                                             mc.tokens.global_patch, run.aggregation);
        const auto vg = to_i64(var_global);
        WriteNpy(dir / "var_global.npy", std::span<const std::int64_t>(vg),
                 {var_global.grid_rows, var_global.grid_cols});
        outputs.push_back("var_global.npy");
        var_global_shape = {var_global.grid_rows, var_global.grid_cols};
      }
      const auto ms = [](const MeanStd& m) { return json{{"mean", m.mean}, {"std", m.std}, {"count", m.count}}; };
      const json token_stats = {{"local", ms(stats.local)}, {"global", ms(stats.global)}, {"indices", ms(stats.indices)}};
      WriteManifest(dir, "inspect", run,
                    {{"sample", SampleJson(idx, cube.start_year())},
                     {"model", loaded.id},
                     {"attention", run.raw_last_layer ? "last_layer" : "rollout"},
                     {"segments", {a.counts.local, a.counts.global, a.counts.indices}},
                     {"token_type_stats", token_stats},
                     {"ig",
                      {{"steps", ig.steps},
                       {"baseline", ig.baseline},
                       {"f_input", ig.f_input},
                       {"f_baseline", ig.f_baseline},
                       {"completeness_gap", ig.gap}}},
                     {"aggregation", run.aggregation == AggregationMode::kAbsolute ? "abs" : "signed"},
                     {"var_local_shape", {var_local.grid_rows, var_local.grid_cols}},
                     {"var_global_shape", var_global_shape},
                     {"outputs", outputs}});
      summary.push_back({{"dir", dir.filename().string()}, {"completeness_gap", ig.gap}});
      out << "inspect: " << dir.string() << " (IG gap " << ig.gap << ")\n";
    }
    const TokenTypeStats p = pooled.result();
    const auto ms = [](const MeanStd& m) { return json{{"mean", m.mean}, {"std", m.std}, {"count", m.count}}; };
    WriteText(root / ("token_type_stats_h" + std::to_string(h) + ".json"),
              json{{"samples", pooled.matrices()},
                   {"local", ms(p.local)},
                   {"global", ms(p.global)},
                   {"indices", ms(p.indices)}}
                      .dump(2) + "\n");
  }
  WriteManifest(root, "inspect", run, {{"exports", summary}});
}

}  // namespace televit
