// Copyright 2026 The confield Authors
// SPDX-License-Identifier: Apache-2.0

// Experiment driver: dataset generation, centralized and multi-agent
// training, rendering, evaluation, and communication reports, all from one
// JSON config (flags override config fields).
//
// Exit codes: 0 success, 2 config/usage error, 3 runtime or numeric failure.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "confield/confield.hpp"

namespace fs = std::filesystem;
using namespace confield;

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON experiment config");
  cmd->add_option("--seed", [&args](const CLI::results_t& r) {
    args.seed = std::stoull(r[0]);
    return true;
  }, "Override the config seed");
  cmd->add_option("--out", [&args](const CLI::results_t& r) {
    args.out = r[0];
    return true;
  }, "Override the output directory");
}

nlohmann::json load_config_json(const CommonArgs& args) {
  nlohmann::json j = nlohmann::json::object();
  if (!args.config_path.empty()) j = detail::load_json_file(args.config_path);
  return j;
}

ExperimentConfig resolve_config(const CommonArgs& args, nlohmann::json overrides) {
  nlohmann::json j = load_config_json(args);
  j.merge_patch(overrides);
  ExperimentConfig cfg = experiment_config_from_json(j);
  if (args.seed) {
    cfg.seed = *args.seed;
    cfg.training.seed = *args.seed;
  }
  if (args.out) cfg.out = *args.out;
  return cfg;
}

int run_train(const CommonArgs& args, const std::string& mode, bool parallel) {
  nlohmann::json overrides;
  overrides["mode"] = mode;
  if (parallel) overrides["parallel"] = true;
  const ExperimentConfig cfg = resolve_config(args, overrides);
  const ExperimentSummary summary = run_experiment(cfg);
  std::printf("artifacts: %s\n", summary.out_dir.string().c_str());
  for (std::size_t a = 0; a < summary.mean_psnr.size(); ++a)
    std::printf("agent %zu: mean PSNR %.3f dB, mean SSIM %.4f, received %llu bytes\n", a,
                summary.mean_psnr[a], summary.mean_ssim[a],
                static_cast<unsigned long long>(a < summary.total_bytes.size()
                                                    ? summary.total_bytes[a]
                                                    : 0));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"confield: multi-agent radiance-field training simulator"};
  app.require_subcommand(1);

  CommonArgs args;

  // gen: synthesize train/ and eval/ datasets from a scene spec.
  auto* gen = app.add_subcommand("gen", "Generate a synthetic posed dataset (train/ + eval/)");
  add_common(gen, args);

  // train-central / train-multi
  auto* central = app.add_subcommand("train-central", "Train one agent on the full dataset");
  add_common(central, args);
  auto* multi = app.add_subcommand("train-multi", "Train consensus agents on disjoint shards");
  add_common(multi, args);
  bool parallel_flag = false;
  multi->add_flag("--parallel", parallel_flag,
                  "Run one worker thread per agent (bit-identical to sequential)");

  // render
  auto* render = app.add_subcommand("render", "Render every camera of a dataset with weights");
  std::string render_weights, render_data, render_out = "renders";
  int render_samples = 64;
  std::uint64_t render_seed = 0;
  render->add_option("--weights", render_weights, "NWV1 weight file")->required();
  render->add_option("--data", render_data, "dataset directory (meta.json)")->required();
  render->add_option("--out", render_out, "output directory");
  render->add_option("--samples", render_samples, "samples per ray");
  render->add_option("--seed", render_seed, "stratified sampling seed");

  // eval
  auto* eval = app.add_subcommand("eval", "Score weights against a dataset (PSNR/SSIM)");
  std::vector<std::string> eval_weights;
  std::string eval_data, eval_out = "metrics.csv";
  int eval_samples = 64;
  std::uint64_t eval_seed = 0;
  eval->add_option("--weights", eval_weights, "NWV1 weight file(s), one per agent")->required();
  eval->add_option("--data", eval_data, "dataset directory (meta.json)")->required();
  eval->add_option("--out", eval_out, "metrics CSV path");
  eval->add_option("--samples", eval_samples, "samples per ray");
  eval->add_option("--seed", eval_seed, "stratified sampling seed");

  // comm-report
  auto* comm = app.add_subcommand("comm-report", "Summarize an exchange log into a comm report");
  std::string comm_log, comm_out = "comm_report.csv";
  int comm_agents = 0;
  std::uint64_t comm_baseline = 0;
  comm->add_option("--log", comm_log, "exchange_log.csv from a training run")->required();
  comm->add_option("--agents", comm_agents, "number of agents")->required();
  comm->add_option("--baseline-bytes", comm_baseline,
                   "centralized raw-dataset baseline in bytes");
  comm->add_option("--out", comm_out, "report CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      const ExperimentConfig cfg = resolve_config(args, nlohmann::json::object());
      const ExperimentData data = resolve_datasets(cfg);
      save_dataset(data.train, cfg.out / "train");
      save_dataset(data.eval, cfg.out / "eval");
      std::printf("wrote %zu train and %zu eval frames under %s\n", data.train.frames.size(),
                  data.eval.frames.size(), cfg.out.string().c_str());
      return 0;
    }
    if (central->parsed()) return run_train(args, "central", false);
    if (multi->parsed()) return run_train(args, "multi", parallel_flag);

    if (render->parsed()) {
      std::ifstream in(render_weights, std::ios::binary);
      if (!in) throw ParseError(ParseError::Code::io, "cannot open: " + render_weights);
      std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                      std::istreambuf_iterator<char>());
      const LoadedWeights lw = deserialize_weights(bytes);
      const auto weights = lw.as<float>();
      const EncodingConfig enc = encoding_from_arch(lw.arch);
      const PosedDataset ds = load_dataset(render_data);
      const RenderContext ctx{ds.bounds, ds.t_near, ds.t_far, ds.background, render_samples};
      fs::create_directories(render_out);
      for (std::size_t f = 0; f < ds.frames.size(); ++f) {
        const Image img = render_image<float>(
            weights, lw.arch, enc, ds.camera(f), ctx,
            Rng::keyed(render_seed, {streams::render, f}).next_u64());
        write_ppm(img, fs::path(render_out) / (ds.frames[f].id + ".ppm"));
      }
      std::printf("rendered %zu frames into %s\n", ds.frames.size(), render_out.c_str());
      return 0;
    }

    if (eval->parsed()) {
      std::vector<fs::path> paths(eval_weights.begin(), eval_weights.end());
      const PosedDataset ds = load_dataset(eval_data);
      const auto rows =
          evaluate_weight_files(paths, ds, eval_samples, eval_seed, 1, eval_out, nullptr);
      for (const EvalRow& r : rows)
        if (r.frame == "mean")
          std::printf("agent %d: mean PSNR %.3f dB, mean SSIM %.4f\n", r.agent, r.psnr_db,
                      r.ssim_value);
      return 0;
    }

    if (comm->parsed()) {
      ExchangeLog log;
      log.n_agents = comm_agents;
      const auto rows = read_csv(comm_log);
      for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != 4)
          throw ParseError(ParseError::Code::bad_value, "exchange log row needs 4 columns");
        log.records.push_back({std::stoll(rows[i][0]), std::stoi(rows[i][1]),
                               std::stoi(rows[i][2]),
                               static_cast<std::uint64_t>(std::stoull(rows[i][3]))});
      }
      write_comm_report_csv(comm_report(log, comm_baseline), comm_out);
      std::printf("wrote %s\n", comm_out.c_str());
      return 0;
    }
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ContractError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
