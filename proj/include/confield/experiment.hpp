// Copyright 2026 The confield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "confield/consensus.hpp"
#include "confield/csv.hpp"
#include "confield/dataset.hpp"
#include "confield/metrics.hpp"
#include "confield/scene.hpp"

namespace confield {

/// One experiment, fully described: data source, model, training, topology,
/// and outputs. Mirrors the JSON config schema one-to-one.
struct ExperimentConfig {
  std::string mode = "central";  // "central" or "multi"
  std::uint64_t seed = 0;
  std::filesystem::path out = "run_out";

  // Data: either a directory produced by `gen` (train/ + eval/ subdirs) or a
  // scene spec to synthesize from.
  std::optional<std::filesystem::path> dataset_dir;
  nlohmann::json scene_spec = "default";
  int views = 12;
  int eval_views = 12;
  int image_size = 64;
  int gt_samples_per_ray = 192;
  double ring_radius = 2.6;
  double ring_height = 0.9;
  double eval_ring_height = 1.15;

  // Model.
  int width = 64;
  int hidden_layers = 8;
  int skip_after_layer = 5;
  EncodingConfig encoding{6, 4, true};
  std::string density_activation = "relu";

  // Training.
  ConsensusConfig training;
  std::string graph = "ring:3";
  std::string partition = "contiguous";

  // Evaluation / execution.
  int eval_samples_per_ray = 64;
  bool parallel = false;
  int threads = 1;

  MlpArchitecture arch() const {
    MlpArchitecture a = make_arch(encoding, width, hidden_layers, skip_after_layer);
    if (density_activation == "softplus")
      a.density_activation = DensityActivation::softplus;
    else if (density_activation != "relu")
      throw ParseError(ParseError::Code::bad_value,
                       "config field 'density_activation': expected relu or softplus");
    return a;
  }
};

namespace detail {

template <typename T>
T config_field(const nlohmann::json& j, const std::string& name, T fallback) {
  if (!j.contains(name)) return fallback;
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(ParseError::Code::bad_value,
                     "config field '" + name + "': " + e.what());
  }
}

}  // namespace detail

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  using detail::config_field;
  if (!j.is_object())
    throw ParseError(ParseError::Code::bad_value, "config root must be a JSON object");
  ExperimentConfig c;
  c.mode = config_field<std::string>(j, "mode", c.mode);
  if (c.mode != "central" && c.mode != "multi")
    throw ParseError(ParseError::Code::bad_value,
                     "config field 'mode': expected \"central\" or \"multi\"");
  c.seed = config_field<std::uint64_t>(j, "seed", c.seed);
  c.out = config_field<std::string>(j, "out", c.out.string());
  if (j.contains("dataset")) c.dataset_dir = config_field<std::string>(j, "dataset", "");
  if (j.contains("scene")) c.scene_spec = j.at("scene");
  c.views = config_field<int>(j, "views", c.views);
  c.eval_views = config_field<int>(j, "eval_views", c.eval_views);
  c.image_size = config_field<int>(j, "image_size", c.image_size);
  c.gt_samples_per_ray = config_field<int>(j, "gt_samples_per_ray", c.gt_samples_per_ray);
  c.ring_radius = config_field<double>(j, "ring_radius", c.ring_radius);
  c.ring_height = config_field<double>(j, "ring_height", c.ring_height);
  c.eval_ring_height = config_field<double>(j, "eval_ring_height", c.eval_ring_height);

  if (j.contains("arch")) {
    const auto& a = j.at("arch");
    c.width = config_field<int>(a, "width", c.width);
    c.hidden_layers = config_field<int>(a, "hidden_layers", c.hidden_layers);
    c.skip_after_layer = config_field<int>(a, "skip_after_layer", c.skip_after_layer);
    c.density_activation = config_field<std::string>(a, "density_activation", c.density_activation);
  }
  if (j.contains("encoding")) {
    const auto& e = j.at("encoding");
    c.encoding.pos_frequencies = config_field<int>(e, "pos_frequencies", c.encoding.pos_frequencies);
    c.encoding.dir_frequencies = config_field<int>(e, "dir_frequencies", c.encoding.dir_frequencies);
    c.encoding.include_identity = config_field<bool>(e, "include_identity", c.encoding.include_identity);
  }
  if (j.contains("training")) {
    const auto& t = j.at("training");
    c.training.rho = config_field<double>(t, "rho", c.training.rho);
    c.training.inner_steps = config_field<int>(t, "inner_steps", c.training.inner_steps);
    c.training.outer_iterations =
        config_field<int>(t, "outer_iterations", c.training.outer_iterations);
    c.training.rays_per_batch = config_field<int>(t, "rays_per_batch", c.training.rays_per_batch);
    c.training.samples_per_ray =
        config_field<int>(t, "samples_per_ray", c.training.samples_per_ray);
    c.training.comm_frequency =
        config_field<double>(t, "comm_frequency", c.training.comm_frequency);
    const std::string opt = config_field<std::string>(t, "optimizer", "adam");
    if (opt == "adam")
      c.training.optimizer.kind = OptimizerConfig::Kind::adam;
    else if (opt == "sgd")
      c.training.optimizer.kind = OptimizerConfig::Kind::sgd;
    else
      throw ParseError(ParseError::Code::bad_value,
                       "config field 'training.optimizer': expected adam or sgd");
    c.training.optimizer.lr = config_field<double>(t, "lr", c.training.optimizer.lr);
    c.training.optimizer.beta1 = config_field<double>(t, "beta1", c.training.optimizer.beta1);
    c.training.optimizer.beta2 = config_field<double>(t, "beta2", c.training.optimizer.beta2);
    c.training.optimizer.eps = config_field<double>(t, "eps", c.training.optimizer.eps);
  }
  c.graph = config_field<std::string>(j, "graph", c.graph);
  c.partition = config_field<std::string>(j, "partition", c.partition);
  c.eval_samples_per_ray = config_field<int>(j, "eval_samples_per_ray", c.eval_samples_per_ray);
  c.parallel = config_field<bool>(j, "parallel", c.parallel);
  c.threads = config_field<int>(j, "threads", c.threads);

  c.training.seed = c.seed;
  c.training.validate();
  c.arch();  // validates arch + encoding consistency
  return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return experiment_config_from_json(detail::load_json_file(path));
}

inline nlohmann::json experiment_config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["mode"] = c.mode;
  j["seed"] = c.seed;
  j["out"] = c.out.string();
  if (c.dataset_dir) j["dataset"] = c.dataset_dir->string();
  j["scene"] = c.scene_spec;
  j["views"] = c.views;
  j["eval_views"] = c.eval_views;
  j["image_size"] = c.image_size;
  j["gt_samples_per_ray"] = c.gt_samples_per_ray;
  j["ring_radius"] = c.ring_radius;
  j["ring_height"] = c.ring_height;
  j["eval_ring_height"] = c.eval_ring_height;
  j["arch"] = {{"width", c.width},
               {"hidden_layers", c.hidden_layers},
               {"skip_after_layer", c.skip_after_layer},
               {"density_activation", c.density_activation}};
  j["encoding"] = {{"pos_frequencies", c.encoding.pos_frequencies},
                   {"dir_frequencies", c.encoding.dir_frequencies},
                   {"include_identity", c.encoding.include_identity}};
  j["training"] = {
      {"rho", c.training.rho},
      {"inner_steps", c.training.inner_steps},
      {"outer_iterations", c.training.outer_iterations},
      {"rays_per_batch", c.training.rays_per_batch},
      {"samples_per_ray", c.training.samples_per_ray},
      {"comm_frequency", c.training.comm_frequency},
      {"optimizer", c.training.optimizer.kind == OptimizerConfig::Kind::adam ? "adam" : "sgd"},
      {"lr", c.training.optimizer.lr},
      {"beta1", c.training.optimizer.beta1},
      {"beta2", c.training.optimizer.beta2},
      {"eps", c.training.optimizer.eps}};
  j["graph"] = c.graph;
  j["partition"] = c.partition;
  j["eval_samples_per_ray"] = c.eval_samples_per_ray;
  j["parallel"] = c.parallel;
  j["threads"] = c.threads;
  return j;
}

// ---------------------------------------------------------------------------
// Dataset resolution

struct ExperimentData {
  PosedDataset train;
  PosedDataset eval;
};

/// Loads `train/` and `eval/` from a gen-produced directory, or synthesizes
/// both from the scene spec: training views on a ring, held-out views on an
/// interleaved, slightly raised ring.
inline ExperimentData resolve_datasets(const ExperimentConfig& c) {
  ExperimentData d;
  if (c.dataset_dir) {
    d.train = load_dataset(*c.dataset_dir / "train");
    d.eval = load_dataset(*c.dataset_dir / "eval");
    return d;
  }
  const AnalyticScene scene = parse_scene(c.scene_spec);
  const CameraIntrinsics intr = default_desk_intrinsics(c.image_size, c.image_size);
  const double phase = 3.14159265358979323846 / std::max(1, c.views);
  d.train = generate_dataset(scene, intr, ring_poses(c.views, c.ring_radius, c.ring_height),
                             c.gt_samples_per_ray,
                             Rng::keyed(c.seed, {streams::dataset, 0}).next_u64(), c.threads);
  d.eval = generate_dataset(scene, intr,
                            ring_poses(c.eval_views, c.ring_radius, c.eval_ring_height, {0, 0, 0}, phase),
                            c.gt_samples_per_ray,
                            Rng::keyed(c.seed, {streams::dataset, 1}).next_u64(), c.threads);
  return d;
}

// ---------------------------------------------------------------------------
// Artifact writers

inline void write_trace_csv(const std::vector<TraceRow>& trace, int hidden_layers,
                            const std::filesystem::path& path) {
  std::vector<std::string> header{"iteration", "agent", "loss", "disagreement",
                                  "grad_norm_trunk"};
  for (int l = 1; l <= hidden_layers; ++l) header.push_back("grad_norm_l" + std::to_string(l));
  CsvWriter csv(path, header);
  for (const TraceRow& r : trace) {
    std::vector<std::string> row{std::to_string(r.iteration), std::to_string(r.agent),
                                 csv_real(r.loss), csv_real(r.disagreement),
                                 csv_real(r.grad_norm_trunk)};
    for (int l = 0; l < hidden_layers; ++l)
      row.push_back(csv_real(l < static_cast<int>(r.layer_norms.size())
                                 ? r.layer_norms[static_cast<std::size_t>(l)]
                                 : 0.0));
    csv.write_row(row);
  }
}

inline void write_exchange_csv(const ExchangeLog& log, const std::filesystem::path& path) {
  CsvWriter csv(path, {"iteration", "agent", "neighbor", "bytes"});
  for (const ExchangeRecord& r : log.records)
    csv.write_row({std::to_string(r.iteration), std::to_string(r.agent),
                   std::to_string(r.neighbor), std::to_string(r.bytes)});
}

inline void write_comm_report_csv(const CommReport& report, const std::filesystem::path& path) {
  CsvWriter csv(path, {"agent", "bytes_per_comm_iteration", "comm_iterations", "total_bytes",
                       "centralized_baseline_bytes"});
  for (const CommReportRow& r : report.rows)
    csv.write_row({std::to_string(r.agent), std::to_string(r.bytes_per_comm_iteration),
                   std::to_string(r.comm_iterations), std::to_string(r.total_bytes),
                   std::to_string(report.centralized_baseline_bytes)});
}

struct EvalRow {
  int agent = 0;
  std::string frame;  // frame id or "mean"
  double psnr_db = 0.0;
  double ssim_value = 0.0;
};

inline void write_metrics_csv(const std::vector<EvalRow>& rows,
                              const std::filesystem::path& path) {
  CsvWriter csv(path, {"agent", "frame", "psnr", "ssim"});
  for (const EvalRow& r : rows)
    csv.write_row({std::to_string(r.agent), r.frame, csv_real(r.psnr_db), csv_real(r.ssim_value)});
}

/// Renders every eval frame with each agent's weights and scores it against
/// ground truth. Appends one "mean" row per agent. Optionally writes the
/// renders as PPMs under `renders_dir/agent_<i>/`.
template <typename Real>
std::vector<EvalRow> evaluate_agents(const std::vector<std::vector<Real>>& agent_weights,
                                     const MlpArchitecture& arch, const EncodingConfig& enc,
                                     const PosedDataset& eval_ds, int samples_per_ray,
                                     std::uint64_t seed, int threads,
                                     const std::filesystem::path* renders_dir = nullptr) {
  std::vector<EvalRow> rows;
  RenderContext ctx{eval_ds.bounds, eval_ds.t_near, eval_ds.t_far, eval_ds.background,
                    samples_per_ray};
  for (std::size_t a = 0; a < agent_weights.size(); ++a) {
    std::filesystem::path agent_dir;
    if (renders_dir) {
      agent_dir = *renders_dir / ("agent_" + std::to_string(a));
      std::filesystem::create_directories(agent_dir);
    }
    double psnr_sum = 0.0, ssim_sum = 0.0;
    for (std::size_t f = 0; f < eval_ds.frames.size(); ++f) {
      const PosedFrame& frame = eval_ds.frames[f];
      const Image rendered =
          render_image<Real>(agent_weights[a], arch, enc, eval_ds.camera(f), ctx,
                             Rng::keyed(seed, {streams::render, a, f}).next_u64(), threads);
      const double p = psnr(rendered, frame.image);
      const double s = ssim(rendered, frame.image);
      psnr_sum += p;
      ssim_sum += s;
      rows.push_back({static_cast<int>(a), frame.id, p, s});
      if (renders_dir) write_ppm(rendered, agent_dir / (frame.id + ".ppm"));
    }
    const double nf = static_cast<double>(eval_ds.frames.size());
    rows.push_back({static_cast<int>(a), "mean", psnr_sum / nf, ssim_sum / nf});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// The experiment driver

struct ExperimentSummary {
  std::filesystem::path out_dir;
  std::vector<double> mean_psnr;  // per agent
  std::vector<double> mean_ssim;
  std::vector<std::uint64_t> total_bytes;  // per agent
  std::vector<TraceRow> trace;
};

/// Runs one experiment end to end and writes the artifact tree: per-agent
/// NWV1 weights, trace.csv, exchange_log.csv, comm_report.csv, rendered eval
/// images, metrics.csv, and the resolved config. Everything lands in a temp
/// directory that is promoted to `out` only on success. Training runs in
/// float32 (the wire precision); identical config+seed reproduces identical
/// bytes in sequential mode.
inline ExperimentSummary run_experiment(const ExperimentConfig& cfg) {
  using Real = float;
  const MlpArchitecture arch = cfg.arch();
  const ExperimentData data = resolve_datasets(cfg);
  data.train.validate();
  data.eval.validate();

  const CommGraph graph = cfg.mode == "central" ? CommGraph::from_edges(1, {})
                                                : build_graph(cfg.graph);
  std::vector<PosedDataset> shards;
  if (cfg.mode == "central") {
    shards.push_back(data.train);
  } else {
    shards = partition_dataset(data.train, graph.n_agents,
                               partition_strategy_from_string(cfg.partition), cfg.seed);
  }

  std::vector<std::shared_ptr<Objective<Real>>> objectives;
  for (std::size_t i = 0; i < shards.size(); ++i) {
    objectives.push_back(std::make_shared<NerfObjective<Real>>(
        arch, cfg.encoding, shards[i], cfg.training.rays_per_batch,
        cfg.training.samples_per_ray, cfg.seed, /*stream_salt=*/i));
  }

  const std::vector<Real> initial = mlp_init<Real>(arch, cfg.seed);
  const NwvWireCodec<Real> codec(arch);
  const TrainResult<Real> result =
      cadmm_train<Real>(graph, objectives, initial, cfg.training, codec,
                        cfg.parallel ? ExecutionMode::parallel : ExecutionMode::sequential);

  // Stage everything, then promote.
  const std::filesystem::path tmp = cfg.out.string() + ".tmp";
  std::filesystem::remove_all(tmp);
  std::filesystem::create_directories(tmp);
  try {
    {
      std::ofstream out(tmp / "config.json");
      out << experiment_config_to_json(cfg).dump(2) << "\n";
    }
    for (std::size_t i = 0; i < result.weights.size(); ++i) {
      const auto bytes = serialize_weights<Real>(result.weights[i], arch);
      std::ofstream out(tmp / ("weights_agent_" + std::to_string(i) + ".nwv1"),
                        std::ios::binary);
      out.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
    }
    write_trace_csv(result.trace, arch.hidden_layers, tmp / "trace.csv");
    write_exchange_csv(result.exchange_log, tmp / "exchange_log.csv");
    write_comm_report_csv(comm_report(result.exchange_log, data.train.raw_tensor_bytes()),
                          tmp / "comm_report.csv");

    const std::filesystem::path renders = tmp / "renders";
    const std::vector<EvalRow> rows =
        evaluate_agents<Real>(result.weights, arch, cfg.encoding, data.eval,
                              cfg.eval_samples_per_ray, cfg.seed, cfg.threads, &renders);
    write_metrics_csv(rows, tmp / "metrics.csv");

    ExperimentSummary summary;
    summary.out_dir = cfg.out;
    summary.trace = result.trace;
    summary.mean_psnr.assign(result.weights.size(), 0.0);
    summary.mean_ssim.assign(result.weights.size(), 0.0);
    for (const EvalRow& r : rows) {
      if (r.frame == "mean") {
        summary.mean_psnr[static_cast<std::size_t>(r.agent)] = r.psnr_db;
        summary.mean_ssim[static_cast<std::size_t>(r.agent)] = r.ssim_value;
      }
    }
    for (int a = 0; a < graph.n_agents; ++a)
      summary.total_bytes.push_back(result.exchange_log.total_bytes(a));

    std::filesystem::remove_all(cfg.out);
    std::filesystem::create_directories(cfg.out.parent_path().empty()
                                            ? std::filesystem::path(".")
                                            : cfg.out.parent_path());
    std::filesystem::rename(tmp, cfg.out);
    return summary;
  } catch (...) {
    std::filesystem::remove_all(tmp);
    throw;
  }
}

/// Recovers the encoding configuration from an architecture's input dims.
/// Unambiguous: with the identity prefix the encoded dim is 3 mod 6, without
/// it 0 mod 6.
inline EncodingConfig encoding_from_arch(const MlpArchitecture& arch) {
  EncodingConfig enc;
  auto infer = [](int dim, int& freqs, bool& identity) {
    if (dim % 6 == 3) {
      identity = true;
      freqs = (dim - 3) / 6;
    } else if (dim % 6 == 0) {
      identity = false;
      freqs = dim / 6;
    } else {
      throw ParseError(ParseError::Code::bad_value,
                       "encoded dim " + std::to_string(dim) + " matches no encoding");
    }
  };
  bool id_pos = true, id_dir = true;
  infer(arch.pos_enc_dim, enc.pos_frequencies, id_pos);
  infer(arch.dir_enc_dim, enc.dir_frequencies, id_dir);
  if (id_pos != id_dir)
    throw ParseError(ParseError::Code::bad_value,
                     "inconsistent identity prefix between position and direction encodings");
  enc.include_identity = id_pos;
  return enc;
}

/// Loads weight files, renders the eval split per agent, writes metrics.csv
/// (and renders, when requested). All weight files must share one
/// architecture.
inline std::vector<EvalRow> evaluate_weight_files(
    const std::vector<std::filesystem::path>& weight_files, const PosedDataset& eval_ds,
    int samples_per_ray, std::uint64_t seed, int threads,
    const std::filesystem::path& metrics_csv, const std::filesystem::path* renders_dir = nullptr) {
  if (weight_files.empty()) throw ContractError("evaluate: need at least one weight file");
  std::vector<std::vector<float>> weights;
  std::optional<MlpArchitecture> arch;
  for (const auto& path : weight_files) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(ParseError::Code::io, "cannot open: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    LoadedWeights lw = deserialize_weights(bytes);
    if (!arch)
      arch = lw.arch;
    else if (!(lw.arch == *arch))
      throw ParseError(ParseError::Code::bad_value,
                       "weight files disagree on architecture: " + path.string());
    weights.push_back(lw.as<float>());
  }
  const EncodingConfig enc = encoding_from_arch(*arch);
  const std::vector<EvalRow> rows = evaluate_agents<float>(
      weights, *arch, enc, eval_ds, samples_per_ray, seed, threads, renders_dir);
  write_metrics_csv(rows, metrics_csv);
  return rows;
}

}  // namespace confield
